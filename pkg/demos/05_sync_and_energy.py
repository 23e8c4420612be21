"""
Redeploying a draft versus keeping it, and where the battery goes
=================================================================

Shipping a 3.2 GB draft to every device after each target update costs
minutes of airtime. Speculative rounds instead cost milliseconds, and the
energy split shows which phase to optimize.
"""
# %%
from flexspec.latency import sync_time
from flexspec.sim import BernoulliModelSpec, ChannelSpec, PolicySpec, Scenario, simulate

for mbps in (10, 50, 300):
    seconds = sync_time(3.2e9, mbps * 1e6)
    print(f"{mbps:4d} Mbit/s: {seconds / 60:6.2f} min per redeployment")

# %%
for rate in (1e4, 1e6):
    for policy in ("fixed:1", "adaptive", "cloud_only"):
        sc = Scenario(model=BernoulliModelSpec(p=0.8), channel=ChannelSpec(rate=rate),
                      policy=PolicySpec(policy=policy), budget_tokens=400)
        m = simulate(sc, seed=1).metrics
        split = " ".join(f"{k}={v:.0%}" for k, v in m.energy_shares.items())
        print(f"rate {rate:8.0f}  {policy:>10}: {m.energy_per_token_j * 1e3:6.2f} mJ/token  ({split})")
