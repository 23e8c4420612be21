"""
Quickstart: one adaptive session over a constant link
=====================================================

A synthetic draft agrees with the target 80% of the time. We run the
adaptive stride policy until 300 tokens are committed and look at what it
chose and where the time went.
"""
# %%
from flexspec.sim import BernoulliModelSpec, ChannelSpec, Scenario, simulate

scenario = Scenario(model=BernoulliModelSpec(p=0.8), channel=ChannelSpec(rate=1e6), budget_tokens=300)
result = simulate(scenario, seed=0)
m = result.metrics

# %%
# Committed tokens per second, counting the correction token of every round
# and counting accepted drafts only.
print(f"etgr (emitted)  {m.etgr_emitted:8.2f} tok/s")
print(f"etgr (accepted) {m.etgr_accepted:8.2f} tok/s")
print(f"mean tau/k      {m.mean_acceptance:8.3f}")
print(f"mean stride     {m.mean_k:8.2f}  over {m.rounds} rounds")

# %%
# Share of wall-clock time per phase of a round.
for phase, share in m.time_shares.items():
    print(f"  {phase:>5}: {share:6.1%}")

# %%
# The first few rounds: the estimate starts at 0.8 and moves with each verdict.
for r in result.records[:6]:
    print(f"round {r.round}: k={r.k} tau={r.tau} gamma_hat={r.gamma_hat:.3f}")
