"""
How the best stride moves with link rate
========================================

On a slow uplink every drafted token costs serialization time, so short
blocks win. On a fast link the per-round overhead dominates and long blocks
amortize it. The landscape below shows predicted throughput for strides 1-8
with a compact 16-bit header.
"""
# %%
import numpy as np

from flexspec.latency import LatencyParams
from flexspec.sim import optimal_k_landscape

params = LatencyParams(header_bits=16)
rates = np.logspace(2, 6, 9)
land = optimal_k_landscape(gamma=0.8, p=params, rates=rates)

# %%
print("rate (bps)   " + " ".join(f"k={k:<5d}" for k in land.ks) + " best")
for rate, row, best in zip(land.rates, land.etgr, land.argmax):
    print(f"{rate:10.0f}   " + " ".join(f"{v:7.2f}" for v in row) + f"  {best}")

# %%
# With the default 120-bit header the fixed cost already dominates at low
# rates, so the best stride stays put across the same range.
flat = optimal_k_landscape(0.8, LatencyParams(), rates)
print("default header, best stride per rate:", flat.argmax.tolist())
