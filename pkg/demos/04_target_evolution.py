"""
Static drafts against an evolving target
========================================

Two drafts are trained once against version 0 of a toy target: one reuses
the target's final block (anchored), the other learns its own. The target
then receives adapter updates of growing size. This takes about 20 seconds,
most of it training.
"""
# %%
from flexspec.sim import AnchoredModelSpec, shift_experiment

rows = shift_experiment(AnchoredModelSpec(seed=0), magnitudes=[0.0, 0.5, 1.0, 2.0])

# %%
print("magnitude  anchored  baseline")
for r in rows:
    print(f"{r.magnitude:9.1f}  {r.anchored:8.3f}  {r.baseline:8.3f}")

# %%
drop = 1 - rows[-1].baseline / rows[0].baseline
print(f"baseline loses {drop:.0%} of its acceptance at the largest update")
