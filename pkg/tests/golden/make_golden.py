"""Regenerate the committed golden fixtures: ``python tests/golden/make_golden.py``.

Only rerun after an intentional change to model construction or the simulator.
"""
import json
import os
import subprocess
import sys

from flexspec.latency import LatencyParams
from flexspec.models import make_base_target, make_draft, target_greedy
from flexspec.report import rounds_csv
from flexspec.sim import BernoulliModelSpec, ChannelSpec, PolicySpec, Scenario, simulate

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(os.path.dirname(HERE))

P1_SCENARIO = Scenario(
    model=BernoulliModelSpec(p=1.0, seed=0),
    channel=ChannelSpec(rate=1e5),
    latency=LatencyParams(),
    policy=PolicySpec(policy="fixed:4"),
    budget_tokens=50,
)

def main():
    base = make_base_target(seed=0)
    h, z = base.target_logits([3, 1, 4])
    draft = make_draft(base, seed=0)
    hd, zd = draft.draft_logits([3, 1, 4])
    fixture = {
        "context": [3, 1, 4],
        "target_h": h.tolist(),
        "target_z": z.tolist(),
        "draft_h": hd.tolist(),
        "draft_z": zd.tolist(),
        "greedy_continuation": target_greedy(base, [3, 1, 4], 4),
    }
    with open(os.path.join(HERE, "toy_seed0.json"), "w") as fh:
        json.dump(fixture, fh, indent=1)
        fh.write("\n")
    with open(os.path.join(HERE, "p1_fixed4_rounds.csv"), "w") as fh:
        fh.write(rounds_csv(simulate(P1_SCENARIO, 0).records))
    out = os.path.join(HERE, "_reference_run")
    subprocess.run([sys.executable, "-m", "flexspec.cli", "run", os.path.join(ROOT, "configs", "reference.ini"),
                    "--seed", "0", "--out", out], check=True)
    os.replace(os.path.join(out, "summary.json"), os.path.join(HERE, "reference_summary.json"))
    for name in os.listdir(out):
        os.unlink(os.path.join(out, name))
    os.rmdir(out)
    print("golden fixtures written to", HERE)

if __name__ == "__main__":
    main()
