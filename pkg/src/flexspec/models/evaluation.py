"""Acceptance measurement of a draft against a target through the real protocol."""
from __future__ import annotations

import numpy as np

from ..latency import LatencyParams
from ..protocol import CloudServer, EdgeState, run_round

_UNIT_LATENCY = LatencyParams()


def measure_acceptance(draft, target, prompts, k: int = 1, rounds: int = 8) -> float:
    """Mean of ``tau / k`` over ``rounds`` rounds per prompt."""
    if draft.vocab_size != target.vocab_size:
        raise ValueError("draft and target vocabularies differ")
    ratios = []
    cloud = CloudServer(target)
    for i, prompt in enumerate(prompts):
        prompt = [int(t) for t in prompt]
        cloud.sessions.clear()
        cloud.open_session(i, prompt)
        edge = EdgeState(draft, i, list(prompt))
        for _ in range(rounds):
            outcome, _ = run_round(edge, cloud, k, 1e6, _UNIT_LATENCY)
            ratios.append(outcome.tau / k)
    return float(np.mean(ratios))
