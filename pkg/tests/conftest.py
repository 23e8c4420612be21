import os
import time

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow], max_examples=60
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")
CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")


@pytest.fixture(scope="session")
def trained_pair():
    """Version-0 base target with its trained anchored draft (default toy dimensions)."""
    from flexspec.sim import AnchoredModelSpec, build_models

    draft, base = build_models(AnchoredModelSpec(seed=0))
    return base, draft


@pytest.fixture(scope="session")
def baseline_draft():
    from flexspec.sim import AnchoredModelSpec, build_models

    draft, _ = build_models(AnchoredModelSpec(seed=0, anchored=False))
    return draft


SHIFT_MAGNITUDES = (0.0, 0.5, 1.0, 2.0)
SHIFT_SEEDS = (0, 1, 2)


@pytest.fixture(scope="session")
def shift_rows():
    """Acceptance-vs-version tables for three independently trained model families.

    Returns ``(rows_by_seed, seconds)``; the model cache is cleared first so the
    timing includes training.
    """
    from flexspec.sim import AnchoredModelSpec, _anchored_models, shift_experiment

    _anchored_models.cache_clear()
    start = time.perf_counter()
    rows = {seed: shift_experiment(AnchoredModelSpec(seed=seed), SHIFT_MAGNITUDES) for seed in SHIFT_SEEDS}
    return rows, time.perf_counter() - start


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
