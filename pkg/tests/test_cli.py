import json
import os

import pytest

from flexspec.cli import build_parser, human_duration, main, parse_quantity
from conftest import CONFIG_DIR, GOLDEN_DIR

REFERENCE = os.path.join(CONFIG_DIR, "reference.ini")

SMALL_ANCHORED = """
[model]
kind = anchored
seed = 0
corpus_size = 300
steps = 40
"""


@pytest.fixture
def small_anchored(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_ANCHORED)
    return str(path)


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_run_writes_outputs_and_matches_golden(tmp_path):
    out = tmp_path / "out"
    assert main(["run", REFERENCE, "--seed", "0", "--out", str(out)]) == 0
    assert sorted(os.listdir(out)) == ["config.resolved", "rounds.csv", "summary.json"]
    assert _read(out / "summary.json") == _read(os.path.join(GOLDEN_DIR, "reference_summary.json"))


def test_run_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", REFERENCE, "--seed", "5", "--out", str(a)]) == 0
    assert main(["run", REFERENCE, "--seed", "5", "--out", str(b)]) == 0
    for name in ("rounds.csv", "summary.json", "config.resolved"):
        assert _read(a / name) == _read(b / name)


def test_run_policy_override_and_seed_env(tmp_path, monkeypatch):
    cfg = tmp_path / "noseed.ini"
    cfg.write_text("[run]\nbudget_tokens = 40\n")
    monkeypatch.setenv("FLEXSPEC_SEED", "9")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--policy", "fixed:3"]) == 0
    resolved = (tmp_path / "o" / "config.resolved").read_text()
    assert "seed = 9" in resolved and "policy = fixed:3" in resolved
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--policy", "sometimes"]) == 2


@pytest.mark.parametrize("argv", [
    ["run", "/nonexistent/config.ini"],
    ["sweep-k", REFERENCE, "--k", ""],
    ["sweep-k", REFERENCE, "--k", "0,3"],
    ["sweep-k", REFERENCE, "--k", "a,b"],
    ["sync-cost", "--bytes", "3.2GB", "--rate", "-10Mbps"],
    ["sync-cost", "--bytes", "3.2GB", "--rate", "fast"],
    ["sync-cost", "--bytes", "3.2GB", "--rate", "10Mbps", "--efficiency", "1.5"],
    ["k-landscape", "--gamma", "2"],
    ["k-landscape", "--rates", "0,10"],
    ["run", REFERENCE, "--frobnicate"],
    ["bogus-command"],
    [],
    ["shift-eval", REFERENCE],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_config_error_names_key(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[latency]\nalpha = 1\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "latency.alpha" in capsys.readouterr().err


def test_runtime_error_exit_3(tmp_path, capsys):
    (tmp_path / "broken.ckpt").write_bytes(b"not a checkpoint")
    cfg = tmp_path / "ckpt.ini"
    cfg.write_text("[model]\nkind = anchored\ncheckpoint = %s\n" % (tmp_path / "broken.ckpt"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "runtime error" in capsys.readouterr().err


def test_sweep_has_adaptive_row_when_flagged(tmp_path):
    assert main(["sweep-k", REFERENCE, "--k", "1,4", "--adaptive", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("policy,etgr_emitted")
    assert [l.split(",")[0] for l in lines[1:]] == ["fixed:1", "fixed:4", "adaptive"]
    assert main(["sweep-k", REFERENCE, "--k", "2", "--out", str(tmp_path / "one")]) == 0
    assert len((tmp_path / "one" / "sweep.csv").read_text().splitlines()) == 2


def test_train_draft_is_byte_deterministic(tmp_path, small_anchored, capsys):
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    assert main(["train-draft", small_anchored, "--out", str(a)]) == 0
    text = capsys.readouterr().out
    assert main(["train-draft", small_anchored, "--out", str(b)]) == 0
    assert _read(a) == _read(b)
    final_line = [l for l in text.splitlines() if l.startswith("final loss")][0]
    final, initial = float(final_line.split()[2]), float(final_line.split()[4].rstrip(")"))
    assert final < initial


def test_train_draft_rejects_zero_loss_weights(tmp_path):
    cfg = tmp_path / "zero.ini"
    cfg.write_text(SMALL_ANCHORED + "lambda1 = 0\nlambda2 = 0\n")
    assert main(["train-draft", str(cfg), "--out", str(tmp_path / "x.ckpt")]) == 2
    assert main(["train-draft", REFERENCE, "--out", str(tmp_path / "x.ckpt")]) == 2


def test_checkpoint_feeds_run(tmp_path, small_anchored):
    ckpt = tmp_path / "d.ckpt"
    assert main(["train-draft", small_anchored, "--out", str(ckpt)]) == 0
    cfg = tmp_path / "use.ini"
    cfg.write_text(SMALL_ANCHORED + f"checkpoint = {ckpt}\n\n[run]\nbudget_tokens = 30\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0


def test_shift_eval(tmp_path, small_anchored):
    assert main(["shift-eval", small_anchored, "--magnitudes", "0,1", "--prompts", "50", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "shift.csv").read_text().splitlines()
    assert lines[0] == "seed,magnitude,anchored,baseline"
    assert len(lines) == 3
    assert main(["shift-eval", small_anchored, "--magnitudes", "0,big"]) == 2
    assert main(["shift-eval", small_anchored, "--magnitudes", "-1"]) == 2


def test_sync_cost_output(capsys):
    assert main(["sync-cost", "--bytes", "3.2GB", "--rate", "10Mbps"]) == 0
    out = capsys.readouterr().out
    assert "efficiency=0.89" in out
    seconds = float(out.split("seconds=")[1].split()[0])
    assert seconds == pytest.approx(8 * 3.2e9 / (0.89 * 1e7), rel=1e-5)
    assert "min" in out


def test_k_landscape_csv(tmp_path, capsys):
    assert main(["k-landscape", "--rates", "300,1e6", "--gamma", "0.8"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "rate_bps," + ",".join(f"etgr_k{k}" for k in range(1, 9)) + ",argmax_k"
    assert len(lines) == 3
    landscape_cfg = os.path.join(CONFIG_DIR, "rate_landscape.ini")
    out = tmp_path / "land.csv"
    assert main(["k-landscape", landscape_cfg, "--rates", "300,1e6", "--out", str(out)]) == 0
    argmax = [int(l.split(",")[-1]) for l in out.read_text().splitlines()[1:]]
    assert argmax[0] <= 2 and argmax[1] >= 5


def test_helpers():
    assert parse_quantity("3.2GB", "B") == pytest.approx(3.2e9)
    assert parse_quantity("10Mbps", "bps") == 1e7
    assert parse_quantity("1e6", "bps") == 1e6
    assert human_duration(30) == "30 s"
    assert human_duration(2876.4) == "47.94 min"
    assert human_duration(3 * 3600) == "3 h"


def test_help_documents_every_flag(capsys):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, subparser in sub.choices.items():
        assert main([name, "--help"]) == 0
        text = capsys.readouterr().out
        for action in subparser._actions:
            for opt in action.option_strings:
                assert opt in text, (name, opt)
            if not action.option_strings:
                assert action.dest in text
