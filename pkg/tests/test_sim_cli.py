"""Config parsing, CSV emission, determinism, CLI entry points."""

import csv
from pathlib import Path

import numpy as np
import pytest

from gachagt.sim_cli import (
    AGG_HEADER,
    TRIAL_HEADER,
    SimConfig,
    derive_seed,
    main,
    oracle_check,
    parse_config,
    run,
    run_trial,
)

MINIMAL = """
# minimal config
scheme=gacha
n=65536
k=8
channel=none
trials=4
master_seed=1
"""


def test_parse_minimal_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.scheme, cfg.n, cfg.k, cfg.trials, cfg.master_seed) == ("gacha", 65536, 8, 4, 1)
    from gachagt.sim_cli import gacha_params_for

    p = gacha_params_for(cfg, matrix_seed=0)
    assert (p.d, p.w, p.r, p.B) == (1, 16, 9, 192)


def test_parse_rejects_unknown_key():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config(MINIMAL + "wat=1\n")


def test_parse_rejects_bad_channel():
    with pytest.raises(ValueError, match="crossover"):
        parse_config(MINIMAL.replace("channel=none", "channel=bsc:0.6"))


def test_parse_rejects_bad_expander():
    bad = MINIMAL.replace("scheme=gacha", "scheme=gacha+gadgets") + "rho=5\nR=4\nouter_w=8\n"
    with pytest.raises(ValueError, match="1 < rho < R"):
        parse_config(bad)


def test_parse_rejects_duplicate_and_malformed():
    with pytest.raises(ValueError, match="duplicate"):
        parse_config(MINIMAL + "n=2\n")
    with pytest.raises(ValueError, match="key=value"):
        parse_config(MINIMAL + "just words\n")
    with pytest.raises(ValueError, match="integer"):
        parse_config(MINIMAL.replace("n=65536", "n=big"))


def test_parse_requires_keys():
    with pytest.raises(ValueError, match="missing required"):
        parse_config("scheme=gacha\nn=16\nk=2\n")


def test_seed_fold_distinct():
    seeds = {derive_seed(1, t) for t in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(1, 0) != derive_seed(2, 0)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_zero_trials(tmp_path):
    cfg = parse_config(MINIMAL.replace("trials=4", "trials=0"))
    report = run(cfg, out_dir=tmp_path)
    rows = read_rows(tmp_path / "trials.csv")
    assert rows == [TRIAL_HEADER]
    assert report.trials == 0
    assert report.mean_fp == 0.0 and report.ci95_fn == 0.0
    agg = [r for r in read_rows(tmp_path / "aggregate.csv") if not r[0].startswith("#")]
    assert agg[0] == AGG_HEADER
    assert all(x == x for x in agg[1])  # no NaNs serialized


def test_run_deterministic_apart_from_timing(tmp_path):
    cfg = parse_config(MINIMAL.replace("n=65536", "n=4096").replace("k=8", "k=2"))
    run(cfg, out_dir=tmp_path / "a")
    run(cfg, out_dir=tmp_path / "b")
    ra = read_rows(tmp_path / "a" / "trials.csv")
    rb = read_rows(tmp_path / "b" / "trials.csv")
    ts = TRIAL_HEADER.index("decode_ns")
    stripped_a = [r[:ts] + r[ts + 1:] for r in ra]
    stripped_b = [r[:ts] + r[ts + 1:] for r in rb]
    assert stripped_a == stripped_b  # wall time is the only varying column


def test_run_parallel_workers_match_serial(tmp_path):
    cfg = parse_config(MINIMAL.replace("n=65536", "n=4096").replace("k=8", "k=2"))
    run(cfg, out_dir=tmp_path / "serial", threads=1)
    run(cfg, out_dir=tmp_path / "pool", threads=2)
    ts = TRIAL_HEADER.index("decode_ns")
    a = [r[:ts] + r[ts + 1:] for r in read_rows(tmp_path / "serial" / "trials.csv")]
    b = [r[:ts] + r[ts + 1:] for r in read_rows(tmp_path / "pool" / "trials.csv")]
    assert a == b


def test_trial_rows_schema():
    cfg = parse_config(MINIMAL.replace("n=65536", "n=4096").replace("k=8", "k=2"))
    row = run_trial(cfg, 0)
    assert len(row) == len(TRIAL_HEADER)
    assert row[0] == 0 and row[2] == 4096 and row[3] == 2
    assert row[4] > 0 and row[7] > 0


def test_comp_scheme_runs(tmp_path):
    text = "scheme=comp\nn=50\nk=2\nchannel=none\ntrials=5\nmaster_seed=3\nm=40\n"
    cfg = parse_config(text)
    report = run(cfg, out_dir=tmp_path)
    assert report.trials == 5
    assert report.mean_fn == 0.0  # COMP never misses a sick person


def test_oracle_scheme_runs(tmp_path):
    text = "scheme=oracle\nn=12\nk=2\nchannel=bsc:0.1\ntrials=5\nmaster_seed=3\nm=30\n"
    cfg = parse_config(text)
    report = run(cfg, out_dir=tmp_path)
    assert report.trials == 5


def test_gadget_scheme_runs(tmp_path):
    text = (
        "scheme=gacha+gadgets\nn=65536\nk=4\nchannel=none\ntrials=3\nmaster_seed=5\n"
        "rho=4\nR=16\ntau_depth=2\nouter_w=8\n"
    )
    cfg = parse_config(text)
    report = run(cfg, out_dir=tmp_path)
    assert report.trials == 3
    assert report.m > 0


def test_oracle_check_passes_on_tiny_noiseless():
    text = "scheme=gacha\nn=64\nk=2\nchannel=none\ntrials=25\nmaster_seed=11\n"
    trials, unique, full, mismatches, comp_bad = oracle_check(parse_config(text))
    assert trials == 25
    assert unique > 0 and full > 0
    assert mismatches == 0
    assert comp_bad == 0


def test_cli_simulate_and_exit_codes(tmp_path):
    cfg_path = tmp_path / "sim.cfg"
    cfg_path.write_text(MINIMAL.replace("n=65536", "n=4096").replace("k=8", "k=2"))
    assert main(["simulate", str(cfg_path), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "trials.csv").exists()
    bad = tmp_path / "bad.cfg"
    bad.write_text("scheme=gacha\n")
    assert main(["simulate", str(bad)]) == 2


def test_cli_oracle_check(tmp_path):
    cfg_path = tmp_path / "tiny.cfg"
    cfg_path.write_text("scheme=gacha\nn=64\nk=2\nchannel=none\ntrials=10\nmaster_seed=2\n")
    assert main(["oracle-check", str(cfg_path)]) == 0


def test_env_thread_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("GACHA_THREADS", "2")
    cfg_path = tmp_path / "sim.cfg"
    cfg_path.write_text(MINIMAL.replace("n=65536", "n=4096").replace("k=8", "k=2").replace("trials=4", "trials=2"))
    assert main(["simulate", str(cfg_path), "--out", str(tmp_path / "o")]) == 0


def test_validate_inapplicable_keys():
    with pytest.raises(ValueError, match="only apply"):
        parse_config("scheme=comp\nn=50\nk=2\nchannel=none\ntrials=1\nmaster_seed=1\nrho=3\n")
    with pytest.raises(ValueError, match="noiseless-only"):
        parse_config(MINIMAL.replace("channel=none", "channel=bsc:0.1") + "inner=cw\n")
    with pytest.raises(ValueError, match="noiseless results"):
        parse_config("scheme=comp\nn=50\nk=2\nchannel=bsc:0.1\ntrials=1\nmaster_seed=1\n")
