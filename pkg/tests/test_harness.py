from __future__ import annotations

import csv
import io
import math

import numpy as np
import pytest

from ada_arena import harness
from ada_arena.harness import (
    COLUMNS,
    ExperimentConfig,
    check_threshold,
    default_output,
    loglog_slope,
    run_experiment,
    run_trial,
    sweep,
    sweep_csv,
)
from ada_arena.mechanisms import ConfigError


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("changes", [
    {"kind": "nope"}, {"n": 0}, {"trials": 0}, {"rounds": 0}, {"sigma": -1.0},
    {"kind": "natural_attack", "c": 3}, {"kind": "natural_attack", "mechanism": "laplace"},
    {"kind": "natural_attack", "mechanism": "decrypt-everything"}, {"scheme": "pairing"},
    {"kind": "gl_decode", "mb": 70}, {"kind": "gl_decode", "oracle_error": 1.5},
])
def test_config_validation(changes):
    fields = {"kind": "ibe_selftest", **changes}
    with pytest.raises(ConfigError):
        ExperimentConfig(**fields)


def test_mechanism_default_depends_on_kind():
    assert ExperimentConfig("dp_baseline").mechanism == "gaussian"
    assert ExperimentConfig("natural_attack").mechanism == "empirical"
    assert ExperimentConfig("dp_baseline", n=30).rounds == 30
    assert ExperimentConfig("dp_baseline", n=30, ell=12).rounds == 12
    assert ExperimentConfig("balanced_attack", mechanism="decrypt-everything").mechanism == "decrypt-everything"


def test_ibe_selftest_rate_one():
    for scheme in ("trivial", "compact"):
        s = run_experiment(ExperimentConfig("ibe_selftest", m=16, trials=5, scheme=scheme), write=False)
        assert s.rate == 1.0 and s.failed_trials == 0
        assert check_threshold(s)


def test_natural_oracle_rate_zero():
    s = run_experiment(ExperimentConfig("natural_attack", n=10, mechanism="oracle", trials=5, rounds=200),
                       write=False)
    assert s.rate == 0.0
    lo, hi = s.ci
    assert lo == 0.0 <= s.rate <= hi


def test_csv_schema_and_determinism(tmp_path):
    cfg = ExperimentConfig("natural_attack", n=5, trials=4, rounds=80, seed=3, output=str(tmp_path / "a.csv"))
    run_experiment(cfg)
    run_experiment(cfg.replace(output=str(tmp_path / "b.csv")))
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b
    rows = parse(a.decode())
    assert list(rows[0]) == ["trial", "seed", *COLUMNS["natural_attack"], "error"]
    assert [int(r["trial"]) for r in rows] == [0, 1, 2, 3]
    other = run_experiment(cfg.replace(seed=4), write=False).extra["csv"]
    assert other.encode() != a


def test_workers_do_not_change_output():
    cfg = ExperimentConfig("gl_decode", n=50, mb=6, trials=6, seed=2)
    one = run_experiment(cfg, write=False).extra["csv"]
    two = run_experiment(cfg.replace(workers=2), write=False).extra["csv"]
    assert one == two


def test_trial_failures_are_recorded(monkeypatch):
    real = harness.ROW_BUILDERS["gl_decode"]
    calls = []

    def flaky(cfg, seed):
        calls.append(seed)
        if len(calls) == 2:
            raise RuntimeError("boom")
        return real(cfg, seed)

    monkeypatch.setitem(harness.ROW_BUILDERS, "gl_decode", flaky)
    s = run_experiment(ExperimentConfig("gl_decode", n=50, mb=4, trials=4), write=False)
    assert s.failed_trials == 1 and len(s.rows) == 4
    assert s.rows[1]["error"] == "RuntimeError: boom"
    assert s.rate == 1.0


def test_summary_line():
    s = run_experiment(ExperimentConfig("gl_decode", n=50, mb=4, trials=3), write=False)
    s.extra.pop("csv")
    assert s.line().startswith("gl_decode: rate=1.0000 wilson95=[")


def test_check_threshold_directions():
    s = run_experiment(ExperimentConfig("gl_decode", n=50, mb=4, trials=3), write=False)
    assert check_threshold(s) and not check_threshold(s, 1.5)
    s.kind, s.rate = "dp_baseline", 0.3
    assert not check_threshold(s)
    s.rate = math.nan
    assert not check_threshold(s)


def test_default_output_env(monkeypatch, tmp_path):
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path))
    assert default_output("weak_ka") == str(tmp_path / "weak_ka.csv")
    monkeypatch.delenv(harness.OUTPUT_ENV)
    assert default_output("weak_ka") == "results/weak_ka.csv"


def test_row_kinds_smoke():
    for kind, extra in [("approx_agreement", {"rounds": 60}), ("weak_ka", {"rounds": 60, "n": 10}),
                        ("balanced_attack", {"rounds": 60}), ("dp_baseline", {})]:
        cfg = ExperimentConfig(kind, **{"n": 5, "trials": 1, **extra})
        row = run_trial(cfg, 0)
        assert row["error"] == "", row["error"]
        assert set(COLUMNS[kind]) <= set(row)


# -- sweeps ------------------------------------------------------------------------


def test_one_point_sweep_matches_run_experiment():
    base = ExperimentConfig("natural_attack", n=5, trials=4, rounds=60, seed=1)
    rows = sweep(base, {})
    s = run_experiment(base, write=False)
    assert len(rows) == 1
    assert rows[0]["rate"] == s.rate and (rows[0]["ci_low"], rows[0]["ci_high"]) == s.ci


def test_sweep_is_deterministic_and_records_errors():
    base = ExperimentConfig("natural_attack", trials=2, rounds=40)
    grid = {"n": [4, 6], "c": [3, 20]}
    a, b = sweep_csv(sweep(base, grid)), sweep_csv(sweep(base, grid))
    assert a == b
    rows = parse(a)
    assert len(rows) == 4
    assert [r["error"] != "" for r in rows] == [True, False, True, False]


def test_loglog_slope():
    xs = np.array([20, 40, 80])
    assert loglog_slope(xs, 3 * xs**2) == pytest.approx(2.0)
    assert loglog_slope(xs, xs) == pytest.approx(1.0)


def rounds_to_failure(rows):
    return [r["median_first_failure"] + 1 for r in rows]


@pytest.mark.slow
def test_reconstruction_time_grows_linearly():
    # time until the whole sample is accused, against the empirical mean
    rows = sweep(ExperimentConfig("natural_attack", trials=10, seed=5), {"n": [20, 40, 80]})
    slope = loglog_slope([20, 40, 80], [r["median_reconstruction"] for r in rows])
    assert 0.8 <= slope <= 1.5
    assert all(r["rate"] == 1.0 for r in rows)


@pytest.mark.xfail(strict=True, reason="the empirical mean errs by sampling noise within a few rounds; "
                                       "see decisions ledger")
def test_rounds_to_failure_superlinear():
    rows = sweep(ExperimentConfig("natural_attack", trials=10, seed=5), {"n": [20, 40, 80]})
    assert loglog_slope([20, 40, 80], rounds_to_failure(rows)) > 1.0
