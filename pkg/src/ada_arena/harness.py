"""Experiment orchestration: configs, seeded trial batches, sweeps and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .mechanisms import ConfigError

KINDS = ("natural_attack", "balanced_attack", "dp_baseline", "approx_agreement",
         "weak_ka", "gl_decode", "ibe_selftest")

OUTPUT_ENV = "ADA_ARENA_OUT"

# default pass condition per kind when --assert is given: (direction, threshold)
DEFAULT_THRESHOLDS = {
    "natural_attack": (">=", 0.75),
    "balanced_attack": (">=", 0.75),
    "dp_baseline": ("<=", 0.25),
    "approx_agreement": (">=", 0.9),
    "weak_ka": (">=", 0.89),
    "gl_decode": (">=", 0.99),
    "ibe_selftest": (">=", 1.0),
}


@dataclass
class ExperimentConfig:
    kind: str
    n: int = 50
    rounds: int | None = None
    ell: int | None = None
    c: int = 20
    lam: int = 16
    scheme: str = "compact"
    mechanism: str | None = None
    sigma: float | None = None
    tau: float | None = None
    trials: int = 100
    seed: int = 0
    alpha: float = 0.01
    beta: float = 1.0
    mb: int = 8
    oracle_error: float = 0.24
    m: int = 16
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.mechanism is None:
            self.mechanism = "gaussian" if self.kind == "dp_baseline" else "empirical"
        for name in ("n", "c", "lam", "trials", "mb", "m", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("rounds", "ell", "tau", "sigma"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.kind in ("natural_attack", "balanced_attack", "dp_baseline") and self.c < 4:
            raise ConfigError("c must be >= 4")
        if self.kind == "gl_decode" and not 0 <= self.oracle_error <= 1:
            raise ConfigError("oracle_error must lie in [0, 1]")
        if self.kind == "gl_decode" and self.mb > min(self.n, 63):
            raise ConfigError("gl_decode needs mb <= min(n, 63)")
        if self.kind == "balanced_attack" and self.lam < 8:
            raise ConfigError("lam must be >= 8")
        from .ibe import SCHEMES
        from .mechanisms import MECHANISM_NAMES

        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown IBE scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")

        allowed = MECHANISM_NAMES + (("decrypt-everything",) if self.kind == "balanced_attack" else ())
        if self.kind in ("natural_attack", "balanced_attack", "dp_baseline") and self.mechanism not in allowed:
            raise ConfigError(f"unknown mechanism {self.mechanism!r}; choose from {allowed}")
        if self.kind == "dp_baseline" and self.rounds is None:
            # the baseline compares mechanisms at ell = n unless told otherwise
            self.rounds = self.ell if self.ell is not None else self.n

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)


@dataclass
class TrialSummary:
    kind: str
    rows: list[dict]
    rate: float
    ci: tuple[float, float]
    wall_clock: float
    failed_trials: int = 0
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        lo, hi = self.ci
        text = (f"{self.kind}: rate={self.rate:.4f} wilson95=[{lo:.4f}, {hi:.4f}] "
                f"trials={len(self.rows)} failed={self.failed_trials} time={self.wall_clock:.1f}s")
        extras = " ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in self.extra.items())
        return f"{text} {extras}".rstrip()


# -- per-trial work (top level so worker processes can import it) ----------------


def _attack_row(cfg: ExperimentConfig, seed: int) -> dict:
    from .balanced import DecryptEverything, balanced_game
    from .fingerprint import AttackConfig, natural_attack_game
    from .ibe import make_scheme
    from .mechanisms import make_mechanism

    attack = AttackConfig(c=cfg.c, rounds=cfg.rounds, tau=cfg.tau)
    assist = cfg.mechanism == "oracle"
    if cfg.kind == "balanced_attack":
        ibe = make_scheme(cfg.scheme)
        mech = DecryptEverything(ibe) if cfg.mechanism == "decrypt-everything" else make_mechanism(
            cfg.mechanism, cfg.sigma)
        result, _ = balanced_game(mech, cfg.n, cfg.lam, ibe, attack, seed, rounds=cfg.rounds,
                                  referee_assist=assist)
    else:
        result, _ = natural_attack_game(make_mechanism(cfg.mechanism, cfg.sigma), cfg.n, attack, seed,
                                        referee_assist=assist)
    first = result.first_failure_round
    recon = result.info.get("reconstruction_round")
    return {
        "outcome": result.outcome,
        "ell": len(result.errors),
        "first_failure_round": "" if first is None else first,
        "final_error": result.final_error,
        "max_error": float(result.errors.max()),
        "accused": result.info.get("accused", ""),
        "reconstruction_round": "" if recon is None else recon,
        "clipped": len(result.clipped_rounds),
        "decrypt_failures": result.decrypt_failures,
        "encryption_failures": result.info.get("encryption_failures", 0),
    }


def _approx_row(cfg: ExperimentConfig, seed: int) -> dict:
    from .key_agreement import BUILTIN_EAVESDROPPERS, agreement_radius, balanced_agreement

    run = balanced_agreement(cfg.n, seed, lam=cfg.lam, c=cfg.c, rounds=cfg.rounds,
                             scheme=cfg.scheme, audit=False)
    messages = run.transcript.messages()
    errors = {f"G_{G.name}_error": abs(G.predict(messages) - run.o1) for G in BUILTIN_EAVESDROPPERS}
    return {"o1": run.o1, "o2": run.o2, "hidden": run.hidden, "gap": run.gap,
            "outcome": int(run.gap <= agreement_radius(cfg.n)),
            "best_G_error": min(errors.values()), **errors}


def _weak_ka_row(cfg: ExperimentConfig, seed: int) -> dict:
    from .key_agreement import BUILTIN_EAVESDROPPERS, balanced_agreement, run_weak_ka

    def approx(n, inner_seed):
        return balanced_agreement(n, inner_seed, lam=cfg.lam, c=cfg.c, rounds=cfg.rounds,
                                  scheme=cfg.scheme, audit=False)

    run = run_weak_ka(approx, cfg.alpha, cfg.beta, cfg.n, seed)
    messages = run.approx.transcript.messages()
    best = min(abs(G.predict(messages) - run.o1) for G in BUILTIN_EAVESDROPPERS)
    return {"o1": run.o1, "o2": run.o2, "v": run.v, "bit1": run.bit1, "bit2": run.bit2,
            "agree_bit": int(run.agree), "outcome": int(run.agree), "best_G_error": best}


def _gl_row(cfg: ExperimentConfig, seed: int) -> dict:
    from .key_agreement import NoisyOracle, gl_decode

    rng = np.random.default_rng(seed)
    x = int(rng.integers(0, 1 << cfg.mb))
    decoded = gl_decode(NoisyOracle(x, cfg.oracle_error, rng), cfg.n, cfg.mb, rng)
    return {"x": x, "decoded": decoded.value, "outcome": int(decoded.value == x)}


def _ibe_row(cfg: ExperimentConfig, seed: int) -> dict:
    from .ibe import FAILURE, MESSAGES, make_scheme

    rng = np.random.default_rng(seed)
    ibe = make_scheme(cfg.scheme)
    keys = ibe.derive_all(ibe.setup(cfg.lam, cfg.m, rng))
    failures = 0
    for j in range(cfg.m):
        for msg in MESSAGES:
            out = ibe.decrypt(keys.identity_keys[j], ibe.encrypt(keys.mpk, j, msg, rng))
            failures += out is FAILURE or out != msg
    length_ok = keys.k == ibe.mpk_bits(cfg.lam, cfg.m)
    return {"failures": failures, "mpk_bits": keys.k, "mpk_length_ok": int(length_ok),
            "outcome": int(failures == 0 and length_ok)}


ROW_BUILDERS = {
    "natural_attack": _attack_row,
    "balanced_attack": _attack_row,
    "dp_baseline": _attack_row,
    "approx_agreement": _approx_row,
    "weak_ka": _weak_ka_row,
    "gl_decode": _gl_row,
    "ibe_selftest": _ibe_row,
}

COLUMNS = {
    "natural_attack": ["outcome", "ell", "first_failure_round", "final_error", "max_error", "accused",
                       "reconstruction_round", "clipped", "decrypt_failures", "encryption_failures"],
    "approx_agreement": ["o1", "o2", "hidden", "gap", "outcome", "best_G_error",
                         "G_last-answer_error", "G_mean-of-answers_error"],
    "weak_ka": ["o1", "o2", "v", "bit1", "bit2", "agree_bit", "outcome", "best_G_error"],
    "gl_decode": ["x", "decoded", "outcome"],
    "ibe_selftest": ["failures", "mpk_bits", "mpk_length_ok", "outcome"],
}
COLUMNS["balanced_attack"] = COLUMNS["dp_baseline"] = COLUMNS["natural_attack"]


def run_trial(cfg: ExperimentConfig, index: int) -> dict:
    from .stats import trial_seed

    seed = trial_seed(cfg.seed, index)
    row = {"trial": index, "seed": seed}
    try:
        row.update(ROW_BUILDERS[cfg.kind](cfg, seed))
        row["error"] = ""
    except Exception as exc:  # recorded per row; the batch continues
        row.update({"outcome": "", "error": f"{type(exc).__name__}: {exc}"})
    return row


def _run_trial_args(args):
    return run_trial(*args)


def run_trials(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(cfg, i) for i in range(cfg.trials)]
    if cfg.workers == 1:
        rows = [run_trial(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_run_trial_args, jobs))
    return sorted(rows, key=lambda r: r["trial"])


def summarize(cfg: ExperimentConfig, rows: list[dict], wall_clock: float) -> TrialSummary:
    from .stats import wilson_interval

    good = [r for r in rows if r["error"] == ""]
    wins = sum(int(r["outcome"]) for r in good)
    rate = wins / len(good) if good else math.nan
    ci = wilson_interval(wins, len(good)) if good else (math.nan, math.nan)
    extra = {}
    if cfg.kind in ("approx_agreement", "weak_ka") and good:
        extra["G_hit_rate"] = float(np.mean([r["best_G_error"] <= 1 / 20 for r in good]))
    if cfg.kind in ("natural_attack", "balanced_attack", "dp_baseline"):
        firsts = [r["first_failure_round"] for r in good if r["first_failure_round"] != ""]
        if firsts:
            extra["median_first_failure"] = float(np.median(firsts))
    return TrialSummary(cfg.kind, rows, rate, ci, wall_clock, len(rows) - len(good), extra)


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["trial", "seed", *columns, "error"]
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(row.get(col, "")) for col in header])
    return buf.getvalue()


def default_output(kind: str) -> str:
    return os.path.join(os.environ.get(OUTPUT_ENV, "results"), f"{kind}.csv")


def write_text(path: str, text: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> TrialSummary:
    """Run ``cfg.trials`` seeded trials, write the CSV and return the summary."""
    start = time.perf_counter()
    rows = run_trials(cfg)
    summary = summarize(cfg, rows, time.perf_counter() - start)
    summary.extra["csv"] = rows_to_csv(rows, COLUMNS[cfg.kind])
    if write:
        write_text(cfg.output or default_output(cfg.kind), summary.extra["csv"])
    return summary


def check_threshold(summary: TrialSummary, threshold: float | None = None) -> bool:
    direction, default = DEFAULT_THRESHOLDS[summary.kind]
    bound = default if threshold is None else threshold
    if math.isnan(summary.rate):
        return False
    return summary.rate >= bound if direction == ">=" else summary.rate <= bound


# -- sweeps ------------------------------------------------------------------------

SWEEP_COLUMNS = ["n", "rounds", "c", "sigma", "trials", "rate", "ci_low", "ci_high",
                 "median_first_failure", "median_reconstruction", "failed_trials", "error"]


def sweep(base: ExperimentConfig, grid: dict[str, list]) -> list[dict]:
    """One summary row per point of the cartesian grid over n, rounds, c, sigma."""
    axes = {name: grid.get(name) or [getattr(base, name)] for name in ("n", "rounds", "c", "sigma")}
    if not all(axes.values()):
        raise ConfigError("sweep grid must be non-empty")
    rows = []
    for n in axes["n"]:
        for rounds in axes["rounds"]:
            for c in axes["c"]:
                for sigma in axes["sigma"]:
                    point = {"n": n, "rounds": "" if rounds is None else rounds, "c": c,
                             "sigma": "" if sigma is None else sigma, "trials": base.trials}
                    try:
                        cfg = base.replace(n=n, rounds=rounds, c=c, sigma=sigma)
                        s = run_experiment(cfg, write=False)
                        good = [r for r in s.rows if r["error"] == ""]
                        firsts = [r["first_failure_round"] for r in good if r.get("first_failure_round", "") != ""]
                        recon = [r["reconstruction_round"] for r in good if r.get("reconstruction_round", "") != ""]
                        point.update(rate=s.rate, ci_low=s.ci[0], ci_high=s.ci[1],
                                     median_first_failure=float(np.median(firsts)) if firsts else "",
                                     median_reconstruction=float(np.median(recon)) if recon else "",
                                     failed_trials=s.failed_trials, error="")
                    except Exception as exc:
                        point.update(error=f"{type(exc).__name__}: {exc}")
                    rows.append(point)
    return rows


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([_format(row.get(col, "")) for col in SWEEP_COLUMNS])
    return buf.getvalue()


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` on ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])
