"""Batch simulation driver: flat key=value configs, seeded trials, CSV out.

Per-trial seeds are derived by folding the master seed with the trial index
through a fixed multiplier (seed_t = master_seed XOR ((t + 1) * 0x9E3779B97F4A7C15,
truncated to 63 bits)), so any run is replayable trial-by-trial regardless of
worker count.  The rng family is numpy's PCG64 via default_rng(seed_t); the
family and numpy version are recorded in the aggregate file header.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import brute_force_decode, comp_decode
from .channels import apply_plan_many, parse_channel_spec, plan_symmetrize
from .core_model import sample_instance, score
from .gacha_core import analytic_budget, default_params, gacha_scheme
from .gadgets import pyramid_build
from .scheme import SchemeHandle

SEED_FOLD = 0x9E3779B97F4A7C15
SEED_MASK = (1 << 63) - 1

SCHEMES = ("gacha", "gacha+gadgets", "comp", "oracle")


@dataclass(frozen=True)
class SimConfig:
    scheme: str
    n: int
    k: int
    trials: int
    master_seed: int
    channel: str = "none"
    # core sizing (0 = fill from the standard ratios)
    w: int = 0
    d: int = 0
    r: int = 0
    B: int = 0
    inner: str = "auto"     # auto | cw | linear
    ell: int = 0            # per-block length
    weight: int = 0         # constant-weight ones per block
    lin_dim: int = 0        # linear-code payload bits per block
    code_seed: int = 7
    symmetrize: str = "auto"  # auto | on | off
    # gadget stack
    pi: int = 1
    sigma: int = 1
    rho: int = 4
    R: int = 16
    tau_depth: int = 2
    outer_w: int = 0
    # comp sizing
    m: int = 0
    out: str = "out"


_INT_KEYS = {
    "n", "k", "trials", "master_seed", "w", "d", "r", "B", "ell", "weight",
    "lin_dim", "code_seed", "pi", "sigma", "rho", "R", "tau_depth", "outer_w", "m",
}
_STR_KEYS = {"scheme", "channel", "inner", "symmetrize", "out"}
_REQUIRED = ("scheme", "n", "k", "trials", "master_seed")
_GADGET_KEYS = {"pi", "sigma", "rho", "R", "tau_depth", "outer_w"}


_SIZING_KEYS = {"w", "d", "r", "B", "ell", "weight", "lin_dim", "code_seed", "inner"}


def parse_config(text: str) -> SimConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _INT_KEYS and key not in _STR_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                raise ValueError(f"line {lineno}: key {key!r} needs an integer, got {val!r}")
        else:
            values[key] = val
    for key in _REQUIRED:
        if key not in values:
            raise ValueError(f"missing required key {key!r}")
    scheme = values.get("scheme")
    if scheme != "gacha+gadgets":
        bad = sorted(_GADGET_KEYS & values.keys())
        if bad:
            raise ValueError(f"keys {bad} only apply to scheme=gacha+gadgets")
    if scheme in ("comp", "oracle"):
        bad = sorted(_SIZING_KEYS & values.keys())
        if bad:
            raise ValueError(f"keys {bad} only apply to the gacha schemes")
    if scheme in ("gacha", "gacha+gadgets") and "m" in values:
        raise ValueError("key m only applies to scheme=comp or scheme=oracle")
    config = SimConfig(**values)
    validate_config(config)
    return config


def validate_config(config: SimConfig) -> None:
    if config.scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {config.scheme!r}")
    if not 0 < config.k < config.n:
        raise ValueError(f"need 0 < k < n, got k={config.k}, n={config.n}")
    if config.trials < 0:
        raise ValueError("trials must be >= 0")
    channel = parse_channel_spec(config.channel)  # raises on bad spec / parameters
    if config.symmetrize not in ("auto", "on", "off"):
        raise ValueError("symmetrize must be auto, on, or off")
    if (channel is not None and config.symmetrize == "off"
            and not config.channel.startswith("bsc") and config.scheme != "oracle"):
        raise ValueError("asymmetric channels need the symmetrizer; drop symmetrize=off")
    if config.inner not in ("auto", "cw", "linear"):
        raise ValueError("inner must be auto, cw, or linear")
    if config.inner == "cw" and channel is not None:
        raise ValueError("the constant-weight inner layer is noiseless-only; use inner=linear")
    if config.scheme == "comp" and channel is not None:
        raise ValueError("comp decodes noiseless results only; use channel=none")
    if config.scheme == "gacha+gadgets":
        if not 1 < config.rho < config.R:
            raise ValueError(
                f"expander needs 1 < rho < R, got rho={config.rho}, R={config.R}"
            )
        if config.tau_depth < 2:
            raise ValueError(f"pyramid needs tau_depth >= 2, got {config.tau_depth}")
        if config.pi < 1 or config.sigma < 1:
            raise ValueError("need pi >= 1 and sigma >= 1")
    if config.scheme == "oracle" and math.comb(config.n, config.k) > 10 ** 6:
        raise ValueError("oracle scheme needs C(n, k) <= 10^6")


def _want_plan(config: SimConfig, channel):
    """The symmetrizer plan to use, or None."""
    if channel is None:
        return None
    if config.symmetrize == "off":
        return None
    if config.symmetrize == "auto" and config.channel.startswith("bsc"):
        return None
    return plan_symmetrize(channel)


def effective_crossover(config: SimConfig):
    """The BSC crossover the decoder should assume, or None when noiseless."""
    channel = parse_channel_spec(config.channel)
    if channel is None:
        return None
    plan = _want_plan(config, channel)
    if plan is not None:
        return plan.crossover
    if config.channel.startswith("bsc"):
        return float(config.channel.split(":", 1)[1])
    return None  # raw binary asymmetric channel: caller insisted with symmetrize=off


def derive_seed(master_seed: int, trial: int) -> int:
    return (master_seed ^ ((trial + 1) * SEED_FOLD)) & SEED_MASK


def base_gacha_config(config: SimConfig) -> SimConfig:
    """The core-scheme sizing a config implies (the pyramid's innermost layer)."""
    if config.scheme == "gacha":
        return config
    # one expander layer multiplies the sick load by R / (2 rho) and addresses
    # its inner scheme through the 2 * outer_w - bit pair space
    outer_w = config.outer_w or max(2, int(math.ceil(math.log2(config.R + 1))))
    return replace(config, scheme="gacha", n=1 << (2 * outer_w), outer_w=outer_w,
                   k=max(1, 2 * config.k * config.rho // config.R))


def gacha_params_for(config: SimConfig, matrix_seed: int):
    config = base_gacha_config(config)
    crossover = effective_crossover(config)
    if crossover is None and config.inner == "linear":
        crossover = 0.0
    if config.inner == "cw":
        crossover = None
    return default_params(
        config.n,
        config.k,
        channel_crossover=crossover,
        matrix_seed=matrix_seed,
        w=config.w, d=config.d, r=config.r, B=config.B,
        ell=config.ell, weight=config.weight, lin_dim=config.lin_dim,
        code_seed=config.code_seed,
    )


def build_scheme(config: SimConfig, matrix_seed: int, gadget_seed: int) -> SchemeHandle:
    if config.scheme in ("gacha", "gacha+gadgets"):
        base = gacha_scheme(gacha_params_for(config, matrix_seed))
        if config.scheme == "gacha":
            return base
        outer_w = base_gacha_config(config).outer_w
        n_layers = config.tau_depth - 1
        handle = pyramid_build(
            base, config.tau_depth, sigma=config.sigma, pi=config.pi,
            seed=gadget_seed,
            rho_schedule=[config.rho] * n_layers,
            R_schedule=[config.R] * n_layers,
            outer_w_schedule=[outer_w] * n_layers,
        )
        if config.n > handle.n:
            raise ValueError(
                f"population {config.n} exceeds the composed capacity {handle.n}"
            )
        return handle
    if config.scheme == "comp":
        return _bernoulli_scheme(config, matrix_seed)
    if config.scheme == "oracle":
        return _oracle_scheme(config, matrix_seed)
    raise ValueError(f"unknown scheme {config.scheme!r}")


def _bernoulli_matrix(config: SimConfig, matrix_seed: int):
    from .core_model import ConfigMatrix

    m = config.m or math.ceil(math.e * config.k * math.log(config.n))
    p = 1 - 2 ** (-1.0 / config.k)
    cols = []
    for j in range(config.n):
        rng = np.random.default_rng((matrix_seed, j))
        cols.append(np.flatnonzero(rng.random(m) < p).astype(np.int64))
    return ConfigMatrix(m=m, n=config.n, columns=cols)


def _bernoulli_scheme(config: SimConfig, matrix_seed: int) -> SchemeHandle:
    matrix = _bernoulli_matrix(config, matrix_seed)
    return SchemeHandle(
        n=matrix.n, k_design=config.k, m=matrix.m,
        column=lambda j: matrix.columns[j],
        decode=lambda bits: comp_decode(matrix, bits),
        layers=("comp",),
    )


def _oracle_scheme(config: SimConfig, matrix_seed: int) -> SchemeHandle:
    matrix = _bernoulli_matrix(config, matrix_seed)
    channel = parse_channel_spec(config.channel)

    def decode(z):
        return set(brute_force_decode(matrix, z, config.k, channel).best)

    return SchemeHandle(
        n=matrix.n, k_design=config.k, m=matrix.m,
        column=lambda j: matrix.columns[j],
        decode=decode,
        layers=("oracle",),
    )


def run_trial(config: SimConfig, trial: int):
    """One seeded trial; returns the per-trial CSV row as a tuple."""
    seed_t = derive_seed(config.master_seed, trial)
    rng = np.random.default_rng(seed_t)
    matrix_seed = int(rng.integers(SEED_MASK))
    gadget_seed = int(rng.integers(SEED_MASK))
    handle = build_scheme(config, matrix_seed, gadget_seed)
    channel = parse_channel_spec(config.channel)
    plan = _want_plan(config, channel)
    inst = sample_instance(config.n, config.k, rng)
    y = handle.observed_bits(inst.sick_set)
    if channel is None:
        bits = y
    else:
        z = channel.transmit_many(y, rng)
        if plan is not None:
            bits = apply_plan_many(plan, z, rng)
        elif channel.q == 2:
            bits = z.astype(np.uint8)
        else:
            raise ValueError("non-binary channel output reached the decoder without a plan")
        if config.scheme == "oracle":
            bits = z  # the oracle consumes raw symbols with the channel model
    t0 = time.perf_counter_ns()
    estimate = handle.decode(bits)
    decode_ns = time.perf_counter_ns() - t0
    metrics = score(inst, estimate, m=handle.m, decode_nanos=decode_ns)
    return (trial, seed_t, config.n, config.k, handle.m,
            metrics.false_positives, metrics.false_negatives, decode_ns)


def _trial_star(args):
    return run_trial(*args)


@dataclass
class AggregateReport:
    trials: int
    mean_fp: float
    std_fp: float
    ci95_fp: float
    mean_fn: float
    std_fn: float
    ci95_fn: float
    m: int
    mean_decode_ns: float
    budget: float


def aggregate_rows(config: SimConfig, rows) -> AggregateReport:
    if config.scheme in ("gacha", "gacha+gadgets"):
        params = gacha_params_for(config, matrix_seed=0)
        budget = analytic_budget(base_gacha_config(config).k, params.w, params.d, params.r)
    else:
        budget = 0.0
    if not rows:
        return AggregateReport(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0.0, budget)
    fp = np.array([r[5] for r in rows], dtype=float)
    fn = np.array([r[6] for r in rows], dtype=float)
    dns = np.array([r[7] for r in rows], dtype=float)
    t = len(rows)
    return AggregateReport(
        trials=t,
        mean_fp=float(fp.mean()), std_fp=float(fp.std()),
        ci95_fp=float(1.96 * fp.std() / math.sqrt(t)),
        mean_fn=float(fn.mean()), std_fn=float(fn.std()),
        ci95_fn=float(1.96 * fn.std() / math.sqrt(t)),
        m=int(rows[0][4]),
        mean_decode_ns=float(dns.mean()),
        budget=budget,
    )


TRIAL_HEADER = ["trial", "seed", "n", "k", "m", "fp", "fn", "decode_ns"]
AGG_HEADER = ["trials", "mean_fp", "std_fp", "ci95_fp", "mean_fn", "std_fn",
              "ci95_fn", "m", "mean_decode_ns", "analytic_budget"]


def run(config: SimConfig, out_dir: str | None = None, threads: int = 1):
    """Execute all trials, write trials.csv and aggregate.csv, return the report."""
    out = Path(out_dir or config.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(config, t) for t in range(config.trials)]
    rows = []
    if threads > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for row in pool.map(_trial_star, tasks, chunksize=8):
                rows.append(row)
    else:
        for task in tasks:
            rows.append(_trial_star(task))

    trials_path = out / "trials.csv"
    with trials_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_HEADER)
        writer.writerows(rows)

    report = aggregate_rows(config, rows)
    agg_path = out / "aggregate.csv"
    fresh = not agg_path.exists() or agg_path.stat().st_size == 0
    with agg_path.open("a", newline="") as fh:
        if fresh:
            fh.write(f"# gachagt={__version__}\n")
            fh.write("# rng_family=numpy-PCG64/default_rng\n")
            fh.write(f"# numpy={np.__version__}\n")
            fh.write(f"# seed_fold=seed_t=(master_seed^((t+1)*{SEED_FOLD:#x}))&(2^63-1)\n")
            fh.write(f"# master_seed={config.master_seed}\n")
            csv.writer(fh).writerow(AGG_HEADER)
        csv.writer(fh).writerow([
            report.trials, report.mean_fp, report.std_fp, report.ci95_fp,
            report.mean_fn, report.std_fn, report.ci95_fn, report.m,
            report.mean_decode_ns, report.budget,
        ])
    return report


# ---------------------------------------------------------------------------
# oracle cross-check
# ---------------------------------------------------------------------------

def oracle_check(config: SimConfig):
    """Run the scheme and the exhaustive decoder side by side on tiny instances.

    Returns (trials, unique_explanation_trials, full_emits, mismatches,
    comp_violations): mismatches counts unique-explanation trials where the
    scheme emitted k indices differing from the oracle's support;
    comp_violations counts trials where COMP missed a sick person.
    """
    if config.n > 4096:
        raise ValueError("oracle-check is for tiny instances (n <= 4096)")
    if parse_channel_spec(config.channel) is not None:
        raise ValueError("oracle-check compares noiseless decoders; use channel=none")
    from .core_model import run_tests

    unique = full = mismatches = comp_bad = 0
    for trial in range(config.trials):
        seed_t = derive_seed(config.master_seed, trial)
        rng = np.random.default_rng(seed_t)
        matrix_seed = int(rng.integers(SEED_MASK))
        int(rng.integers(SEED_MASK))  # keep the draw order of run_trial
        params = gacha_params_for(config, matrix_seed)
        handle = gacha_scheme(params)
        matrix = handle.build()
        inst = sample_instance(config.n, config.k, rng)
        y = run_tests(matrix, inst)
        estimate = handle.decode(y)
        oracle = brute_force_decode(matrix, y, config.k)
        if set(oracle.best) and len(oracle.consistent_supports) == 1:
            unique += 1
            if len(estimate) == config.k:
                full += 1
                if estimate != set(oracle.best):
                    mismatches += 1
        if not inst.sick_set <= comp_decode(matrix, y):
            comp_bad += 1
    return config.trials, unique, full, mismatches, comp_bad


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("GACHA_THREADS")
    return max(1, int(env)) if env else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gacha-sim",
                                     description="group-testing Monte-Carlo driver")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run seeded trials and write CSVs")
    sim.add_argument("config", help="key=value config file")
    sim.add_argument("--out", default=None, help="output directory")
    sim.add_argument("--threads", type=int, default=None,
                     help="worker processes (default: GACHA_THREADS or 1)")
    orc = sub.add_parser("oracle-check",
                         help="compare against the exhaustive decoder on tiny instances")
    orc.add_argument("config", help="key=value config file")
    args = parser.parse_args(argv)

    try:
        config = parse_config(Path(args.config).read_text())
    except (OSError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    if args.command == "simulate":
        try:
            report = run(config, out_dir=args.out, threads=_thread_count(args))
        except Exception as e:  # a failed trial aborts the whole run
            print(f"run aborted: {e}", file=sys.stderr)
            return 1
        print(f"trials={report.trials} m={report.m} "
              f"mean_fp={report.mean_fp:.6f} mean_fn={report.mean_fn:.6f} "
              f"mean_decode_ms={report.mean_decode_ns / 1e6:.3f} "
              f"budget={report.budget:.6g}")
        return 0

    trials, unique, full, mismatches, comp_bad = oracle_check(config)
    print(f"trials={trials} unique_explanation={unique} full_emits={full} "
          f"mismatches={mismatches} comp_violations={comp_bad}")
    return 0 if mismatches == 0 and comp_bad == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
