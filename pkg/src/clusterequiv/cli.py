"""Command-line interface.

Exit status: 0 on success, 2 on invalid input, 3 on a numerical failure.
The default seed may be overridden with the ``CLUSTEREQUIV_SEED`` variable.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import boundaries as bd
from .estimate import EigenConvergenceError, spectral_fit
from .model import Calibration, ModelParams, PairedSample, alternative_flips, gen_paired_sample, random_params
from .numerics import BracketError
from .procedures import TestReport, test_estimation_baseline
from .serialization import (
    read_matrix_csv,
    read_paired_csv,
    write_json,
    write_matrix_csv,
    write_paired_csv,
    write_records_csv,
)
from .sim import METHODS, LabelConfig, _labels_for, child_rng, phase_sweep, run_method
from .stats import log_survival_rs

__all__ = ["RunConfig", "run", "main", "build_parser", "generate", "run_test", "DEFAULT_SEED"]

DEFAULT_SEED = 20_231_017
SEED_ENV = "CLUSTEREQUIV_SEED"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

BOUNDARY_COLUMNS = ["r", "s", "region", "beta_idj", "beta_bar", "beta_star", "t_star", "detectable"]
GRID_COLUMNS = ["r", "beta", "risk", "type1", "type2", "se", "beta_star"]
SURVIVAL_COLUMNS = ["t", "S", "log_S"]

CONFIGS = {
    "same": LabelConfig.SAME,
    "switched": LabelConfig.SWITCHED,
    "flips": LabelConfig.FLIPS,
    "near-switch": LabelConfig.NEAR_SWITCH,
}
IDEAL_METHODS = ("diff", "sum", "comb", "general", "bonferroni", "estimation")
ADAPTIVE_METHODS = ("ada-bonf", "ada-hc")


class UsageError(ValueError):
    """Invalid flags or inputs; reported with exit status 2."""


@dataclass
class RunConfig:
    subcommand: str
    parameters: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    out: str | None = None


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# --------------------------------------------------------------------------- argument helpers


def parse_grid(text: str, flag: str) -> np.ndarray:
    """``lo:hi:steps`` (inclusive linspace) or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
            if steps < 1:
                raise ValueError
            return np.linspace(lo, hi, steps)
    except ValueError:
        pass
    raise UsageError(f"{flag}: expected a number or lo:hi:steps, got {text!r}")


def _require(params: dict, *flags: str) -> None:
    for f in flags:
        if params.get(f) is None:
            raise UsageError(f"--{f.replace('_', '-')} is required")


def _out_stream(out):
    return sys.stdout if out in (None, "-") else out


# --------------------------------------------------------------------------- pipelines


def generate(cal: Calibration, dims: tuple[int, int], config: str, seed: int, m_flips: int | None = None):
    """Parameters, labels and a paired sample for one seeded configuration."""
    rng = child_rng(seed, 0)
    a, b = cal.scales
    params = random_params(a, b, dims[0], dims[1], rng)
    m = alternative_flips(cal.n, cal.epsilon) if m_flips is None else m_flips
    labels = _labels_for(CONFIGS[config], cal.n, m, rng)
    sample = gen_paired_sample(params, labels, rng)
    return params, labels, sample


def run_test(method: str, sample: PairedSample, params: ModelParams | None, seed: int,
             delta: float = 1.0, epsilon: float | None = None) -> TestReport:
    """Run one procedure; the splitting generator is derived from ``seed``."""
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}")
    if method in IDEAL_METHODS and params is None:
        raise UsageError(f"method {method!r} needs --theta and --eta")
    if method == "estimation":
        if epsilon is None:
            raise UsageError("method 'estimation' needs --epsilon or --beta")
        return test_estimation_baseline(sample, params, float(epsilon))
    return run_method(method, sample, params, None, child_rng(seed, 1), delta)


# --------------------------------------------------------------------------- subcommands


def _cmd_gen(cfg: RunConfig) -> int:
    p = cfg.parameters
    _require(p, "n", "r", "beta", "out_dir")
    cal = Calibration(int(p["n"]), float(p["r"]), float(p["s"]), float(p["beta"]))
    params, labels, sample = generate(cal, (int(p["p"]), int(p["q"])), p["config"], cfg.seed, p.get("m_flips"))
    out = Path(p["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    if p.get("combined"):
        write_paired_csv(out / "data.csv", sample)
    else:
        write_matrix_csv(out / "x.csv", sample.x, "x")
        write_matrix_csv(out / "y.csv", sample.y, "y")
    write_matrix_csv(out / "theta.csv", params.theta[None, :], "x")
    write_matrix_csv(out / "eta.csv", params.eta[None, :], "y")
    write_json(out / "labels.json", labels.to_dict())
    write_json(out / "calibration.json", {**cal.to_dict(), "seed": cfg.seed, "config": p["config"]})
    print(f"wrote sample n={cal.n}, p={params.theta.size}, q={params.eta.size} to {out}", file=sys.stderr)
    return EXIT_OK


def _read_vector(path) -> np.ndarray:
    mat = read_matrix_csv(path)
    if mat.shape[0] != 1:
        raise UsageError(f"{path}: expected a single row")
    return mat[0]


def _cmd_test(cfg: RunConfig) -> int:
    p = cfg.parameters
    method = p["method"]
    if p.get("data"):
        sample = read_paired_csv(p["data"])
    else:
        if p.get("x") is None:
            raise UsageError("--x is required (or --data for a combined file)")
        if p.get("y") is None:
            raise UsageError("--y is required (or --data for a combined file)")
        sample = PairedSample(read_matrix_csv(p["x"]), read_matrix_csv(p["y"]))
    params = None
    if p.get("adaptive") and method in IDEAL_METHODS:
        raise UsageError(f"--adaptive cannot be combined with the known-parameter method {method!r}")
    if method in IDEAL_METHODS:
        if p.get("theta") is None or p.get("eta") is None:
            raise UsageError(f"--theta and --eta are required for method {method!r}")
        params = ModelParams(_read_vector(p["theta"]), _read_vector(p["eta"]))
    epsilon = p.get("epsilon")
    if epsilon is None and p.get("beta") is not None:
        epsilon = sample.n ** (-float(p["beta"]))
    report = run_test(method, sample, params, cfg.seed, float(p["delta"]), epsilon)
    write_json(_out_stream(cfg.out), report.to_dict())
    return EXIT_OK


def boundary_records(r_values, s_values):
    for r in r_values:
        for s in s_values:
            r, s = float(r), float(s)
            yield {
                "r": r, "s": s, "region": int(bd.region_of(r, s)),
                "beta_idj": bd.beta_idj(r), "beta_bar": bd.beta_bar_general(r, s),
                "beta_star": bd.beta_star_general(r, s), "t_star": bd.t_star(r, s),
                "detectable": bd.exact_equality_detectable(r, s),
            }


def _cmd_boundary(cfg: RunConfig) -> int:
    p = cfg.parameters
    _require(p, "r")
    r_values = parse_grid(p["r"], "--r")
    s_values = parse_grid(p["s"], "--s")
    if np.any(r_values <= 0):
        raise UsageError("--r values must be positive")
    if np.any(s_values < 0):
        raise UsageError("--s values must be nonnegative")
    write_records_csv(_out_stream(cfg.out), boundary_records(r_values, s_values), BOUNDARY_COLUMNS)
    return EXIT_OK


def _cmd_survival(cfg: RunConfig) -> int:
    p = cfg.parameters
    _require(p, "r", "n", "t")
    r, s, n = float(p["r"]), float(p["s"]), int(p["n"])
    if not r > 0 or s < 0 or n < 3:
        raise UsageError("--r must be positive, --s nonnegative and --n at least 3")
    records = []
    for t in p["t"]:
        log_s = float(log_survival_rs(r, s, n, float(t)))
        records.append({"t": float(t), "S": math.exp(log_s), "log_S": log_s})
    write_records_csv(_out_stream(cfg.out), records, SURVIVAL_COLUMNS)
    return EXIT_OK


def _cmd_estimate(cfg: RunConfig) -> int:
    p = cfg.parameters
    _require(p, "x")
    fit = spectral_fit(read_matrix_csv(p["x"]))
    write_json(_out_stream(cfg.out), {
        "theta_hat": fit.theta_hat.tolist(), "lambda1": fit.lambda1,
        "iterations": fit.iterations, "residual": fit.residual, "clipped": fit.clipped,
    })
    return EXIT_OK


def _cmd_sweep(cfg: RunConfig) -> int:
    p = cfg.parameters
    _require(p, "r", "beta", "n")
    r_values = parse_grid(p["r"], "--r")
    beta_values = parse_grid(p["beta"], "--beta")
    if np.any(r_values <= 0):
        raise UsageError("--r values must be positive")
    if np.any((beta_values <= 0) | (beta_values > 1)):
        raise UsageError("--beta values must lie in (0, 1]")
    grid = phase_sweep(
        float(p["s"]), int(p["n"]), r_values, beta_values, p["method"], int(p["reps"]), cfg.seed,
        dims=(int(p["p"]), int(p["q"])), workers=int(p["workers"]), delta=float(p["delta"]),
    )
    write_records_csv(_out_stream(cfg.out), grid.rows(), GRID_COLUMNS)
    return EXIT_OK


COMMANDS = {
    "gen": _cmd_gen,
    "test": _cmd_test,
    "boundary": _cmd_boundary,
    "survival": _cmd_survival,
    "estimate": _cmd_estimate,
    "sweep": _cmd_sweep,
}


def run(config: RunConfig) -> int:
    """Execute one subcommand and map failures onto exit codes."""
    try:
        return COMMANDS[config.subcommand](config)
    except (EigenConvergenceError, BracketError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


# --------------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2, which matches our convention
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="clusterequiv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, out_help="output path (default: stdout)"):
        sp.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
        sp.add_argument("--out", default=None, help=out_help)

    g = sub.add_parser("gen", help="generate a paired sample and its parameters")
    g.add_argument("--n", type=int)
    g.add_argument("--r", type=float)
    g.add_argument("--s", type=float, default=0.0)
    g.add_argument("--beta", type=float)
    g.add_argument("--p", type=int, default=2)
    g.add_argument("--q", type=int, default=2)
    g.add_argument("--config", choices=sorted(CONFIGS), default="same")
    g.add_argument("--m-flips", dest="m_flips", type=int, default=None)
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("--combined", action="store_true", help="write one data.csv with a block column")
    common(g)

    t = sub.add_parser("test", help="run a test on a paired sample")
    t.add_argument("--x")
    t.add_argument("--y")
    t.add_argument("--data", help="combined CSV with a block column")
    t.add_argument("--theta")
    t.add_argument("--eta")
    t.add_argument("--adaptive", action="store_true")
    t.add_argument("--method", choices=sorted(METHODS), required=True)
    t.add_argument("--delta", type=float, default=1.0)
    t.add_argument("--epsilon", type=float, default=None, help="flip fraction for the estimation method")
    t.add_argument("--beta", type=float, default=None, help="sets epsilon = n^-beta")
    common(t)

    b = sub.add_parser("boundary", help="tabulate detection boundaries")
    b.add_argument("--r")
    b.add_argument("--s", default="0")
    common(b)

    sv = sub.add_parser("survival", help="evaluate the exact null survival function")
    sv.add_argument("--r", type=float)
    sv.add_argument("--s", type=float, default=0.0)
    sv.add_argument("--n", type=int)
    sv.add_argument("--t", type=float, action="append")
    common(sv)

    e = sub.add_parser("estimate", help="spectral estimate of a mean vector")
    e.add_argument("--x")
    common(e)

    w = sub.add_parser("sweep", help="Monte Carlo risk over an (r, beta) grid")
    w.add_argument("--s", type=float, default=0.0)
    w.add_argument("--n", type=int)
    w.add_argument("--r")
    w.add_argument("--beta")
    w.add_argument("--method", choices=sorted(METHODS), default="general")
    w.add_argument("--reps", type=int, default=200)
    w.add_argument("--p", type=int, default=2)
    w.add_argument("--q", type=int, default=2)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--delta", type=float, default=1.0)
    common(w)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("subcommand", "seed", "out")}
    try:
        seed = args.seed if args.seed is not None else default_seed()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(RunConfig(args.subcommand, params, seed, args.out))


if __name__ == "__main__":
    sys.exit(main())
