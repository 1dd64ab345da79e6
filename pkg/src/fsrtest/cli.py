"""Command-line interface: ``fsrtest {test,pvalue,simulate,factors}``.

Exit codes: 0 when a decision or table was produced, 1 for usage or input
errors, 2 when the data are degenerate (``lambda_bar = 0``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bootstrap_test as bt
from .data_io import load_panel, read_csv_panel, standardize
from .factor_model import (
    CollinearityError,
    DataError,
    default_k_max,
    eigenvalue_ratios,
    estimate_num_factors,
    gram_eigenvalues,
)
from .lasso import DegenerateInputError
from .randomness import DEFAULT_SEED
from .simulation import DESIGNS, RejectionTable, SimulationConfig, run_monte_carlo

SEED_ENV = "FSRTEST_SEED"

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _k_arg(text: str):
    if text == "auto":
        return None
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k must be 'auto' or an integer, got {text!r}") from None
    if k < 0:
        raise argparse.ArgumentTypeError("--k must be nonnegative")
    return k


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _alpha_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop:step") from None
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        n = int(round((stop - start) / step))
        return np.round(start + step * np.arange(n + 1), 12)
    return np.asarray(_float_list(text))


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--y", required=True, type=Path, help="CSV with the outcome column")
    p.add_argument("--x", required=True, type=Path, help="CSV with the regressors")
    p.add_argument("--w", type=Path, help="CSV with extra regressors partialled out with the factors")
    p.add_argument("--date-column", action="store_true", help="first column holds date labels")
    p.add_argument("--standardize", action="store_true", help="z-score every column")
    p.add_argument("--lag", type=int, choices=(0, 1), default=0, help="pair y[t+1] with x[t]")


def _add_test_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-size", "-M", type=_positive, default=200, help="number of penalty grid points")
    p.add_argument("--bootstrap", "-L", type=_positive, default=200, help="number of multiplier draws")
    p.add_argument("--seed", type=int, default=None, help=f"u64 seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--k", type=_k_arg, default=None, help="number of factors or 'auto'")
    p.add_argument("--k-max", type=_positive, default=None)
    p.add_argument("--threads", type=_positive, default=1, help="worker cap; results do not depend on it")
    p.add_argument("--output", "-o", type=Path, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "text"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsrtest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="test at one level")
    _add_data_args(t)
    t.add_argument("--alpha", type=float, default=0.05)
    _add_test_args(t)

    pv = sub.add_parser("pvalue", help="p-value over a grid of levels")
    _add_data_args(pv)
    pv.add_argument("--alpha-grid", type=_alpha_grid, default=None, help="start:stop:step or list (default 0.001:0.999:0.001)")
    _add_test_args(pv)

    s = sub.add_parser("simulate", help="Monte Carlo rejection frequencies")
    s.add_argument("--design", type=int, default=None, help="1, 2 or 3")
    s.add_argument("--rho", type=_float_list, default=None, help="rho_f,rho_u,rho_e instead of --design")
    s.add_argument("--m", type=_float_list, default=[0.0], help="signal strengths, comma-separated")
    s.add_argument("--T", type=_positive, default=100)
    s.add_argument("--p", type=_positive, default=100)
    s.add_argument("--reps", type=_positive, default=200)
    s.add_argument("--alpha", type=_float_list, default=[0.1, 0.05, 0.01])
    s.add_argument("--beta-shape", choices=("two", "geometric"), default="two")
    s.add_argument("--grid-size", "-M", type=_positive, default=200)
    s.add_argument("--bootstrap", "-L", type=_positive, default=200)
    s.add_argument("--k-max", type=_positive, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--threads", type=_positive, default=1)
    s.add_argument("--csv", type=Path, help="write the table as CSV")
    s.add_argument("--text", type=Path, help="write the formatted table")
    s.add_argument("--no-timing", action="store_true", help="omit the seconds column from the CSV")

    f = sub.add_parser("factors", help="factor-count diagnostics")
    f.add_argument("--x", required=True, type=Path)
    f.add_argument("--date-column", action="store_true")
    f.add_argument("--standardize", action="store_true")
    f.add_argument("--k-max", type=_positive, default=None)
    f.add_argument("--scree", type=Path, help="write index,eigenvalue,ratio CSV here")
    f.add_argument("--output", "-o", type=Path)
    f.add_argument("--format", choices=("json", "text"), default="json")
    return parser


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load(args):
    return load_panel(
        args.y, args.x, args.w, date_column=args.date_column, standardize_data=args.standardize, lag=args.lag
    )


def _test_config(args) -> bt.TestConfig:
    seed = args.seed if args.seed is not None else _default_seed()
    if not 0 <= seed < 2**64:
        raise UsageError(f"--seed must be a 64-bit unsigned integer, got {seed}")
    return bt.TestConfig(M=args.grid_size, L=args.bootstrap, k=args.k, k_max=args.k_max, seed=seed, workers=args.threads)


def cmd_test(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    cfg = _test_config(args)
    res = bt.run_test(_load(args), args.alpha, cfg)
    if args.format == "json":
        _emit(_dump(res.to_dict()), args.output)
    else:
        verdict = "reject H0" if res.reject else "do not reject H0"
        _emit(
            f"statistic {res.statistic:.6g}, threshold {res.threshold:.6g} at alpha={res.alpha:g}: {verdict}\n"
            f"K_hat={res.K_hat}, m_hat={res.m_hat}, M={res.grid.M}, L={res.L}, seed={res.seed}\n",
            args.output,
        )
    return EXIT_OK


def cmd_pvalue(args) -> int:
    cfg = _test_config(args)
    res = bt.p_value(_load(args), args.alpha_grid, cfg)
    report = res.to_dict()
    report["p_value"] = f"{res.p_value:.3f}"
    if args.format == "json":
        _emit(_dump(report), args.output)
    else:
        _emit(f"p-value {res.p_value:.3f} (K_hat={res.K_hat}, M={res.grid.M}, L={res.L}, seed={res.seed})\n", args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if (args.design is None) == (args.rho is None):
        raise UsageError("give exactly one of --design and --rho")
    if args.design is not None and args.design not in DESIGNS:
        raise UsageError(f"--design must be one of {sorted(DESIGNS)}, got {args.design}")
    if args.rho is not None and len(args.rho) != 3:
        raise UsageError("--rho needs three values rho_f,rho_u,rho_e")
    table = None
    for m in args.m:
        common = dict(
            T=args.T, p=args.p, m=m, reps=args.reps, seed=seed, alphas=tuple(args.alpha),
            L=args.bootstrap, M=args.grid_size, k_max=args.k_max, beta_shape=args.beta_shape,
        )
        try:
            if args.design is not None:
                cfg = SimulationConfig.for_design(args.design, **common)
            else:
                rf, ru, re = args.rho
                cfg = SimulationConfig(rho_f=rf, rho_u=ru, rho_e=re, design="custom", **common)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        cell = run_monte_carlo(cfg, workers=args.threads)
        print(f"m={m:g}: {cell.rows[0]['seconds']:.1f}s", file=sys.stderr)
        if table is None:
            table = cell
        else:
            table.extend(cell)
    assert isinstance(table, RejectionTable)
    csv_text = table.to_csv(timing=not args.no_timing)
    if args.csv is not None:
        args.csv.write_text(csv_text, encoding="utf-8")
    if args.text is not None:
        args.text.write_text(table.to_text(), encoding="utf-8")
    sys.stdout.write(table.to_text() if args.csv is not None else csv_text)
    return EXIT_OK


def cmd_factors(args) -> int:
    panel = read_csv_panel(args.x, date_column=args.date_column)
    X = standardize(panel.values, panel.columns) if args.standardize else panel.values
    T, p = X.shape
    if min(T, p) < 2:
        raise UsageError("need at least two rows and two columns")
    k_max = args.k_max or default_k_max(T, p)
    eig = gram_eigenvalues(X)
    ratios = eigenvalue_ratios(eig, k_max)
    k_hat = estimate_num_factors(X, k_max)
    if args.scree is not None:
        lines = ["index,eigenvalue,ratio"]
        for i, mu in enumerate(eig):
            r = repr(float(ratios[i])) if i < k_max else ""
            lines.append(f"{i + 1},{float(mu)!r},{r}")
        args.scree.write_text("\n".join(lines) + "\n", encoding="utf-8")
    report = {
        "K_hat": k_hat,
        "k_max": k_max,
        "T": T,
        "p": p,
        "eigenvalues": [float(v) for v in eig[: k_max + 1]],
        "ratios": [float(r) if np.isfinite(r) else "inf" for r in ratios],
        "eigenvalue_sum": float(eig.sum()),
    }
    if args.format == "json":
        _emit(_dump(report), args.output)
    else:
        rows = "\n".join(
            f"  {k + 1:>2}  {eig[k]:.6g}  {ratios[k]:.6g}" for k in range(k_max)
        )
        _emit(f"K_hat = {k_hat}\n   k  eigenvalue  ratio\n{rows}\n", args.output)
    return EXIT_OK


COMMANDS = {"test": cmd_test, "pvalue": cmd_pvalue, "simulate": cmd_simulate, "factors": cmd_factors}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DegenerateInputError as exc:
        print(f"fsrtest: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, DataError, CollinearityError, ValueError, OSError) as exc:
        print(f"fsrtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
