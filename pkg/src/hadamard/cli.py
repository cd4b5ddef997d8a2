"""Command-line interface.

Subcommands: ``eigentable``, ``convolve``, ``verify``, ``bench``, ``transform``.

Exit codes: 0 success, 1 input error, 2 window too small, 3 a verify check failed.
CSV output uses 17 significant digits, so every double round-trips.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bench import DEFAULT_SIZES, run_bench
from .convolve import ConvPlan, hadamard_apply, star_pair
from .kernel import KernelDistribution, KernelSpecError, load_kernel
from .loggrid import (LogGrid, PiecewiseFn, default_grid, grid_from_window, make_grid,
                      quadrants, sample)
from .spectra import HadamardOperator, WindowTooSmallError, eigen_table
from .verify import VerifyConfig, run_verify

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_WINDOW = 2
EXIT_VERIFY = 3

COMMANDS = ("eigentable", "convolve", "verify", "bench", "transform")


class InputError(Exception):
    """Bad flags, unreadable files or malformed input tables."""


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


# -- configuration -------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    kernel_path: str | None = None
    grid_n: tuple[int, ...] | None = None
    grid_window: tuple[float, float] | None = None
    method: str = "fft"
    pad: int | None = None
    alpha_max: tuple[int, ...] | None = None
    out: str | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    # command-specific inputs
    phi: str | None = None
    input_path: str | None = None
    density_path: str | None = None
    sizes: tuple[int, ...] = DEFAULT_SIZES
    repeats: int = 5

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.method not in ("direct", "fft"):
            raise InputError(f"--method must be direct or fft, got {self.method!r}")
        for name, tol in self.tolerances.items():
            if not (tol > 0 and math.isfinite(tol)):
                raise InputError(f"tolerance {name} must be positive, got {tol}")
        for p in (self.kernel_path, self.input_path, self.density_path):
            if p is not None and not Path(p).is_file():
                raise InputError(f"cannot read {p}")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir():
                raise InputError(f"output directory {parent} does not exist")
        if self.grid_n is not None and any(n < 8 for n in self.grid_n):
            raise InputError("--grid-n must be at least 8")
        if self.grid_window is not None and not self.grid_window[1] > self.grid_window[0]:
            raise InputError("--grid-window needs A < B")
        if self.repeats < 1:
            raise InputError("--repeats must be positive")

    def grid(self, dim: int, fallback: LogGrid | None = None) -> LogGrid:
        """Grid from the overrides, else ``fallback``, else the default grid."""
        if self.grid_n is None and self.grid_window is None:
            return fallback if fallback is not None else default_grid(dim)
        base = default_grid(dim)
        n = base.n[0] if self.grid_n is None else self.grid_n[0 if dim == 1 else -1]
        lo, hi = self.grid_window if self.grid_window is not None else base.window()[0]
        return grid_from_window(dim, lo, hi, n)


def _int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{flag} expects integers separated by commas") from None
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError(f"{flag} entries must be nonnegative")
    return vals


def _tol(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError("--tol expects NAME=VALUE")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--tol {name}: {value!r} is not a number") from None


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for window errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", dest="kernel_path", metavar="PATH",
                        help="kernel spec (JSON)")
    common.add_argument("--grid-n", type=lambda s: _int_list(s, "--grid-n"), metavar="N[,N2]",
                        help="nodes per axis (second value: 2-d grid in verify)")
    common.add_argument("--grid-window", type=float, nargs=2, metavar=("A", "B"),
                        help="log-coordinate window [A, B] on every axis")
    common.add_argument("--method", choices=("direct", "fft"), default="fft")
    common.add_argument("--pad", type=int, metavar="N", help="FFT zero padding per axis")
    common.add_argument("--alpha-max", type=lambda s: _int_list(s, "--alpha-max"),
                        metavar="K[,K2]")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--tol", type=_tol, action="append", default=[], metavar="NAME=VALUE",
                        help="tolerance override (verify)")

    parser = _Parser(prog="hadamard", description="Hadamard operators on log grids.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("eigentable", parents=[common],
                   help="eigenvalues m_alpha for alpha <= alpha-max (CSV + JSON sidecar)")
    p = sub.add_parser("convolve", parents=[common], help="<S * T, phi> for a sampled density S")
    p.add_argument("--density", dest="density_path", metavar="PATH",
                   help="kernel spec whose plain densities form S (default S = 1)")
    p.add_argument("--phi", default="gauss_log:0,0.4", help="test function FAMILY:C,W")
    sub.add_parser("verify", parents=[common], help="run the invariant suite (JSON report)")
    p = sub.add_parser("bench", parents=[common], help="direct vs fft timings")
    p.add_argument("--sizes", type=lambda s: _int_list(s, "--sizes"),
                   default=DEFAULT_SIZES, metavar="N,N,...")
    p.add_argument("--repeats", type=int, default=5)
    p = sub.add_parser("transform", parents=[common], help="apply the operator to a function")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", dest="input_path", metavar="PATH",
                     help="sampled function as CSV (same columns as the output)")
    src.add_argument("--phi", help="named test function FAMILY:C,W (default gauss_log:0,0.4)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    tolerances = dict(args.tol)
    if tolerances and args.command != "verify":
        raise InputError("--tol is only used by verify")
    return RunConfig(command=args.command, kernel_path=args.kernel_path, grid_n=args.grid_n,
                     grid_window=tuple(args.grid_window) if args.grid_window else None,
                     method=args.method, pad=args.pad, alpha_max=args.alpha_max, out=args.out,
                     tolerances=tolerances, phi=getattr(args, "phi", None),
                     input_path=getattr(args, "input_path", None),
                     density_path=getattr(args, "density_path", None),
                     sizes=getattr(args, "sizes", DEFAULT_SIZES),
                     repeats=getattr(args, "repeats", 5))


# -- sampled-function tables ------------------------------------------------------------

def write_piecewise_csv(f: PiecewiseFn, fh) -> None:
    """Columns ``e_1..e_d, t_1..t_d, value``; one row per node of every quadrant."""
    d = f.grid.dim
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"e_{j + 1}" for j in range(d)] + [f"t_{j + 1}" for j in range(d)] + ["value"])
    axes = f.grid.axes()
    for e in quadrants(d):
        vals = f[e].values
        for idx in np.ndindex(*f.grid.shape):
            w.writerow([*e, *(_fmt(axes[j][i]) for j, i in enumerate(idx)), _fmt(vals[idx])])


def read_piecewise_csv(path) -> PiecewiseFn:
    """Inverse of :func:`write_piecewise_csv`; quadrants left out are zero."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty table")
    header = rows[0]
    if len(header) < 3 or (len(header) - 1) % 2 or header[-1] != "value":
        raise InputError(f"{path}: header must be e_1..e_d,t_1..t_d,value")
    d = (len(header) - 1) // 2
    expected = [f"e_{j + 1}" for j in range(d)] + [f"t_{j + 1}" for j in range(d)] + ["value"]
    if header != expected:
        raise InputError(f"{path}: header must be {','.join(expected)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != 2 * d + 1:
        raise InputError(f"{path}: expected {2 * d + 1} numbers per row")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite entries")
    signs = data[:, :d]
    if not np.all(np.isin(signs, (1.0, -1.0))):
        raise InputError(f"{path}: quadrant signs must be 1 or -1")
    t0, dt, n = [], [], []
    for j in range(d):
        nodes = np.unique(data[:, d + j])
        if nodes.size < 8:
            raise InputError(f"{path}: axis {j + 1} has fewer than 8 nodes")
        step = (nodes[-1] - nodes[0]) / (nodes.size - 1)
        if not np.allclose(np.diff(nodes), step, rtol=1e-9, atol=0):
            raise InputError(f"{path}: axis {j + 1} is not uniformly spaced in log coordinates")
        t0.append(nodes[0])
        dt.append(step)
        n.append(nodes.size)
    grid = make_grid(d, t0, dt, n)
    arrays = {}
    for e in quadrants(d):
        sel = np.all(signs == np.array(e, dtype=float), axis=1)
        if not sel.any():
            continue
        block = data[sel]
        if block.shape[0] != grid.size:
            raise InputError(f"{path}: quadrant {e} has {block.shape[0]} rows, "
                             f"expected {grid.size}")
        idx = tuple(np.rint((block[:, d + j] - t0[j]) / dt[j]).astype(int) for j in range(d))
        vals = np.full(grid.shape, np.nan)
        vals[idx] = block[:, -1]
        if np.isnan(vals).any():
            raise InputError(f"{path}: quadrant {e} repeats nodes")
        arrays[e] = vals
    return PiecewiseFn.from_arrays(grid, arrays)


def _named_function(text: str, grid: LogGrid) -> PiecewiseFn:
    family, sep, args = text.partition(":")
    if family != "gauss_log" or not sep:
        raise InputError(f"unknown test function {text!r}; use gauss_log:C,W")
    try:
        c, w = (float(v) for v in args.split(","))
    except ValueError:
        raise InputError(f"gauss_log needs C,W, got {args!r}") from None
    if not w > 0:
        raise InputError("gauss_log width must be positive")
    f = sample(lambda *x: np.exp(-sum((np.log(xj) - c) ** 2 for xj in x) / (2 * w * w)), grid)
    return PiecewiseFn.from_quadrant(f)


# -- commands -----------------------------------------------------------------------------

def _kernel(config: RunConfig, required: bool = True) -> KernelDistribution | None:
    if config.kernel_path is None:
        if required:
            raise InputError(f"{config.command} needs --kernel")
        return None
    return load_kernel(config.kernel_path)


def _emit(text: str, out: str | None, stdout) -> None:
    if out is None:
        stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_eigentable(config: RunConfig, stdout) -> int:
    T = _kernel(config)
    grid = config.grid(T.dim, T.grid)
    alpha_max = config.alpha_max or (3,)
    if len(alpha_max) == 1:
        alpha_max = alpha_max * T.dim
    if len(alpha_max) != T.dim:
        raise InputError(f"--alpha-max needs 1 or {T.dim} values")
    op = HadamardOperator(T, grid=grid, method=config.method, pad=config.pad).fit()
    table = eigen_table(op, alpha_max)
    table.metadata["kernel_path"] = Path(config.kernel_path).name
    buf = io.StringIO()
    table.write_csv(buf)
    _emit(buf.getvalue(), config.out, stdout)
    if config.out is not None:
        table.write_sidecar(sidecar_path(config.out))
    return EXIT_OK


def sidecar_path(out: str) -> str:
    """``table.csv -> table.json``; other names get ``.json`` appended."""
    p = Path(out)
    return str(p.with_suffix(".json") if p.suffix == ".csv" else p.with_name(p.name + ".json"))


def cmd_convolve(config: RunConfig, stdout) -> int:
    T = _kernel(config)
    grid = config.grid(T.dim, T.grid)
    plan = ConvPlan(grid, config.method, config.pad)
    phi = _named_function(config.phi or "gauss_log:0,0.4", grid)
    if config.density_path is None:
        S = PiecewiseFn.from_arrays(grid, {e: np.ones(grid.shape) for e in quadrants(grid.dim)})
    else:
        S = _density_function(load_kernel(config.density_path), grid)
    value = star_pair(S, T, phi, plan)
    _emit(f"star_pair\n{_fmt(value)}\n", config.out, stdout)
    return EXIT_OK


def _density_function(T: KernelDistribution, grid: LogGrid) -> PiecewiseFn:
    if T.dirac_terms or any(any(t.beta) for t in T.density_terms):
        raise InputError("--density must contain only plain density terms (beta = 0)")
    if T.dim != grid.dim:
        raise InputError("--density dimension does not match the kernel")
    arrays = {e: np.zeros(grid.shape) for e in quadrants(grid.dim)}
    for term in T.density_terms:
        arrays[term.quadrant] = arrays[term.quadrant] + term.on_log(grid.mesh())
    return PiecewiseFn.from_arrays(grid, arrays)


def cmd_transform(config: RunConfig, stdout) -> int:
    T = _kernel(config)
    if config.input_path is not None:
        phi = read_piecewise_csv(config.input_path)
        if phi.grid.dim != T.dim:
            raise InputError("input table dimension does not match the kernel")
        if config.grid_n is not None or config.grid_window is not None:
            raise InputError("grid overrides conflict with --input (the table fixes the grid)")
        grid = phi.grid
    else:
        grid = config.grid(T.dim, T.grid)
        phi = _named_function(config.phi or "gauss_log:0,0.4", grid)
    op = HadamardOperator(T, grid=grid, method=config.method, pad=config.pad).fit()
    f = op.transform(phi)
    for w in f.warnings:
        print(f"warning: {w}", file=sys.stderr)
    buf = io.StringIO()
    write_piecewise_csv(f, buf)
    _emit(buf.getvalue(), config.out, stdout)
    return EXIT_OK


def cmd_verify(config: RunConfig, stdout) -> int:
    T = _kernel(config, required=False)
    n = VerifyConfig().n
    if config.grid_n is not None:
        n = (config.grid_n[0], config.grid_n[-1] if len(config.grid_n) > 1 else n[1])
    try:
        vconf = VerifyConfig(n=n, window=config.grid_window or (-6.0, 6.0),
                             method=config.method, kernel=T, tolerances=config.tolerances)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report = run_verify(vconf)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    _emit(text, config.out, stdout)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.measured:.3g} {c.relation} "
              f"{c.tolerance:.3g}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_bench(config: RunConfig, stdout) -> int:
    T = _kernel(config, required=False)
    report = run_bench(config.sizes, config.repeats, T,
                       window=config.grid_window or (-6.0, 6.0))
    stdout.write(report.to_text())
    if config.out is not None:
        report.to_csv(config.out)
    return EXIT_OK


_DISPATCH = {
    "eigentable": cmd_eigentable,
    "convolve": cmd_convolve,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "transform": cmd_transform,
}


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return _DISPATCH[config.command](config, stdout)
    except WindowTooSmallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except (InputError, KernelSpecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # remaining validation errors (grid, plan, kernel/grid mismatch) are input errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
