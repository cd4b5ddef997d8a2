"""Uniform log-coordinate grids and functions sampled on them.

A :class:`LogGrid` discretizes the exponential change of variables
``x = e * exp(t)`` on one open quadrant ``Q_e``.  Functions on the punctured
space (all coordinates nonzero) are stored per quadrant, always on the same
grid; nothing is ever represented on the coordinate hyperplanes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "LogGrid",
    "LogSideFn",
    "PiecewiseFn",
    "QuadrantFn",
    "align_grid",
    "as_piecewise",
    "decay_norm",
    "default_grid",
    "edge_band",
    "edge_mask",
    "grid_from_window",
    "make_grid",
    "l1_exponent",
    "log_jacobian",
    "quadrants",
    "radial_weight",
    "sample",
    "sample_piecewise",
    "sigma",
    "to_linear",
    "to_log",
    "trapezoid_weights",
    "weight_omega",
    "weighted_edge_ratio",
]

MIN_POINTS = 8

SignVector = tuple


def quadrants(dim: int) -> list[tuple[int, ...]]:
    """All sign vectors of length ``dim`` in a fixed order (+ before -)."""
    return [tuple(e) for e in itertools.product((1, -1), repeat=dim)]


def sigma(e: Sequence[int]) -> int:
    """Signum of a quadrant, the product of its signs."""
    return math.prod(int(s) for s in e)


def check_sign_vector(e, dim: int | None = None) -> tuple[int, ...]:
    e = tuple(int(s) for s in e)
    if any(s not in (1, -1) for s in e):
        raise ValueError(f"sign vector entries must be +1 or -1, got {e}")
    if dim is not None and len(e) != dim:
        raise ValueError(f"sign vector {e} has length {len(e)}, expected {dim}")
    return e


@dataclass(frozen=True)
class LogGrid:
    """Tensor grid ``t0[j] + i * dt[j]``, ``i = 0..n[j]-1`` on every axis."""

    dim: int
    t0: tuple[float, ...]
    dt: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("grid dimension must be positive")
        for name in ("t0", "dt", "n"):
            if len(getattr(self, name)) != self.dim:
                raise ValueError(f"{name} must have length {self.dim}")
        for j in range(self.dim):
            if not (math.isfinite(self.dt[j]) and self.dt[j] > 0):
                raise ValueError(f"dt[{j}] must be positive, got {self.dt[j]}")
            if self.n[j] < MIN_POINTS:
                raise ValueError(f"n[{j}] must be at least {MIN_POINTS}, got {self.n[j]}")
            lo, hi = self.t0[j], self.t0[j] + (self.n[j] - 1) * self.dt[j]
            # Nodes must map to finite, strictly positive coordinates.
            if not (math.isfinite(lo) and lo > -700.0 and hi < 700.0):
                raise ValueError(f"log window [{lo}, {hi}] on axis {j} leaves the float range")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return math.prod(self.n)

    def axis(self, j: int) -> np.ndarray:
        return self.t0[j] + np.arange(self.n[j]) * self.dt[j]

    def axes(self) -> list[np.ndarray]:
        return [self.axis(j) for j in range(self.dim)]

    def mesh(self) -> list[np.ndarray]:
        """Log coordinates broadcast to the full grid shape, one array per axis."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self, e: Sequence[int] | None = None) -> list[np.ndarray]:
        """Physical coordinates ``e_j * exp(t_j)`` on the full grid."""
        e = (1,) * self.dim if e is None else e
        return [s * np.exp(t) for s, t in zip(e, self.mesh())]

    def window(self) -> list[tuple[float, float]]:
        return [(self.t0[j], self.t0[j] + (self.n[j] - 1) * self.dt[j]) for j in range(self.dim)]

    def cell_volume(self) -> float:
        return math.prod(self.dt)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "t0": list(self.t0), "dt": list(self.dt), "n": list(self.n)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "LogGrid":
        unknown = set(d) - {"dim", "t0", "dt", "n"}
        if unknown:
            raise ValueError(f"unknown grid fields: {sorted(unknown)}")
        return make_grid(d["dim"], d["t0"], d["dt"], d["n"])


def make_grid(dim: int, t0: Sequence[float], dt: Sequence[float], n: Sequence[int]) -> LogGrid:
    """Build a validated :class:`LogGrid`.

    Parameters
    ----------
    dim : int
        Number of axes.
    t0, dt : sequence of float
        Log-coordinate origin and step per axis; ``dt`` must be positive.
    n : sequence of int
        Points per axis, at least 8.
    """
    t0, dt, n = list(t0), list(dt), list(n)
    if not (len(t0) == len(dt) == len(n) == dim):
        raise ValueError(f"t0, dt and n must all have length {dim}")
    if any(int(k) != k for k in n):
        raise ValueError("n must be integral")
    return LogGrid(int(dim), tuple(float(v) for v in t0), tuple(float(v) for v in dt),
                   tuple(int(k) for k in n))


def grid_from_window(dim: int, lo: float, hi: float, n: int) -> LogGrid:
    """Grid with ``n`` nodes per axis spanning the log window ``[lo, hi]``."""
    if not hi > lo:
        raise ValueError(f"empty log window [{lo}, {hi}]")
    dt = (hi - lo) / (n - 1)
    return make_grid(dim, [lo] * dim, [dt] * dim, [n] * dim)


def align_grid(grid: LogGrid, ratio: float = 2.0) -> LogGrid:
    """Same node count and window center, with ``log(ratio)`` a whole number of steps.

    Dilations by powers of ``ratio`` (and Dirac kernels at such points) then
    move samples by exact node shifts instead of interpolating.
    """
    if ratio <= 0 or ratio == 1:
        raise ValueError("ratio must be positive and different from 1")
    step = abs(math.log(ratio))
    t0, dt = [], []
    for a, h, n in zip(grid.t0, grid.dt, grid.n):
        h_new = step / max(1, round(step / h))
        center = a + 0.5 * (n - 1) * h
        t0.append(center - 0.5 * (n - 1) * h_new)
        dt.append(h_new)
    return make_grid(grid.dim, t0, dt, grid.n)


def default_grid(dim: int) -> LogGrid:
    """Desk-scale default: window ``[-6, 6]``, 1024 nodes in 1-d, 128 per axis otherwise."""
    return grid_from_window(dim, -6.0, 6.0, 1024 if dim == 1 else 128)


def edge_band(n: int) -> int:
    """Width in nodes of the band next to each window edge used for truncation checks."""
    return max(2, n // 20)


def edge_mask(grid: LogGrid) -> np.ndarray:
    """Boolean mask of nodes within :func:`edge_band` of any window edge."""
    mask = np.zeros(grid.shape, dtype=bool)
    for j, nj in enumerate(grid.n):
        band = edge_band(nj)
        idx = [slice(None)] * grid.dim
        idx[j] = slice(0, band)
        mask[tuple(idx)] = True
        idx[j] = slice(nj - band, nj)
        mask[tuple(idx)] = True
    return mask


def trapezoid_weights(grid: LogGrid) -> np.ndarray:
    """Tensor-product trapezoid weights in log coordinates (no Jacobian)."""
    w = np.ones(())
    for j in range(grid.dim):
        wj = np.full(grid.n[j], grid.dt[j])
        wj[0] = wj[-1] = 0.5 * grid.dt[j]
        w = np.multiply.outer(w, wj)
    return w


def log_jacobian(grid: LogGrid) -> np.ndarray:
    """``exp(sum_j t_j)``, the Jacobian of ``x = e * exp(t)``."""
    return np.exp(sum(grid.mesh()))


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class QuadrantFn:
    """Samples ``values[i] = f(e * exp(t(i)))`` of a function on quadrant ``e``."""

    grid: LogGrid
    quadrant: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "quadrant", check_sign_vector(self.quadrant, self.grid.dim))
        values = self.values
        if not (isinstance(values, np.ndarray) and not values.flags.writeable
                and values.dtype == float):
            values = _frozen(values)
        if values.shape != self.grid.shape:
            raise ValueError(f"values have shape {values.shape}, grid has {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("QuadrantFn values must be finite")
        object.__setattr__(self, "values", values)

    def points(self) -> list[np.ndarray]:
        return self.grid.points(self.quadrant)

    def with_values(self, values: np.ndarray) -> "QuadrantFn":
        return QuadrantFn(self.grid, self.quadrant, values)

    def integral(self) -> float:
        """Trapezoid approximation of the integral over the quadrant."""
        return float(np.sum(self.values * log_jacobian(self.grid) * trapezoid_weights(self.grid)))


@dataclass(frozen=True, eq=False)
class LogSideFn:
    """The same samples viewed as a function of the log coordinates."""

    grid: LogGrid
    quadrant: tuple[int, ...]
    values: np.ndarray

    @property
    def axes(self) -> list[np.ndarray]:
        return self.grid.axes()


def to_log(f: QuadrantFn) -> LogSideFn:
    """Relabel ``f`` as ``g(t) = f(e * exp(t))``; the value tensor is shared."""
    return LogSideFn(f.grid, f.quadrant, f.values)


def to_linear(g: LogSideFn) -> QuadrantFn:
    """Inverse of :func:`to_log`."""
    return QuadrantFn(g.grid, g.quadrant, g.values)


@dataclass(frozen=True, eq=False)
class PiecewiseFn:
    """A function on all ``2**d`` open quadrants, sharing one grid.

    Missing quadrants are filled with explicit zeros.  ``warnings`` carries
    diagnostics attached by the operation that produced the function.
    """

    grid: LogGrid
    parts: Mapping[tuple[int, ...], QuadrantFn]
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        parts = {}
        for e, part in self.parts.items():
            e = check_sign_vector(e, self.grid.dim)
            if part.grid != self.grid:
                raise ValueError(f"quadrant {e} is sampled on a different grid")
            if part.quadrant != e:
                raise ValueError(f"part stored under {e} belongs to quadrant {part.quadrant}")
            parts[e] = part
        zeros = None
        for e in quadrants(self.grid.dim):
            if e not in parts:
                if zeros is None:
                    zeros = _frozen(np.zeros(self.grid.shape))
                parts[e] = QuadrantFn(self.grid, e, zeros)
        object.__setattr__(self, "parts", {e: parts[e] for e in quadrants(self.grid.dim)})

    @classmethod
    def from_quadrant(cls, f: QuadrantFn) -> "PiecewiseFn":
        return cls(f.grid, {f.quadrant: f})

    @classmethod
    def from_arrays(cls, grid: LogGrid, arrays: Mapping[tuple[int, ...], np.ndarray],
                    warnings: Iterable[str] = ()) -> "PiecewiseFn":
        return cls(grid, {tuple(e): QuadrantFn(grid, tuple(e), v) for e, v in arrays.items()},
                   tuple(warnings))

    def __getitem__(self, e) -> QuadrantFn:
        return self.parts[tuple(e)]

    def arrays(self) -> dict[tuple[int, ...], np.ndarray]:
        return {e: p.values for e, p in self.parts.items()}

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(p.values))) for p in self.parts.values())

    def integral(self) -> float:
        return sum(p.integral() for p in self.parts.values())


def as_piecewise(f) -> PiecewiseFn:
    if isinstance(f, PiecewiseFn):
        return f
    if isinstance(f, QuadrantFn):
        return PiecewiseFn.from_quadrant(f)
    raise TypeError(f"expected QuadrantFn or PiecewiseFn, got {type(f).__name__}")


def sample(f: Callable[..., np.ndarray], grid: LogGrid, e: Sequence[int] | None = None) -> QuadrantFn:
    """Sample ``f`` at the nodes ``e * exp(t)``.

    ``f`` receives one coordinate array per axis (each of the grid's shape)
    and must return values broadcastable to that shape.

    Raises
    ------
    ValueError
        If a sampled value is not finite; the message names the first
        offending node.
    """
    e = check_sign_vector((1,) * grid.dim if e is None else e, grid.dim)
    xs = grid.points(e)
    with np.errstate(all="ignore"):
        values = np.broadcast_to(np.asarray(f(*xs), dtype=float), grid.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        i = tuple(int(k) for k in np.argwhere(bad)[0])
        x = tuple(float(c[i]) for c in xs)
        raise ValueError(f"non-finite sample {values[i]} at node {i}, x = {x}")
    return QuadrantFn(grid, e, values)


def sample_piecewise(f: Callable[..., np.ndarray], grid: LogGrid,
                     quads: Iterable[Sequence[int]] | None = None) -> PiecewiseFn:
    """Sample ``f`` on the given quadrants (default: all of them)."""
    quads = quadrants(grid.dim) if quads is None else quads
    return PiecewiseFn(grid, {tuple(e): sample(f, grid, e) for e in quads})


def _pairwise_sum(terms: list):
    while len(terms) > 1:
        terms = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)] + (
            [terms[-1]] if len(terms) % 2 else [])
    return terms[0]


def l1_exponent(x, eta: Sequence[int] | None = None):
    """``sum_j eta_j x_j`` summed left to right; ``eta=None`` gives ``sum_j |x_j|``."""
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape[:-1])
    for j in range(x.shape[-1]):
        total = total + (np.abs(x[..., j]) if eta is None else eta[j] * x[..., j])
    return total


def weight_omega(x, k: int = 1):
    """Exponential weight ``omega(k x) = sum over eta in {-1,1}^d of exp(k eta.x)``.

    ``x`` is a point of shape ``(d,)`` or a batch of shape ``(..., d)``.
    The ``2**d`` terms are added pairwise in a fixed order, which keeps the
    bounds ``exp(k|x|_1) <= omega <= 2**d exp(k|x|_1)`` exact in floating point.

    Raises
    ------
    OverflowError
        If a term overflows (window too wide for this ``k``).
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    d = x.shape[-1]
    with np.errstate(over="raise"):
        try:
            terms = [np.exp(k * l1_exponent(x, eta)) for eta in quadrants(d)]
        except FloatingPointError:
            raise OverflowError(f"omega({k}x) overflows; shrink the window or k") from None
    out = _pairwise_sum(terms)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"omega({k}x) overflows; shrink the window or k")
    return float(out) if out.ndim == 0 else out


def radial_weight(grid: LogGrid, k: int) -> np.ndarray:
    """``|y|^{2k} + |y|^{-2k}`` with the Euclidean norm, on the grid nodes."""
    r2 = sum(np.exp(2.0 * t) for t in grid.mesh())
    return r2 ** k + r2 ** (-k)


def decay_norm(f, k: int) -> float:
    """Grid proxy for ``sup |f(y)| (|y|^{2k} + |y|^{-2k})``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    pieces = list(f.parts.values()) if isinstance(f, PiecewiseFn) else [f]
    w = radial_weight(pieces[0].grid, k)
    return max(float(np.max(np.abs(p.values) * w)) for p in pieces)


def weighted_edge_ratio(values: np.ndarray, grid: LogGrid) -> float:
    """Max of ``|values|`` over the edge band divided by the global max (0 for zero input)."""
    a = np.abs(values)
    top = float(a.max())
    if top == 0.0:
        return 0.0
    return float(a[edge_mask(grid)].max()) / top
