"""Hadamard operators ``S -> S * T`` and their eigenvalues on monomials.

The eigenvalue of the operator with kernel ``T`` on ``x^alpha`` is
``m_alpha = T(sigma(x) / x^(alpha+1))``.  For a term ``theta^beta t`` the
dual word acts on ``sigma(x) x^(-alpha-1)`` by the scalar ``alpha^beta``, so
every density contributes a weighted moment and every Dirac term a closed
form.  :func:`measure_eigenvalue` recovers the same numbers from the
convolution engine, which is the independent check.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin, clone
from sklearn.utils.validation import check_is_fitted

from .convolve import (ConvPlan, PreparedKernel, _resample_shift, hadamard_apply, pair,
                       shift_nodes)
from .euler import EulerPolynomial, euler_apply_array, monomial, monomial_exponents
from .kernel import KernelDistribution, kernel_hash, validate_theta_rapid
from .loggrid import (LogGrid, PiecewiseFn, QuadrantFn, as_piecewise, default_grid, edge_mask,
                      quadrants, sample, trapezoid_weights)
from .validation import check_kernel, check_multi_index, check_sampled_rows

__all__ = [
    "Dilation",
    "EigenTable",
    "EulerProbe",
    "HadamardOperator",
    "MeasuredEigenvalue",
    "Reflection",
    "WindowTooSmallError",
    "commutation_residual",
    "default_bumps",
    "eigen_table",
    "eigenvalue_monomial",
    "measure_eigenvalue",
]

EDGE_MASS_LIMIT = 1e-3
DEGENERATE = 1e-12


class WindowTooSmallError(ValueError):
    """The quadrature window cuts off a non-negligible part of an integral."""


def _power_word(alpha: Sequence[int], beta: Sequence[int]) -> float:
    # alpha^beta with 0^0 = 1
    return float(math.prod(a ** b for a, b in zip(alpha, beta)))


def eigenvalue_monomial(T: KernelDistribution, alpha: Sequence[int],
                        grid: LogGrid | None = None) -> float:
    """``m_alpha = T(sigma(x) / x^(alpha+1))``.

    Density moments are computed with the log trapezoid rule on ``grid``
    (default: the kernel's grid, else the default grid).

    Raises
    ------
    WindowTooSmallError
        If more than ``1e-3`` of a moment integrand's absolute mass lies in
        the edge band of the window.
    """
    alpha = check_multi_index(alpha, T.dim)
    grid = grid or T.grid or default_grid(T.dim)
    if grid.dim != T.dim:
        raise ValueError("grid dimension does not match the kernel")
    total = 0.0
    if T.density_terms:
        u = grid.mesh()
        weights = trapezoid_weights(grid)
        band = edge_mask(grid)
        # sigma(x) x^(-alpha-1) dx on Q_e  ->  e^alpha exp(-alpha.u) du
        decay = np.exp(-sum(a * uj for a, uj in zip(alpha, u)))
        for term in T.density_terms:
            integrand = term.on_log(u) * decay * weights
            mass = np.abs(integrand)
            whole = float(mass.sum())
            if whole > 0 and float(mass[band].sum()) > EDGE_MASS_LIMIT * whole:
                raise WindowTooSmallError(
                    f"window too small for alpha={alpha}: {float(mass[band].sum()) / whole:.3g} "
                    "of the moment lies in the edge band")
            sign = math.prod(e ** a for e, a in zip(term.quadrant, alpha))
            total += _power_word(alpha, term.beta) * sign * float(integrand.sum())
    for term in T.dirac_terms:
        value = math.prod((1 if a > 0 else -1) ** k * abs(a) ** (-k - 1)
                          for a, k in zip(term.point, alpha))
        total += term.weight * _power_word(alpha, term.beta) * value
    return total


class HadamardOperator(TransformerMixin, BaseEstimator):
    """Hadamard operator with kernel ``kernel`` acting on sampled test functions.

    ``fit`` fixes the grid (from ``grid``, the sampled input, the kernel, or
    the default grid, in that order), validates the kernel at ``k = 1`` and
    samples it onto the plan.  ``transform`` returns ``(M phi)(y) = T_x phi(x y)``.

    Parameters
    ----------
    kernel : KernelDistribution
    grid : LogGrid, optional
    method : {"fft", "direct"}
    pad : int or tuple of int, optional
        FFT zero padding per axis; default is the smallest fast length.
    deriv : {"fd4", "spectral"}
        Differentiation used for Euler words acting on the input.
    bias : float or tuple of float, optional
        Exponential tilt of the engine (see :class:`ConvPlan`).

    Notes
    -----
    Plain arrays are accepted as a batch: each row holds one function
    sampled on the positive quadrant (flattened or grid-shaped) and the
    output rows hold the positive-quadrant part of the result.
    """

    def __init__(self, kernel=None, grid=None, method="fft", pad=None, deriv="fd4", bias=None):
        self.kernel = kernel
        self.grid = grid
        self.method = method
        self.pad = pad
        self.deriv = deriv
        self.bias = bias

    def fit(self, X=None, y=None):
        kernel = check_kernel(self.kernel)
        grid = self.grid
        if grid is None and isinstance(X, (QuadrantFn, PiecewiseFn)):
            grid = X.grid
        grid = grid or kernel.grid or default_grid(kernel.dim)
        if kernel.k_star < 1:
            raise ValueError("kernel must be declared theta-rapidly decreasing for k >= 1")
        report = validate_theta_rapid(kernel, 1, grid)
        if not report.ok:
            bad = [t.index for t in report.terms if t.flagged]
            raise WindowTooSmallError(f"density terms {bad} are not resolved by the window at k=1")
        self.grid_ = grid
        self.plan_ = ConvPlan(grid, self.method, self.pad, self.deriv, self.bias)
        self.prepared_ = PreparedKernel(kernel, self.plan_)
        self.n_features_in_ = grid.size
        return self

    def transform(self, X):
        check_is_fitted(self, "plan_")
        if isinstance(X, (QuadrantFn, PiecewiseFn)):
            return hadamard_apply(self.kernel, X, self.plan_, self.prepared_)
        rows = check_sampled_rows(X, self.grid_)
        out = np.empty_like(rows)
        positive = (1,) * self.grid_.dim
        for i, row in enumerate(rows):
            f = hadamard_apply(self.kernel, QuadrantFn(self.grid_, positive, row),
                               self.plan_, self.prepared_)
            out[i] = f[positive].values
        return out.reshape(np.shape(X))

    def eigenvalue(self, alpha: Sequence[int]) -> float:
        check_is_fitted(self, "plan_")
        return eigenvalue_monomial(self.kernel, alpha, self.grid_)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = True
        return tags


def _fitted(op: HadamardOperator) -> HadamardOperator:
    return op if hasattr(op, "plan_") else op.fit()


# -- measured eigenvalues -------------------------------------------------------------

@dataclass(frozen=True)
class MeasuredEigenvalue:
    ratios: tuple[float, ...]
    spread: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.ratios))


def default_bumps(grid: LogGrid) -> list[QuadrantFn]:
    """Three log-Gaussian bumps on the positive quadrant, distinct centers and widths.

    The centers sit left of the origin: pairing against ``x^alpha`` tilts the
    output mass towards ``+(alpha + 1) w^2`` plus the kernel's own shift, and
    at ``|alpha| = 4`` a bump centered at the origin already leaks past
    ``log y = 6``.
    """
    centers = (-1.0, -0.6, -0.2)
    widths = (0.3, 0.4, 0.5)
    bumps = []
    for c, w in zip(centers, widths):
        bumps.append(sample(lambda *x, c=c, w=w: np.exp(
            -sum((np.log(xj) - c) ** 2 for xj in x) / (2.0 * w * w)), grid))
    return bumps


def _monomial_everywhere(grid: LogGrid, alpha) -> PiecewiseFn:
    return PiecewiseFn(grid, {e: monomial(grid, alpha, e) for e in quadrants(grid.dim)})


def measure_eigenvalue(op: HadamardOperator, alpha: Sequence[int],
                       bumps: Iterable | None = None) -> MeasuredEigenvalue:
    """Ratios ``<x^alpha * T, phi> / <x^alpha, phi>`` over at least three test bumps.

    Every ratio equals ``m_alpha`` when ``x^alpha`` is an eigenvector; the
    spread ``max|r_i - r_j| / (1 + |mean|)`` measures how far they disagree.
    The operator is re-planned with tilt ``alpha + 1`` so that rounding noise
    is not amplified by the growth of ``x^alpha``.
    """
    op = _fitted(op)
    grid = op.grid_
    alpha = check_multi_index(alpha, grid.dim)
    op = clone(op).set_params(grid=grid, bias=tuple(a + 1.0 for a in alpha)).fit()
    bumps = default_bumps(grid) if bumps is None else [as_piecewise(b) for b in bumps]
    bumps = [as_piecewise(b) for b in bumps]
    if len(bumps) < 3:
        raise ValueError("measure_eigenvalue needs at least three test functions")
    s = _monomial_everywhere(grid, alpha)
    ratios = []
    for phi in bumps:
        den = pair(s, phi)
        if abs(den) < DEGENERATE:
            raise ValueError(f"degenerate test function: <x^{alpha}, phi> = {den:.3g}")
        ratios.append(pair(s, op.transform(phi)) / den)
    mean = float(np.mean(ratios))
    spread = (max(ratios) - min(ratios)) / (1.0 + abs(mean))
    return MeasuredEigenvalue(tuple(ratios), float(spread))


# -- commutation diagnostics ------------------------------------------------------------

@dataclass(frozen=True)
class Dilation:
    """``(D g)(y) = |a_1...a_d|^{-1} g(y / a)`` for positive factors ``a``."""

    factor: tuple[float, ...] | float
    resample: bool = False

    def factors(self, dim: int) -> tuple[float, ...]:
        a = (float(self.factor),) * dim if np.ndim(self.factor) == 0 else tuple(self.factor)
        if len(a) != dim or any(v <= 0 for v in a):
            raise ValueError(f"dilation needs {dim} positive factors, got {self.factor}")
        return a

    def __call__(self, g: PiecewiseFn, method: str = "fd4") -> PiecewiseFn:
        grid = g.grid
        a = self.factors(grid.dim)
        steps = [math.log(v) / h for v, h in zip(a, grid.dt)]
        aligned = all(abs(r - round(r)) < 1e-9 for r in steps)
        if not aligned and not self.resample:
            raise ValueError(f"dilation {a} is not node-aligned; pass resample=True to allow it")
        scale = 1.0 / math.prod(a)
        out = {}
        for e, part in g.parts.items():
            if aligned:
                moved = shift_nodes(part.values, [round(r) for r in steps])
            else:
                moved = _resample_shift(part.values, [-r for r in steps])
            out[e] = scale * moved
        return PiecewiseFn.from_arrays(grid, out)


@dataclass(frozen=True)
class Reflection:
    """``(D_e g)(y) = g(e y)``."""

    signs: tuple[int, ...]

    def __call__(self, g: PiecewiseFn, method: str = "fd4") -> PiecewiseFn:
        e = tuple(self.signs)
        if len(e) != g.grid.dim or any(s not in (1, -1) for s in e):
            raise ValueError(f"invalid reflection {e}")
        return PiecewiseFn.from_arrays(
            g.grid, {q: g[tuple(a * b for a, b in zip(e, q))].values for q in g.parts})


@dataclass(frozen=True)
class EulerProbe:
    """``theta_j`` along one axis, differentiated with ``method``."""

    axis: int = 0

    def __call__(self, g: PiecewiseFn, method: str = "fd4") -> PiecewiseFn:
        gamma = [0] * g.grid.dim
        gamma[self.axis] = 1
        word = EulerPolynomial.theta(gamma)
        return PiecewiseFn.from_arrays(
            g.grid, {e: euler_apply_array(word, p.values, g.grid.dt, method)
                     for e, p in g.parts.items()})


def commutation_residual(op: HadamardOperator, probe, phi, method: str = "fd4") -> float:
    """``max|P(M phi) - M(P phi)| / (1 + max|P(M phi)|)`` for a probe operator ``P``.

    For an :class:`EulerProbe` the outer derivative uses ``method`` while the
    derivative of the input uses spectral differentiation as a reference, so
    the residual measures the discretization error of ``method``.
    """
    op = _fitted(op)
    phi = as_piecewise(phi)
    left = probe(op.transform(phi), method)
    inner = probe(phi, "spectral") if isinstance(probe, EulerProbe) else probe(phi)
    right = op.transform(inner)
    diff = max(float(np.max(np.abs(left[e].values - right[e].values))) for e in left.parts)
    return diff / (1.0 + left.max_abs())


# -- tables -------------------------------------------------------------------------------

@dataclass
class EigenTable:
    """Eigenvalues ``m_alpha`` keyed by multi-index in lexicographic order."""

    entries: dict[tuple[int, ...], float]
    metadata: dict = field(default_factory=dict)

    def values(self) -> list[float]:
        return list(self.entries.values())

    def write_csv(self, fh) -> None:
        """Header ``alpha_1..alpha_d,m_alpha``; values with 17 significant digits."""
        dim = len(next(iter(self.entries)))
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"alpha_{j + 1}" for j in range(dim)] + ["m_alpha"])
        for alpha, m in self.entries.items():
            writer.writerow([*alpha, f"{m:.17g}"])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.write_csv(fh)

    def write_sidecar(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def eigen_table(op: HadamardOperator, alpha_max: Sequence[int]) -> EigenTable:
    """``m_alpha`` for all ``alpha <= alpha_max`` componentwise."""
    op = _fitted(op)
    alpha_max = check_multi_index(alpha_max, op.kernel.dim)
    entries = {alpha: eigenvalue_monomial(op.kernel, alpha, op.grid_)
               for alpha in monomial_exponents(alpha_max)}
    meta = {
        "kernel_sha256": kernel_hash(op.kernel) if _serializable(op.kernel) else None,
        "grid": op.grid_.to_dict(),
        "method": op.method,
        "edge_mass_limit": EDGE_MASS_LIMIT,
        "alpha_max": list(alpha_max),
    }
    return EigenTable(entries, meta)


def _serializable(T: KernelDistribution) -> bool:
    return all(t.func is None for t in T.density_terms)
