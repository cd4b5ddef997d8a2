"""Polynomials in the Euler operators ``theta_j = x_j d/dx_j``.

Under ``x = exp(t)`` the operator ``theta_j`` becomes ``d/dt_j``, so
``P(theta)`` is applied to sampled functions by differentiating along the
log axes.  Coefficients are held as :class:`fractions.Fraction` so the dual
substitution ``theta -> -theta - 1`` is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .loggrid import QuadrantFn, log_jacobian, trapezoid_weights

__all__ = [
    "EulerPolynomial",
    "diff_axis",
    "euler_apply",
    "euler_apply_array",
    "euler_dual",
    "euler_pair",
    "euler_shift",
    "monomial",
    "monomial_exponents",
]

METHODS = ("fd4", "spectral")

# First-derivative weights (times 12 h) for the order-4 schemes.
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])


def _as_index(gamma) -> tuple[int, ...]:
    gamma = tuple(int(g) for g in gamma)
    if any(g < 0 for g in gamma):
        raise ValueError(f"multi-index entries must be nonnegative, got {gamma}")
    return gamma


@dataclass(frozen=True)
class EulerPolynomial:
    """``P(theta) = sum_gamma c_gamma theta^gamma`` in ``dim`` variables."""

    dim: int
    coeffs: Mapping[tuple[int, ...], Fraction]

    def __post_init__(self):
        clean: dict[tuple[int, ...], Fraction] = {}
        for gamma, c in self.coeffs.items():
            gamma = _as_index(gamma)
            if len(gamma) != self.dim:
                raise ValueError(f"multi-index {gamma} does not have length {self.dim}")
            c = Fraction(c)
            if c:
                clean[gamma] = clean.get(gamma, Fraction(0)) + c
        object.__setattr__(self, "coeffs", {g: c for g, c in sorted(clean.items()) if c})

    def __hash__(self):
        return hash((self.dim, tuple(self.coeffs.items())))

    @classmethod
    def constant(cls, dim: int, c=1) -> "EulerPolynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def theta(cls, beta: Sequence[int]) -> "EulerPolynomial":
        """The single word ``theta^beta``."""
        beta = _as_index(beta)
        return cls(len(beta), {beta: 1})

    @classmethod
    def from_dict(cls, d: Mapping) -> "EulerPolynomial":
        """Parse ``{"coeffs": [{"gamma": [...], "c": real}, ...]}``."""
        terms = d["coeffs"]
        if not terms:
            raise ValueError("polynomial needs at least one coefficient")
        dim = len(terms[0]["gamma"])
        return cls(dim, {tuple(t["gamma"]): Fraction(str(t["c"])) for t in terms})

    def to_dict(self) -> dict:
        return {"coeffs": [{"gamma": list(g), "c": float(c)} for g, c in self.coeffs.items()]}

    @property
    def degree(self) -> int:
        return max((sum(g) for g in self.coeffs), default=0)

    def __call__(self, z: Sequence) -> Fraction | float:
        """Evaluate ``P`` at a point; exact for integer or rational input."""
        z = list(z)
        return sum((c * math.prod(zj ** gj for zj, gj in zip(z, g))
                    for g, c in self.coeffs.items()), Fraction(0))

    def __add__(self, other: "EulerPolynomial") -> "EulerPolynomial":
        coeffs = dict(self.coeffs)
        for g, c in other.coeffs.items():
            coeffs[g] = coeffs.get(g, Fraction(0)) + c
        return EulerPolynomial(self.dim, coeffs)

    def __mul__(self, other: "EulerPolynomial") -> "EulerPolynomial":
        coeffs: dict[tuple[int, ...], Fraction] = {}
        for (g1, c1), (g2, c2) in itertools.product(self.coeffs.items(), other.coeffs.items()):
            g = tuple(a + b for a, b in zip(g1, g2))
            coeffs[g] = coeffs.get(g, Fraction(0)) + c1 * c2
        return EulerPolynomial(self.dim, coeffs)


def euler_dual(P: EulerPolynomial) -> EulerPolynomial:
    """The transposed operator ``P(-theta - 1)``, expanded in the monomial basis."""
    coeffs: dict[tuple[int, ...], Fraction] = {}
    for gamma, c in P.coeffs.items():
        # (-theta_j - 1)^g = (-1)^g sum_i C(g, i) theta_j^i
        factors = [[(i, (-1) ** g * math.comb(g, i)) for i in range(g + 1)] for g in gamma]
        for choice in itertools.product(*factors):
            idx = tuple(i for i, _ in choice)
            coeffs[idx] = coeffs.get(idx, Fraction(0)) + c * math.prod(w for _, w in choice)
    return EulerPolynomial(P.dim, coeffs)


def euler_shift(P: EulerPolynomial, q: Sequence[float]) -> EulerPolynomial:
    """``P(theta - q)`` expanded exactly; ``q`` may be any real vector."""
    coeffs: dict[tuple[int, ...], Fraction] = {}
    q = [Fraction(v) for v in q]
    for gamma, c in P.coeffs.items():
        factors = [[(i, math.comb(g, i) * (-qj) ** (g - i)) for i in range(g + 1)]
                   for g, qj in zip(gamma, q)]
        for choice in itertools.product(*factors):
            idx = tuple(i for i, _ in choice)
            coeffs[idx] = coeffs.get(idx, Fraction(0)) + c * math.prod(w for _, w in choice)
    return EulerPolynomial(P.dim, coeffs)


def _fd4_axis(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    n = v.shape[0]
    if n < 5:
        raise ValueError("fd4 needs at least 5 points per axis")
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    head = v[:5]
    tail = v[-5:]
    out[0] = np.tensordot(_EDGE0, head, axes=1) / (12.0 * h)
    out[1] = np.tensordot(_EDGE1, head, axes=1) / (12.0 * h)
    out[-1] = -np.tensordot(_EDGE0[::-1], tail, axes=1) / (12.0 * h)
    out[-2] = -np.tensordot(_EDGE1[::-1], tail, axes=1) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def _spectral_axis(values: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    n = values.shape[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    mult = (1j * k) ** order
    if n % 2 == 0 and order % 2 == 1:
        mult[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    spec = np.fft.fft(values, axis=axis) * mult.reshape(shape)
    return np.fft.ifft(spec, axis=axis).real


def diff_axis(values: np.ndarray, h: float, axis: int, order: int = 1,
              method: str = "fd4") -> np.ndarray:
    """``order``-th derivative along one uniformly spaced axis.

    ``fd4`` repeats the fourth-order first-derivative stencil (centered in the
    interior, one-sided at the two nodes next to each edge); ``spectral``
    differentiates the periodic trigonometric interpolant of the window.
    """
    if method not in METHODS:
        raise ValueError(f"unknown differentiation method {method!r}")
    if order == 0:
        return values
    if method == "spectral":
        return _spectral_axis(values, h, axis, order)
    for _ in range(order):
        values = _fd4_axis(values, h, axis)
    return values


def euler_apply_array(P: EulerPolynomial, values: np.ndarray, dt: Sequence[float],
                      method: str = "fd4") -> np.ndarray:
    """Apply ``P(d/dt)`` to log-side samples with steps ``dt``."""
    values = np.asarray(values, dtype=float)
    if values.ndim != P.dim:
        raise ValueError(f"polynomial has dimension {P.dim}, samples have {values.ndim}")
    out = np.zeros_like(values)
    for gamma, c in P.coeffs.items():
        term = values
        for j, g in enumerate(gamma):
            term = diff_axis(term, dt[j], j, g, method)
        out = out + float(c) * term
    return out


def euler_apply(P: EulerPolynomial, f: QuadrantFn, method: str = "fd4") -> QuadrantFn:
    """``P(theta) f``, computed as ``P(d/dt)`` on the log side."""
    if P.dim != f.grid.dim:
        raise ValueError(f"polynomial has dimension {P.dim}, function has {f.grid.dim}")
    return f.with_values(euler_apply_array(P, f.values, f.grid.dt, method))


def euler_pair(P: EulerPolynomial, t: QuadrantFn, phi: QuadrantFn, method: str = "fd4") -> float:
    """``<P(theta) t, phi> = int t(x) (P(-theta-1) phi)(x) dx`` over the quadrant.

    The integral is taken in log coordinates with the trapezoid rule and the
    Jacobian ``exp(sum t_j)``.
    """
    if t.grid != phi.grid or t.quadrant != phi.quadrant:
        raise ValueError("t and phi must share grid and quadrant")
    psi = euler_apply(euler_dual(P), phi, method)
    grid = t.grid
    return float(np.sum(t.values * psi.values * log_jacobian(grid) * trapezoid_weights(grid)))


def monomial_exponents(alpha_max: Sequence[int]) -> Iterable[tuple[int, ...]]:
    """All multi-indices ``alpha <= alpha_max`` componentwise, lexicographic."""
    return itertools.product(*(range(a + 1) for a in alpha_max))


def monomial(grid, alpha: Sequence[int], e: Sequence[int] | None = None) -> QuadrantFn:
    """``x^alpha`` sampled on quadrant ``e`` (exact sign, ``exp`` of the log part)."""
    e = (1,) * grid.dim if e is None else tuple(e)
    alpha = _as_index(alpha)
    sign = math.prod(s ** a for s, a in zip(e, alpha))
    logpart = sum(a * t for a, t in zip(alpha, grid.mesh()))
    return QuadrantFn(grid, e, sign * np.exp(logpart))
