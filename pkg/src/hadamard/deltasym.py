"""Exact calculus for ``sum_k c_k delta^(k)`` on the real line.

Coefficients are rationals; every identity here is checked without floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .euler import EulerPolynomial

__all__ = [
    "AnnihilationResult",
    "DeltaExpansion",
    "annihilation_check",
    "delta_diff",
    "delta_mul_x",
    "euler_apply_delta",
    "euler_eigen_delta",
]


@dataclass(frozen=True)
class DeltaExpansion:
    """``sum_k coeffs[k] * delta^(k)``; zero coefficients are dropped."""

    coeffs: Mapping[int, Fraction]

    def __post_init__(self):
        clean = {}
        for k, c in self.coeffs.items():
            if int(k) != k or k < 0:
                raise ValueError(f"derivative order must be a nonnegative integer, got {k}")
            c = Fraction(c)
            if c:
                clean[int(k)] = c
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    @classmethod
    def delta(cls, k: int = 0, c=1) -> "DeltaExpansion":
        return cls({k: c})

    @classmethod
    def zero(cls) -> "DeltaExpansion":
        return cls({})

    def __add__(self, other: "DeltaExpansion") -> "DeltaExpansion":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + c
        return DeltaExpansion(out)

    def __sub__(self, other: "DeltaExpansion") -> "DeltaExpansion":
        return self + other.scale(-1)

    def scale(self, c) -> "DeltaExpansion":
        return DeltaExpansion({k: v * Fraction(c) for k, v in self.coeffs.items()})

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "DeltaExpansion(0)"
        return "DeltaExpansion(" + " + ".join(f"{c}*d^({k})" for k, c in self.coeffs.items()) + ")"


def delta_diff(u: DeltaExpansion) -> DeltaExpansion:
    """Derivative: ``delta^(k) -> delta^(k+1)``."""
    return DeltaExpansion({k + 1: c for k, c in u.coeffs.items()})


def delta_mul_x(u: DeltaExpansion) -> DeltaExpansion:
    """Multiplication by ``x``: ``x delta^(k) = -k delta^(k-1)``."""
    return DeltaExpansion({k - 1: -k * c for k, c in u.coeffs.items() if k > 0})


def _theta(u: DeltaExpansion) -> DeltaExpansion:
    return delta_mul_x(delta_diff(u))


def euler_apply_delta(P: EulerPolynomial, u: DeltaExpansion) -> DeltaExpansion:
    """``P(theta) u`` by composing ``theta = x d/dx`` from the two rules."""
    if P.dim != 1:
        raise ValueError("delta expansions are one-dimensional")
    out = DeltaExpansion.zero()
    for (g,), c in P.coeffs.items():
        term = u
        for _ in range(g):
            term = _theta(term)
        out = out + term.scale(c)
    return out


def euler_eigen_delta(P: EulerPolynomial, u: DeltaExpansion) -> DeltaExpansion:
    """Closed form ``sum_k c_k P(-k-1) delta^(k)``."""
    if P.dim != 1:
        raise ValueError("delta expansions are one-dimensional")
    return DeltaExpansion({k: c * P((-k - 1,)) for k, c in u.coeffs.items()})


@dataclass(frozen=True)
class AnnihilationResult:
    b: Fraction
    closed_form: Fraction
    vanishes: bool


def annihilation_check(u: DeltaExpansion, beta: int) -> AnnihilationResult:
    """Scalar ``b`` with ``d^beta (x^beta u) = b u`` for ``u = c delta^(k)``.

    ``u`` is a theta-eigenvector with eigenvalue ``alpha = -k-1``; the
    product formula ``prod_{i=1..beta} (i + alpha)`` is returned alongside
    the rule-composed value.
    """
    if len(u.coeffs) != 1:
        raise ValueError("annihilation_check needs a single-term expansion c*delta^(k)")
    if beta < 1:
        raise ValueError("beta must be a positive integer")
    (k, c), = u.coeffs.items()
    v = u
    for _ in range(beta):
        v = delta_mul_x(v)
    for _ in range(beta):
        v = delta_diff(v)
    if v and set(v.coeffs) != {k}:
        raise AssertionError(f"d^beta(x^beta u) = {v} is not a multiple of {u}")
    b = v.coeffs.get(k, Fraction(0)) / c
    alpha = -k - 1
    closed = Fraction(math.prod(i + alpha for i in range(1, beta + 1)))
    return AnnihilationResult(b, closed, b == 0)
