"""Kernel distributions ``T = sum_beta theta^beta t_beta`` off the coordinate hyperplanes.

A kernel is a finite list of density terms (a built-in family on one
quadrant, differentiated by an Euler word ``theta^beta``) and Dirac terms
``c theta^beta delta_a``.  Densities are evaluated from log coordinates so
that wide windows never overflow.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from .euler import EulerPolynomial, euler_apply, euler_apply_array, euler_dual
from .loggrid import (LogGrid, check_sign_vector, default_grid, edge_mask, log_jacobian,
                      make_grid, radial_weight, sample, trapezoid_weights)

__all__ = [
    "DensityTerm",
    "DiracTerm",
    "KernelDistribution",
    "KernelSpecError",
    "ThetaRapidReport",
    "apply_to_test",
    "dump_kernel",
    "kernel_density",
    "kernel_dirac",
    "kernel_from_spec",
    "kernel_hash",
    "kernel_to_spec",
    "load_kernel",
    "support_distance",
    "validate_theta_rapid",
]

K_UNBOUNDED = 2**31 - 1
EDGE_FLAG_RATIO = 1e-3
FAMILIES = ("exp_symmetric", "gauss_log", "table")


class KernelSpecError(ValueError):
    """Malformed kernel specification; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


# -- density families, written in log coordinates u = log|x| -----------------

def _exp_symmetric(params: Mapping, u: list[np.ndarray]) -> np.ndarray:
    with np.errstate(over="ignore"):
        expo = sum(np.exp(uj) + np.exp(-uj) for uj in u)
    return np.exp(-expo)


def _gauss_log(params: Mapping, u: list[np.ndarray]) -> np.ndarray:
    d = len(u)
    mu = _per_axis(params.get("mu", 0.0), d)
    s = _per_axis(params.get("s", 1.0), d)
    return np.exp(-sum((uj - m) ** 2 / (2.0 * sj * sj) for uj, m, sj in zip(u, mu, s)))


class _Table:
    """Cubic interpolant of a density sampled on a log grid, zero off its support."""

    def __init__(self, params: Mapping, dim: int):
        self.grid = LogGrid.from_dict(params["grid"])
        if self.grid.dim != dim:
            raise ValueError(f"table grid has dimension {self.grid.dim}, kernel has {dim}")
        values = np.asarray(params["values"], dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("table values must be finite")
        window = self.grid.window()
        support = params.get("support")
        if support is None:
            support = [(math.exp(lo), math.exp(hi)) for lo, hi in window]
        self.log_support = [(math.log(lo), math.log(hi)) for lo, hi in support]
        self.support = [tuple(float(v) for v in b) for b in support]
        # the default iterative spline solve stops near 1e-6; solve directly instead
        self._interp = RegularGridInterpolator(self.grid.axes(), values, method="cubic",
                                               bounds_error=False, fill_value=0.0,
                                               solver=spsolve)

    def __call__(self, params: Mapping, u: list[np.ndarray]) -> np.ndarray:
        shape = np.broadcast_shapes(*(uj.shape for uj in u))
        u = [np.broadcast_to(uj, shape) for uj in u]
        inside = np.ones(shape, dtype=bool)
        for uj, (lo, hi) in zip(u, self.log_support):
            inside &= (uj >= lo) & (uj <= hi)
        out = np.zeros(shape)
        if inside.any():
            pts = np.stack([uj[inside] for uj in u], axis=-1)
            out[inside] = self._interp(pts)
        return out


def _per_axis(v, d: int) -> list[float]:
    if np.ndim(v) == 0:
        return [float(v)] * d
    v = [float(x) for x in v]
    if len(v) != d:
        raise ValueError(f"expected {d} values, got {len(v)}")
    return v


@dataclass(frozen=True, eq=False)
class DensityTerm:
    """``weight * theta^beta t`` with ``t`` a density family on one quadrant.

    ``family`` is one of ``exp_symmetric``, ``gauss_log``, ``table``; any
    other name requires ``func``, a callable of the log coordinates.
    """

    beta: tuple[int, ...]
    quadrant: tuple[int, ...]
    family: str
    params: Mapping[str, Any] = field(default_factory=dict)
    weight: float = 1.0
    func: Callable[[list[np.ndarray]], np.ndarray] | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))
        object.__setattr__(self, "quadrant", check_sign_vector(self.quadrant, len(self.beta)))
        if any(b < 0 for b in self.beta):
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.func is None:
            if self.family == "exp_symmetric":
                fn = _exp_symmetric
            elif self.family == "gauss_log":
                _per_axis(self.params.get("mu", 0.0), self.dim)
                s = _per_axis(self.params.get("s", 1.0), self.dim)
                if any(sj <= 0 for sj in s):
                    raise ValueError("gauss_log widths must be positive")
                fn = _gauss_log
            elif self.family == "table":
                fn = _Table(self.params, self.dim)
            else:
                raise ValueError(f"unknown density family {self.family!r}")
            object.__setattr__(self, "_fn", fn)
        else:
            object.__setattr__(self, "_fn", lambda params, u: self.func(u))

    @property
    def dim(self) -> int:
        return len(self.beta)

    @property
    def support(self) -> list[tuple[float, float]] | None:
        """Bounds on ``|x_j|`` per axis, or ``None`` for the whole quadrant."""
        if self.family == "table":
            return self._fn.support
        return self.params.get("support")

    def on_log(self, u: Sequence[np.ndarray]) -> np.ndarray:
        """``weight * t(e * exp(u))``."""
        return self.weight * self._fn(self.params, [np.asarray(uj, dtype=float) for uj in u])

    def __call__(self, *x: np.ndarray) -> np.ndarray:
        """Evaluate at physical points; zero outside the term's quadrant."""
        x = [np.asarray(xj, dtype=float) for xj in x]
        shape = np.broadcast_shapes(*(xj.shape for xj in x))
        inside = np.ones(shape, dtype=bool)
        for xj, s in zip(x, self.quadrant):
            inside &= (s * xj) > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            u = [np.log(np.abs(np.broadcast_to(xj, shape))) for xj in x]
            val = self.on_log(u)
        return np.where(inside, val, 0.0)

    def scaled(self, c: float) -> "DensityTerm":
        return DensityTerm(self.beta, self.quadrant, self.family, self.params,
                           self.weight * c, self.func)


@dataclass(frozen=True)
class DiracTerm:
    """``weight * theta^beta delta_point``."""

    beta: tuple[int, ...]
    point: tuple[float, ...]
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))
        object.__setattr__(self, "point", tuple(float(a) for a in self.point))
        if len(self.beta) != len(self.point):
            raise ValueError("beta and point must have the same length")
        if any(b < 0 for b in self.beta):
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if any(a == 0.0 or not math.isfinite(a) for a in self.point):
            raise ValueError(f"Dirac point must have finite nonzero coordinates, got {self.point}")

    @property
    def dim(self) -> int:
        return len(self.beta)

    @property
    def quadrant(self) -> tuple[int, ...]:
        return tuple(1 if a > 0 else -1 for a in self.point)

    def scaled(self, c: float) -> "DiracTerm":
        return DiracTerm(self.beta, self.point, self.weight * c)


@dataclass(frozen=True, eq=False)
class KernelDistribution:
    """A finite sum of density and Dirac terms with a declared decay order ``k_star``."""

    dim: int
    density_terms: tuple[DensityTerm, ...] = ()
    dirac_terms: tuple[DiracTerm, ...] = ()
    k_star: int = K_UNBOUNDED
    grid: LogGrid | None = None

    def __post_init__(self):
        object.__setattr__(self, "density_terms", tuple(self.density_terms))
        object.__setattr__(self, "dirac_terms", tuple(self.dirac_terms))
        for term in (*self.density_terms, *self.dirac_terms):
            if term.dim != self.dim:
                raise ValueError(f"term of dimension {term.dim} in a {self.dim}-d kernel")
        if self.k_star < 0:
            raise ValueError("k_star must be nonnegative")
        if self.grid is not None and self.grid.dim != self.dim:
            raise ValueError("kernel grid dimension mismatch")

    def __add__(self, other: "KernelDistribution") -> "KernelDistribution":
        if other.dim != self.dim:
            raise ValueError("cannot add kernels of different dimension")
        return KernelDistribution(self.dim, self.density_terms + other.density_terms,
                                  self.dirac_terms + other.dirac_terms,
                                  min(self.k_star, other.k_star), self.grid or other.grid)

    def scaled(self, c: float) -> "KernelDistribution":
        return KernelDistribution(self.dim, tuple(t.scaled(c) for t in self.density_terms),
                                  tuple(t.scaled(c) for t in self.dirac_terms), self.k_star,
                                  self.grid)

    def betas(self) -> list[tuple[int, ...]]:
        seen = dict.fromkeys(t.beta for t in (*self.density_terms, *self.dirac_terms))
        return list(seen)


def kernel_dirac(a: Sequence[float], c: float = 1.0, beta: Sequence[int] | None = None
                 ) -> KernelDistribution:
    """Kernel ``c theta^beta delta_a`` (``beta = 0`` by default)."""
    a = tuple(float(v) for v in np.atleast_1d(a))
    beta = (0,) * len(a) if beta is None else tuple(beta)
    return KernelDistribution(len(a), (), (DiracTerm(beta, a, c),), K_UNBOUNDED)


def kernel_density(family: str, dim: int, params: Mapping | None = None,
                   quadrant: Sequence[int] | None = None, beta: Sequence[int] | None = None,
                   weight: float = 1.0, k_star: int = 3) -> KernelDistribution:
    """Single-term kernel from a built-in family."""
    term = DensityTerm((0,) * dim if beta is None else tuple(beta),
                       (1,) * dim if quadrant is None else tuple(quadrant),
                       family, dict(params or {}), weight)
    return KernelDistribution(dim, (term,), (), k_star)


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class TermReport:
    index: int
    weighted_sup: float
    edge_ratio: float
    flagged: bool


@dataclass(frozen=True)
class ThetaRapidReport:
    k: int
    terms: tuple[TermReport, ...]

    @property
    def ok(self) -> bool:
        return not any(t.flagged for t in self.terms)


def validate_theta_rapid(T: KernelDistribution, k: int, grid: LogGrid | None = None
                         ) -> ThetaRapidReport:
    """Weighted sup of each density and the share of it sitting in the edge band.

    A term is flagged when its edge-band maximum exceeds ``1e-3`` of its
    global maximum, i.e. the window truncates the weighted density.
    """
    if k > T.k_star:
        raise ValueError(f"k={k} exceeds the kernel's declared k_star={T.k_star}")
    grid = grid or T.grid or default_grid(T.dim)
    w = radial_weight(grid, k)
    mask = edge_mask(grid)
    reports = []
    for i, term in enumerate(T.density_terms):
        a = np.abs(term.on_log(grid.mesh())) * w
        top = float(a.max())
        ratio = float(a[mask].max()) / top if top > 0 else 0.0
        reports.append(TermReport(i, top, ratio, ratio > EDGE_FLAG_RATIO))
    return ThetaRapidReport(k, tuple(reports))


def support_distance(T: KernelDistribution) -> float:
    """Distance of the support to the coordinate hyperplanes (``inf`` for ``T = 0``)."""
    out = math.inf
    for term in T.dirac_terms:
        out = min(out, min(abs(a) for a in term.point))
    for term in T.density_terms:
        support = term.support
        out = min(out, 0.0 if support is None else min(lo for lo, _ in support))
    return out


# -- pairing with test functions ------------------------------------------------

def _dual_word(beta: Sequence[int]) -> EulerPolynomial:
    return euler_dual(EulerPolynomial.theta(beta))


def dual_word_at_point(phi: Callable[..., np.ndarray], beta: Sequence[int],
                       point: Sequence[float], h: float = 2e-3) -> float:
    """``((theta*)^beta phi)(point)`` from a local log-coordinate fd4 stencil."""
    beta = tuple(beta)
    if not any(beta):
        val = float(np.asarray(phi(*[np.asarray(a, dtype=float) for a in point])))
        if not math.isfinite(val):
            raise ValueError(f"test function is not finite at {tuple(point)}")
        return val
    n = [4 * b + 9 for b in beta]
    t0 = [math.log(abs(a)) - (nj - 1) // 2 * h for a, nj in zip(point, n)]
    local = make_grid(len(beta), t0, [h] * len(beta), n)
    e = tuple(1 if a > 0 else -1 for a in point)
    try:
        vals = sample(phi, local, e)
    except ValueError as exc:
        raise ValueError(f"cannot differentiate test function near {tuple(point)}: {exc}")
    out = euler_apply(_dual_word(beta), vals, "fd4").values
    return float(out[tuple((nj - 1) // 2 for nj in n)])


def apply_to_test(T: KernelDistribution, phi: Callable[..., np.ndarray],
                  grid: LogGrid | None = None, method: str = "fd4") -> float:
    """``T(phi)``: densities paired through ``(theta*)^beta phi``, Diracs evaluated.

    Density integrals use the log-coordinate trapezoid rule on ``grid`` (one
    copy per term quadrant); ``phi`` receives physical coordinate arrays.
    """
    grid = grid or T.grid or default_grid(T.dim)
    total = 0.0
    for term in T.density_terms:
        phi_e = sample(phi, grid, term.quadrant)
        psi = euler_apply_array(_dual_word(term.beta), phi_e.values, grid.dt, method)
        t = term.on_log(grid.mesh())
        total += float(np.sum(t * psi * log_jacobian(grid) * trapezoid_weights(grid)))
    for term in T.dirac_terms:
        total += term.weight * dual_word_at_point(phi, term.beta, term.point)
    return total


# -- JSON kernel specs ------------------------------------------------------------

_TOP_KEYS = {"dim", "k_star", "terms", "grid"}
_TERM_KEYS = {"kind", "beta", "quadrant", "family", "params", "weight"}
_PARAM_KEYS = {
    "exp_symmetric": {"support"},
    "gauss_log": {"mu", "s", "support"},
    "table": {"grid", "values", "support"},
    "dirac": {"point"},
}


def _int_list(v, path: str, length: int | None = None) -> list[int]:
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                          for x in v):
        raise KernelSpecError(path, "expected a list of integers")
    if length is not None and len(v) != length:
        raise KernelSpecError(path, f"expected {length} entries, got {len(v)}")
    return v


def _number(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise KernelSpecError(path, "expected a finite number")
    return float(v)


def _parse_term(d, i: int, dim: int):
    path = f"terms[{i}]"
    if not isinstance(d, dict):
        raise KernelSpecError(path, "expected an object")
    unknown = set(d) - _TERM_KEYS
    if unknown:
        raise KernelSpecError(path, f"unknown fields {sorted(unknown)}")
    kind = d.get("kind")
    if kind not in ("density", "dirac"):
        raise KernelSpecError(f"{path}.kind", "must be 'density' or 'dirac'")
    beta = _int_list(d.get("beta", [0] * dim), f"{path}.beta", dim)
    if any(b < 0 for b in beta):
        raise KernelSpecError(f"{path}.beta", "entries must be nonnegative")
    weight = _number(d.get("weight", 1.0), f"{path}.weight")
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise KernelSpecError(f"{path}.params", "expected an object")
    family = "dirac" if kind == "dirac" else d.get("family")
    if family not in _PARAM_KEYS or (kind == "density" and family == "dirac"):
        raise KernelSpecError(f"{path}.family", f"must be one of {list(FAMILIES)}")
    unknown = set(params) - _PARAM_KEYS[family]
    if unknown:
        raise KernelSpecError(f"{path}.params", f"unknown fields {sorted(unknown)} for {family}")
    if kind == "dirac":
        if "family" in d and d["family"] != "dirac":
            raise KernelSpecError(f"{path}.family", "Dirac terms take no density family")
        point = params.get("point")
        if not isinstance(point, list) or len(point) != dim:
            raise KernelSpecError(f"{path}.params.point", f"expected {dim} coordinates")
        point = [_number(a, f"{path}.params.point[{j}]") for j, a in enumerate(point)]
        if any(a == 0 for a in point):
            raise KernelSpecError(f"{path}.params.point", "coordinates must be nonzero")
        if "quadrant" in d:
            q = _int_list(d["quadrant"], f"{path}.quadrant", dim)
            if tuple(q) != tuple(1 if a > 0 else -1 for a in point):
                raise KernelSpecError(f"{path}.quadrant", "does not match the point's signs")
        return DiracTerm(tuple(beta), tuple(point), weight)
    quadrant = _int_list(d.get("quadrant", [1] * dim), f"{path}.quadrant", dim)
    if any(s not in (1, -1) for s in quadrant):
        raise KernelSpecError(f"{path}.quadrant", "entries must be +1 or -1")
    try:
        return DensityTerm(tuple(beta), tuple(quadrant), family, params, weight)
    except (ValueError, KeyError, TypeError) as exc:
        raise KernelSpecError(f"{path}.params", str(exc)) from None


def kernel_from_spec(spec: Mapping) -> KernelDistribution:
    """Build a kernel from the parsed JSON document (unknown fields rejected)."""
    if not isinstance(spec, dict):
        raise KernelSpecError("", "kernel spec must be a JSON object")
    unknown = set(spec) - _TOP_KEYS
    if unknown:
        raise KernelSpecError("", f"unknown fields {sorted(unknown)}")
    dim = spec.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise KernelSpecError("dim", "expected a positive integer")
    k_star = spec.get("k_star", K_UNBOUNDED)
    if not isinstance(k_star, int) or isinstance(k_star, bool) or k_star < 0:
        raise KernelSpecError("k_star", "expected a nonnegative integer")
    terms = spec.get("terms")
    if not isinstance(terms, list):
        raise KernelSpecError("terms", "expected a list")
    grid = None
    if "grid" in spec:
        try:
            grid = LogGrid.from_dict(spec["grid"])
        except (ValueError, KeyError, TypeError) as exc:
            raise KernelSpecError("grid", str(exc)) from None
        if grid.dim != dim:
            raise KernelSpecError("grid.dim", "does not match kernel dim")
    parsed = [_parse_term(t, i, dim) for i, t in enumerate(terms)]
    return KernelDistribution(dim, tuple(t for t in parsed if isinstance(t, DensityTerm)),
                              tuple(t for t in parsed if isinstance(t, DiracTerm)), k_star, grid)


def load_kernel(path) -> KernelDistribution:
    """Read a kernel spec file; JSON syntax errors are reported with line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise KernelSpecError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return kernel_from_spec(spec)


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def kernel_to_spec(T: KernelDistribution) -> dict:
    terms = []
    for t in T.density_terms:
        if t.func is not None:
            raise ValueError("kernels with custom callables cannot be serialized")
        terms.append({"kind": "density", "beta": list(t.beta), "quadrant": list(t.quadrant),
                      "family": t.family, "params": _plain(dict(t.params)), "weight": t.weight})
    for t in T.dirac_terms:
        terms.append({"kind": "dirac", "beta": list(t.beta),
                      "params": {"point": list(t.point)}, "weight": t.weight})
    spec = {"dim": T.dim, "k_star": T.k_star, "terms": terms}
    if T.grid is not None:
        spec["grid"] = T.grid.to_dict()
    return spec


def dump_kernel(T: KernelDistribution, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(kernel_to_spec(T), fh, indent=2)
        fh.write("\n")


def kernel_hash(T: KernelDistribution) -> str:
    """SHA-256 of the canonical JSON form."""
    blob = json.dumps(kernel_to_spec(T), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
