"""Runnable invariant suite.

Every check returns a :class:`Check` holding the measured value, the
tolerance and whether it passed.  Random inputs come from a seeded
generator, so two runs with the same configuration give the same report.

Grid-dependent checks run on the configured grids.  The convergence-order
checks build a second grid with half the step on the same window and compare
the two, so they stay meaningful when the configured step is coarse.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from .convolve import ConvPlan, additive_convolve, hadamard_apply, shift_nodes, star_pair
from .deltasym import (DeltaExpansion, annihilation_check, delta_diff, delta_mul_x,
                       euler_apply_delta, euler_eigen_delta)
from .euler import EulerPolynomial, euler_apply, euler_dual, euler_pair, monomial
from .kernel import (DensityTerm, DiracTerm, KernelDistribution, apply_to_test, kernel_density,
                     kernel_dirac, validate_theta_rapid)
from .loggrid import (LogGrid, PiecewiseFn, QuadrantFn, align_grid, decay_norm, edge_mask,
                      grid_from_window, l1_exponent, quadrants, radial_weight, sample,
                      to_linear, to_log, weight_omega, weighted_edge_ratio)
from .spectra import (EulerProbe, Dilation, HadamardOperator, Reflection, commutation_residual,
                      eigenvalue_monomial, measure_eigenvalue)

__all__ = ["Check", "DEFAULT_TOLERANCES", "VerifyConfig", "VerifyReport", "run_verify"]

# name -> (tolerance, relation); relation "<=" means measured <= tolerance,
# ">=" means measured >= tolerance.  Exact checks count mismatches against 0.
DEFAULT_TOLERANCES: dict[str, tuple[float, str]] = {
    "loggrid.roundtrip": (0.0, "<="),
    "loggrid.sampling": (0.0, "<="),
    "loggrid.omega_bounds": (0.0, "<="),
    "loggrid.decay_monotone": (0.0, "<="),
    "euler.dual_involution": (0.0, "<="),
    "euler.fd4_order": (0.3, "<="),
    "euler.convergence": (12.0, ">="),
    "euler.eigen_exactness": (1e-5, "<="),
    "euler.duality": (1e-8, "<="),
    "kernel.linearity": (1e-12, "<="),
    "kernel.integration_by_parts": (1e-6, "<="),
    "kernel.dirac_consistency": (1e-12, "<="),
    "kernel.theta_rapid": (0.0, "<="),
    "convolve.additive_engines": (1e-10, "<="),
    "convolve.gaussian_closed_form": (1e-6, "<="),
    "convolve.shift_equivariance": (0.0, "<="),
    "convolve.engines_1d": (1e-8, "<="),
    "convolve.engines_2d": (1e-6, "<="),
    "convolve.commutativity": (1e-8, "<="),
    "convolve.dilation_commutation": (1e-8, "<="),
    "convolve.output_decay": (1e-6, "<="),
    "spectra.formula_vs_measured": (1e-6, "<="),
    "spectra.spread": (1e-6, "<="),
    "spectra.identity_table": (1e-10, "<="),
    "spectra.dirac_a2_table": (1e-8, "<="),
    "spectra.exp_symmetric_m0": (1e-6, "<="),
    "spectra.linearity": (1e-12, "<="),
    "spectra.reflection_covariance": (1e-6, "<="),
    "spectra.dilation_equivariance": (1e-13, "<="),
    "spectra.reflection_commutation": (1e-10, "<="),
    "spectra.euler_probe_order": (0.3, "<="),
    "deltasym.closed_form": (0.0, "<="),
    "deltasym.duality": (0.0, "<="),
    "deltasym.commutator": (0.0, "<="),
    "deltasym.annihilation": (0.0, "<="),
}


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    relation: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[Check]
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "config": self.config,
                "checks": [asdict(c) for c in self.checks]}


@dataclass
class VerifyConfig:
    """Grids and tolerances for :func:`run_verify`.

    ``n`` holds the node count of the 1-d grid and of each axis of the 2-d
    grid; both span ``window``.  ``kernel`` adds checks for a user kernel.
    """

    n: tuple[int, int] = (1024, 128)
    window: tuple[float, float] = (-6.0, 6.0)
    method: str = "fft"
    kernel: KernelDistribution | None = None
    tolerances: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance names: {sorted(unknown)}")
        for name, tol in self.tolerances.items():
            if not (tol > 0 and math.isfinite(tol)):
                raise ValueError(f"tolerance {name} must be positive and finite, got {tol}")

    def grid(self, dim: int) -> LogGrid:
        n = self.n[0] if dim == 1 else self.n[1]
        return grid_from_window(dim, self.window[0], self.window[1], n)

    def to_dict(self) -> dict:
        return {"n": list(self.n), "window": list(self.window), "method": self.method,
                "seed": self.seed, "tolerances": dict(self.tolerances),
                "user_kernel": self.kernel is not None}


class _Suite:
    def __init__(self, config: VerifyConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.checks: list[Check] = []

    def record(self, name: str, measured: float, detail: str = "", label: str | None = None):
        tol, rel = DEFAULT_TOLERANCES[name]
        tol = float(self.config.tolerances.get(name, tol))
        measured = float(measured)
        ok = measured <= tol if rel == "<=" else measured >= tol
        if math.isnan(measured):
            ok = False
        self.checks.append(Check(label or name, measured, tol, rel, bool(ok), detail))

    # helpers -------------------------------------------------------------------------

    def bump(self, grid: LogGrid, e=None, center=None, width=None) -> QuadrantFn:
        d = grid.dim
        c = self.rng.uniform(-0.5, 0.5, d) if center is None else np.broadcast_to(center, d)
        w = self.rng.uniform(0.3, 0.5, d) if width is None else np.broadcast_to(width, d)
        return sample(lambda *x: np.exp(-sum((np.log(np.abs(xj)) - cj) ** 2 / (2 * wj * wj)
                                             for xj, cj, wj in zip(x, c, w))), grid, e)

    def random_density_kernel(self, dim: int, allow_beta: bool = True) -> KernelDistribution:
        T = None
        for _ in range(int(self.rng.integers(1, 3))):
            family = str(self.rng.choice(["exp_symmetric", "gauss_log"]))
            params = {} if family == "exp_symmetric" else {
                "mu": [float(v) for v in self.rng.uniform(-0.5, 0.5, dim)],
                "s": [float(v) for v in self.rng.uniform(0.3, 0.6, dim)]}
            quadrant = tuple(int(v) for v in self.rng.choice([1, -1], dim))
            beta = tuple(int(v) for v in self.rng.integers(0, 3 if allow_beta else 1, dim))
            term = kernel_density(family, dim, params, quadrant, beta,
                                  float(self.rng.uniform(-2.0, 2.0)))
            T = term if T is None else T + term
        return T


def _standard_kernels(dim: int) -> dict[str, KernelDistribution]:
    return {
        "dirac_identity": kernel_dirac([1.0] * dim),
        "dirac_a2": kernel_dirac([2.0] * dim),
        "theta_dirac": kernel_dirac([1.0] * dim, beta=[1] * dim),
        "exp_symmetric": kernel_density("exp_symmetric", dim),
        "gauss_log": kernel_density("gauss_log", dim, {"mu": 0.0, "s": 0.5}),
    }


def _rel(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / (1.0 + np.abs(np.asarray(b)))))


def _max_diff(f: PiecewiseFn, g: PiecewiseFn, scale: str = "node") -> float:
    """Nodewise ``|f - g| / (1 + |g|)`` (``scale="node"``) or ``/ (1 + max|g|)``."""
    out = 0.0
    top = g.max_abs()
    for e in quadrants(f.grid.dim):
        a, b = f[e].values, g[e].values
        den = 1.0 + (np.abs(b) if scale == "node" else top)
        out = max(out, float(np.max(np.abs(a - b) / den)))
    return out


# -- loggrid ----------------------------------------------------------------------------

def _check_loggrid(s: _Suite):
    grid = s.config.grid(1)
    f = s.bump(grid, (-1,))
    back = to_linear(to_log(f))
    s.record("loggrid.roundtrip", int(np.sum(back.values != f.values)
                                      + (back.quadrant != f.quadrant)),
             "nodes differing after to_log/to_linear")

    fn = lambda x: np.sin(3.0 * x) * np.exp(-x * x)  # noqa: E731
    f = sample(fn, grid, (1,))
    s.record("loggrid.sampling", int(np.sum(f.values != fn(grid.points((1,))[0]))),
             "nodes differing from independent evaluation")

    bad = 0
    for d in (1, 2, 3):
        x = s.rng.normal(scale=3.0, size=(10_000 // 3 + 1, d))
        for k in (1, 2, 5):
            for row in x:
                # same exponent and same exp as weight_omega's dominant term
                lo = float(np.exp(k * l1_exponent(row)))
                w = weight_omega(row, k)
                bad += not (lo <= w <= 2 ** d * lo)
    s.record("loggrid.omega_bounds", bad, "points violating e^{k|x|} <= omega <= 2^d e^{k|x|}")

    # on |y| >= 1 the weight grows with k
    g_out = grid_from_window(1, 0.0, 3.0, 256)
    f = sample(lambda x: np.exp(-(np.log(x) - 1.0) ** 2), g_out)
    norms = [decay_norm(f, k) for k in range(5)]
    s.record("loggrid.decay_monotone", sum(b < a for a, b in zip(norms, norms[1:])),
             "decreasing steps of decay_norm in k on |y| >= 1")


# -- euler ------------------------------------------------------------------------------

def _random_poly(rng, dim: int, degree: int) -> EulerPolynomial:
    coeffs = {}
    for gamma in itertools.product(range(degree + 1), repeat=dim):
        if sum(gamma) <= degree:
            coeffs[gamma] = int(rng.integers(-5, 6))
    if not any(coeffs.values()):
        coeffs[(0,) * dim] = 1
    return EulerPolynomial(dim, coeffs)


def _gauss_poly(c: float, w: float, coeffs) -> tuple[Callable, Callable]:
    """``f(s) = p(s) exp(-(s-c)^2 / 2w^2)`` and its exact derivatives, on the log side."""
    p = Polynomial(coeffs)
    lin = Polynomial([c / (w * w), -1.0 / (w * w)])

    def deriv(order: int) -> Polynomial:
        q = p
        for _ in range(order):
            q = q.deriv() + q * lin
        return q

    g = lambda s: np.exp(-(s - c) ** 2 / (2 * w * w))  # noqa: E731
    return (lambda s: p(s) * g(s)), (lambda s, k: deriv(k)(s) * g(s))


def _euler_error(P: EulerPolynomial, grid: LogGrid, f, df) -> float:
    s_axis = grid.axis(0)
    vals = QuadrantFn(grid, (1,), f(s_axis))
    exact = sum(float(c) * df(s_axis, g[0]) for g, c in P.coeffs.items())
    return float(np.max(np.abs(euler_apply(P, vals).values - exact)))


def _check_euler(s: _Suite):
    bad = 0
    for dim in (1, 2):
        for _ in range(10):
            P = _random_poly(s.rng, dim, 4)
            bad += euler_dual(euler_dual(P)) != P
    s.record("euler.dual_involution", bad, "polynomials with dual(dual(P)) != P")

    coarse = s.config.grid(1)
    lo, hi = coarse.window()[0]
    fine = grid_from_window(1, lo, hi, 2 * coarse.n[0] - 1)
    orders, ratios = [], []
    for _ in range(10):
        c, w = s.rng.uniform(-1.0, 1.0), s.rng.uniform(0.5, 0.8)
        f, df = _gauss_poly(c, w, s.rng.uniform(-1.0, 1.0, 3))
        P = _random_poly(s.rng, 1, 2)
        e1, e2 = _euler_error(P, coarse, f, df), _euler_error(P, fine, f, df)
        ratios.append(e1 / e2 if e2 > 0 else math.inf)
        # pure first-order word isolates the stencil order
        t1 = EulerPolynomial.theta((1,))
        orders.append(_euler_error(t1, coarse, f, df) / _euler_error(t1, fine, f, df))
    s.record("euler.fd4_order", max(abs(r / 16.0 - 1.0) for r in orders),
             f"error ratios when dt halves: min {min(orders):.3f}, max {max(orders):.3f}")
    s.record("euler.convergence", min(ratios),
             f"smallest error drop when dt halves over 10 functions (n={coarse.n[0]})")

    worst = 0.0
    interior = ~edge_mask(coarse)
    for alpha in range(5):
        x_alpha = monomial(coarse, (alpha,))
        for g in range(4):
            out = euler_apply(EulerPolynomial.theta((g,)), x_alpha).values
            ref = alpha ** g * x_alpha.values
            scale = max(1, alpha ** g) * np.abs(x_alpha.values)
            worst = max(worst, float(np.max((np.abs(out - ref) / scale)[interior])))
    s.record("euler.eigen_exactness", worst,
             "max error of theta^g x^a = a^g x^a relative to |a^g x^a| at interior nodes, "
             "g<=3, a<=4 (fd4)")

    # Integration by parts is tested with spectral derivatives; with fd4 both
    # sides carry independent O(dt^4) truncation errors that do not cancel.
    worst = {"spectral": 0.0, "fd4": 0.0}
    for beta in range(1, 4):
        t = s.bump(coarse, center=s.rng.uniform(-0.5, 0.5), width=0.6)
        phi = s.bump(coarse, center=s.rng.uniform(-0.5, 0.5), width=0.6)
        word = EulerPolynomial.theta((beta,))
        for method in worst:
            lhs = euler_pair(word, t, phi, method)
            rhs = euler_pair(EulerPolynomial.constant(1), euler_apply(word, t, method), phi,
                             method)
            worst[method] = max(worst[method], abs(lhs - rhs))
    s.record("euler.duality", worst["spectral"],
             "|<theta^b t, phi> - <(theta^b t) as density, phi>|, b<=3, spectral "
             f"(fd4 gap {worst['fd4']:.2g})")


# -- kernel -----------------------------------------------------------------------------

def _check_kernel(s: _Suite):
    grid = s.config.grid(1)
    phi = lambda x: np.exp(-np.log(np.abs(x)) ** 2 / 0.5)  # noqa: E731
    worst = 0.0
    for _ in range(5):
        T1, T2 = s.random_density_kernel(1), s.random_density_kernel(1)
        both = apply_to_test(T1 + T2, phi, grid)
        parts = apply_to_test(T1, phi, grid) + apply_to_test(T2, phi, grid)
        worst = max(worst, abs(both - parts) / (1.0 + abs(both)))
    s.record("kernel.linearity", worst, "apply_to_test(T1 + T2) vs the sum")

    # theta t with t = gauss_log equals the density t'(u) = -(u - mu)/s^2 t(u)
    mu, sd = 0.3, 0.4
    T_word = kernel_density("gauss_log", 1, {"mu": mu, "s": sd}, beta=(1,))
    t_prime = DensityTerm((0,), (1,), "theta_gauss_log", {},
                          func=lambda u: -(u[0] - mu) / sd ** 2
                          * np.exp(-(u[0] - mu) ** 2 / (2 * sd * sd)))
    T_flat = KernelDistribution(1, (t_prime,))
    worst = 0.0
    for c in (-0.4, 0.0, 0.5):
        test = lambda x, c=c: np.exp(-(np.log(np.abs(x)) - c) ** 2 / 0.5)  # noqa: E731
        a, b = apply_to_test(T_word, test, grid), apply_to_test(T_flat, test, grid)
        worst = max(worst, abs(a - b) / (1.0 + abs(b)))
    s.record("kernel.integration_by_parts", worst,
             "theta t vs its integrated-by-parts density, three test functions")

    worst = 0.0
    for _ in range(10):
        a = s.rng.uniform(0.2, 3.0) * s.rng.choice([1.0, -1.0])
        c = s.rng.uniform(-2.0, 2.0)
        got = apply_to_test(kernel_dirac([a], c), phi, grid)
        worst = max(worst, abs(got - c * float(phi(np.array(a)))))
    s.record("kernel.dirac_consistency", worst, "|apply_to_test(c delta_a, phi) - c phi(a)|")

    def truncated(T: KernelDistribution, g: LogGrid, k_max: int) -> int:
        return sum(sum(t.flagged for t in validate_theta_rapid(T, k, g).terms)
                   for k in range(1, k_max + 1))

    flagged = sum(truncated(T, s.config.grid(dim), 3)
                  for dim in (1, 2) for T in _standard_kernels(dim).values())
    s.record("kernel.theta_rapid", flagged,
             "built-in density terms truncated by the window for k <= 3")
    if s.config.kernel is not None:
        T = s.config.kernel
        k_max = min(T.k_star, 3)
        s.record("kernel.theta_rapid", truncated(T, s.config.grid(T.dim), k_max),
                 f"density terms truncated by the window for k <= {k_max}",
                 label="kernel.theta_rapid[user]")


# -- convolve ---------------------------------------------------------------------------

def _check_convolve(s: _Suite):
    grid = grid_from_window(1, -6.0, 6.0, 256)
    direct, fast = ConvPlan(grid, "direct"), ConvPlan(grid, "fft")
    worst = 0.0
    for _ in range(10):
        f, g = s.rng.normal(size=256), s.rng.normal(size=256)
        a, b = additive_convolve(f, g, fast), additive_convolve(f, g, direct)
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    s.record("convolve.additive_engines", worst, "additive_convolve fft vs direct, random data")

    g1 = grid_from_window(1, -8.0, 8.0, 2048)
    u = g1.axis(0)
    s1, s2 = 0.4, 0.7
    unit = lambda w: np.exp(-u * u / (2 * w * w)) / (w * math.sqrt(2 * math.pi))  # noqa: E731
    full = additive_convolve(unit(s1), unit(s2), ConvPlan(g1, "fft"))
    v = 2 * g1.t0[0] + np.arange(full.shape[0]) * g1.dt[0]
    w = math.hypot(s1, s2)
    exact = np.exp(-v * v / (2 * w * w)) / (w * math.sqrt(2 * math.pi))
    s.record("convolve.gaussian_closed_form", float(np.max(np.abs(full - exact))),
             "unit Gaussians of widths 0.4, 0.7 convolve to width sqrt(0.4^2 + 0.7^2)")

    bad = 0
    for h in (1, 7, -13, 40):
        f, g = s.rng.normal(size=256), s.rng.normal(size=256)
        f[:50] = f[-50:] = 0.0
        lhs = additive_convolve(shift_nodes(f, [h]), g, direct)
        rhs = shift_nodes(additive_convolve(f, g, direct), [h])
        bad += int(np.sum(lhs != rhs))
    s.record("convolve.shift_equivariance", bad,
             "nodes where conv(shift f, g) != shift conv(f, g) (direct engine, bit-exact)")

    for dim, name in ((1, "convolve.engines_1d"), (2, "convolve.engines_2d")):
        grid = grid_from_window(1, -6.0, 6.0, 256) if dim == 1 else s.config.grid(2)
        fast, direct = ConvPlan(grid, "fft"), ConvPlan(grid, "direct")
        worst = 0.0
        for _ in range(25):
            T = s.random_density_kernel(dim)
            e = tuple(int(v) for v in s.rng.choice([1, -1], dim))
            phi = s.bump(grid, e)
            worst = max(worst, _max_diff(hadamard_apply(T, phi, fast),
                                         hadamard_apply(T, phi, direct)))
        s.record(name, worst, f"fft vs direct hadamard_apply, 25 random kernels, n={grid.n[0]}")

    grid = s.config.grid(1)
    plan = ConvPlan(grid, s.config.method)
    worst = 0.0
    for _ in range(5):
        S = s.random_density_kernel(1, allow_beta=False)
        T = s.random_density_kernel(1, allow_beta=False)
        phi = _all_quadrants(s.bump(grid))
        a = star_pair(_density_samples(S, grid), T, phi, plan)
        b = star_pair(_density_samples(T, grid), S, phi, plan)
        worst = max(worst, abs(a - b) / (1.0 + abs(a)))
    s.record("convolve.commutativity", worst, "<S * T, phi> vs <T * S, phi>, pure densities")

    grid = align_grid(s.config.grid(1))
    T = kernel_density("gauss_log", 1, {"mu": 0.2, "s": 0.5}, beta=(1,))
    op = HadamardOperator(T, grid=grid, method=s.config.method).fit()
    phi = s.bump(grid, center=0.1, width=0.4)
    res = max(commutation_residual(op, Dilation(math.exp(k * grid.dt[0])), phi)
              for k in (1, 3))
    res = max(res, commutation_residual(op, Dilation(2.0), phi))
    s.record("convolve.dilation_commutation", res,
             "M D_a = D_a M for a = e^dt, e^{3 dt}, 2 (node-aligned)")

    worst = 0.0
    for dim in (1, 2):
        grid = s.config.grid(dim)
        op = HadamardOperator(kernel_density("exp_symmetric", dim), grid=grid,
                              method="direct").fit()
        for c, w in ((0.0, 0.3), (-0.5, 0.3), (0.5, 0.3), (0.0, 0.35)):
            f = op.transform(s.bump(grid, center=c, width=w))
            for k in (1, 2, 3):
                wt = radial_weight(grid, k)
                worst = max(worst, max(weighted_edge_ratio(p.values * wt, grid)
                                       for p in f.parts.values() if p.values.any()))
    s.record("convolve.output_decay", worst,
             "edge-band share of decay-weighted output, exp_symmetric, k=1..3 (direct engine)")


def _density_samples(T: KernelDistribution, grid: LogGrid) -> PiecewiseFn:
    arrays = {e: np.zeros(grid.shape) for e in quadrants(grid.dim)}
    for term in T.density_terms:
        if any(term.beta):
            raise ValueError("only plain densities can be sampled as functions")
        arrays[term.quadrant] = arrays[term.quadrant] + term.on_log(grid.mesh())
    return PiecewiseFn.from_arrays(grid, arrays)


def _all_quadrants(f: QuadrantFn) -> PiecewiseFn:
    return PiecewiseFn.from_arrays(f.grid, {e: f.values for e in quadrants(f.grid.dim)})


# -- spectra ----------------------------------------------------------------------------

def _eigen_checks(s: _Suite, kernels: Mapping[str, KernelDistribution], grid: LogGrid,
                  label: str = ""):
    err = spread = 0.0
    where = ""
    for name, T in kernels.items():
        op = HadamardOperator(T, grid=grid, method=s.config.method).fit()
        for alpha in itertools.product(range(5), repeat=grid.dim):
            if sum(alpha) > 4:
                continue
            m = eigenvalue_monomial(T, alpha, grid)
            r = measure_eigenvalue(op, alpha)
            e = abs(m - r.mean) / (1.0 + abs(m))
            if e > err:
                err, where = e, f"{name} alpha={alpha}"
            spread = max(spread, r.spread)
    s.record("spectra.formula_vs_measured", err, f"worst at {where}, d={grid.dim}, n={grid.n[0]}",
             label=f"spectra.formula_vs_measured[{label or grid.dim}]")
    s.record("spectra.spread", spread, f"three bumps, d={grid.dim}",
             label=f"spectra.spread[{label or grid.dim}]")


def exp_symmetric_m0_oracle() -> tuple[float, float]:
    """``int_0^inf exp(-x - 1/x) / x dx`` by adaptive quadrature, and ``2 K_0(2)``."""
    quad, _ = integrate.quad(lambda x: math.exp(-x - 1.0 / x) / x, 0.0, 1.0,
                             epsabs=0, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(lambda x: math.exp(-x - 1.0 / x) / x, 1.0, math.inf,
                             epsabs=0, epsrel=1e-13, limit=200)
    return quad + tail, 2.0 * float(special.kv(0, 2.0))


def _check_spectra(s: _Suite):
    for dim in (1, 2):
        _eigen_checks(s, _standard_kernels(dim), align_grid(s.config.grid(dim)))
    if s.config.kernel is not None:
        T = s.config.kernel
        _eigen_checks(s, {"user": T}, s.config.grid(T.dim), label="user")

    grid = s.config.grid(1)
    ident = [eigenvalue_monomial(kernel_dirac([1.0]), (a,), grid) for a in range(4)]
    s.record("spectra.identity_table", max(abs(v - 1.0) for v in ident),
             "delta_1 eigenvalues, alpha <= 3")
    a2 = [eigenvalue_monomial(kernel_dirac([2.0]), (a,), grid) for a in range(6)]
    s.record("spectra.dirac_a2_table", max(abs(v / 2.0 ** (-a - 1) - 1.0) for a, v in enumerate(a2)),
             "delta_2 eigenvalues vs 2^(-alpha-1), alpha <= 5 (relative)")
    quad, bessel = exp_symmetric_m0_oracle()
    m0 = eigenvalue_monomial(kernel_density("exp_symmetric", 1), (0,), grid)
    s.record("spectra.exp_symmetric_m0", max(abs(m0 / quad - 1.0), abs(m0 / bessel - 1.0)),
             f"m_0 = {m0:.12g}; quadrature {quad:.12g}; 2 K_0(2) = {bessel:.12g}")

    worst = 0.0
    for _ in range(5):
        T1, T2 = s.random_density_kernel(1), s.random_density_kernel(1)
        T2 = T2 + kernel_dirac([s.rng.uniform(0.5, 2.0)], s.rng.uniform(-1, 1))
        for a in range(4):
            both = eigenvalue_monomial(T1 + T2, (a,), grid)
            parts = eigenvalue_monomial(T1, (a,), grid) + eigenvalue_monomial(T2, (a,), grid)
            worst = max(worst, abs(both - parts) / (1.0 + abs(both)))
    s.record("spectra.linearity", worst, "m_alpha(T1 + T2) vs m_alpha(T1) + m_alpha(T2)")

    worst = 0.0
    for dim in (1, 2):
        grid = align_grid(s.config.grid(dim))
        for e in quadrants(dim)[1:]:
            T = _reflected(kernel_density("gauss_log", dim, {"mu": 0.1, "s": 0.45}), e)
            op = HadamardOperator(T, grid=grid, method=s.config.method).fit()
            for alpha in itertools.product(range(3), repeat=dim):
                m = eigenvalue_monomial(T, alpha, grid)
                worst = max(worst, abs(m - measure_eigenvalue(op, alpha).mean) / (1.0 + abs(m)))
    s.record("spectra.reflection_covariance", worst,
             "reflected kernels: eigenvalue formula vs pairing oracle, |alpha|_inf <= 2")

    worst = 0.0
    for point in ((2.0,), (2.0, -3.0)):
        dim = len(point)
        for _ in range(5):
            b = s.rng.uniform(0.3, 3.0, dim) * s.rng.choice([1.0, -1.0], dim)
            for alpha in itertools.product(range(4), repeat=dim):
                m_a = eigenvalue_monomial(kernel_dirac(point), alpha)
                m_ba = eigenvalue_monomial(kernel_dirac([x * y for x, y in zip(point, b)]), alpha)
                factor = math.prod(
                    (1.0 if bj > 0 else -1.0) ** aj * abs(bj) ** (-aj - 1)
                    for bj, aj in zip(b, alpha))
                worst = max(worst, abs(m_ba / (factor * m_a) - 1.0))
    s.record("spectra.dilation_equivariance", worst,
             "m_alpha(delta_{ba}) / m_alpha(delta_a) vs sign(b)^alpha |b|^(-alpha-1)")

    worst = 0.0
    for dim in (1, 2):
        grid = s.config.grid(dim)
        symmetric = None
        for e in quadrants(dim):
            t = kernel_density("exp_symmetric", dim, quadrant=e)
            symmetric = t if symmetric is None else symmetric + t
        op = HadamardOperator(symmetric, grid=grid, method=s.config.method).fit()
        phi = _all_quadrants(s.bump(grid))
        phi = PiecewiseFn.from_arrays(grid, {e: (1.0 + 0.5 * i) * phi[e].values
                                             for i, e in enumerate(quadrants(dim))})
        for e in quadrants(dim)[1:]:
            worst = max(worst, commutation_residual(op, Reflection(e), phi))
    s.record("spectra.reflection_commutation", worst,
             "M D_e = D_e M for the quadrant-symmetric exp_symmetric kernel")

    coarse = s.config.grid(1)
    lo, hi = coarse.window()[0]
    fine = grid_from_window(1, lo, hi, 2 * coarse.n[0] - 1)
    T = kernel_density("gauss_log", 1, {"mu": 0.2, "s": 0.5}, beta=(1,))
    res = []
    for grid in (coarse, fine):
        op = HadamardOperator(T, grid=grid, method=s.config.method).fit()
        res.append(commutation_residual(op, EulerProbe(0), s.bump(grid, center=0.1, width=0.4)))
    ratio = res[0] / res[1]
    s.record("spectra.euler_probe_order", abs(ratio / 16.0 - 1.0),
             f"theta-probe residuals {res[0]:.3g} -> {res[1]:.3g}, ratio {ratio:.3f} (fd4)")


def _reflected(T: KernelDistribution, e) -> KernelDistribution:
    """The kernel moved from quadrant ``Q_q`` to ``Q_{e q}``."""
    dens = tuple(DensityTerm(t.beta, tuple(a * b for a, b in zip(e, t.quadrant)), t.family,
                             t.params, t.weight, t.func) for t in T.density_terms)
    dirac = tuple(DiracTerm(t.beta, tuple(a * b for a, b in zip(e, t.point)), t.weight)
                  for t in T.dirac_terms)
    return KernelDistribution(T.dim, dens, dirac, T.k_star, T.grid)


# -- deltasym ---------------------------------------------------------------------------

def _check_deltasym(s: _Suite):
    bad = 0
    polys = [_random_poly(s.rng, 1, 4) for _ in range(50)]
    polys.append(EulerPolynomial.theta((1,)))
    for P in polys:
        for k in range(11):
            u = DeltaExpansion.delta(k, Fraction(int(s.rng.integers(1, 9)), 3))
            bad += euler_apply_delta(P, u) != euler_eigen_delta(P, u)
    s.record("deltasym.closed_form", bad, "P(theta) delta^(k) != P(-k-1) delta^(k), 51 P, k<=10")

    bad = 0
    for P in polys:
        dual = euler_dual(P)
        for k in range(11):
            # P*(theta) x^k = P*(k) x^k
            bad += dual((k,)) != P((-k - 1,))
    s.record("deltasym.duality", bad, "eigenvalue on delta^(k) vs dual eigenvalue on x^k")

    bad = 0
    for _ in range(50):
        u = DeltaExpansion({int(k): Fraction(int(s.rng.integers(-9, 10)), int(s.rng.integers(1, 5)))
                            for k in s.rng.integers(0, 12, 4)})
        bad += delta_diff(delta_mul_x(u)) - delta_mul_x(delta_diff(u)) != u
    s.record("deltasym.commutator", bad, "expansions with [d, x] u != u")

    bad = 0
    for k in range(11):
        for beta in range(1, 6):
            r = annihilation_check(DeltaExpansion.delta(k, 3), beta)
            bad += r.b != r.closed_form
    s.record("deltasym.annihilation", bad, "product formula vs rule composition, k<=10, beta<=5")


def run_verify(config: VerifyConfig | None = None) -> VerifyReport:
    """Run every invariant check and collect the results."""
    config = config or VerifyConfig()
    suite = _Suite(config)
    for part in (_check_loggrid, _check_euler, _check_kernel, _check_convolve, _check_spectra,
                 _check_deltasym):
        part(suite)
    return VerifyReport(suite.checks, config.to_dict())
