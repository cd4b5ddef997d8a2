"""Multiplicative convolution via the log-coordinate reduction.

With ``x = e * exp(u)`` and ``y = e' * exp(s)`` the operator action

    f(y) = int t(x) psi(x y) dx,        psi = (theta*)^beta phi,

becomes the cross-correlation ``int t(e exp u) exp(sum u) psi(ee' exp(u + s)) du``
over the log axes.  The kernel is sampled at node offsets ``u = i * dt`` with
``|i| < n`` so that ``u + s`` always lands on a grid node; values of ``psi``
outside the window count as zero.  The correlation is evaluated as a
convolution with the axis-reversed kernel, either by direct summation or by
a zero-padded FFT.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sp_fft
from scipy import ndimage

from .euler import EulerPolynomial, euler_apply_array, euler_dual, euler_shift
from .kernel import KernelDistribution
from .loggrid import (LogGrid, PiecewiseFn, as_piecewise, log_jacobian, quadrants,
                      trapezoid_weights)

__all__ = [
    "ConvPlan",
    "PreparedKernel",
    "additive_convolve",
    "hadamard_apply",
    "make_plan",
    "pair",
    "prepare_kernel",
    "shift_nodes",
    "star_pair",
]

EDGE_DECAY = 1e-12
ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class ConvPlan:
    """Discretization choices for one grid.

    ``padding`` is the per-axis zero padding of the FFT path; the FFT length
    is ``n + padding``, and ``padding >= n - 1`` rules out wrap-around.
    ``deriv`` selects how ``(theta*)^beta phi`` is differentiated.

    ``bias`` is an exponential tilt ``q``: the engine computes
    ``exp(q.s) f(s)`` from the tilted kernel ``exp(-q.u) K(u)`` and the tilted
    input ``exp(q.s) psi(s)``, then divides the tilt out.  The result is the
    same operator; the tilt only moves where rounding noise lands, which
    matters when the output is later weighted by ``|y|^q``.
    """

    grid: LogGrid
    method: str = "fft"
    padding: tuple[int, ...] | None = None
    deriv: str = "fd4"
    bias: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.method not in ("direct", "fft"):
            raise ValueError(f"method must be 'direct' or 'fft', got {self.method!r}")
        if self.deriv not in ("fd4", "spectral"):
            raise ValueError(f"deriv must be 'fd4' or 'spectral', got {self.deriv!r}")
        pad = self.padding
        if pad is None:
            pad = tuple(sp_fft.next_fast_len(2 * n - 1, real=True) - n for n in self.grid.n)
        elif np.ndim(pad) == 0:
            pad = (int(pad),) * self.grid.dim
        pad = tuple(int(p) for p in pad)
        if len(pad) != self.grid.dim:
            raise ValueError(f"padding needs {self.grid.dim} entries")
        if self.method == "fft":
            for n, p in zip(self.grid.n, pad):
                if p < n - 1:
                    raise ValueError(f"fft padding {p} < n - 1 = {n - 1} would alias")
        object.__setattr__(self, "padding", pad)
        bias = (0.0,) * self.grid.dim if self.bias is None else self.bias
        if np.ndim(bias) == 0:
            bias = (float(bias),) * self.grid.dim
        bias = tuple(float(q) for q in bias)
        if len(bias) != self.grid.dim or not all(math.isfinite(q) for q in bias):
            raise ValueError(f"bias needs {self.grid.dim} finite entries")
        object.__setattr__(self, "bias", bias)

    @property
    def tilted(self) -> bool:
        return any(self.bias)

    @property
    def fft_shape(self) -> tuple[int, ...]:
        return tuple(n + p for n, p in zip(self.grid.n, self.padding))

    def quadrant_table(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], tuple[int, ...]]:
        """``(e, e') -> e e'``: kernel quadrant times output quadrant gives the input quadrant."""
        qs = quadrants(self.grid.dim)
        return {(e, f): tuple(a * b for a, b in zip(e, f)) for e in qs for f in qs}


def make_plan(grid: LogGrid, method: str = "fft", pad=None, deriv: str = "fd4",
              bias=None) -> ConvPlan:
    return ConvPlan(grid, method, pad, deriv, bias)


# -- engines ------------------------------------------------------------------------

def _toeplitz_last(row: np.ndarray, n_in: int) -> np.ndarray:
    """Matrix ``M`` with ``(a @ M)[p] = sum_q a[q] row[p - q]`` (full length)."""
    nb = row.shape[0]
    q = np.arange(n_in)[:, None]
    p = np.arange(n_in + nb - 1)[None, :]
    idx = p - q
    valid = (idx >= 0) & (idx < nb)
    return np.where(valid, row[np.clip(idx, 0, nb - 1)], 0.0)


def _conv_full_direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full linear convolution by explicit summation, O(size(a) * size(b)).

    In 1-d the sum runs over ``b`` in a fixed order, one vector update per
    entry, so shifting ``a`` shifts the result bit for bit.  In higher
    dimensions the last axis is summed as a Toeplitz matrix product.
    """
    out_shape = tuple(na + nb - 1 for na, nb in zip(a.shape, b.shape))
    out = np.zeros(out_shape)
    if a.ndim == 1:
        n = a.shape[0]
        for k in range(b.shape[0]):
            out[k:k + n] += b[k] * a
        return out
    lead = [range(nb) for nb in b.shape[:-1]]
    for k in itertools.product(*lead):
        row = b[k]
        if not row.any():
            continue
        idx = tuple(slice(kj, kj + na) for kj, na in zip(k, a.shape[:-1]))
        out[idx] += a @ _toeplitz_last(row, a.shape[-1])
    return out


def _conv_full_fft(a: np.ndarray, b_hat: np.ndarray, fft_shape, out_shape) -> np.ndarray:
    a_hat = sp_fft.rfftn(a, s=fft_shape)
    full = sp_fft.irfftn(a_hat * b_hat, s=fft_shape)
    return full[tuple(slice(0, m) for m in out_shape)]


def additive_convolve(f: np.ndarray, g: np.ndarray, plan: ConvPlan) -> np.ndarray:
    """Linear convolution of two log-side tensors, scaled by ``prod(dt)``.

    Output index ``p`` along an axis sits at log coordinate
    ``t0_f + t0_g + p * dt``; the result has ``2n - 1`` nodes per axis.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    if f.ndim != plan.grid.dim:
        raise ValueError("tensor dimension does not match the plan grid")
    scale = plan.grid.cell_volume()
    out_shape = tuple(2 * n - 1 for n in f.shape)
    if plan.method == "direct":
        return scale * _conv_full_direct(f, g)
    fft_shape = tuple(n + p for n, p in zip(f.shape, plan.padding))
    if any(s < m for s, m in zip(fft_shape, out_shape)):
        raise ValueError("fft padding too small for a linear convolution")
    return scale * _conv_full_fft(f, sp_fft.rfftn(g, s=fft_shape), fft_shape, out_shape)


def shift_nodes(values: np.ndarray, shift: Sequence[int]) -> np.ndarray:
    """``out[i] = values[i - shift]`` with zero fill (moves content to higher indices)."""
    out = np.zeros_like(values)
    src, dst = [], []
    for h, n in zip(shift, values.shape):
        h = int(h)
        if abs(h) >= n:
            return out
        src.append(slice(max(0, -h), n - max(0, h)))
        dst.append(slice(max(0, h), n - max(0, -h)))
    out[tuple(dst)] = values[tuple(src)]
    return out


def _resample_shift(values: np.ndarray, offset: Sequence[float]) -> np.ndarray:
    """``out[i] = values(i + offset)``; exact node shift when aligned, cubic spline otherwise."""
    rounded = [round(r) for r in offset]
    if all(abs(r - k) < ALIGN_TOL for r, k in zip(offset, rounded)):
        return shift_nodes(values, [-k for k in rounded])
    return ndimage.shift(values, [-r for r in offset], order=3, mode="grid-constant", cval=0.0)


# -- Hadamard operator action ---------------------------------------------------------

class PreparedKernel:
    """Kernel densities sampled on the node offsets of a plan, Jacobian folded in."""

    def __init__(self, T: KernelDistribution, plan: ConvPlan):
        grid = plan.grid
        if T.dim != grid.dim:
            raise ValueError(f"kernel has dimension {T.dim}, grid has {grid.dim}")
        self.kernel = T
        self.plan = plan
        offsets = np.meshgrid(*[np.arange(-(n - 1), n) * h for n, h in zip(grid.n, grid.dt)],
                              indexing="ij")
        jac = grid.cell_volume() * np.exp(sum((1.0 - q) * u for q, u in zip(plan.bias, offsets)))
        self.samples = []
        self.spectra = []
        for term in T.density_terms:
            with np.errstate(over="ignore", under="ignore"):
                k = term.on_log(offsets) * jac
            k = np.where(np.isfinite(k), k, 0.0)
            # correlation = convolution with the reversed kernel
            rev = k[(slice(None, None, -1),) * grid.dim].copy()
            self.samples.append(rev)
            self.spectra.append(sp_fft.rfftn(rev, s=plan.fft_shape) if plan.method == "fft"
                                else None)

    def correlate(self, i: int, psi: np.ndarray) -> np.ndarray:
        """``out[j] = sum_m K_i[m] psi[j + m]`` over all offsets ``m``."""
        n = psi.shape
        full_shape = tuple(3 * nj - 2 for nj in n)
        if self.plan.method == "direct":
            full = _conv_full_direct(psi, self.samples[i])
        else:
            full = _conv_full_fft(psi, self.spectra[i], self.plan.fft_shape, full_shape)
        return full[tuple(slice(nj - 1, 2 * nj - 1) for nj in n)]


def prepare_kernel(T: KernelDistribution, plan: ConvPlan) -> PreparedKernel:
    return PreparedKernel(T, plan)


def _dual_word(beta) -> EulerPolynomial:
    return euler_dual(EulerPolynomial.theta(beta))


def _edge_warnings(phi: PiecewiseFn) -> list[str]:
    top = phi.max_abs()
    if top == 0.0:
        return []
    out = []
    for e, part in phi.parts.items():
        v = np.abs(part.values)
        for j in range(v.ndim):
            edge = max(np.take(v, 0, axis=j).max(), np.take(v, -1, axis=j).max())
            if edge > EDGE_DECAY * top:
                out.append(f"input does not decay at the window edge (quadrant {e}, axis {j}): "
                           f"{edge / top:.3g} of max")
                break
    return out


def hadamard_apply(T: KernelDistribution, phi, plan: ConvPlan,
                   prepared: PreparedKernel | None = None) -> PiecewiseFn:
    """``f(y) = T_x phi(x y)`` on every quadrant of the plan grid.

    Output quadrant ``e'`` receives, from a term on quadrant ``e``, the
    correlation against ``phi`` restricted to quadrant ``e e'``.  Dirac terms
    ``c theta^beta delta_a`` add ``c ((theta*)^beta phi)(a y)``, a log shift by
    ``log|a|`` (cubic resampling when off-node).
    """
    phi = as_piecewise(phi)
    grid = plan.grid
    if phi.grid != grid:
        raise ValueError("input function is not sampled on the plan grid")
    if T.dim != grid.dim:
        raise ValueError(f"kernel has dimension {T.dim}, grid has {grid.dim}")
    if prepared is None:
        prepared = PreparedKernel(T, plan)
    elif prepared.kernel is not T or prepared.plan != plan:
        raise ValueError("prepared kernel does not match the kernel and plan")

    # everything below works on tilted samples exp(q.s) * (...)
    if plan.tilted:
        tilt = np.exp(sum(q * s for q, s in zip(plan.bias, grid.mesh())))
        inputs = {e: tilt * part.values for e, part in phi.parts.items()}
    else:
        inputs = {e: part.values for e, part in phi.parts.items()}
    psi = {}
    for beta in T.betas():
        # (d - q)-shifted word on the tilted input = tilt * word(d) on the input
        word = euler_shift(_dual_word(beta), plan.bias)
        psi[beta] = {e: euler_apply_array(word, v, grid.dt, plan.deriv)
                     if any(beta) or plan.tilted else v for e, v in inputs.items()}

    out = {e: np.zeros(grid.shape) for e in quadrants(grid.dim)}
    for i, term in enumerate(T.density_terms):
        for e_out in out:
            src = psi[term.beta][tuple(a * b for a, b in zip(term.quadrant, e_out))]
            if src.any():
                out[e_out] += prepared.correlate(i, src)
    for term in T.dirac_terms:
        logs = [math.log(abs(a)) for a in term.point]
        offset = [la / h for la, h in zip(logs, grid.dt)]
        weight = term.weight * math.exp(-sum(q * la for q, la in zip(plan.bias, logs)))
        for e_out in out:
            src = psi[term.beta][tuple(a * b for a, b in zip(term.quadrant, e_out))]
            if src.any():
                out[e_out] += weight * _resample_shift(src, offset)
    if plan.tilted:
        out = {e: v / tilt for e, v in out.items()}
    return PiecewiseFn.from_arrays(grid, out, _edge_warnings(phi))


def pair(s: PiecewiseFn, f: PiecewiseFn) -> float:
    """``int s(x) f(x) dx`` over all quadrants (log trapezoid with Jacobian)."""
    if s.grid != f.grid:
        raise ValueError("grid mismatch")
    w = log_jacobian(s.grid) * trapezoid_weights(s.grid)
    return float(sum(np.sum(s[e].values * f[e].values * w) for e in quadrants(s.grid.dim)))


def star_pair(S, T: KernelDistribution, phi, plan: ConvPlan,
              prepared: PreparedKernel | None = None) -> float:
    """``<S * T, phi> = S_x(T_y phi(x y))`` for a sampled density ``S``."""
    return pair(as_piecewise(S), hadamard_apply(T, phi, plan, prepared))
