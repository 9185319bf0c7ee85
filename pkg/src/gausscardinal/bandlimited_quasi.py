"""Band-limited quasi-interpolation with a smooth spectral cutoff.

The cutoff ``phi_hat`` equals 1 on ``|xi| <= pi - eps`` and falls to 0 on
``|xi| >= pi + eps`` through the normalized primitive ``S`` of the bump
``exp(-1/(1 - t^2))``:

    phi_hat(xi) = 1 - S((|xi| - pi) / eps).

Because the bump is even, ``S(t) + S(-t) = 1`` and the shifts
``phi_hat(xi - 2 pi j)`` already sum to one; ``rho_hat`` is still formed as
the explicit quotient.  Its inverse transform factors as

    phi(t) = sinc(t) * Psi(eps t),   Psi(s) = int bump(u) cos(s u) du / int bump,

so ``phi(j) = delta_j`` holds exactly and ``phi`` inherits the
sub-exponential (Gevrey) decay of ``Psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ParameterError
from .interpolator import SampledField, spectral_apply

DECAY_CAP = 1e-12
_TABLE_STEP = 1.0 / 8.0
_INTERP_POINTS = 10


def bump(u):
    """``exp(-1/(1 - u^2))`` on ``(-1, 1)``, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(80)
# twice the half-interval rule used below, so that S(0) = 1/2 exactly
_BUMP_MASS = float(np.sum(_GL_W * bump(-1.0 + 0.5 * (_GL_X + 1.0))))


def smooth_step(t):
    """``S(t) = int_{-1}^t bump / int_{-1}^1 bump``, with ``S(t) + S(-t) = 1``.

    Evaluated by Gauss-Legendre quadrature on ``[-1, -|t|]`` so that the
    symmetry holds up to the rounding of ``1 - S``.
    """
    t = np.asarray(t, dtype=float)
    a = np.clip(np.abs(t), 0.0, 1.0)
    # int_{-1}^{-a} bump, mapped onto the reference interval
    half = 0.5 * (1.0 - a)
    nodes = -1.0 + half[..., None] * (_GL_X + 1.0)
    low = half * np.sum(_GL_W * bump(nodes), axis=-1) / _BUMP_MASS
    out = np.where(t <= 0, low, 1.0 - low)
    return out if out.ndim else float(out)


def bump_transform(s, n: int | None = None):
    """Normalized cosine transform ``Psi(s)`` of the bump, ``Psi(0) = 1``.

    The trapezoid rule is spectrally accurate here because the bump is flat
    to all orders at ``u = +-1``.
    """
    s = np.asarray(s, dtype=float)
    smax = float(np.abs(s).max()) if s.size else 0.0
    if n is None:
        n = max(512, 1 << math.ceil(math.log2(2 * smax + 1)))
    u = np.linspace(-1.0, 1.0, n + 1)[1:-1]
    w = bump(u)
    w = w / w.sum()
    flat = s.ravel()
    out = np.empty(flat.shape)
    step = max(1, 2_000_000 // len(u))
    for i in range(0, len(flat), step):
        out[i:i + step] = np.cos(np.multiply.outer(flat[i:i + step], u)) @ w
    out = out.reshape(s.shape)
    return out if out.ndim else float(out)


def phi_hat(eps: float, xi):
    """Unnormalized cutoff, supported in ``|xi| <= pi + eps``."""
    xi = np.asarray(xi, dtype=float)
    return 1.0 - np.asarray(smooth_step((np.abs(xi) - math.pi) / eps))


@dataclass(frozen=True)
class CutoffSpec:
    """Tables for the cutoff with transition half-width ``eps``.

    Attributes
    ----------
    eps : float
    freq_grid, rho_hat_values : ndarray
        ``rho_hat`` on a uniform grid over ``[-b, b]``, ``b = pi + 2 eps``.
    phi_radius : float
        ``R_phi``: ``|phi(t)| <= decay_cap`` for ``|t| >= R_phi``.
    table_nodes, psi_table : ndarray
        ``Psi(eps t)`` for ``t`` in ``[0, R_phi + pad]`` at spacing 1/8, used
        for fast evaluation of ``phi``.
    decay_cap : float
    """

    eps: float
    freq_grid: np.ndarray
    rho_hat_values: np.ndarray
    phi_radius: float
    table_nodes: np.ndarray
    psi_table: np.ndarray
    decay_cap: float = DECAY_CAP

    @property
    def b_effective(self) -> float:
        """Declared band edge ``pi + 2 eps`` (the support ends at ``pi + eps``)."""
        return math.pi + 2 * self.eps

    @property
    def phi_table(self) -> np.ndarray:
        """``phi`` at :attr:`table_nodes`."""
        return np.sinc(self.table_nodes) * self.psi_table


def rho_hat(eps: float, xi, shifts: int = 2):
    """``phi_hat(xi) / sum_{|j| <= shifts} phi_hat(xi - 2 pi j)``.

    Outside ``|xi| <= pi + eps`` the numerator vanishes and so does the
    quotient (also where every retained shift misses the support).
    """
    xi = np.asarray(xi, dtype=float)
    j = np.arange(-shifts, shifts + 1)
    den = phi_hat(eps, xi[..., None] - 2 * math.pi * j).sum(axis=-1)
    num = phi_hat(eps, xi)
    out = np.divide(num, den, out=np.zeros(np.shape(num)), where=den > 0)
    return out if out.ndim else float(out)


def _phi_radius(eps: float, cap: float) -> float:
    """Smallest ``R`` on a 1/8 grid with ``|Psi(eps t)|/(pi t) < cap`` beyond it."""
    R = 64.0
    while True:
        t = np.arange(1.0, 2 * R, _TABLE_STEP)
        env = np.abs(np.asarray(bump_transform(eps * t))) / (math.pi * t)
        tail = np.maximum.accumulate(env[::-1])[::-1]
        ok = np.nonzero(tail < cap)[0]
        if ok.size and t[ok[0]] <= R:
            return float(t[ok[0]])
        R *= 2
        if R > 1e5:
            raise ParameterError(f"cutoff decay too slow for eps={eps}")


def build_cutoff(eps: float = 1.0, n_freq: int = 4097, decay_cap: float = DECAY_CAP) -> CutoffSpec:
    """Construct the cutoff tables for ``0 < eps < pi/2``."""
    if not (0 < eps < math.pi / 2):
        raise ParameterError(f"eps must lie in (0, pi/2), got {eps}")
    b = math.pi + 2 * eps
    xi = np.linspace(-b, b, n_freq)
    R = _phi_radius(eps, decay_cap)
    nodes = np.arange(0.0, R + _INTERP_POINTS * _TABLE_STEP + _TABLE_STEP, _TABLE_STEP)
    return CutoffSpec(eps, xi, np.asarray(rho_hat(eps, xi)), R, nodes,
                      np.asarray(bump_transform(eps * nodes)), decay_cap)


def _equispaced_weights(n: int) -> np.ndarray:
    k = np.arange(n)
    return (-1.0) ** k * np.array([math.comb(n - 1, int(i)) for i in k])


_BARY = _equispaced_weights(_INTERP_POINTS)


def _interp_psi(spec: CutoffSpec, a: np.ndarray) -> np.ndarray:
    """Local equispaced barycentric interpolation of ``psi_table`` at ``a >= 0``."""
    step = _TABLE_STEP
    start = np.clip(np.floor(a / step).astype(int) - _INTERP_POINTS // 2 + 1,
                    0, len(spec.table_nodes) - _INTERP_POINTS)
    idx = start[..., None] + np.arange(_INTERP_POINTS)
    diff = a[..., None] - spec.table_nodes[idx]
    exact = diff == 0
    diff = np.where(exact, 1.0, diff)
    wts = _BARY / diff
    val = (wts * spec.psi_table[idx]).sum(-1) / wts.sum(-1)
    hit = exact.any(-1)
    if np.any(hit):
        rows = idx[hit]
        val[hit] = spec.psi_table[rows[np.arange(len(rows)), np.argmax(exact[hit], axis=-1)]]
    return val


def phi_eval(spec: CutoffSpec, t):
    """``phi(t) = sinc(t) Psi(eps t)`` from the cached table.

    Returns 0 for ``|t| > R_phi``, where ``|phi| <= decay_cap``.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    inside = a <= spec.phi_radius
    out = np.zeros(t.shape)
    if np.any(inside):
        out[inside] = np.sinc(t[inside]) * _interp_psi(spec, a[inside])
    return out if out.ndim else float(out)


def phi_direct(spec: CutoffSpec, t):
    """``phi(t)`` without the table (trapezoid transform of the bump)."""
    t = np.asarray(t, dtype=float)
    out = np.sinc(t) * np.asarray(bump_transform(spec.eps * t))
    return out if out.ndim else float(out)


class QuasiInterpolant:
    """``g(x) = sum_j f(h j) phi^{[n]}(x/h - j)`` for compactly supported data."""

    def __init__(self, field: SampledField, spec: CutoffSpec):
        self.field = field
        self.spec = spec

    @property
    def band(self) -> float:
        """Per-axis band limit ``(pi + eps)/h`` of ``g``."""
        return (math.pi + self.spec.eps) / self.field.h

    def grid(self, fine_factor: int = 8, out_radius: float | None = None):
        """``g`` on ``(h/M) Z^n`` through the Fourier route.

        Returns ``(nodes, values)`` like the spectral interpolator.
        """
        h = self.field.h
        eps = self.spec.eps
        box = h * self.field.radius
        out_radius = box if out_radius is None else out_radius
        period = 2 * max(box, out_radius) + h * (self.spec.phi_radius + 1)
        return spectral_apply(self.field, lambda xi: rho_hat(eps, h * xi),
                              fine_factor, 1, period, out_radius)

    def __call__(self, x):
        """Pointwise ``g`` from the ``phi`` table, truncated at ``R_phi``."""
        f = self.field
        n, h = f.dim, f.h
        xa = np.asarray(x, dtype=float)
        if n == 1 and (xa.ndim == 0 or xa.shape[-1] != 1):
            xa = xa[..., None]
        if xa.shape[-1] != n:
            raise ParameterError(f"points must have a trailing axis of length {n}")
        pts = xa.reshape(-1, n)
        j = np.arange(-f.radius, f.radius + 1)
        out = np.empty(len(pts))
        for i, p in enumerate(pts):
            kern = [phi_eval(self.spec, p[a] / h - j) for a in range(n)]
            val = f.values
            for a in range(n - 1, -1, -1):
                val = val @ kern[a]
            out[i] = val
        res = out.reshape(xa.shape[:-1])
        return float(res) if res.ndim == 0 else res


def out_of_band_mass(qi: QuasiInterpolant, fine_factor: int = 4) -> float:
    """Relative spectral energy of ``g`` beyond its band ``(pi + eps)/h``.

    ``g`` is evaluated pointwise (one-dimensional data) on a window that
    holds the data box and the cutoff tails, then transformed with an FFT.
    This is independent of the Fourier route used by :meth:`QuasiInterpolant.grid`.
    """
    f = qi.field
    if f.dim != 1:
        raise ParameterError("out_of_band_mass expects one-dimensional data")
    h, M = f.h, int(fine_factor)
    half = (f.radius + math.ceil(qi.spec.phi_radius) + 2) * M
    x = (h / M) * np.arange(-half, half)
    g = np.asarray(qi(x))
    power = np.abs(scipy.fft.rfft(g)) ** 2
    xi = 2 * math.pi * scipy.fft.rfftfreq(len(g), d=h / M)
    total = power.sum()
    return float(power[xi > qi.band].sum() / total) if total > 0 else 0.0


def quasi_interpolant(field: SampledField, spec: CutoffSpec) -> QuasiInterpolant:
    """Build the quasi-interpolant of compactly supported lattice data."""
    if not field.decay_flag:
        raise ParameterError("quasi-interpolation requires compactly supported data")
    return QuasiInterpolant(field, spec)


def quasi_error_rate(target, spec: CutoffSpec, h_list, p=2, k: int = 3, **kwargs):
    """Fit the order of ``||f - g||_p`` over a sweep of spacings.

    Thin wrapper over :func:`gausscardinal.experiments.runs.run_quasi_rate`.
    """
    from .experiments.runs import run_quasi_rate

    return run_quasi_rate(target, spec, h_list, p, k, **kwargs)
