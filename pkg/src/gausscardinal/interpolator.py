"""The cardinal Gaussian interpolation operator on sampled data.

``I_h f(x) = sum_j f(h j) chi_h(x - h j)``.  Two evaluation routes:

* :func:`interpolate_point` composes the data with the Lagrange coefficients
  and sums Gaussians directly.  Usable while the coefficients are well
  conditioned (``h`` down to about 1/3).
* :func:`interpolate_grid_spectral` works on the Fourier side, where the
  interpolant's transform is ``h^n m^{[n]}(xi) F(h xi)`` with ``F`` the
  lattice transform of the data.  Stable for every ``h``.

Norm helpers (:func:`lp_norm`, :func:`sobolev_seminorm`) operate on samples
over uniform grids.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.signal

from . import theta_multiplier as tm
from .errors import (
    AccuracyWarning,
    ConditioningError,
    DomainError,
    ExtrapolationError,
    ParameterError,
)
from .lagrange_kernel import EPS, LagrangeTable

SHELL_TOL = 1e-12


@dataclass(frozen=True)
class SampledField:
    """Samples ``f(h j)`` for ``|j|_inf <= N_data``; zero outside.

    ``values`` has shape ``(2 N_data + 1,)*dim`` with ``j = 0`` at the centre.
    With ``decay_flag`` set the outermost shell must be below ``1e-12`` in
    magnitude, which justifies treating the data as compactly supported.
    """

    h: float
    values: np.ndarray
    decay_flag: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ParameterError(f"grid spacing must be positive, got h={self.h}")
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 1 or len(set(v.shape)) != 1 or v.shape[0] % 2 != 1:
            raise DomainError("values must be a cube of odd side length centred at j=0")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample values must be finite")
        if self.decay_flag and v.shape[0] > 1:
            mask = np.ones(v.shape, dtype=bool)
            mask[(slice(1, -1),) * v.ndim] = False
            edge = float(np.abs(v[mask]).max())
            if edge >= SHELL_TOL:
                raise DomainError(
                    f"boundary shell value {edge:.2e} is not negligible; enlarge the data box"
                )
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def radius(self) -> int:
        return self.values.shape[0] // 2

    @property
    def nodes(self) -> np.ndarray:
        """1-D lattice coordinates ``h j`` along each axis."""
        return self.h * np.arange(-self.radius, self.radius + 1)

    @classmethod
    def from_function(cls, f, h: float, box_radius: float, dim: int = 1,
                      decay_flag: bool = True) -> "SampledField":
        """Sample ``f`` on ``h Z^dim`` within ``|x|_inf <= box_radius``.

        ``f`` takes an array with a trailing axis of length ``dim`` (or a
        plain array when ``dim == 1``).
        """
        N = int(math.floor(box_radius / h + 1e-9))
        x = h * np.arange(-N, N + 1)
        if dim == 1:
            vals = f(x)
        else:
            mesh = np.stack(np.meshgrid(*([x] * dim), indexing="ij"), axis=-1)
            vals = f(mesh)
        return cls(h, np.asarray(vals, dtype=float), decay_flag)

    @classmethod
    def delta(cls, h: float, radius: int, dim: int = 1) -> "SampledField":
        v = np.zeros((2 * radius + 1,) * dim)
        v[(radius,) * dim] = 1.0
        return cls(h, v)


def _points(x, dim: int):
    xa = np.asarray(x, dtype=float)
    if dim == 1 and (xa.ndim == 0 or xa.shape[-1] != 1):
        xa = xa[..., None]
    if xa.shape[-1] != dim:
        raise ParameterError(f"points must have a trailing axis of length {dim}")
    return xa


def interpolate_point(field: SampledField, table: LagrangeTable, x):
    """Evaluate ``I_h f`` at arbitrary points through Gaussian sums.

    The data are convolved with the Lagrange coefficients once, giving
    ``I_h f(x) = sum_k c_k exp(-|x - h k|^2)``.

    Raises
    ------
    ExtrapolationError
        If a point lies outside the data box ``|x|_inf <= h N_data``.
    ConditioningError
        If cancellation in the Gaussian sum exceeds 1e-8 absolute.
    """
    if table.coeffs is None:
        raise ParameterError("table carries no coefficients")
    if not math.isclose(table.grid.h, field.h) or table.grid.dim != field.dim:
        raise ParameterError("table and field disagree on h or dim")
    n, h = field.dim, field.h
    xa = _points(x, n)
    if np.any(np.abs(xa) > h * field.radius + 1e-12):
        raise ExtrapolationError("evaluation point outside the data box")
    c = scipy.signal.convolve(field.values, table.coeffs, mode="full", method="direct")
    half = c.shape[0] // 2
    # Gaussians beyond 6.2 (exp(-38) < 1e-16) are dropped per axis.
    reach = int(math.ceil(6.2 / h))
    pts = xa.reshape(-1, n)
    out = np.empty(len(pts))
    worst = 0.0
    for i, p in enumerate(pts):
        centre = np.rint(p / h).astype(int)
        lo = np.maximum(centre - reach, -half)
        hi = np.minimum(centre + reach, half)
        sl = tuple(slice(l + half, u + half + 1) for l, u in zip(lo, hi))
        block = c[sl]
        g = np.ones(block.shape)
        for a in range(n):
            t = h * np.arange(lo[a], hi[a] + 1) - p[a]
            shape = [1] * n
            shape[a] = -1
            g = g * np.exp(-(t**2)).reshape(shape)
        terms = block * g
        out[i] = terms.sum()
        worst = max(worst, 4 * EPS * float(np.abs(terms).sum()) * math.sqrt(terms.size))
    if worst > 1e-8:
        raise ConditioningError(
            f"Gaussian sum cancels to {worst:.2g} absolute error at h={h}; use the spectral route"
        )
    res = out.reshape(xa.shape[:-1])
    return float(res) if res.ndim == 0 else res


def default_image_period(h: float, box_radius: float, tail_tol: float = 1e-12) -> float:
    """Period that pushes the periodic images of ``I_h f`` below ``tail_tol``.

    ``chi_h`` decays like ``exp(-h |x|)``, so the images need a gap of
    ``log(1/tail_tol)/h`` beyond the data box.
    """
    return 2 * box_radius + math.log(1.0 / tail_tol) / h


def folded_weights(multiplier, h: float, P: int, M: int, B: int,
                   chunk: int = 1 << 18) -> np.ndarray:
    """``sum_c w(xi_{r + c n})`` for ``r`` in FFT order, ``n = M P``.

    ``xi_q = 2 pi q/(P h)`` runs over ``|q| <= (2B+1) P/2``.  Evaluated in
    chunks to bound memory.
    """
    n = M * P
    qmax = ((2 * B + 1) * P) // 2
    out = np.zeros(n, dtype=complex)
    for start in range(-qmax, qmax + 1, chunk):
        q = np.arange(start, min(start + chunk, qmax + 1))
        w = np.asarray(multiplier(q * (2 * math.pi / (P * h))))
        out += np.bincount(q % n, weights=w.real, minlength=n)
        if np.iscomplexobj(w):
            out += 1j * np.bincount(q % n, weights=w.imag, minlength=n)
    return out


def _axis_pass(data: np.ndarray, axis: int, weights: np.ndarray, M: int, P: int, keep: int):
    """One-dimensional spectral interpolation along ``axis``.

    ``data`` holds lattice samples centred at index ``len//2``; the result
    holds fine-grid samples at spacing ``h/M`` for ``|s| <= keep``.  The
    lattice transform is ``P``-periodic and ``n = M P``, so every frequency
    folded into bin ``r`` meets the same data coefficient ``F[r mod P]``.
    """
    data = np.moveaxis(data, axis, -1)
    batch_shape = data.shape[:-1]
    rows = data.reshape(-1, data.shape[-1])
    N = rows.shape[-1] // 2
    n = M * P
    s = np.arange(-keep, keep + 1) % n
    out = np.empty((rows.shape[0], len(s)))
    step = max(1, (1 << 22) // n)
    for i in range(0, rows.shape[0], step):
        padded = np.zeros((min(step, rows.shape[0] - i), P))
        padded[:, np.arange(-N, N + 1) % P] = rows[i:i + step]
        F = scipy.fft.fft(padded, axis=-1)
        out[i:i + step] = M * scipy.fft.ifft(np.tile(F, M) * weights, axis=-1).real[:, s]
    return np.moveaxis(out.reshape(batch_shape + (len(s),)), -1, axis)


def spectral_apply(field: SampledField, multiplier,
                   fine_factor: int = 8, beta_radius: int = 3,
                   period: float | None = None, out_radius: float | None = None):
    """Apply a tensor Fourier multiplier to lattice data on a fine grid.

    Computes ``sum_j f(h j) psi(x - h j)`` with ``psi^ = h^n w(xi_1)...w(xi_n)``
    at ``x`` in ``(h/M) Z^n``, where ``multiplier`` evaluates ``w``.  The
    spectrum is kept on ``|xi| <= (2B+1) pi/h`` per axis.

    Returns ``(nodes, values)``.
    """
    h = field.h
    M, B = int(fine_factor), int(beta_radius)
    if M < 2:
        raise ParameterError("fine_factor must be >= 2")
    if B < 1:
        raise ParameterError("beta_radius must be >= 1")
    box = h * field.radius
    out_radius = box if out_radius is None else out_radius
    if period is None:
        period = default_image_period(h, max(box, out_radius))
    P = scipy.fft.next_fast_len(max(int(math.ceil(period / h)), 2 * field.radius + 1))
    keep = int(math.floor(out_radius * M / h + 1e-9))
    if 2 * keep + 1 > M * P:
        raise ParameterError("output radius exceeds the image period")
    weights = folded_weights(multiplier, h, P, M, B)
    data = field.values
    for axis in range(field.dim):
        data = _axis_pass(data, axis, weights, M, P, keep)
    nodes = (h / M) * np.arange(-keep, keep + 1)
    return nodes, data


def interpolate_grid_spectral(field: SampledField, ctx: tm.MultiplierContext,
                              fine_factor: int = 8, beta_radius: int = 3,
                              period: float | None = None, out_radius: float | None = None,
                              tol: float = 1e-15):
    """``I_h f`` on the fine grid ``(h/M) Z^n`` by the Fourier route.

    The lattice transform of the data is periodic with period ``2 pi/h``; its
    shifts ``|beta| <= 2 pi B`` are multiplied by ``m^{[n]}`` and transformed
    back.  Frequencies outside the retained band are dropped, which is
    reported through :class:`AccuracyWarning` when ``m`` there exceeds
    ``tol``.

    Parameters
    ----------
    field : SampledField
        Compactly supported data (``decay_flag`` set).
    ctx : MultiplierContext
        Must match ``field.h``.
    fine_factor : int
        Output spacing is ``h/M``.
    beta_radius : int
        Number ``B`` of spectral shifts kept on each side.
    period : float, optional
        Period of the discrete transform; images of the interpolant at
        multiples of it are below 1e-12 by default.
    out_radius : float, optional
        Half-width of the output box, default the data box.

    Returns
    -------
    nodes : ndarray
        1-D fine-grid coordinates along each axis.
    values : ndarray
        ``I_h f`` on the tensor grid of ``nodes``.
    """
    if not field.decay_flag:
        raise DomainError("spectral route requires compactly supported data")
    if not math.isclose(ctx.h, field.h):
        raise ParameterError("multiplier context and field disagree on h")
    bound = tm.m(ctx, (2 * beta_radius + 1) * math.pi / ctx.h)
    if bound > tol:
        warnings.warn(
            f"beta_radius={beta_radius} drops spectrum where m is up to {bound:.1e}",
            AccuracyWarning,
            stacklevel=2,
        )
    return spectral_apply(field, lambda xi: tm.m(ctx, xi), fine_factor,
                          beta_radius, period, out_radius)


def lp_norm(values, p, spacing: float) -> float:
    """Riemann-sum ``L_p`` norm of samples on a uniform grid.

    ``(spacing^n sum |v|^p)^(1/p)``, or ``max |v|`` for ``p = inf``; ``n`` is
    the number of array axes.
    """
    v = np.abs(np.asarray(values, dtype=float))
    if p in ("inf", math.inf):
        return float(v.max()) if v.size else 0.0
    p = float(p)
    if p < 1:
        raise ParameterError("p must be >= 1")
    vmax = v.max() if v.size else 0.0
    if vmax == 0.0:
        return 0.0
    s = np.sum((v / vmax) ** p) * spacing**v.ndim
    return float(vmax * s ** (1.0 / p))


def _multi_indices(k: int, n: int):
    for alpha in itertools.product(range(k + 1), repeat=n):
        if sum(alpha) == k:
            yield alpha


def spectral_derivative(values, alpha, spacing: float) -> np.ndarray:
    """``D^alpha`` of periodic samples by FFT differentiation."""
    v = np.asarray(values, dtype=float)
    spec = scipy.fft.fftn(v)
    for axis, order in enumerate(alpha):
        if order == 0:
            continue
        npts = v.shape[axis]
        w = 2 * math.pi * scipy.fft.fftfreq(npts, d=spacing)
        if npts % 2 == 0 and order % 2 == 1:
            w[npts // 2] = 0.0
        shape = [1] * v.ndim
        shape[axis] = -1
        spec = spec * ((1j * w) ** order).reshape(shape)
    return scipy.fft.ifftn(spec).real


def sobolev_seminorm(values, k: int, p, spacing: float, edge_tol: float = 1e-8) -> float:
    """``max_{|alpha| = k} ||D^alpha f||_p`` with spectral derivatives.

    The samples are treated as one period; values at the box edges above
    ``edge_tol`` relative to the maximum trigger :class:`AccuracyWarning`.
    """
    v = np.asarray(values, dtype=float)
    if k < 0:
        raise ParameterError("k must be >= 0")
    vmax = float(np.abs(v).max()) if v.size else 0.0
    if vmax == 0.0:
        return 0.0
    mask = np.ones(v.shape, dtype=bool)
    mask[(slice(1, -1),) * v.ndim] = False
    edge = float(np.abs(v[mask]).max())
    if edge > edge_tol * vmax:
        warnings.warn(
            f"edge values {edge:.1e} are not negligible; spectral derivatives see a jump",
            AccuracyWarning,
            stacklevel=2,
        )
    if k == 0:
        return lp_norm(v, p, spacing)
    return max(lp_norm(spectral_derivative(v, a, spacing), p, spacing)
               for a in _multi_indices(k, v.ndim))
