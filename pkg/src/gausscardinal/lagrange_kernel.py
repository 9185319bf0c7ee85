"""The Gaussian Lagrange function on the lattice ``h Z^n``.

The Lagrange function is ``chi_h(x) = sum_j b_j exp(-|x - h j|^2)`` with
``chi_h(h k) = delta_k``.  Three constructions are provided:

* :func:`coefficients_dense` solves the truncated collocation system
  directly (desk-scale oracle);
* :func:`coefficients_spectral` inverts the lattice symbol
  ``sigma(w) = sum_k exp(-h^2 |k|^2) exp(-i k.w)`` obtained by a discrete
  Fourier transform of the kernel;
* :func:`coefficients_theta` uses the dual (Poisson) form of the same symbol,
  ``1/sigma(w) = (h/sqrt(pi))^n exp(|w|^2/(4h^2)) m_h(w/h)``, which keeps full
  relative accuracy even when ``sigma`` is far below roundoff.

The coefficients grow like ``1/min sigma ~ exp(pi^2/(4h^2))`` and alternate
in sign, so any coefficient-based evaluation of ``chi_h`` loses all accuracy
once ``h`` drops to about 1/4.  :func:`chi_table` therefore samples ``chi_h``
from its Fourier transform ``h^n m_h^{[n]}`` and never touches the
coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.linalg

from . import theta_multiplier as tm
from .errors import AccuracyWarning, ConditioningError, ExtrapolationError, ParameterError

EPS = np.finfo(float).eps
DENSE_CAP = 10_000
COEFF_TAIL_CUT = 1e-14


@dataclass(frozen=True)
class GridSpec:
    """Lattice ``h Z^dim`` with coefficient and evaluation radii.

    Parameters
    ----------
    h : float
        Lattice spacing.
    dim : int
        Dimension of the lattice.
    coeff_radius : int, optional
        Coefficients are kept for ``|j|_inf <= N``.  Defaults to 32 in 1-D
        and 16 per axis otherwise.
    eval_radius : float, optional
        Half-width ``R`` of the box on which ``chi_h`` is tabulated.
        Defaults to ``h * (N//2 + 1)``.
    """

    h: float
    dim: int = 1
    coeff_radius: int | None = None
    eval_radius: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ParameterError(f"grid spacing must be positive, got h={self.h}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        if self.coeff_radius is None:
            object.__setattr__(self, "coeff_radius", 32 if self.dim == 1 else 16)
        if self.coeff_radius < 8:
            raise ParameterError(f"coeff_radius must be >= 8, got {self.coeff_radius}")
        if self.eval_radius is None:
            object.__setattr__(self, "eval_radius", self.h * (self.coeff_radius // 2 + 1))
        if self.eval_radius < 4 * self.h:
            raise ParameterError("eval_radius must be at least 4h")

    @property
    def N(self) -> int:
        return self.coeff_radius

    @property
    def R(self) -> float:
        return self.eval_radius


@dataclass(frozen=True)
class LagrangeTable:
    """Samples of ``chi_h`` on ``(h/M) Z^n`` cut to ``[-R, R]^n``.

    ``samples`` has one axis per dimension, indexed like ``nodes``.
    ``coeffs`` has shape ``(2N+1,)*dim`` with ``b_0`` at the centre, or is
    ``None`` if no coefficient route was usable.
    """

    grid: GridSpec
    fine_factor: int
    nodes: np.ndarray
    samples: np.ndarray
    coeffs: np.ndarray | None = None
    coeff_route: str = "spectral"
    period: float = field(default=0.0)

    def lattice_values(self, radius: int) -> np.ndarray:
        """Table values at ``h j`` for ``|j|_inf <= radius``."""
        M = self.fine_factor
        c = len(self.nodes) // 2
        if radius * M > c:
            raise ExtrapolationError("requested lattice radius exceeds the table")
        sl = slice(c - radius * M, c + radius * M + 1, M)
        return self.samples[(sl,) * self.grid.dim]


def _lattice_box(N: int, dim: int) -> np.ndarray:
    r = np.arange(-N, N + 1)
    grids = np.meshgrid(*([r] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def coefficients_dense(grid: GridSpec) -> np.ndarray:
    """Solve ``A b = e_0`` with ``A_ij = exp(-h^2 |i-j|^2)`` on ``[-N, N]^n``.

    The matrix is assembled from all pairwise squared distances of the
    ``(2N+1)^n`` lattice points and factored by Cholesky.

    Returns
    -------
    ndarray of shape ``(2N+1,)*dim``

    Raises
    ------
    ParameterError
        If the system has more than 10^4 unknowns; use the spectral route.
    ConditioningError
        If the matrix is numerically singular (small ``h``).
    """
    N, n = grid.N, grid.dim
    size = (2 * N + 1) ** n
    if size > DENSE_CAP:
        raise ParameterError(
            f"dense system with {size} unknowns exceeds the cap of {DENSE_CAP}; "
            "use coefficients_spectral"
        )
    pts = _lattice_box(N, n).astype(float)
    sq = (pts**2).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * pts @ pts.T, 0.0)
    A = np.exp(-(grid.h**2) * d2)
    e0 = np.zeros(size)
    e0[size // 2] = 1.0
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"collocation matrix is numerically singular at h={grid.h}"
        ) from exc
    b = scipy.linalg.cho_solve(factor, e0, check_finite=False)
    return b.reshape((2 * N + 1,) * n)


def symbol_radius(h: float, rel_tol: float = 1e-17) -> int:
    """Kernel truncation ``K`` with ``exp(-h^2 K^2) < rel_tol``, at least 2."""
    return max(2, math.ceil(math.sqrt(math.log(1.0 / rel_tol)) / h))


def log_symbol_min(h: float) -> float:
    """``log min_w sigma(w)`` (attained at ``w = pi``), from the dual form."""
    return -_log_inv_symbol(h, np.array([math.pi]))[0]


def _log_inv_symbol(h: float, w: np.ndarray) -> np.ndarray:
    """``log(1/sigma(w))`` for the 1-D lattice symbol, via the theta quotient."""
    ctx = tm.MultiplierContext(h)
    return math.log(h / math.sqrt(math.pi)) + w**2 / (4 * h * h) + np.asarray(tm.log_m(ctx, w / h))


def _transform_length(h: float, N: int, min_length: int = 0) -> int:
    # b_j decays like exp(-h^2 |j|) times 1/min(sigma); keep the wrap-around
    # image b_{P-j} of every returned index below double precision.
    amp = max(0.0, -log_symbol_min(h))
    P = max(2 * N + 1, N + math.ceil((math.log(1e17) + amp) / (h * h)), min_length)
    return scipy.fft.next_fast_len(P)


def _extract_centre(full: np.ndarray, N: int) -> np.ndarray:
    idx = np.arange(-N, N + 1)
    out = full
    for axis in range(full.ndim):
        out = np.take(out, idx, axis=axis, mode="wrap")
    return out


def coefficients_spectral(grid: GridSpec, transform_length: int | None = None) -> np.ndarray:
    """Fourier coefficients of ``1/sigma`` from a DFT of the lattice kernel.

    ``sigma`` is obtained by an ``n``-dimensional FFT of
    ``exp(-h^2 |k|^2)``, ``|k|_inf <= K_sigma``, placed periodically on a
    ``P^n`` grid; ``b`` is the inverse FFT of ``1/sigma``.

    Raises
    ------
    ConditioningError
        If ``sigma`` is not resolved above roundoff anywhere on the grid.
    """
    h, N, n = grid.h, grid.N, grid.dim
    K = symbol_radius(h)
    P = transform_length or _transform_length(h, N, 2 * K + 1)
    if P < max(2 * N + 1, 2 * K + 1):
        raise ParameterError("transform length too short for the coefficient radius")
    k = np.arange(-K, K + 1)
    mesh = np.meshgrid(*([k] * n), indexing="ij")
    kern = np.exp(-(h * h) * sum(g.astype(float) ** 2 for g in mesh))
    box = np.zeros((P,) * n)
    box[np.ix_(*([k % P] * n))] = kern
    sigma = scipy.fft.fftn(box).real
    smin, smax = sigma.min(), sigma.max()
    if not smin > 64 * EPS * smax:
        raise ConditioningError(
            f"lattice symbol is not positive above roundoff at h={h} "
            f"(min {smin:.3g}); use coefficients_theta or the Fourier table"
        )
    full = scipy.fft.ifftn(1.0 / sigma).real
    return _extract_centre(full, N)


def coefficients_theta(grid: GridSpec, transform_length: int | None = None) -> np.ndarray:
    """Coefficients from the dual form of the symbol at scale ``lambda = h^2``.

    ``1/sigma`` is evaluated from the theta quotient ``m_h`` and inverted by
    a trapezoid rule (an inverse DFT) on ``[-pi, pi)^n``.  Accurate for all
    ``h``, though the coefficients themselves become huge as ``h`` shrinks.
    """
    h, N, n = grid.h, grid.N, grid.dim
    P = transform_length or _transform_length(h, N)
    w = 2 * math.pi * scipy.fft.fftfreq(P)
    log_inv = _log_inv_symbol(h, w)
    shift = log_inv.max()
    inv1 = np.exp(log_inv - shift)
    full = scipy.fft.ifft(inv1).real
    for _ in range(n - 1):
        full = np.multiply.outer(full, scipy.fft.ifft(inv1).real)
    return _extract_centre(full, N) * math.exp(n * shift)


def recommended_coeff_radius(h: float, tol: float = COEFF_TAIL_CUT) -> int:
    """Smallest ``N >= 8`` with ``|b_j| < tol * |b_0|`` for all ``|j| > N``."""
    grid = GridSpec(h, 1, coeff_radius=max(8, math.ceil((math.log(1 / tol) - log_symbol_min(h)) / h**2)))
    b = np.abs(coefficients_theta(grid)[grid.N:])
    above = np.nonzero(b >= tol * b[0])[0]
    return max(8, int(above[-1]) if above.size else 8)


def inverse_fourier_samples(ctx: tm.MultiplierContext, symbol, dx: float, n: int,
                            band: float | None = None) -> np.ndarray:
    """Trapezoid-rule inverse transform on a period-``n dx`` sampling grid.

    Returns ``(1/2 pi) sum_q symbol(xi_q) exp(i s dx xi_q) dxi`` for
    ``s = 0 .. n-1`` (FFT order), where ``xi_q = q dxi``, ``dxi = 2 pi/(n dx)``
    and ``|xi_q| <= band``.  Frequencies are folded modulo ``n`` before a
    single inverse FFT, so the samples are exact values of the periodized
    transform for any ``dx``.  ``band`` defaults to ``2 pi (K+1)/h``, beyond
    which ``m_h`` is below double precision.
    """
    if band is None:
        band = 2 * math.pi * (ctx.K + 1) / ctx.h
    dxi = 2 * math.pi / (n * dx)
    qmax = math.ceil(band / dxi)
    q = np.arange(-qmax, qmax + 1)
    vals = np.asarray(symbol(q * dxi))
    folded = np.bincount(q % n, weights=vals.real, minlength=n).astype(complex)
    if np.iscomplexobj(vals):
        folded += 1j * np.bincount(q % n, weights=vals.imag, minlength=n)
    return scipy.fft.ifft(folded) * (n * dxi / (2 * math.pi))


def chi_table(grid: GridSpec, fine_factor: int = 8, period: float | None = None,
              tail_tol: float = 1e-12, with_coeffs: bool = True) -> LagrangeTable:
    """Tabulate ``chi_h`` on ``(h/M) Z^n`` from its Fourier transform.

    ``chi_h = (h^n m^{[n]})^vee`` is approximated by the trapezoid rule in
    frequency with spacing ``2 pi / T``, i.e. by ``sum_p chi_h(x + p T)``.
    ``T`` is a multiple of ``h`` so that the periodic images land on lattice
    points, where ``chi_h`` vanishes; the lattice values are therefore exact
    to roundoff, and off-lattice values carry an image error of order
    ``exp(-h (T - R))``.

    Parameters
    ----------
    grid : GridSpec
    fine_factor : int
        ``M >= 2``; samples are spaced ``h/M``.
    period : float, optional
        Image period ``T``.  Must be at least ``2 (R + 4h)``; by default it
        is also long enough for the images to fall below ``tail_tol``.
    with_coeffs : bool
        Attach coefficients (spectral route, or the dual form when the
        lattice symbol is unresolved).
    """
    h, n, R = grid.h, grid.dim, grid.R
    M = int(fine_factor)
    if M < 2:
        raise ParameterError("fine_factor must be >= 2")
    T_min = 2 * (R + 4 * h)
    if period is None:
        period = max(T_min, R + math.log(1 / tail_tol) / h)
    elif period < T_min:
        raise ParameterError(
            f"frequency spacing too coarse: period {period} < 2(R + 4h) = {T_min}"
        )
    cells = math.ceil(period / h - 1e-9)
    n_nodes = cells * M
    T = cells * h
    ctx = tm.MultiplierContext(h)
    line = inverse_fourier_samples(ctx, lambda xi: h * tm.m(ctx, xi), h / M, n_nodes).real
    half = math.floor(R * M / h + 1e-9)
    idx = np.arange(-half, half + 1)
    line = line[idx % n_nodes]
    line = 0.5 * (line + line[::-1])
    samples = line
    for _ in range(n - 1):
        samples = np.multiply.outer(samples, line)
    coeffs, route = None, "none"
    if with_coeffs:
        try:
            coeffs, route = coefficients_spectral(grid), "spectral"
        except ConditioningError:
            coeffs, route = coefficients_theta(grid), "theta"
    return LagrangeTable(grid, M, idx * (h / M), samples, coeffs, route, T)


def _boundary_ratio(coeffs: np.ndarray) -> float:
    """Largest outer-shell coefficient relative to the largest coefficient."""
    a = np.abs(coeffs)
    mask = np.ones(a.shape, dtype=bool)
    mask[(slice(1, -1),) * a.ndim] = False
    return float(a[mask].max() / a.max())


def chi_eval(table: LagrangeTable, x) -> np.ndarray | float:
    """``sum_j b_j exp(-|x - h j|^2)`` over the stored coefficients.

    Parameters
    ----------
    table : LagrangeTable
        Must carry coefficients.
    x : array_like
        Points with a trailing axis of length ``dim`` (a scalar or 1-D array
        is accepted when ``dim == 1``).

    Raises
    ------
    ExtrapolationError
        If any ``|x|_inf > R - h``.
    ConditioningError
        If cancellation among the coefficient terms leaves an error above
        1e-8 (happens for ``h`` below about 1/3).
    """
    if table.coeffs is None:
        raise ParameterError("table carries no coefficients")
    grid = table.grid
    h, n, N = grid.h, grid.dim, grid.N
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0 or (n > 1 and xa.ndim == 1)
    if n == 1 and (xa.ndim == 0 or xa.shape[-1] != 1):
        xa = xa[..., None]
    if xa.shape[-1] != n:
        raise ParameterError(f"points must have a trailing axis of length {n}")
    if np.any(np.abs(xa) > grid.R - h + 1e-12):
        raise ExtrapolationError(f"evaluation point outside |x| <= R - h = {grid.R - h}")
    b = table.coeffs.ravel()
    keep = np.abs(b) >= COEFF_TAIL_CUT * np.abs(b).max()
    centres = h * _lattice_box(N, n)[keep]
    b = b[keep]
    pts = xa.reshape(-1, n)
    d2 = ((pts[:, None, :] - centres[None, :, :]) ** 2).sum(axis=-1)
    terms = b[None, :] * np.exp(-d2)
    val = terms.sum(axis=1)
    err = 4 * EPS * np.abs(terms).sum(axis=1) * math.sqrt(len(b))
    if np.any(err > 1e-8):
        raise ConditioningError(
            f"coefficient sum cancels to {err.max():.2g} absolute error at h={h}; "
            "use the Fourier table instead"
        )
    rel = _boundary_ratio(table.coeffs)
    if rel > 1e-10:
        warnings.warn(
            f"coefficient radius N={N} truncates b_j at relative size {rel:.1e}",
            AccuracyWarning,
            stacklevel=2,
        )
    out = val.reshape(xa.shape[:-1])
    return float(out) if scalar and out.ndim == 0 else out
