"""Stable evaluation of the Gaussian cardinal multiplier.

For grid spacing ``h`` the univariate multiplier is the theta quotient

    m_h(xi) = exp(-xi**2/4) / sum_k exp(-(xi - 2*pi*k/h)**2 / 4)
            = 1 / d0(xi),
    d0(xi)  = 1 + 2 * sum_{k>=1} exp(-pi**2 k**2/h**2) cosh(pi k xi / h),

and the n-variate multiplier is the tensor product of univariate ones.  The
cosh series overflows as soon as ``|xi|`` is a few multiples of ``pi/h``, so
everything here works with the periodized-Gaussian form instead.  Writing
``k*`` for the lattice index nearest to ``xi*h/(2*pi)`` and
``r = xi - 2*pi*k*/h`` (so ``|r| <= pi/h``),

    log d0(xi) = e(k*) + log1p( sum_{j != 0} exp(pi*j*r/h - pi**2*j**2/h**2) ),
    e(k*)      = (pi*k*/h) * (xi - pi*k*/h)  >= 0.

All exponents inside the ``log1p`` are non-positive, so nothing overflows, and
``log1p`` keeps the ``exp(-pi**2/h**2)``-sized corrections near the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

DEFAULT_REL_TOL = 1e-17


def series_radius_for(h: float, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Number of lattice shifts kept on each side of the dominant term."""
    k = math.ceil((h / math.pi) * math.sqrt(math.log(1.0 / rel_tol))) + 1
    return max(k, 2)


@dataclass(frozen=True)
class MultiplierContext:
    """Per-spacing evaluator settings for ``m_h`` and its derivatives.

    Parameters
    ----------
    h : float
        Grid spacing, ``h > 0``.
    dim : int
        Lattice dimension used by :func:`m_tensor`.
    rel_tol : float
        Relative truncation tolerance for the theta sums, in ``(0, 1e-6]``.
    series_radius : int, optional
        Shifts retained per side of the dominant lattice term.  Derived from
        ``h`` and ``rel_tol`` when omitted.
    """

    h: float
    dim: int = 1
    rel_tol: float = DEFAULT_REL_TOL
    series_radius: int | None = field(default=None)

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ParameterError(f"grid spacing must be positive, got h={self.h}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        if not (0 < self.rel_tol <= 1e-6):
            raise ParameterError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")
        if self.series_radius is None:
            object.__setattr__(self, "series_radius", series_radius_for(self.h, self.rel_tol))
        elif self.series_radius < 1:
            raise ParameterError("series_radius must be >= 1")

    @property
    def K(self) -> int:
        return self.series_radius

    @property
    def period(self) -> float:
        """Spacing ``2*pi/h`` of the frequency lattice."""
        return 2.0 * math.pi / self.h


def _as_array(xi):
    x = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("multiplier argument must be finite")
    return x


def _reduce(ctx: MultiplierContext, x: np.ndarray):
    """Split ``x`` into the dominant lattice index and the in-cell offset.

    Returns ``(kstar, lead, r, j, delta)`` with ``lead = e(k*)`` and
    ``delta[..., i]`` the exponent of lattice term ``k* + j[i]`` relative to
    the dominant one.
    """
    h = ctx.h
    kstar = np.rint(x * h / (2.0 * math.pi))
    a = math.pi * kstar / h
    lead = a * (x - a)
    r = x - 2.0 * a
    K = ctx.series_radius
    j = np.arange(-K, K + 1, dtype=float)
    delta = (math.pi / h) * j * r[..., None] - (math.pi / h) ** 2 * j**2
    return kstar, lead, r, j, delta


def _log_tail(delta: np.ndarray, K: int) -> np.ndarray:
    """``log(sum_j exp(delta_j))`` where ``delta`` at the centre is exactly 0."""
    off = np.concatenate([delta[..., :K], delta[..., K + 1:]], axis=-1)
    return np.log1p(np.exp(off).sum(axis=-1))


def log_d0(ctx: MultiplierContext, xi):
    """Logarithm of the theta denominator ``d0``; finite for every finite ``xi``."""
    x = _as_array(xi)
    _, lead, _, _, delta = _reduce(ctx, x)
    out = lead + _log_tail(delta, ctx.series_radius)
    return out if out.ndim else float(out)


def d0(ctx: MultiplierContext, xi):
    """``d0(xi) = 1 + 2 sum_k exp(-pi^2 k^2/h^2) cosh(pi k xi/h)``.

    Overflows to ``inf`` once ``log d0`` exceeds the double range (roughly
    ``|xi| > 53``); use :func:`log_d0` there.
    """
    return np.exp(log_d0(ctx, xi))


def log_m(ctx: MultiplierContext, xi):
    """``log m_h(xi)``, accurate to a few ulps of ``xi**2/4``."""
    out = -np.asarray(log_d0(ctx, xi))
    return out if out.ndim else float(out)


def m(ctx: MultiplierContext, xi):
    """The univariate multiplier ``m_h(xi)`` in ``(0, 1]``.

    Underflows to a subnormal, and only then to 0, when ``log m`` drops below
    the smallest representable double.
    """
    return np.exp(log_m(ctx, xi))


def _moments(ctx: MultiplierContext, x: np.ndarray):
    """``log m``, weighted mean ``A1`` and variance of ``pi*k/h`` under the
    normalized periodized-Gaussian weights."""
    K = ctx.series_radius
    kstar, lead, r, j, delta = _reduce(ctx, x)
    w = np.exp(delta)
    Z = w.sum(axis=-1)
    # antisymmetric first moment: sum_{j>=1} j (w_j - w_-j), cancellation-free;
    # factor out the larger of the pair so the exponential cannot overflow
    jp = j[K + 1:]
    t = 2.0 * (math.pi / ctx.h) * jp * np.abs(r)[..., None]
    big = np.where(r[..., None] >= 0, w[..., K + 1:], w[..., K - 1::-1])
    diff = -np.sign(r)[..., None] * big * np.expm1(-t)
    mu = (jp * diff).sum(axis=-1) / Z
    var = ((j - mu[..., None]) ** 2 * w).sum(axis=-1) / Z
    scale = math.pi / ctx.h
    A1 = scale * (kstar + mu)
    V = scale**2 * var
    logm = -(lead + _log_tail(delta, K))
    return logm, A1, V


def m_prime(ctx: MultiplierContext, xi):
    """First derivative ``m' = -m^2 d1 = -m * A1``."""
    x = _as_array(xi)
    logm, A1, _ = _moments(ctx, x)
    out = -np.exp(logm) * A1
    return out if out.ndim else float(out)


def m_second_ratio(ctx: MultiplierContext, xi):
    """``m''/m = 2*A1**2 - A2 = A1**2 - Var``.

    Both ratios of lattice sums are convex combinations of ``pi*k/h`` and its
    square, so this stays bounded where ``m`` itself underflows.
    """
    x = _as_array(xi)
    _, A1, V = _moments(ctx, x)
    out = A1**2 - V
    return out if out.ndim else float(out)


def m_second(ctx: MultiplierContext, xi):
    """Second derivative ``m'' = m * (2*I1**2 - I2)`` in ratio form."""
    x = _as_array(xi)
    logm, A1, V = _moments(ctx, x)
    out = np.exp(logm) * (A1**2 - V)
    return out if out.ndim else float(out)


def d1(ctx: MultiplierContext, xi):
    """``d0'``; overflows together with ``d0``."""
    x = _as_array(xi)
    logm, A1, _ = _moments(ctx, x)
    out = np.exp(-logm) * A1
    return out if out.ndim else float(out)


def d2(ctx: MultiplierContext, xi):
    """``d1'``; overflows together with ``d0``."""
    x = _as_array(xi)
    logm, A1, V = _moments(ctx, x)
    out = np.exp(-logm) * (V + A1**2)
    return out if out.ndim else float(out)


def _tensor_arg(ctx: MultiplierContext, xi) -> np.ndarray:
    x = _as_array(xi)
    if x.ndim == 0 or x.shape[-1] != ctx.dim:
        raise DomainError(
            f"tensor multiplier expects a trailing axis of length {ctx.dim}, got shape {x.shape}"
        )
    return x


def log_m_tensor(ctx: MultiplierContext, xi):
    """``sum_axis log m(xi_axis)`` for points along the trailing axis."""
    x = _tensor_arg(ctx, xi)
    out = np.asarray(log_m(ctx, x)).sum(axis=-1)
    return out if out.ndim else float(out)


def m_tensor(ctx: MultiplierContext, xi):
    """``m^{[n]}(xi) = m(xi_1) ... m(xi_n)``, formed in log space."""
    return np.exp(log_m_tensor(ctx, xi))


def alias_sum(ctx: MultiplierContext, xi, shift_radius: int | None = None):
    """``sum_{|l| <= R} m(xi - 2*pi*(k* + l)/h)``, which equals 1 exactly.

    The shift window is centred on the lattice index ``k*`` nearest to
    ``xi*h/(2*pi)``; the full sum is ``2*pi/h``-periodic in ``xi``, so this is
    the only truncation that is uniform in ``xi``.
    """
    if shift_radius is None:
        shift_radius = ctx.series_radius + 2
    if shift_radius < ctx.series_radius:
        raise ParameterError("shift_radius must be at least the series radius")
    x = _as_array(xi)
    kstar = np.rint(x * ctx.h / (2.0 * math.pi))
    l = np.arange(-shift_radius, shift_radius + 1, dtype=float)
    shifted = x[..., None] - ctx.period * (kstar[..., None] + l)
    out = np.asarray(m(ctx, shifted)).sum(axis=-1)
    return out if out.ndim else float(out)
