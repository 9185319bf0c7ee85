"""Decay, norm and aliasing measurements for the multiplier ``m_h``.

Inverse transforms use the ``(2 pi)^{-1}`` convention.  Since the shifts of
``m_h`` sum to one, ``int m_h = 2 pi/h`` and ``m_h^vee(0) = 1/h``; profiles
therefore store the normalized transform ``h m_h^vee = chi_h``, whose value
at the origin is exactly 1.

The ``L_1`` norm of ``m_h^vee`` is obtained from integrals of ``chi_h`` over
the lattice cells ``[h j, h(j+1)]``.  ``chi_h`` changes sign only at lattice
points, so the sum of the absolute cell integrals is the norm itself, free of
the kink error a Riemann sum of ``|chi_h|`` would carry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from . import theta_multiplier as tm
from .bandlimited_quasi import CutoffSpec, rho_hat
from .errors import AccuracyError, ParameterError
from .lagrange_kernel import inverse_fourier_samples

NEGLIGIBLE = 1e-16
TAIL_TOL = 1e-14


@dataclass(frozen=True)
class DecayProfile:
    """Samples of ``h m_h^vee`` on ``[0, x_max]`` with envelope constants.

    Attributes
    ----------
    h : float
    x, values : ndarray
    c1 : float
        ``max |v| / min(1, 2/|x|)``; the first envelope holds iff ``c1 <= 1``.
    c2 : float
        ``max |v| h^3 x^2``, the smallest ``C`` in ``|v| <= C/(h^3 x^2)``.
    """

    h: float
    x: np.ndarray
    values: np.ndarray
    c1: float
    c2: float

    def envelope1(self) -> np.ndarray:
        ax = np.abs(self.x)
        with np.errstate(divide="ignore"):
            return np.minimum(1.0, np.where(ax > 0, 2.0 / ax, np.inf))

    def envelope1_holds(self, slack: float = 1e-6) -> bool:
        return bool(np.all(np.abs(self.values) <= self.envelope1() * (1 + slack)))

    def envelope2_holds(self, C: float, slack: float = 1e-6) -> bool:
        ax = np.abs(self.x)
        ok = ax > 0
        bound = C / (self.h**3 * ax[ok] ** 2)
        return bool(np.all(np.abs(self.values[ok]) <= bound * (1 + slack)))


@dataclass(frozen=True)
class NormEstimate:
    """Bracket ``lower <= ||m_h||_{M_p} <= upper``.

    ``lower`` is the best ratio ``||(f^ m)^vee||_p / ||f||_p`` found over the
    search family; ``upper`` is ``||m^vee||_1`` (``p`` in {1, inf}), ``m(0)``
    (``p = 2``) or the Riesz-Thorin bound ``sqrt(M_2 M_inf)`` (``p = 4``).
    """

    h: float
    p: float
    lower: float
    upper: float
    test_family: str
    trials: int = 0
    best: str = field(default="")


def _image_cells(h: float, tail_tol: float = TAIL_TOL) -> int:
    """Lattice cells per period so that ``chi_h`` images fall below ``tail_tol``."""
    return 2 * math.ceil(math.log(1.0 / tail_tol) / (h * h)) + 1


def inverse_transform_profile(ctx: tm.MultiplierContext, x_max: float, n_samples: int = 2001,
                              band: float | None = None) -> DecayProfile:
    """``h m^vee`` at ``n_samples`` equispaced points of ``[0, x_max]``.

    Parameters
    ----------
    ctx : MultiplierContext
        One-dimensional context.
    x_max : float
    n_samples : int
    band : float, optional
        Frequency cutoff of the quadrature, default ``2 pi (K+1)/h``.

    Raises
    ------
    AccuracyError
        If ``m`` at the cutoff is not negligible.
    """
    if ctx.dim != 1:
        raise ParameterError("decay profiles are one-dimensional")
    if x_max <= 0 or n_samples < 2:
        raise ParameterError("need x_max > 0 and at least two samples")
    h = ctx.h
    L = 2 * math.pi * (ctx.K + 1) / h if band is None else band
    at_cut = tm.m(ctx, L)
    if at_cut > NEGLIGIBLE:
        raise AccuracyError(f"quadrature band {L:.4g} too small: m there is {at_cut:.2e}")
    dx = x_max / (n_samples - 1)
    span = x_max + math.log(1.0 / TAIL_TOL) / h
    n = scipy.fft.next_fast_len(math.ceil(2 * span / dx))
    raw = inverse_fourier_samples(ctx, lambda xi: h * tm.m(ctx, xi), dx, n, L).real
    x = dx * np.arange(n_samples)
    v = raw[:n_samples]
    env1 = np.minimum(1.0, np.divide(2.0, x, out=np.full_like(x, np.inf), where=x > 0))
    c1 = float(np.max(np.abs(v) / env1))
    c2 = float(np.max(np.abs(v) * h**3 * x**2))
    return DecayProfile(h, x, v, c1, c2)


def _box_symbol(ctx: tm.MultiplierContext):
    h = ctx.h

    def symbol(xi):
        xi = np.asarray(xi, dtype=float)
        box = np.full(xi.shape, h, dtype=complex)
        nz = xi != 0
        box[nz] = np.expm1(1j * h * xi[nz]) / (1j * xi[nz])
        return h * np.asarray(tm.m(ctx, xi)) * box

    return symbol


def cell_integrals(ctx: tm.MultiplierContext, cells: int | None = None) -> np.ndarray:
    """``I_j = int_{h j}^{h (j+1)} chi_h`` for ``j`` in FFT order modulo ``cells``."""
    h = ctx.h
    cells = cells or _image_cells(h)
    return inverse_fourier_samples(ctx, _box_symbol(ctx), h, cells).real


def multiplier_l1_norm(ctx: tm.MultiplierContext) -> float:
    """``||m_h^vee||_1 = (1/h) sum_j |I_j|``."""
    return float(np.abs(cell_integrals(ctx)).sum() / ctx.h)


def sign_changes_off_lattice(ctx: tm.MultiplierContext, fine_factor: int = 8) -> int:
    """Number of lattice cells in which ``chi_h`` changes sign in the interior."""
    h, M = ctx.h, fine_factor
    cells = _image_cells(h, 1e-10)
    v = inverse_fourier_samples(ctx, lambda xi: h * tm.m(ctx, xi), h / M, cells * M).real
    block = v.reshape(cells, M)[:, 1:]
    scale = np.abs(v).max()
    sig = np.where(np.abs(block) < 1e-13 * scale, 0.0, np.sign(block))
    ref = sig[:, [M // 2 - 1]]
    bad = np.any((sig != 0) & (ref != 0) & (sig != ref), axis=1)
    return int(bad.sum())


def _search_grid(h: float):
    dx = h / 4
    n = scipy.fft.next_fast_len(math.ceil(2 * math.log(1e8) / h / dx))
    xi = 2 * math.pi * scipy.fft.fftfreq(n, d=dx)
    return dx, n, xi


def _periodic_ratio(f: np.ndarray, mvals: np.ndarray, p, dx: float) -> float:
    from .interpolator import lp_norm

    Tf = scipy.fft.ifft(scipy.fft.fft(f) * mvals).real
    return lp_norm(Tf, p, dx) / lp_norm(f, p, dx)


def _random_band(rng, n: int, xi: np.ndarray, h: float) -> np.ndarray:
    cut = rng.uniform(0.5, 2.0) * math.pi / h
    spec = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * (np.abs(xi) <= cut)
    return scipy.fft.ifft(spec).real


def _sign_patterns(I: np.ndarray, rng, count: int, random_count: int):
    """Deterministic and random +-1 patterns on the lattice cells."""
    n = len(I)
    j = np.arange(n)
    extremal = np.sign(I[(-j - 1) % n])
    extremal[extremal == 0] = 1.0
    centred = np.where(j < n // 2, j, j - n)
    pats = [("extremal", extremal), ("alternating", (-1.0) ** j), ("constant", np.ones(n))]
    for r in (1, 2, 4, 8, 16, 32, 64):
        pats.append((f"extremal|j|<={r}", np.where(np.abs(centred) <= r, extremal, 0.0)))
    for w in (2, 3, 4, 5, 6, 8):
        pats.append((f"blocks{w}", (-1.0) ** (j // w)))
    pats = pats[:count]
    for t in range(random_count):
        pats.append((f"random{t}", rng.choice([-1.0, 1.0], size=n)))
    return pats


def mp_norm_bounds(ctx: tm.MultiplierContext, p, budget: int = 200, seed: int = 0) -> NormEstimate:
    """Bracket the ``M_p`` norm of ``m_h`` for ``p`` in {1, 2, 4, inf}.

    The lower bound is the best ratio over a seeded search family: 64 random
    band-limited functions, 16 deterministic sign patterns on lattice cells
    (``p`` in {1, inf}) and random patterns filling the rest of ``budget``.
    """
    p = math.inf if p in ("inf", math.inf) else float(p)
    if p not in (1.0, 2.0, 4.0, math.inf):
        raise ParameterError(f"p must be one of 1, 2, 4, inf; got {p}")
    h = ctx.h
    rng = np.random.default_rng(seed)
    m0 = float(tm.m(ctx, 0.0))
    I = cell_integrals(ctx)
    l1 = float(np.abs(I).sum() / h)
    dx, n, xi = _search_grid(h)
    mvals = np.asarray(tm.m(ctx, xi))
    best, best_name, trials = 0.0, "", 0

    def consider(val, name):
        nonlocal best, best_name, trials
        trials += 1
        if val > best:
            best, best_name = val, name

    n_band = min(64, budget)
    if p == 2.0:
        upper, family = m0, "concentrated gaussians + random band"
        x = dx * np.where(np.arange(n) < n // 2, np.arange(n), np.arange(n) - n)
        for W in (n * dx / 8, n * dx / 16, n * dx / 32):
            consider(_periodic_ratio(np.exp(-((x / W) ** 2)), mvals, p, dx), f"gaussian W={W:.3g}")
    elif p == 4.0:
        upper, family = math.sqrt(m0 * l1), "random band"
    elif p == math.inf:
        upper, family = l1, "sign patterns + random band"
        pats = _sign_patterns(I, rng, 16, max(0, budget - n_band - 16))
        FI = scipy.fft.fft(I)
        for name, c in pats:
            # (T f)(h i) = (1/h) sum_j c_j I_{i-j-1}
            conv = np.roll(scipy.fft.ifft(scipy.fft.fft(c) * FI).real, 1) / h
            consider(float(np.abs(conv).max()), name)
    else:
        upper, family = l1, "boxes + random band"
        widths = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256]
        for w in widths[:max(0, min(16, budget - n_band))]:
            f = np.zeros(n)
            f[:w] = 1.0
            consider(_periodic_ratio(f, mvals, p, dx), f"box{w}")
    for t in range(n_band):
        consider(_periodic_ratio(_random_band(rng, n, xi, h), mvals, p, dx), f"band{t}")
    return NormEstimate(h, p, best, upper, family, trials, best_name)


def aliasing_integrand(ctx: tm.MultiplierContext, spec: CutoffSpec, k: int, beta: float,
                       xi, log_shift: float = 0.0):
    """``xi^k rho_hat(h (xi - beta/h)) m(xi) exp(-log_shift)``."""
    xi = np.asarray(xi, dtype=float)
    h = ctx.h
    r = np.asarray(rho_hat(spec.eps, h * xi - beta))
    out = np.zeros(xi.shape)
    nz = r != 0
    out[nz] = xi[nz] ** k * r[nz] * np.exp(np.asarray(tm.log_m(ctx, xi[nz])) - log_shift)
    return out


def aliasing_diagnostic(ctx: tm.MultiplierContext, spec: CutoffSpec, k: int, beta: float,
                        n_points: int = 4001, return_log: bool = False) -> float:
    """``int |d^2/dxi^2 [xi^k rho_hat(h(xi - beta/h)) m(xi)]| dxi``.

    The second derivative is a Richardson-extrapolated central difference
    with step ``1e-3 h``.  The integrand is scaled by the largest value of
    ``m`` on its support, so the logarithm of the result (``return_log``)
    stays finite when the value itself underflows.
    """
    if abs(beta) < 2 * math.pi - 1e-12:
        raise ParameterError("|beta| must be at least 2 pi")
    if not 0 <= k <= 6:
        raise ParameterError("k must lie in 0..6")
    h = ctx.h
    half = (math.pi + spec.eps) / h
    c = beta / h
    a, b = c - half, c + half
    near = min(abs(a), abs(b)) if a * b > 0 else 0.0
    shift = float(tm.log_m(ctx, near))
    delta = 1e-3 * h
    xi = np.linspace(a - 2 * delta, b + 2 * delta, n_points)

    def second(d):
        f = lambda t: aliasing_integrand(ctx, spec, k, beta, t, shift)  # noqa: E731
        return (f(xi + d) - 2 * f(xi) + f(xi - d)) / (d * d)

    d2 = (4 * second(delta / 2) - second(delta)) / 3
    total = float(np.trapezoid(np.abs(d2), xi))
    if return_log:
        return math.log(total) + shift if total > 0 else -math.inf
    return total * math.exp(shift)


def fit_aliasing_decay(ctx: tm.MultiplierContext, spec: CutoffSpec, k: int,
                       betas=(4 * math.pi, 6 * math.pi, 8 * math.pi)):
    """Fit ``log I = log C + (2+k) log|beta/h| - c |beta/h|^2``.

    Returns ``(c, log_C, residual_max)``.
    """
    h = ctx.h
    u = np.array([(b / h) ** 2 for b in betas])
    y = np.array([aliasing_diagnostic(ctx, spec, k, b, return_log=True)
                  - (2 + k) * math.log(abs(b) / h) for b in betas])
    A = np.stack([np.ones_like(u), -u], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ coef - y)))
    return float(coef[1]), float(coef[0]), resid
