"""Slow ground-truth implementations used by the test-suite and ``verify``.

Nothing here imports the production evaluators: sums are taken directly in
extended precision (mpmath) or with exactly rounded summation
(``math.fsum``), linear systems are solved by LU with iterative refinement,
and Fourier inversion is a plain trapezoid sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class OracleConfig:
    """Settings for the oracles.

    ``precision_mode`` is ``"extended"`` (mpmath at ``dps`` digits) or
    ``"compensated"`` (double precision with exactly rounded summation).
    """

    precision_mode: str = "extended"
    K_oracle: int = 20
    quad_density: int = 64
    dps: int = 40

    def __post_init__(self):
        if self.precision_mode not in ("extended", "compensated"):
            raise ParameterError(f"unknown precision mode {self.precision_mode!r}")
        if self.K_oracle < 4:
            raise ParameterError("K_oracle must be >= 4 (twice the smallest production radius)")


def _k_range(h: float, xi: float, K: int) -> range:
    centre = int(round(abs(xi) * h / (2 * math.pi)))
    top = centre + K
    return range(-top, top + 1)


def oracle_m(h: float, xi: float, config: OracleConfig = OracleConfig()):
    """``exp(-xi^2/4) / sum_k exp(-(xi - 2 pi k/h)^2/4)`` by direct summation.

    Returns an ``mpmath.mpf`` in extended mode and a float otherwise.
    """
    ks = _k_range(h, xi, config.K_oracle)
    if config.precision_mode == "extended":
        with mpmath.workdps(config.dps):
            X = mpmath.mpf(xi)
            H = mpmath.mpf(h)
            two_pi = 2 * mpmath.pi
            num = mpmath.exp(-X**2 / 4)
            den = mpmath.fsum(mpmath.exp(-(X - two_pi * k / H) ** 2 / 4) for k in ks)
            return +(num / den)
    num = math.exp(-xi * xi / 4)
    den = math.fsum(math.exp(-((xi - 2 * math.pi * k / h) ** 2) / 4) for k in ks)
    return num / den


def oracle_d0(h: float, xi: float, K: int = 10, dps: int = 40):
    """Raw cosh series ``1 + 2 sum_{k=1}^K exp(-pi^2 k^2/h^2) cosh(pi k xi/h)``."""
    with mpmath.workdps(dps):
        H = mpmath.mpf(h)
        X = mpmath.mpf(xi)
        s = 1 + 2 * mpmath.fsum(
            mpmath.exp(-(mpmath.pi * k / H) ** 2) * mpmath.cosh(mpmath.pi * k * X / H)
            for k in range(1, K + 1)
        )
        return +s


def oracle_m_derivative(h: float, xi: float, order: int = 1,
                        config: OracleConfig = OracleConfig(), step: float | None = None):
    """Centred finite difference of :func:`oracle_m` in extended precision.

    The default step follows the ``eps**(1/(order+2))`` rule for the working
    precision, which leaves truncation and rounding both far below double
    precision.
    """
    if order not in (1, 2):
        raise ParameterError("order must be 1 or 2")
    with mpmath.workdps(config.dps):
        eps = mpmath.mpf(10) ** (-config.dps)
        s = step if step is not None else eps ** (mpmath.mpf(1) / (order + 2)) * max(1, abs(xi))
        s = mpmath.mpf(s)
        X = mpmath.mpf(xi)
        f = lambda t: oracle_m(h, t, config)  # noqa: E731
        if order == 1:
            return +((f(X + s) - f(X - s)) / (2 * s))
        return +((f(X + s) - 2 * f(X) + f(X - s)) / s**2)


def oracle_lagrange_coeffs(h: float, N: int, dim: int = 1, refine_steps: int = 3):
    """Dense collocation solve ``A b = e0`` with iterative refinement.

    The residual of every refinement step is formed with exactly rounded
    row sums.  Returns ``(b, residual_norms)`` with ``b`` of shape
    ``(2N+1,)*dim`` and one max-norm residual per step (initial solve first).
    """
    r = np.arange(-N, N + 1)
    grids = np.meshgrid(*([r] * dim), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    if len(idx) > 10_000:
        raise ParameterError("oracle system too large")
    d2 = np.zeros((len(idx), len(idx)))
    for a in range(dim):
        d2 += (idx[:, a][:, None] - idx[:, a][None, :]) ** 2
    A = np.exp(-(h * h) * d2)
    e = np.zeros(len(idx))
    e[len(idx) // 2] = 1.0

    def residual(b):
        return np.array([e[i] - math.fsum(A[i] * b) for i in range(len(idx))])

    b = np.linalg.solve(A, e)
    res = residual(b)
    history = [float(np.max(np.abs(res)))]
    for _ in range(refine_steps):
        b = b + np.linalg.solve(A, res)
        res = residual(b)
        history.append(float(np.max(np.abs(res))))
    return b.reshape((2 * N + 1,) * dim), history


def oracle_quadrature_ft(symbol_values, xi_grid, x):
    """``(2 pi)^{-1} * trapezoid( s(xi) exp(i x xi) )`` summed term by term.

    ``xi_grid`` must be uniform.  Returns complex values at each ``x``.
    """
    s = np.asarray(symbol_values, dtype=complex)
    xi = np.asarray(xi_grid, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = np.full(xi.shape, xi[1] - xi[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    out = np.empty(x.shape, dtype=complex)
    for i, xv in enumerate(x):
        terms = w * s * np.exp(1j * xv * xi)
        out[i] = complex(math.fsum(terms.real), math.fsum(terms.imag)) / (2 * math.pi)
    return out
