"""Regression protocols for rates and logarithmic envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r2: float


def linear_fit(x, y) -> LineFit:
    """Least-squares line with coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ParameterError("need at least two points")
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return LineFit(float(slope), float(icpt), r2)


def fit_order(h, err, last: int = 4) -> LineFit | None:
    """Slope of ``log err`` against ``log h`` over the ``last`` finest levels.

    Returns ``None`` when the errors are not all positive (degenerate sweep).
    """
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if len(h) < 3:
        raise ParameterError("an order fit needs at least three spacings")
    order = np.argsort(h)[::-1]
    h, err = h[order], err[order]
    h, err = h[-last:], err[-last:]
    if np.any(err <= 0):
        return None
    return linear_fit(np.log(h), np.log(err))


def log_factor(h) -> np.ndarray:
    return 1.0 + np.abs(np.log(np.asarray(h, dtype=float)))


@dataclass(frozen=True)
class EnvelopeCheck:
    """Affine envelope ``a + b (1 + |log h|)`` fitted on coarse levels.

    ``margins`` are envelope minus ratio at every level; ``held_out`` counts
    the finest levels that were not used in the fit.
    """

    a: float
    b: float
    margins: tuple
    held_out: int
    margin_trend: float
    bounded: bool


def logfactor_envelope(h, ratios, held_out: int = 2, slack: float = 1e-9) -> EnvelopeCheck:
    """One-sided check that ``ratios`` grow at most like ``1 + |log h|``.

    A least-squares line in ``1 + |log h|`` is fitted to all but the
    ``held_out`` finest levels, its slope clipped at zero, and it is shifted
    up until it bounds the fitted levels.  The check passes when the held-out
    levels also lie under it; the trend of the margins across all levels is
    reported alongside.
    """
    h = np.asarray(h, dtype=float)
    r = np.asarray(ratios, dtype=float)
    if len(h) < 3:
        raise ParameterError("an envelope fit needs at least three spacings")
    order = np.argsort(h)[::-1]
    h, r = h[order], r[order]
    held_out = min(held_out, len(h) - 2)
    u = log_factor(h)
    fit = linear_fit(u[: len(h) - held_out], r[: len(h) - held_out])
    b = max(fit.slope, 0.0)
    a = float(np.max(r[: len(h) - held_out] - b * u[: len(h) - held_out]))
    margins = a + b * u - r
    trend = linear_fit(u, margins).slope
    scale = max(float(np.max(np.abs(r))), 1e-300)
    bounded = bool(np.all(margins >= -slack * scale))
    return EnvelopeCheck(a, b, tuple(float(m) for m in margins), held_out, float(trend), bounded)


def control_slope(h, ratios) -> tuple[float, float]:
    """Slope of ``ratios`` against ``|log h|``, absolute and relative to the mean."""
    u = np.abs(np.log(np.asarray(h, dtype=float)))
    r = np.asarray(ratios, dtype=float)
    s = linear_fit(u, r).slope
    mean = float(np.mean(np.abs(r)))
    return s, (s / mean if mean > 0 else math.nan)
