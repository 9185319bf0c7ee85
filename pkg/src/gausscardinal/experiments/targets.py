"""Test functions with certified Sobolev regularity.

* Centred B-splines of degree ``d``: the ``d``-th derivative is piecewise
  constant and bounded, so the spline lies in ``W_p^d`` for every ``p``.
* Gaussians ``exp(-(x/w)^2)``: smooth, certified for any requested ``k``.
* ``sinc(x/a)^N``: band-limited to ``|xi| <= N pi/a``.

Multivariate targets are tensor products; partial derivatives factor
accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import hermite
from scipy.interpolate import BSpline

from ..errors import ParameterError


@dataclass(frozen=True)
class TargetFunction:
    """A univariate profile ``g`` and its tensor power ``f(x) = prod g(x_i)``.

    Attributes
    ----------
    id : str
    dim : int
    profile : callable
        ``profile(x, order)`` returns the ``order``-th derivative of ``g``.
    sobolev_k : int
        Largest certified ``k`` with ``f`` in ``W_p^k`` for all ``p``.
    box_radius : float
        Data box half-width; ``f`` is below 1e-12 outside it.
    band_limit : float, optional
        Per-axis band radius if ``f`` is band-limited.
    justification : str
    """

    id: str
    dim: int
    profile: Callable
    sobolev_k: int
    box_radius: float
    band_limit: float | None = None
    justification: str = ""
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.derivative(x, (0,) * self.dim)

    def derivative(self, x, alpha):
        """``D^alpha f`` at points with a trailing axis of length ``dim``.

        For ``dim == 1`` a plain array of abscissae is accepted.
        """
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            if x.ndim and x.shape[-1] == 1 and x.ndim > 1:
                x = x[..., 0]
            a = alpha if isinstance(alpha, int) else alpha[0]
            return self.profile(x, a)
        if x.shape[-1] != self.dim or len(alpha) != self.dim:
            raise ParameterError("point and multi-index dimensions must match the target")
        out = np.ones(x.shape[:-1])
        for i, a in enumerate(alpha):
            out = out * self.profile(x[..., i], a)
        return out

    def grid_values(self, nodes: np.ndarray, alpha=None) -> np.ndarray:
        """``D^alpha f`` on the tensor grid ``nodes x ... x nodes``."""
        alpha = (0,) * self.dim if alpha is None else alpha
        if isinstance(alpha, int):
            alpha = (alpha,)
        out = self.profile(nodes, alpha[0])
        for a in alpha[1:]:
            out = np.multiply.outer(out, self.profile(nodes, a))
        return out

    def describe(self) -> dict:
        return {"id": self.id, "dim": self.dim, "sobolev_k": self.sobolev_k,
                "box_radius": self.box_radius, "band_limit": self.band_limit,
                **self.params}


def bspline(degree: int, dim: int = 1, knot_spacing: float = 1.0,
            box_radius: float | None = None) -> TargetFunction:
    """Centred cardinal B-spline of ``degree`` with the given knot spacing."""
    if not 1 <= degree <= 5:
        raise ParameterError("B-spline degree must lie in 1..5")
    knots = knot_spacing * (np.arange(degree + 2) - (degree + 1) / 2)
    base = BSpline.basis_element(knots, extrapolate=False)
    derivs = [base] + [base.derivative(nu) for nu in range(1, degree + 1)]

    def profile(x, order):
        if order > degree:
            raise ParameterError(f"derivative order {order} exceeds the certified {degree}")
        x = np.asarray(x, dtype=float)
        inside = (x >= knots[0]) & (x < knots[-1])
        return np.where(inside, np.nan_to_num(derivs[order](x), nan=0.0), 0.0)

    half = knots[-1]
    radius = box_radius if box_radius is not None else max(4.0, 2 * half)
    return TargetFunction(
        id=f"bspline{degree}" + (f"_{dim}d" if dim > 1 else ""),
        dim=dim,
        profile=profile,
        sobolev_k=degree,
        box_radius=radius,
        justification=f"degree-{degree} spline: D^{degree} piecewise constant and bounded",
        params={"knot_spacing": knot_spacing},
    )


def gaussian(width: float = 0.05, dim: int = 1, k: int = 4,
             box_radius: float = 12.0) -> TargetFunction:
    """``exp(-|x/w|^2)``; derivatives through Hermite polynomials."""

    def profile(x, order):
        t = np.asarray(x, dtype=float) / width
        coef = np.zeros(order + 1)
        coef[order] = 1.0
        return (-1.0 / width) ** order * hermite.hermval(t, coef) * np.exp(-t * t)

    return TargetFunction(
        id=f"gauss{width:g}" + (f"_{dim}d" if dim > 1 else ""),
        dim=dim,
        profile=profile,
        sobolev_k=k,
        box_radius=box_radius,
        justification="smooth and rapidly decaying: in W_p^k for every k",
        params={"width": width},
    )


def sinc_power(a: float = math.pi, power: int = 8, dim: int = 1,
               box_radius: float = 32.0) -> TargetFunction:
    """``sinc(x/a)^N`` (normalized sinc), band-limited to ``N pi/a``.

    Derivatives are obtained by differentiating the product with the
    recursion for powers of ``sin(u)/u``; orders up to 2 are provided.
    """

    def profile(x, order):
        u = np.pi * np.asarray(x, dtype=float) / a
        s = np.sinc(u / np.pi)
        if order == 0:
            return s**power
        small = np.abs(u) < 1e-3
        us = np.where(small, 1.0, u)
        ds = np.where(small, -u / 3 + u**3 / 30, (np.cos(us) - np.sin(us) / us) / us)
        d2s = np.where(small, -1 / 3 + u**2 / 10,
                       -np.sin(us) / us - 2 * np.cos(us) / us**2 + 2 * np.sin(us) / us**3)
        c = np.pi / a
        if order == 1:
            return c * power * s ** (power - 1) * ds
        if order == 2:
            return c * c * power * ((power - 1) * s ** (power - 2) * ds**2 + s ** (power - 1) * d2s)
        raise ParameterError("sinc_power derivatives are provided up to order 2")

    return TargetFunction(
        id=f"sinc{power}" + (f"_{dim}d" if dim > 1 else ""),
        dim=dim,
        profile=profile,
        sobolev_k=2,
        box_radius=box_radius,
        band_limit=power * math.pi / a,
        justification="entire of exponential type; derivatives implemented to order 2",
        params={"a": a, "power": power},
    )


def zero(dim: int = 1, box_radius: float = 4.0) -> TargetFunction:
    """The zero function (degenerate sweeps)."""
    return TargetFunction("zero", dim, lambda x, order: np.zeros(np.shape(x)), 99,
                          box_radius, 0.0, "identically zero")


def by_name(name: str, dim: int = 1) -> TargetFunction:
    """Look up a target by CLI name: ``bspline<d>``, ``gauss``, ``sinc``, ``zero``."""
    if name.startswith("bspline"):
        degree = int(name[len("bspline"):] or 3)
        spacing = 2.0 if dim > 1 else 1.0
        return bspline(degree, dim, knot_spacing=spacing)
    if name == "gauss":
        return gaussian(dim=dim)
    if name == "sinc":
        return sinc_power(dim=dim)
    if name == "zero":
        return zero(dim)
    raise ParameterError(f"unknown target {name!r}")
