"""Convergence sweeps, log-factor probes, stability runs and quasi rates.

All runs are deterministic functions of their arguments and the seed.  Work
items (spacings, trials) may run on a thread pool; results are reduced in
``(h, trial)`` order and every trial draws from its own child of a
:class:`numpy.random.SeedSequence`, so the thread count never changes a
report.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
import scipy.fft

from .. import __version__
from .. import theta_multiplier as tm
from ..bandlimited_quasi import CutoffSpec, QuasiInterpolant, build_cutoff, rho_hat
from ..errors import HypothesisError, ParameterError
from ..interpolator import (
    SampledField,
    _multi_indices,
    folded_weights,
    interpolate_grid_spectral,
    lp_norm,
    sobolev_seminorm,
)
from .fitting import control_slope, fit_order, logfactor_envelope
from .report import ErrorReport, ReportRow
from .targets import TargetFunction


@dataclass(frozen=True)
class RunConfig:
    """Discretization and execution settings shared by all runs.

    Attributes
    ----------
    fine_factor : int
        Error grids have spacing ``h / fine_factor``.
    beta_radius : int
        Spectral shifts kept by the Fourier route.
    threads : int
    seed : int
    fit_last : int
        Number of finest levels used by the order fit.
    eps : float
        Cutoff transition half-width for stability and quasi runs.
    period_points : int
        Lattice points per period in stability runs.
    atoms : int
        Random cutoff atoms per stability trial (1 gives a single unit atom).
    """

    fine_factor: int = 8
    beta_radius: int = 3
    threads: int = 1
    seed: int = 0
    fit_last: int = 4
    eps: float = 1.0
    period_points: int = 128
    atoms: int = 64

    def to_dict(self) -> dict:
        return asdict(self)


def _p_value(p) -> float:
    p = math.inf if p in ("inf", math.inf) else float(p)
    if p not in (1.0, 2.0, 4.0, math.inf):
        raise ParameterError(f"p must be one of 1, 2, 4, inf; got {p}")
    return p


def check_hypothesis(k: int, n: int, p) -> bool:
    """Refuse ``k <= n/p`` (``k < n`` when ``p = 1``).

    Returns ``True`` when the pair sits on or next to the hypothesis
    boundary (``k = n`` for ``p = 1``, or ``k - n/p <= 1/2``), which reports
    flag.
    """
    p = _p_value(p)
    if p == 1.0:
        ok, margin = k >= n, k - n
    else:
        ok, margin = k > n / p, k - n / p
    if not ok:
        need = f"k >= {n}" if p == 1.0 else f"k > n/p = {n / p:g}"
        raise HypothesisError(
            f"smoothness hypothesis violated: k={k}, n={n}, p={p:g}; "
            f"the error estimate requires {need}"
        )
    return margin <= 0.5


def _check_sweep(h_list, minimum: int) -> list:
    hs = sorted((float(h) for h in h_list), reverse=True)
    if len(hs) < minimum:
        raise ParameterError(f"need at least {minimum} spacings, got {len(hs)}")
    if len(set(hs)) != len(hs):
        raise ParameterError("spacings must be distinct")
    for h in hs:
        e = math.log2(h)
        if not (h > 0 and abs(e - round(e)) < 1e-12):
            raise ParameterError(f"spacing {h} is not dyadic")
    return hs


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def target_norm(target: TargetFunction, k: int, p, spacing: float,
                radius: float | None = None) -> float:
    """``||f||_{W_p^k} = sum_{j <= k} max_{|alpha| = j} ||D^alpha f||_p`` on a grid."""
    radius = target.box_radius if radius is None else radius
    N = int(math.floor(radius / spacing + 1e-9))
    nodes = spacing * np.arange(-N, N + 1)
    total = 0.0
    for j in range(k + 1):
        total += max(lp_norm(target.grid_values(nodes, a), p, spacing)
                     for a in _multi_indices(j, target.dim))
    return total


def interpolation_error(target: TargetFunction, h: float, p, config: RunConfig) -> float:
    """``||f - I_h f||_p`` on the fine grid of the data box (Fourier route)."""
    field = SampledField.from_function(target, h, target.box_radius, dim=target.dim)
    nodes, vals = interpolate_grid_spectral(field, tm.MultiplierContext(h), config.fine_factor,
                                            config.beta_radius)
    return lp_norm(target.grid_values(nodes) - vals, p, h / config.fine_factor)


def _sweep_report(kind, target, p, k, hs, errors, norm, config, near):
    rows = [ReportRow(h, float(e), norm, float(e) / (h**k * norm) if norm > 0 else 0.0)
            for h, e in zip(hs, errors)]
    degenerate = any(e <= 0 for e in errors)
    fit = None if degenerate else fit_order(hs, errors, config.fit_last)
    extras = {"degenerate": degenerate, "near_hypothesis_boundary": near,
              "dim": target.dim, "target": target.describe()}
    if fit is not None:
        extras["fit_r2"] = fit.r2
    return ErrorReport(kind, target.id, p, k, rows, None if fit is None else fit.slope, [],
                       {**config.to_dict(), "h_list": list(hs)}, config.seed, __version__, extras)


def run_convergence(target: TargetFunction, p, k: int, h_list,
                    config: RunConfig | None = None) -> ErrorReport:
    """Measure ``||f - I_h f||_p`` over a dyadic sweep and fit the order.

    Raises
    ------
    HypothesisError
        If ``k <= n/p`` or ``k`` exceeds the certified smoothness of the target.
    ParameterError
        If ``h_list`` has fewer than four dyadic spacings.
    """
    config = config or RunConfig()
    p = _p_value(p)
    near = check_hypothesis(k, target.dim, p)
    if k > target.sobolev_k:
        raise HypothesisError(f"{target.id} is certified only up to k={target.sobolev_k}")
    hs = _check_sweep(h_list, 4)
    errors = _map(lambda h: interpolation_error(target, h, p, config), hs, config.threads)
    norm = target_norm(target, k, p, hs[-1] / config.fine_factor)
    return _sweep_report("convergence", target, p, k, hs, errors, norm, config, near)


def run_logfactor_probe(target: TargetFunction, h_list, p, k: int | None = None,
                        config: RunConfig | None = None) -> ErrorReport:
    """Check whether ``error/(h^k ||f||)`` grows at most like ``1 + |log h|``.

    For ``p`` in {1, inf} an affine envelope is fitted on the coarse levels
    and tested on the finest ones (one-sided).  ``p = 2`` is the control,
    where the ratio should be flat; its slope against ``|log h|`` is
    reported in absolute and relative units.
    """
    config = config or RunConfig()
    p = _p_value(p)
    if p not in (1.0, 2.0, math.inf):
        raise ParameterError("the log-factor probe uses p in {1, inf}, with p = 2 as control")
    if target.dim != 1:
        raise ParameterError("the log-factor probe is one-dimensional")
    k = target.sobolev_k if k is None else k
    near = check_hypothesis(k, 1, p)
    if k > target.sobolev_k:
        raise HypothesisError(f"{target.id} is certified only up to k={target.sobolev_k}")
    hs = _check_sweep(h_list, 3)
    errors = _map(lambda h: interpolation_error(target, h, p, config), hs, config.threads)
    norm = target_norm(target, k, p, hs[-1] / config.fine_factor)
    rep = _sweep_report("logfactor", target, p, k, hs, errors, norm, config, near)
    ratios = [r.ratio for r in rep.rows]
    if p == 2.0:
        slope, rel = control_slope(hs, ratios)
        rep.extras.update(control_slope=slope, control_slope_relative=rel)
    else:
        env = logfactor_envelope(hs, ratios)
        rep.extras.update(envelope_a=env.a, envelope_b=env.b, envelope_bounded=env.bounded,
                          margin_trend=env.margin_trend, margins=list(env.margins),
                          held_out=env.held_out)
    return rep


def periodic_apply(a: np.ndarray, multiplier, h: float, fine_factor: int, beta_radius: int,
                   order: int = 0) -> np.ndarray:
    """``D^order sum_j a_j psi(x - h j)`` over one period ``P h`` at spacing ``h/M``.

    ``a`` holds ``P`` periodic lattice coefficients and ``psi^ = h w`` with
    ``w`` given by ``multiplier``.  The derivative is applied on the Fourier
    side, so ``p = 2`` norms of the output are exact by Parseval.
    """
    P, M = len(a), int(fine_factor)
    w = folded_weights(lambda xi: np.asarray(multiplier(xi)) * (1j * xi) ** order,
                       h, P, M, beta_radius)
    F = scipy.fft.fft(a)
    return M * scipy.fft.ifft(np.tile(F, M) * w).real


def _stability_trial(a: np.ndarray, h: float, p, k: int, spec: CutoffSpec, config: RunConfig):
    M = config.fine_factor
    ctx = tm.MultiplierContext(h)
    dx = h / M
    eps = spec.eps
    f_norm = sum(lp_norm(periodic_apply(a, lambda xi: rho_hat(eps, h * xi), h, M, 1, j), p, dx)
                 for j in range(k + 1))
    i_semi = lp_norm(periodic_apply(a, lambda xi: tm.m(ctx, xi), h, M, config.beta_radius, k),
                     p, dx)
    return i_semi / f_norm


def run_stability(eps: float, p, k: int, h_list, trials: int = 32,
                  config: RunConfig | None = None, spec: CutoffSpec | None = None) -> ErrorReport:
    """Estimate ``Q_p(h) = max |I_h f|_{W_p^k} / ||f||_{W_p^k}`` over random band functions.

    Each trial draws ``f = sum_m a_m phi(x/h - m)`` with ``config.atoms``
    standard normal coefficients on a period of ``config.period_points``
    lattice points.  ``f`` lies in ``PW((pi + eps)/h)`` and ``f(h j) = a_j``,
    so ``I_h f`` is the periodic Gaussian interpolant of ``a``.  Norms are
    taken over one period.  Trial ``t`` uses the same coefficients at every
    spacing, so differences in ``Q`` across ``h`` come from the operator and
    not from the draws.
    """
    config = config or RunConfig()
    p = _p_value(p)
    near = check_hypothesis(k, 1, p)
    if not 0 < eps < math.pi / 2:
        raise ParameterError(f"eps must lie in (0, pi/2), got {eps}")
    if trials < 1:
        raise ParameterError("need at least one trial")
    hs = _check_sweep(h_list, 3)
    spec = spec if spec is not None and spec.eps == eps else build_cutoff(eps)
    P = config.period_points
    atoms = min(config.atoms, P)
    children = np.random.SeedSequence(config.seed).spawn(trials)

    def draw(t):
        a = np.zeros(P)
        if atoms == 1:
            a[0] = 1.0
        else:
            rng = np.random.default_rng(children[t])
            a[np.arange(-(atoms // 2), atoms - atoms // 2) % P] = rng.standard_normal(atoms)
        return a

    draws = [draw(t) for t in range(trials)]
    jobs = [(i, t) for i in range(len(hs)) for t in range(trials)]
    ratios = _map(lambda it: _stability_trial(draws[it[1]], hs[it[0]], p, k, spec, config),
                  jobs, config.threads)
    q = [max(ratios[i * trials:(i + 1) * trials]) for i in range(len(hs))]
    extras = {"trials": trials, "near_hypothesis_boundary": near, "eps": eps,
              "q_spread": max(q) / min(q), "ratios": [float(r) for r in ratios]}
    if p == math.inf or p == 1.0:
        env = logfactor_envelope(hs, q)
        extras.update(envelope_a=env.a, envelope_b=env.b, envelope_bounded=env.bounded,
                      margin_trend=env.margin_trend)
    return ErrorReport("stability", f"cutoff_atoms{atoms}", p, k, [], None,
                       [(h, float(v)) for h, v in zip(hs, q)],
                       {**config.to_dict(), "h_list": list(hs), "trials": trials},
                       config.seed, __version__, extras)


def quasi_error(target: TargetFunction, h: float, p, spec: CutoffSpec, config: RunConfig,
                k: int | None = None):
    """``||f - g||_p`` for the quasi-interpolant ``g``, with diagnostics.

    The error grid covers the data box widened by the cutoff radius, so the
    slowly decaying tails of ``g`` are included.  Returns ``(error,
    lattice_error, seminorm_ratio)``; the ratio ``|g|_{W_2^k}/|f|_{W_2^k}``
    is ``nan`` when ``k`` is not given.
    """
    field = SampledField.from_function(target, h, target.box_radius, dim=target.dim)
    M = config.fine_factor
    out = target.box_radius + h * spec.phi_radius
    nodes, g = QuasiInterpolant(field, spec).grid(M, out_radius=out)
    f = target.grid_values(nodes)
    err = lp_norm(f - g, p, h / M)
    c = len(nodes) // 2
    lat = slice(c - field.radius * M, c + field.radius * M + 1, M)
    lattice_err = float(np.abs(g[(lat,) * target.dim] - field.values).max())
    ratio = math.nan
    if k is not None:
        ratio = sobolev_seminorm(g, k, 2, h / M) / max(
            lp_norm(target.grid_values(nodes, a), 2, h / M) for a in _multi_indices(k, target.dim))
    return err, lattice_err, ratio


def run_quasi_rate(target: TargetFunction, spec: CutoffSpec, h_list, p=2, k: int = 3,
                   config: RunConfig | None = None) -> ErrorReport:
    """Order of ``||f - g||_p`` for the band-limited quasi-interpolant."""
    config = config or RunConfig()
    p = _p_value(p)
    near = check_hypothesis(k, target.dim, p)
    if k > target.sobolev_k:
        raise HypothesisError(f"{target.id} is certified only up to k={target.sobolev_k}")
    hs = _check_sweep(h_list, 4)
    res = _map(lambda h: quasi_error(target, h, p, spec, config, k), hs, config.threads)
    norm = target_norm(target, k, p, hs[-1] / config.fine_factor)
    rep = _sweep_report("quasi", target, p, k, hs, [r[0] for r in res], norm, config, near)
    rep.config["eps"] = spec.eps
    rep.extras.update(lattice_error=max(r[1] for r in res),
                      seminorm_ratios=[float(r[2]) for r in res])
    return rep
