"""Deterministic invariant suite behind the ``verify`` subcommand.

Every check returns a measured deviation and its tolerance.  No timings or
other machine-dependent values enter the report, so the same seed gives the
same bytes.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.integrate

from .. import __version__
from .. import bandlimited_quasi as bq
from .. import interpolator as ip
from .. import lagrange_kernel as lk
from .. import reference_oracles as ro
from .. import theta_multiplier as tm
from .report import ErrorReport
from .runs import RunConfig, run_stability


def _cardinality(rng):
    worst = 0.0
    for h in (1.0, 0.5, 0.25):
        t = lk.chi_table(lk.GridSpec(h, coeff_radius=32, eval_radius=h * 17), with_coeffs=False)
        v = t.lattice_values(16).copy()
        v[16] -= 1.0
        worst = max(worst, float(np.abs(v).max()))
    return worst, 1e-8


def _partition(rng):
    worst = 0.0
    for h in (1.0, 0.5, 0.25):
        ctx = tm.MultiplierContext(h)
        xi = rng.uniform(-8 * math.pi / h, 8 * math.pi / h, 100)
        worst = max(worst, float(np.abs(np.asarray(tm.alias_sum(ctx, xi)) - 1).max()))
    return worst, 1e-10


def _monotone(rng):
    bad = 0
    for h in (1.0, 0.5, 0.25):
        xi = np.linspace(0, 8 * math.pi / h, 10_000)
        lm = np.asarray(tm.log_m(tm.MultiplierContext(h), xi))
        bad += int(np.sum(np.diff(lm) >= 0))
    return float(bad), 0.0


def _oracle(rng):
    worst = 0.0
    for h in (1.0, 0.5):
        ctx = tm.MultiplierContext(h)
        for xi in rng.uniform(0, 8 * math.pi / h, 8):
            ref = float(ro.oracle_m(h, xi))
            if ref > 1e-300:
                worst = max(worst, abs(tm.m(ctx, xi) / ref - 1))
    return worst, 1e-12


def _routes(rng):
    g = lk.GridSpec(1.0, coeff_radius=40)
    b1, b2 = lk.coefficients_dense(g), lk.coefficients_spectral(g)
    return float(np.abs(b1 - b2)[20:61].max()), 1e-8


def _derivative_mass(rng):
    worst = 0.0
    for h in (1.0, 0.5, 0.25):
        ctx = tm.MultiplierContext(h)
        top = 2 * math.pi * (ctx.K + 1) / h
        val, _ = scipy.integrate.quad(lambda x: abs(tm.m_prime(ctx, x)), 0, top, limit=400,
                                      epsabs=0, epsrel=1e-12)
        worst = max(worst, abs(2 * val / (2 * tm.m(ctx, 0.0)) - 1))
    return worst, 1e-6


def _envelope(rng):
    from ..multiplier_analysis import inverse_transform_profile

    prof = inverse_transform_profile(tm.MultiplierContext(0.5), 40.0, 2001)
    return prof.c1 - 1.0, 1e-6


def _interp_routes(rng):
    h = 0.5
    vals = np.zeros(33)
    vals[4:-4] = rng.standard_normal(25)
    field = ip.SampledField(h, vals)
    nodes, grid = ip.interpolate_grid_spectral(field, tm.MultiplierContext(h), 4)
    table = lk.chi_table(lk.GridSpec(h, coeff_radius=lk.recommended_coeff_radius(h)))
    inner = np.abs(nodes) <= 4.0
    point = ip.interpolate_point(field, table, nodes[inner])
    return float(np.abs(point - grid[inner]).max()), 1e-6


def _lagrange_consistency(rng):
    h, M = 0.5, 8
    table = lk.chi_table(lk.GridSpec(h, coeff_radius=32, eval_radius=8.0), M, with_coeffs=False)
    nodes, v = ip.interpolate_grid_spectral(ip.SampledField.delta(h, 16), tm.MultiplierContext(h),
                                            M, out_radius=8.0)
    return float(np.abs(v - table.samples).max()), 1e-10


def _linearity(rng):
    h = 0.5
    a, b = np.zeros(33), np.zeros(33)
    a[4:-4], b[4:-4] = rng.standard_normal((2, 25))
    s, t = rng.standard_normal(2)
    ctx = tm.MultiplierContext(h)
    run = lambda v: ip.interpolate_grid_spectral(ip.SampledField(h, v), ctx, 4)[1]  # noqa: E731
    lhs = run(s * a + t * b)
    return float(np.abs(lhs - (s * run(a) + t * run(b))).max()), 1e-12


def _shift(rng):
    h, M = 0.5, 4
    a = np.zeros(33)
    a[4:-5] = rng.standard_normal(24)
    ctx = tm.MultiplierContext(h)
    v0 = ip.interpolate_grid_spectral(ip.SampledField(h, a), ctx, M)[1]
    v1 = ip.interpolate_grid_spectral(ip.SampledField(h, np.roll(a, 1)), ctx, M)[1]
    return float(np.abs(v1[M:] - v0[:-M]).max()), 1e-12


def _quasi_lattice(rng):
    h = 0.25
    vals = np.zeros(41)
    vals[4:-4] = rng.standard_normal(33)
    field = ip.SampledField(h, vals)
    qi = bq.quasi_interpolant(field, bq.build_cutoff(1.0))
    nodes, g = qi.grid(4)
    return float(np.abs(g[::4] - vals).max()), 1e-8


CHECKS = {
    "cardinality": _cardinality,
    "partition_sum": _partition,
    "monotone_violations": _monotone,
    "oracle_multiplier": _oracle,
    "coefficient_routes": _routes,
    "derivative_mass": _derivative_mass,
    "decay_envelope_excess": _envelope,
    "interpolation_routes": _interp_routes,
    "lagrange_consistency": _lagrange_consistency,
    "linearity": _linearity,
    "lattice_shift": _shift,
    "quasi_lattice": _quasi_lattice,
}


def run_verify(seed: int = 0, threads: int = 1) -> ErrorReport:
    """Run every invariant check and a short seeded stability run."""
    children = np.random.SeedSequence(seed).spawn(len(CHECKS))
    extras = {}
    passed = True
    for child, (name, fn) in zip(children, CHECKS.items()):
        value, tol = fn(np.random.default_rng(child))
        ok = bool(value <= tol)
        passed &= ok
        extras[name] = float(value)
        extras[f"{name}_tol"] = float(tol)
        extras[f"{name}_passed"] = ok
    config = RunConfig(seed=seed, threads=threads)
    stab = run_stability(1.0, 2, 2, [0.5, 0.25, 0.125], trials=4, config=config)
    extras["all_passed"] = bool(passed)
    return ErrorReport("verify", "invariants", 2.0, 2, [], None, stab.q_factors,
                       {"seed": seed, "threads": threads, "checks": list(CHECKS)},
                       seed, __version__, extras)
