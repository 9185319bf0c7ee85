"""Acceptance suite: one test per criterion, each timed against its budget.

Every test appends one ``criterion N: PASS|FAIL ...`` line to the terminal
summary, so ``pytest tests/test_acceptance.py`` prints a compact report.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
from scipy import integrate

from gausscardinal import bandlimited_quasi as bq
from gausscardinal import cli
from gausscardinal import interpolator as ip
from gausscardinal import lagrange_kernel as lk
from gausscardinal import multiplier_analysis as ma
from gausscardinal import theta_multiplier as tm
from gausscardinal.experiments import fitting, runs, targets


@contextmanager
def criterion(log, number, title, budget):
    """Time the block, record one summary line and enforce the time budget."""
    t0 = time.perf_counter()
    status, detail = "FAIL", ""
    notes = []
    try:
        yield notes
        status = "PASS"
    except AssertionError as exc:
        detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
        raise
    finally:
        dt = time.perf_counter() - t0
        if status == "PASS" and dt > budget:
            status, detail = "FAIL", f"over budget {budget:g} s"
        text = "; ".join(notes + ([detail] if detail else []))
        log.append(f"criterion {number:>2}: {status}  {title} ({dt:.1f} s / {budget:g} s)"
                   + (f"  [{text}]" if text else ""))
    assert dt <= budget, f"criterion {number} took {dt:.1f} s, budget {budget} s"


def dyadic(lo, hi):
    return [2.0**-i for i in range(lo, hi + 1)]


def test_c01_cardinality(acceptance_log):
    with criterion(acceptance_log, 1, "cardinality on the lattice", 5) as notes:
        worst = 0.0
        for h in (1.0, 0.5, 0.25):
            t = lk.chi_table(lk.GridSpec(h, eval_radius=17 * h), with_coeffs=False)
            v = t.lattice_values(16)
            delta = (np.arange(-16, 17) == 0).astype(float)
            worst = max(worst, float(np.max(np.abs(v - delta))))
        notes.append(f"max |chi(hj) - delta| = {worst:.2e}")
        assert worst < 1e-8


def test_c02_route_equivalence(acceptance_log):
    with criterion(acceptance_log, 2, "dense vs spectral coefficients", 30) as notes:
        g = lk.GridSpec(1.0, coeff_radius=40)
        d1 = float(np.max(np.abs(lk.coefficients_dense(g)[20:61] - lk.coefficients_spectral(g)[20:61])))
        g2 = lk.GridSpec(1.0, dim=2, coeff_radius=16)
        dense, spec = lk.coefficients_dense(g2), lk.coefficients_spectral(g2)
        b1 = lk.coefficients_spectral(lk.GridSpec(1.0, coeff_radius=16))
        inner = (slice(8, 25), slice(8, 25))
        d2 = float(np.max(np.abs(dense[inner] - spec[inner])))
        d3 = float(np.max(np.abs(dense[inner] - np.outer(b1, b1)[inner])))
        notes.append(f"1-D {d1:.1e}, 2-D {d2:.1e}, tensor {d3:.1e}")
        assert max(d1, d2, d3) < 1e-8


def test_c03_multiplier_identities(acceptance_log):
    with criterion(acceptance_log, 3, "partition sum, derivative mass, monotonicity", 10) as notes:
        rng = np.random.default_rng(3)
        part, mass, mono = 0.0, 0.0, 0
        for h in (1.0, 0.5, 0.25, 0.125):
            ctx = tm.MultiplierContext(h)
            xi = rng.uniform(-4 * math.pi / h, 4 * math.pi / h, 100)
            dev = np.abs(tm.alias_sum(ctx, xi) - 1.0)
            assert np.all(np.isfinite(dev)), f"partition sum is not finite at h={h}"
            part = max(part, float(dev.max()))

            m0 = tm.m(ctx, 0.0)
            edge = 2 * math.pi * (ctx.K + 2) / h
            brk = [math.pi / h * j for j in range(1, 2 * ctx.K + 4)]
            one_side, _ = integrate.quad(lambda s: abs(tm.m_prime(ctx, s)), 0.0, edge,
                                         points=brk, limit=400, epsabs=0, epsrel=1e-10)
            dev = abs(2 * one_side - 2 * m0) / (2 * m0)
            assert math.isfinite(dev), f"derivative mass is not finite at h={h}"
            mass = max(mass, dev)

            grid = np.linspace(0.0, edge, 10_000)[1:]
            vals = np.asarray(tm.m(ctx, grid))
            assert np.all(np.isfinite(vals))
            live = vals > 0
            mono += int(np.sum(np.diff(vals[live]) > 0))
        notes.append(f"partition {part:.1e}, mass rel {mass:.1e}, increases {mono}")
        assert part < 1e-10
        assert mass < 1e-6
        assert mono == 0


def test_c04_decay_envelopes(acceptance_log):
    with criterion(acceptance_log, 4, "decay envelopes of the Lagrange function", 60) as notes:
        profiles = {h: ma.inverse_transform_profile(tm.MultiplierContext(h), 40.0, 4001)
                    for h in (1.0, 0.5, 0.25)}
        C = profiles[1.0].c2
        notes.append(f"C fitted at h=1: {C:.4f}")
        for h, p in profiles.items():
            assert p.envelope1_holds(1e-6), f"first envelope fails at h={h}"
            assert p.envelope2_holds(C, 1e-6), f"second envelope fails at h={h}"


def test_c05_norm_dichotomy(acceptance_log):
    with criterion(acceptance_log, 5, "p=2 bound flat, p=inf bound grows like |log h|", 120) as notes:
        hs = np.array(dyadic(1, 6))
        ctxs = [tm.MultiplierContext(h) for h in hs]
        m0 = np.array([tm.m(c, 0.0) for c in ctxs])
        spread = float(m0.max() / m0.min() - 1)
        l1 = np.array([ma.multiplier_l1_norm(c) for c in ctxs])
        fit = fitting.linear_fit(np.abs(np.log(hs)), l1)
        notes.append(f"m(0) spread {spread:.1e}, slope b {fit.slope:.4f}, R^2 {fit.r2:.5f}")
        assert spread < 0.01
        assert fit.slope > 0
        assert fit.r2 > 0.95


def test_c06_convergence_orders(acceptance_log):
    with criterion(acceptance_log, 6, "convergence orders", 600) as notes:
        cubic = runs.run_convergence(targets.bspline(3), 2, 3, dyadic(2, 6))
        notes.append(f"cubic {cubic.fitted_order:.3f}")
        assert cubic.fitted_order >= 2.7

        gauss = targets.gaussian()
        for k in (1, 2, 3, 4):
            rep = runs.run_convergence(gauss, 2, k, dyadic(2, 6))
            assert rep.fitted_order >= k - 0.3, f"gaussian k={k}: {rep.fitted_order:.3f}"
        notes.append(f"gaussian {rep.fitted_order:.2f}")

        tensor = runs.run_convergence(targets.by_name("bspline2", dim=2), 2, 2, dyadic(1, 4))
        notes.append(f"2-D {tensor.fitted_order:.3f}")
        assert tensor.fitted_order >= 1.7


def test_c07_log_factor(acceptance_log):
    with criterion(acceptance_log, 7, "log-factor envelope and p=2 control", 300) as notes:
        hs = dyadic(2, 7)
        sup = runs.run_logfactor_probe(targets.bspline(3), hs, "inf")
        notes.append(f"envelope b {sup.extras['envelope_b']:.2e}, trend {sup.extras['margin_trend']:.2e}")
        assert sup.extras["envelope_bounded"]
        assert sup.extras["margin_trend"] >= 0

        ctrl = runs.run_logfactor_probe(targets.bspline(3), hs, 2)
        slope = ctrl.extras["control_slope"]
        notes.append(f"control slope {slope:.1e}")
        assert abs(slope) <= 0.05


def test_c08_stability(acceptance_log):
    with criterion(acceptance_log, 8, "stability factors", 600) as notes:
        hs = dyadic(1, 5)
        two = runs.run_stability(1.0, 2, 2, hs, trials=32, config=runs.RunConfig(seed=0))
        notes.append(f"Q2 spread {two.extras['q_spread']:.3f}")
        assert two.extras["q_spread"] < 2

        sup = runs.run_stability(1.0, "inf", 1, hs, trials=32, config=runs.RunConfig(seed=0))
        notes.append(f"Qinf spread {sup.extras['q_spread']:.3f}")
        assert sup.extras["envelope_bounded"]


def test_c09_quasi_interpolant(acceptance_log):
    with criterion(acceptance_log, 9, "band-limited quasi-interpolant", 180) as notes:
        spec = bq.build_cutoff(1.0)
        target = targets.bspline(3)
        rep = runs.run_quasi_rate(target, spec, dyadic(2, 6), 2, 3)
        lattice = rep.extras["lattice_error"]
        leak = max(bq.out_of_band_mass(bq.quasi_interpolant(
            ip.SampledField.from_function(target, h, 4.0), spec)) for h in (0.5, 0.25, 0.125))
        notes.append(f"lattice {lattice:.1e}, leak {leak:.1e}, order {rep.fitted_order:.3f}")
        assert lattice < 1e-8
        assert leak < 1e-10
        assert rep.fitted_order >= 3 - 0.3


def test_c10_determinism(acceptance_log, tmp_path):
    with criterion(acceptance_log, 10, "verify --seed 7 is byte-identical", 120) as notes:
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["verify", "--seed", "7", "--out", str(a)]) == 0
        assert cli.main(["verify", "--seed", "7", "--out", str(b)]) == 0
        notes.append(f"{a.stat().st_size} bytes")
        assert a.read_bytes() == b.read_bytes()

