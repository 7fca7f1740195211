"""Acceptance criteria 1-8.

Each test records a one-line PASS/FAIL verdict that is printed in the pytest
terminal summary; ``python tests/test_acceptance.py`` prints the same lines
without pytest.
"""
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from ergorates.dos import (
    IDENTITY,
    DoSBudget,
    PowerLawDoS,
    capital_psi_powerlaw,
    predicted_defect_bound,
    sphere_area,
)
from ergorates.pde import (
    DIVERGES,
    RadialField,
    WaveInitialData,
    global_lq_norm,
    make_field,
    schrodinger_defect_timedomain,
    schrodinger_measure,
    suggested_t_nodes,
    wave_average_defect,
)
from ergorates.rates import dk_equivalence_report, loglog_fit
from ergorates.spectral import (
    DefectSample,
    HermitianModel,
    SpectralMeasure,
    defect_curve,
    fejer_defect,
    geometric_times,
    time_average_exact,
    time_domain_defect,
)

SLOPE_TOL = 0.05
T_SWEEP = geometric_times(10.0, 1e4, 16)


def _power_measure(p, r=0.5, n=3000):
    g = np.geomspace(1e-14, r, n)
    v = g ** (p - 1.0)
    return SpectralMeasure(density_grid=np.concatenate([-g[::-1], g]),
                           density_values=np.concatenate([v[::-1], v]))


# -- criterion computations (shared by pytest and __main__) ------------------------

def criterion_1():
    rng = np.random.default_rng(20240101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        model = HermitianModel.random(int(rng.integers(1, 33)), rng)
        for T in (1.0, 10.0, 100.0):
            exact = time_average_exact(model, T)
            err = abs(time_domain_defect(model, T, 4096) - exact) / exact
            worst = max(worst, err)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and elapsed < 10.0
    return ok, f"worst rel err {worst:.2e} (< 1e-8), {elapsed:.2f} s (< 10 s)"


def criterion_2():
    T = geometric_times(2.0, 1e4, 16)
    worst = 0.0
    for gamma in (0.5, 1.0, 2.0):
        # random unit vectors, plus all mass on the edge of the gap where the bound is sharp
        models = [HermitianModel.gap(gamma, 24, np.random.default_rng(seed)) for seed in range(10)]
        models.append(HermitianModel([gamma], [1.0]))
        for model in models:
            mu = model.measure()
            for s in defect_curve(mu, T):
                worst = max(worst, gamma * s.T * s.defect / math.sqrt(mu.total_mass))
    return worst <= 1 + 1e-12, f"max gamma*T*defect = {worst:.6f} (<= 1 + 1e-12)"


def _conforming_measure(rng):
    """Density u(lambda) psi(lambda) on I_r (0 <= u <= 1) plus atoms outside I_r of total weight <= 1."""
    c, p, r = rng.uniform(0.1, 3.0), rng.uniform(0.2, 3.0), rng.uniform(0.05, 0.95)
    dos = PowerLawDoS(c, p)
    g = np.geomspace(1e-12, r, 2000)
    k, phase = rng.uniform(1, 20), rng.uniform(0, 2 * np.pi)
    u = 0.5 * (1 + np.cos(k * np.log(g) + phase)) * rng.uniform(0.2, 1.0)
    grid = np.concatenate([-g[::-1], g])
    vals = np.concatenate([(u * dos(g))[::-1], u * dos(g)])
    m = int(rng.integers(0, 5))
    locs = rng.uniform(r, 5.0, m) * rng.choice([-1.0, 1.0], m)
    weights = rng.dirichlet(np.ones(m)) * rng.uniform(0, 1) if m else np.zeros(0)
    return SpectralMeasure(locs, weights, grid, vals), DoSBudget.from_powerlaw(dos, p - 0.05, r)


def criterion_3():
    rng = np.random.default_rng(3)
    T = geometric_times(1.01, 1e4, 8)
    violations = 0
    worst = 0.0
    for _ in range(50):
        mu, budget = _conforming_measure(rng)
        for t in T:
            ratio = fejer_defect(mu, t) / predicted_defect_bound(budget, 1.0, t)
            worst = max(worst, ratio)
            violations += ratio > 1.0
    return violations == 0, f"{violations} violations, max defect/bound = {worst:.3f}"


def schrodinger_curves():
    d1 = make_field(1, "flattop", rho_max=1.0, n=2 ** 13, a=0.5, b=1.0)
    mu1 = schrodinger_measure(d1)
    T_td = geometric_times(10.0, 1e4, 4)
    td = [DefectSample(float(t), schrodinger_defect_timedomain(d1, IDENTITY, t, suggested_t_nodes(t, 1.0)))
          for t in T_td]
    return {
        "d1": defect_curve(mu1, T_SWEEP),
        "d1_time": td,
        "d3": defect_curve(schrodinger_measure(make_field(3, "flattop")), T_SWEEP),
        "d5": defect_curve(schrodinger_measure(make_field(5, "flattop")), T_SWEEP),
    }


def criterion_4(curves=None, timings=None):
    if curves is None:
        start = time.perf_counter()
        curves = schrodinger_curves()
        timings = {"all": time.perf_counter() - start}
    targets = {"d1": -0.25, "d1_time": -0.25, "d3": -0.75, "d5": -1.0}
    slopes = {k: loglog_fit(curves[k]).slope for k in targets}
    ok = all(abs(slopes[k] - v) <= SLOPE_TOL for k, v in targets.items())
    ok = ok and all(t < 60.0 for t in (timings or {}).values())
    detail = ", ".join(f"{k} {slopes[k]:+.4f}" for k in targets)
    if timings:
        detail += " | " + ", ".join(f"{k} {v:.1f} s" for k, v in timings.items())
    return ok, detail


def criterion_5():
    slopes = {}
    for name, preset in (("weighted d=3 (trace data)", "trace"), ("L1 d=3 (flat-top data)", "flattop")):
        f0 = make_field(3, preset)
        data = WaveInitialData(f0, RadialField(3, f0.rho_max, np.zeros(f0.n)))
        curve = [DefectSample(float(t), wave_average_defect(data, t)) for t in T_SWEEP]
        slopes[name] = loglog_fit(curve).slope
    targets = dict(zip(slopes, (-0.5, -1.0)))
    ok = all(abs(slopes[k] - targets[k]) <= SLOPE_TOL for k in slopes)
    return ok, ", ".join(f"{k} {v:+.4f}" for k, v in slopes.items())


def criterion_6(curves):
    q5 = global_lq_norm(curves["d1"], 5.0, 10.0)
    q3 = global_lq_norm(curves["d1"], 3.0, 10.0)
    q15 = global_lq_norm(curves["d5"], 1.5, 10.0)
    ok = math.isfinite(q5) and q3 is DIVERGES and math.isfinite(q15)
    return ok, f"d=1 q=5 -> {q5:.4g}, d=1 q=3 -> {q3}, d=5 q=1.5 -> {q15:.4g}"


LAMBDA_GRID = np.geomspace(1e-4, 0.5, 60)


def criterion_7_joint():
    parts, ok = [], True
    for p in (0.5, 1.0, 1.5):
        rep = dk_equivalence_report(_power_measure(p), p, LAMBDA_GRID, T_SWEEP)
        good = rep.a_finite and rep.b_finite and rep.A_drift < 0.05 and rep.B_drift < 0.05
        ok = ok and good
        parts.append(f"p={p}: A drift {rep.A_drift:.2%}, B drift {rep.B_drift:.2%}")
    return ok, "jointly finite: " + "; ".join(parts)


def criterion_7_mismatch():
    parts, ok = [], True
    for p in (0.5, 1.0, 1.5):
        rep = dk_equivalence_report(_power_measure(p), p + 0.3, LAMBDA_GRID, T_SWEEP)
        growth = rep.B_drift
        ok = ok and growth > 0.5
        parts.append(f"p'={p + 0.3:.1f}: B grows {growth:.1%}")
    return ok, "mismatch (> 50% growth required): " + "; ".join(parts)


def criterion_8():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        c, p = rng.uniform(0.1, 5.0), rng.uniform(0.1, 4.0)
        q, r = p * rng.uniform(0.05, 0.95), rng.uniform(0.01, 0.99)
        dos = PowerLawDoS(c, p)
        ref = 2 * quad(lambda x: x ** (-q) * dos(x), 0, r, epsabs=0, epsrel=1e-13, limit=500)[0]
        worst = max(worst, abs(capital_psi_powerlaw(dos, q, r) - ref) / ref)
    areas = [sphere_area(d) for d in (1, 2, 3, 4)]
    exact = [2.0, 2 * math.pi, 4 * math.pi, 2 * math.pi ** 2]
    area_err = max(abs(a - e) / e for a, e in zip(areas, exact))
    ok = worst < 1e-10 and area_err < 1e-14
    return ok, f"Psi worst rel err {worst:.1e} (< 1e-10), sphere areas rel err {area_err:.1e}"


# -- pytest wrappers -------------------------------------------------------------------

@pytest.fixture(scope="module")
def schrodinger():
    timings = {}
    curves = {}
    start = time.perf_counter()
    d1 = make_field(1, "flattop", rho_max=1.0, n=2 ** 13, a=0.5, b=1.0)
    curves["d1"] = defect_curve(schrodinger_measure(d1), T_SWEEP)
    timings["d1"] = time.perf_counter() - start
    start = time.perf_counter()
    curves["d1_time"] = [
        DefectSample(float(t), schrodinger_defect_timedomain(d1, IDENTITY, t, suggested_t_nodes(t, 1.0)))
        for t in geometric_times(10.0, 1e4, 4)
    ]
    timings["d1_time"] = time.perf_counter() - start
    for d in (3, 5):
        start = time.perf_counter()
        curves[f"d{d}"] = defect_curve(schrodinger_measure(make_field(d, "flattop")), T_SWEEP)
        timings[f"d{d}"] = time.perf_counter() - start
    return curves, timings


def _check(record, number, result):
    ok, detail = result
    record(number, ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_oracle_equivalence(record_criterion):
    _check(record_criterion, 1, criterion_1())


def test_criterion_2_spectral_gap(record_criterion):
    _check(record_criterion, 2, criterion_2())


def test_criterion_3_main_bound(record_criterion):
    _check(record_criterion, 3, criterion_3())


def test_criterion_4_schrodinger_rates(record_criterion, schrodinger):
    _check(record_criterion, 4, criterion_4(*schrodinger))


def test_criterion_5_wave_rates(record_criterion):
    _check(record_criterion, 5, criterion_5())


def test_criterion_6_global_thresholds(record_criterion, schrodinger):
    _check(record_criterion, 6, criterion_6(schrodinger[0]))


def test_criterion_7_joint_finiteness(record_criterion):
    _check(record_criterion, 7, criterion_7_joint())


def test_criterion_7_mismatch_growth(record_criterion):
    _check(record_criterion, 7, criterion_7_mismatch())


def test_criterion_8_closed_forms(record_criterion):
    _check(record_criterion, 8, criterion_8())


if __name__ == "__main__":
    curves = schrodinger_curves()
    results = [
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4(curves)),
        (5, criterion_5()),
        (6, criterion_6(curves)),
        (7, (lambda a, b: (a[0] and b[0], f"{a[1]}; {b[1]}"))(criterion_7_joint(), criterion_7_mismatch())),
        (8, criterion_8()),
    ]
    for number, (ok, detail) in results:
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
