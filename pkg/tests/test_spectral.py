import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ergorates.spectral import (
    DefectSample,
    HermitianModel,
    SpectralMeasure,
    averaging_rule,
    defect_curve,
    fejer_defect,
    geometric_times,
    kernel_projection_norm,
    sinc,
    time_average_exact,
    time_domain_defect,
)
from ergorates.rates import loglog_fit


# -- sinc --------------------------------------------------------------------

def test_sinc_values():
    assert sinc(0.0) == 1.0
    assert abs(sinc(math.pi)) < 1e-15
    assert sinc(1e-9) == 1.0 - 1e-18 / 6
    assert isinstance(sinc(0.5), float)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_sinc_even_and_bounded(x):
    assert sinc(x) == sinc(-x)
    assert abs(sinc(x)) <= 1.0


def test_sinc_switch_is_seamless():
    x = np.array([9.9e-5, 1e-4, 1.01e-4])
    # sin(x)/x is still accurate to a few ulps this far from the removable singularity
    assert np.allclose(sinc(x), np.sin(x) / x, rtol=3e-16, atol=0)


# -- measures ------------------------------------------------------------------

def test_measure_validation():
    with pytest.raises(ValueError):
        SpectralMeasure.from_atoms([(0.0, -1.0)])
    with pytest.raises(ValueError):
        SpectralMeasure.from_atoms([(1.0, 1.0), (1.0, 2.0)])
    with pytest.raises(ValueError):
        SpectralMeasure(density_grid=np.array([0.0, 1.0]), density_values=np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        SpectralMeasure(density_grid=np.array([1.0, 0.0]), density_values=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        SpectralMeasure.from_atoms([(1.0, 1.0)]).__class__(
            np.array([1.0]), np.array([1.0]), total_mass=2.0)


def test_total_mass_defaults_to_parts():
    g = np.linspace(-0.5, 0.5, 101)
    mu = SpectralMeasure.from_density(g, np.ones_like(g), atoms=[(0.0, 2.0), (3.0, 1.0)])
    assert mu.total_mass == pytest.approx(4.0, rel=1e-14)


def test_kernel_projection_norm():
    assert kernel_projection_norm(SpectralMeasure.from_atoms([(0.0, 4.0)])) == 2.0
    g = np.linspace(-1, 1, 11)
    assert kernel_projection_norm(SpectralMeasure(density_grid=g, density_values=np.ones(11))) == 0.0
    assert kernel_projection_norm(SpectralMeasure.from_atoms([(0.0, 1.0), (1.0, 1.0)])) == 1.0


def test_serialisation_roundtrip(tmp_path):
    g = np.linspace(-0.5, 0.5, 33)
    mu = SpectralMeasure.from_density(g, 1 + g ** 2, atoms=[(0.0, 0.3), (1 / 3, 0.7)])
    path = tmp_path / "mu.txt"
    mu.save(path)
    text = path.read_text()
    assert "atoms" in text and "density" in text
    back = SpectralMeasure.load(path)
    assert np.array_equal(back.atom_locations, mu.atom_locations)
    assert np.array_equal(back.atom_weights, mu.atom_weights)
    assert np.array_equal(back.density_grid, mu.density_grid)
    assert np.array_equal(back.density_values, mu.density_values)
    assert back.total_mass == mu.total_mass


def test_window_mass_lebesgue():
    g = np.linspace(-1, 1, 2001)
    mu = SpectralMeasure(density_grid=g, density_values=np.ones_like(g))
    lam = np.array([0.1, 0.5, 0.9])
    assert np.allclose(mu.window_mass(lam), 2 * lam, rtol=1e-12)


# -- fejer defect ----------------------------------------------------------------

def test_fejer_kernel_only_is_zero():
    mu = SpectralMeasure.from_atoms([(0.0, 1.0)])
    for T in (0.1, 1.0, 1e5):
        assert fejer_defect(mu, T) == 0.0


@given(st.floats(-10, 10).filter(lambda x: abs(x) > 1e-6), st.floats(0.01, 5), st.floats(0.1, 1e3))
def test_fejer_single_atom(lam0, w, T):
    mu = SpectralMeasure.from_atoms([(lam0, w)])
    assert fejer_defect(mu, T) == pytest.approx(math.sqrt(w) * abs(sinc(T * lam0)), rel=1e-14, abs=1e-300)


def test_fejer_box_density_against_quad():
    g = np.linspace(-0.5, 0.5, 2001)
    mu = SpectralMeasure(density_grid=g, density_values=np.ones_like(g))
    T = 100.0
    ref, _ = quad(lambda x: sinc(T * x) ** 2, -0.5, 0.5, limit=2000, epsabs=0, epsrel=1e-13)
    assert fejer_defect(mu, T) == pytest.approx(math.sqrt(ref), rel=1e-6)


def test_fejer_rejects_bad_T():
    mu = SpectralMeasure.from_atoms([(1.0, 1.0)])
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            fejer_defect(mu, bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 32 - 1), st.floats(0.1, 1e4))
def test_defect_below_non_kernel_mass(n, seed, T):
    rng = np.random.default_rng(seed)
    model = HermitianModel.random(n, rng)
    mu = model.measure()
    assert fejer_defect(mu, T) <= math.sqrt(mu.total_mass - mu.kernel_weight) * (1 + 1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3), st.integers(0, 2 ** 32 - 1), st.floats(0.01, 1e4))
def test_gap_bound_property(gamma, seed, T):
    model = HermitianModel.gap(gamma, 10, np.random.default_rng(seed))
    mu = model.measure()
    assert fejer_defect(mu, T) <= math.sqrt(mu.total_mass) / (gamma * T) * (1 + 1e-12)


# -- finite models ----------------------------------------------------------------

def test_time_average_exact_two_level():
    model = HermitianModel([0.0, 1.0], np.array([1.0, 1.0]) / math.sqrt(2))
    for T in (0.3, 2.0, 17.0):
        assert time_average_exact(model, T) == pytest.approx(abs(sinc(T)) / math.sqrt(2), rel=1e-14)


def test_exact_matches_measure_path():
    rng = np.random.default_rng(8)
    model = HermitianModel.random(8, rng)
    for T in (0.5, 3.0, 40.0):
        assert fejer_defect(model.measure(), T) == pytest.approx(time_average_exact(model, T), rel=1e-14)


def test_from_matrix_detects_kernel():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((6, 6))
    H = A + A.T
    v = rng.standard_normal(6)
    H = H - np.outer(H @ v, v) / (v @ v) - np.outer(v, v @ H) / (v @ v) + np.outer(v, v) * (v @ H @ v) / (v @ v) ** 2
    model = HermitianModel.from_matrix(H, v)
    assert np.sum(model.eigenvalues == 0.0) == 1
    assert kernel_projection_norm(model.measure()) == pytest.approx(np.linalg.norm(v), rel=1e-10)


def test_time_domain_trivial_cases():
    zero = HermitianModel([0.0], [1.0])
    for nodes in (2, 16, 4096):
        assert time_domain_defect(zero, 5.0, nodes) < 1e-13
    one = HermitianModel([1.0], [1.0])
    assert time_domain_defect(one, math.pi, 4096) < 1e-12


def test_time_domain_random_16():
    model = HermitianModel.random(16, np.random.default_rng(16))
    exact = time_average_exact(model, 10.0)
    assert time_domain_defect(model, 10.0, 4096) == pytest.approx(exact, rel=1e-8)


def test_time_domain_converges_with_nodes():
    model = HermitianModel.random(12, np.random.default_rng(3))
    exact = time_average_exact(model, 50.0)
    errs = [abs(time_domain_defect(model, 50.0, n) - exact) for n in (64, 256, 1024, 4096)]
    assert errs[-1] < 1e-10
    assert errs[-1] <= errs[0]


def test_trapezoid_rule_available():
    model = HermitianModel.random(12, np.random.default_rng(4))
    exact = time_average_exact(model, 10.0)
    assert time_domain_defect(model, 10.0, 4096, rule="trapezoid") == pytest.approx(exact, rel=1e-4)


@pytest.mark.parametrize("rule", ["gauss", "trapezoid"])
def test_averaging_rule_weights_sum_to_one(rule):
    t, w = averaging_rule(7.0, 512, rule)
    assert w.sum() == pytest.approx(1.0, rel=1e-14)
    assert t.min() >= -7.0 and t.max() <= 7.0


def test_time_domain_rejects_few_nodes():
    with pytest.raises(ValueError):
        time_domain_defect(HermitianModel([1.0], [1.0]), 1.0, 1)


# -- sweeps ---------------------------------------------------------------------

def test_defect_curve_single_atom():
    mu = SpectralMeasure.from_atoms([(1.0, 1.0)])
    out = defect_curve(mu, [1.0, 10.0])
    assert [s.T for s in out] == [1.0, 10.0]
    assert out[0].defect == pytest.approx(abs(sinc(1.0)), rel=1e-15)
    assert out[1].defect == pytest.approx(abs(sinc(10.0)), rel=1e-15)


def test_defect_curve_rejects_bad_lists():
    mu = SpectralMeasure.from_atoms([(1.0, 1.0)])
    with pytest.raises(ValueError):
        defect_curve(mu, [])
    with pytest.raises(ValueError):
        defect_curve(mu, [10.0, 1.0])


def test_defect_curve_parallel_is_bitwise_serial():
    g = np.linspace(-0.5, 0.5, 1001)
    mu = SpectralMeasure.from_density(g, 1 + np.cos(g), atoms=[(0.2, 0.1)])
    T = geometric_times(1, 1e3, 8)
    serial = defect_curve(mu, T, workers=1)
    parallel = defect_curve(mu, T, workers=4)
    assert serial == parallel


def test_gap_curve_under_halving_envelope():
    gamma = 1.0
    mu = HermitianModel.gap(gamma, 12, np.random.default_rng(0)).measure()
    T = 10.0 * 2.0 ** np.arange(10)
    for s in defect_curve(mu, T):
        assert s.defect <= 1.0 / (gamma * s.T) * (1 + 1e-12)


def test_lebesgue_slope_half():
    g = np.linspace(-0.5, 0.5, 4001)
    mu = SpectralMeasure(density_grid=g, density_values=np.ones_like(g))
    fit = loglog_fit(defect_curve(mu, geometric_times(10, 1e3)))
    assert fit.slope == pytest.approx(-0.5, abs=0.02)


def test_geometric_times():
    T = geometric_times(10, 1e4, 16)
    assert T.size == 49 and T[0] == 10 and T[-1] == pytest.approx(1e4)
    assert isinstance(DefectSample(1.0, 0.5).T, float)
