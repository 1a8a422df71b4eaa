import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from telefusion.dsp import DspFeatures
from telefusion.sim import NO_FAILURE, FailureCause, FailureSpec, Spectrum
from telefusion.source import (
    CAUSES,
    SourceSetup,
    diff_spectrum,
    nominal_theory,
    residual_stack,
    select_spectra_window,
    simulate_example,
    stage1_localize,
    stage1_model,
    stage2_identify,
    stage2_model,
    theoretical_spectrum,
)
from telefusion.source.pipeline import residual_grid

FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))


def _profile_by_quadrature(f, B, sigma):
    # rectangle of width B convolved with an unnormalized Gaussian
    val, _ = quad(lambda u: math.exp(-((f - u) ** 2) / (2 * sigma**2)), -B / 2, B / 2, epsabs=0, epsrel=1e-12)
    return val


# --- theoretical passband ---------------------------------------------------


def test_unit_sigma_wide_rectangle_peak():
    th = theoretical_spectrum(1000.0, FWHM_PER_SIGMA, [0.0])
    assert th.sigma == pytest.approx(1.0)
    assert th.values[0] == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)


@given(st.floats(5, 100), st.floats(1, 20), st.floats(-80, 80))
def test_profile_matches_quadrature(B, otf, f):
    th = theoretical_spectrum(B, otf, [f])
    want = _profile_by_quadrature(f, B, th.sigma)
    assert th.values[0] == pytest.approx(want, rel=1e-6, abs=1e-300)


def test_profile_is_even_and_peak_normalized():
    f = np.linspace(-60, 60, 241)
    th = theoretical_spectrum(50.0, 8.0, f)
    assert np.allclose(th.values, th.values[::-1], rtol=1e-12)
    assert th.normalized()[120] == pytest.approx(1.0)


@pytest.mark.parametrize("B,otf", [(0.0, 8.0), (50.0, 0.0), (-1.0, 8.0)])
def test_nonpositive_parameters_rejected(B, otf):
    with pytest.raises(ValueError):
        theoretical_spectrum(B, otf, [0.0])


# --- spectra window ---------------------------------------------------------


def _dummy_spectra(n):
    f = residual_grid()
    return [Spectrum(f, np.full(f.size, float(i + 1))) for i in range(n)]


@pytest.mark.parametrize(
    "coarse,expected", [(0, [0, 1]), (3, [2, 3, 4]), (6, [5, 6])]
)
def test_window_is_clamped_to_link(coarse, expected):
    win = select_spectra_window(coarse, _dummy_spectra(7), window=1)
    assert win.indices == expected
    assert win.saving_ratio == pytest.approx(len(expected) / 7)


def test_window_only_fetches_needed_spectra():
    spectra = _dummy_spectra(7)
    seen = []

    def fetch(i):
        seen.append(i)
        return spectra[i]

    select_spectra_window(4, fetch, window=1, total=7)
    assert seen == [3, 4, 5]


def test_window_rejects_out_of_range_index():
    with pytest.raises(ValueError):
        select_spectra_window(7, _dummy_spectra(7))


def test_residual_stack_leaves_missing_slots_zero():
    th = nominal_theory(50.0, 8.0)
    stack = residual_stack(select_spectra_window(0, _dummy_spectra(7)), th)
    assert stack.shape == (3, th.freq_grid.size)
    assert not stack[0].any()
    assert stack[1].any() and stack[2].any()


# --- residual -----------------------------------------------------------------


def test_theory_against_itself_has_zero_residual():
    th = nominal_theory(50.0, 8.0)
    assert np.max(np.abs(diff_spectrum(Spectrum(th.freq_grid, th.values), th))) < 1e-12


@given(st.floats(1e-6, 1e6))
def test_residual_ignores_absolute_power(scale):
    th = nominal_theory(50.0, 8.0)
    f = np.linspace(-40, 40, 321)
    p = np.exp(-(f**2) / 300)
    a = diff_spectrum(Spectrum(f, p), th)
    b = diff_spectrum(Spectrum(f, scale * p), th)
    assert np.allclose(a, b, atol=1e-12)


def test_residual_rejects_uncovered_grid_and_dark_spectrum():
    th = nominal_theory(50.0, 8.0)
    f = np.linspace(-10, 10, 41)
    with pytest.raises(ValueError):
        diff_spectrum(Spectrum(f, np.ones(41)), th)
    g = np.linspace(-40, 40, 41)
    with pytest.raises(ValueError):
        diff_spectrum(Spectrum(g, np.zeros(41)), th)


# --- stage models -------------------------------------------------------------


def test_stage1_probabilities_form_a_distribution():
    model = stage1_model(7, seed=1)
    feats = DspFeatures(0.1, 1.0, 0.0, 0.2, 0.5, 30.0)
    v = stage1_localize(model, feats)
    assert v.class_probabilities.shape == (8,)
    assert v.class_probabilities.sum() == pytest.approx(1.0)
    assert 0 <= v.coarse_wss_index <= 7
    assert v.healthy == (v.coarse_wss_index == 7)


def test_stage1_rejects_foreign_feature_schema():
    model = stage1_model(7, seed=1)
    model.input_spec.names = ["a", "b", "c", "d", "e", "f"]
    with pytest.raises(ValueError, match="expects"):
        stage1_localize(model, DspFeatures(0, 0, 0, 0, 0, 0))


def test_stage2_maps_slot_back_to_link_index():
    model = stage2_model(1, seed=2)
    th = nominal_theory(50.0, 8.0)
    res = residual_stack(select_spectra_window(4, _dummy_spectra(7)), th)
    v = stage2_identify(model, res, coarse_index=4, window=1)
    slot, cause = divmod(int(np.argmax(v.class_probabilities)), len(CAUSES))
    assert v.wss_index == 4 + slot - 1
    assert v.cause == CAUSES[cause].value
    assert v.confidence == pytest.approx(v.class_probabilities.max())


def test_stage2_rejects_wrong_window_shape():
    model = stage2_model(1, seed=2)
    with pytest.raises(ValueError, match="shape"):
        stage2_identify(model, np.zeros((5, 256)), coarse_index=3, window=2)


# --- simulated failures -------------------------------------------------------


@pytest.fixture(scope="module")
def small_setup():
    return SourceSetup(n_symbols=2**12)


@pytest.mark.parametrize(
    "failure", [FailureSpec(3, FailureCause.FILTER_SHIFT, 17.5), FailureSpec(3, FailureCause.FILTER_TIGHTENING, 22.0)]
)
def test_residual_appears_at_failed_wss_and_downstream(small_setup, failure):
    th = nominal_theory(50.0, 8.0)
    ex = simulate_example(small_setup, failure, seed=1)
    healthy = simulate_example(small_setup, NO_FAILURE, seed=1)
    energy = [np.sum(diff_spectrum(s, th) ** 2) for s in ex.spectra]
    base = [np.sum(diff_spectrum(s, th) ** 2) for s in healthy.spectra]
    # upstream captures are untouched by a later failure
    assert np.allclose(energy[:3], base[:3])
    assert all(e > b + 5 for e, b in zip(energy[3:], base[3:]))


def test_example_labels(small_setup):
    ex = simulate_example(small_setup, FailureSpec(2, FailureCause.FILTER_TIGHTENING, 21.0), seed=4)
    assert ex.location_label == 2 and ex.cause_label == 1
    assert len(ex.spectra) == 7 and len(ex.stage_snr_db) == 15
    ok = simulate_example(small_setup, NO_FAILURE, seed=4)
    assert ok.location_label == 7 and ok.cause_label == -1


def test_sweep_counts():
    setup = SourceSetup(sweep_step=0.05)
    fails = setup.failures()
    assert len(fails) == 7 * (101 + 101)
    assert sum(f.cause is FailureCause.FILTER_SHIFT for f in fails) == 707
