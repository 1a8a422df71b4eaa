import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.constants import c as LIGHT_SPEED

from telefusion.dsp import NlFeatures
from telefusion.model import (
    DIRECT,
    HYBRID,
    RECEIVER_ONLY,
    RESIDUAL,
    HybridConfig,
    HybridDataset,
    HybridInput,
    build_hybrid_input,
    gn_estimate,
    nli_coefficient,
    predict_hybrid,
    train_hybrid,
    wdm_bandwidth,
)
from telefusion.model.hybrid import GN_FIELD, HYBRID_LINK, init_hybrid, initial_loss
from telefusion.nn import forward
from telefusion.sim import Modulation, build_link, fiber


def _link(n_spans=10, power=0.0, fiber_type="SSMF", channels=5):
    return build_link(
        n_spans,
        fiber_type=fiber_type,
        channel_count=channels,
        launch_power=power,
        modulation=Modulation.QPSK,
        symbol_rate=35.0,
    )


# --- GN closed form -------------------------------------------------------------


def test_one_db_more_power_costs_two_db():
    a = gn_estimate(_link(power=0.0)).snr_nl
    b = gn_estimate(_link(power=1.0)).snr_nl
    assert a - b == pytest.approx(2.0, abs=1e-9)


def test_doubling_spans_costs_three_db():
    a = gn_estimate(_link(n_spans=6)).snr_nl
    b = gn_estimate(_link(n_spans=12)).snr_nl
    assert a - b == pytest.approx(10 * math.log10(2), abs=1e-9)


@given(
    st.sampled_from(["SSMF", "ELEAF", "PSCF"]),
    st.integers(3, 20),
    st.sampled_from([float(p) for p in range(-3, 3)]),
    st.sampled_from([3, 5, 7, 21]),
)
def test_strictly_decreasing_in_power_and_spans(fiber_type, n, p, ch):
    base = gn_estimate(_link(n, p, fiber_type, ch)).snr_nl
    assert gn_estimate(_link(n, p + 1, fiber_type, ch)).snr_nl < base
    assert gn_estimate(_link(n + 1, p, fiber_type, ch)).snr_nl < base


def _eta_reference(span, rs, bw):
    """GN double integral for one transparent span, centre channel, flat comb."""
    a = span.alpha / (10 * math.log10(math.e)) * 1e-3
    length = span.length * 1e3
    beta2 = abs(span.dispersion_D * 1e-6 * 1550e-9**2 / (2 * math.pi * LIGHT_SPEED))
    gamma = span.gamma * 1e-3
    ea = math.exp(-a * length)

    def inner(f1):
        k = 4 * math.pi**2 * beta2 * f1
        f = lambda f2: (1 - 2 * ea * math.cos(k * f2 * length) + ea * ea) / (a * a + (k * f2) ** 2)
        # the kernel is a ridge of width a/k around f2 = 0
        w = a / max(abs(k), 1e-300)
        cuts = [x for x in (w, 10 * w, 100 * w) if x < bw / 2]
        return 2 * sum(quad(f, lo, hi, limit=500)[0] for lo, hi in zip([0, *cuts], [*cuts, bw / 2]))

    cuts = [x for x in (1e6, 1e7, 1e8, 1e9, 1e10) if x < bw / 2]
    total = 2 * sum(quad(inner, lo, hi, limit=500)[0] for lo, hi in zip([0, *cuts], [*cuts, bw / 2]))
    return (16 / 27) * gamma**2 * total / rs**2 * 1e-6


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("fiber_type,channels", [("SSMF", 3), ("ELEAF", 5), ("PSCF", 21)])
def test_closed_form_tracks_gn_integral(fiber_type, channels):
    link = _link(fiber_type=fiber_type, channels=channels)
    span = link.spans[0]
    bw = wdm_bandwidth(link)
    ref = _eta_reference(span, 35e9, bw)
    assert nli_coefficient(span, 35e9, bw) == pytest.approx(ref, rel=0.10)


def test_zero_dispersion_limit_is_continuous():
    span = fiber("SSMF", 80.0)
    flat = replace(span, dispersion_D=0.0)
    tiny = replace(span, dispersion_D=1e-9)
    assert nli_coefficient(tiny, 35e9, 185e9) == pytest.approx(nli_coefficient(flat, 35e9, 185e9), rel=1e-6)


@pytest.mark.parametrize("rs,bw", [(0.0, 1e11), (-1.0, 1e11), (35e9, 0.0)])
def test_nonpositive_rates_rejected(rs, bw):
    with pytest.raises(ValueError):
        nli_coefficient(fiber("SSMF", 80.0), rs, bw)


def test_heterogeneous_spans_rejected():
    link = _link(n_spans=3)
    mixed = replace(link, spans=(link.spans[0], fiber("PSCF", 80.0), link.spans[2]))
    with pytest.raises(ValueError, match="identical"):
        gn_estimate(mixed)


# --- hybrid input -----------------------------------------------------------------


def _input(seed=0):
    link = _link()
    nl = NlFeatures(-0.2 - 0.01 * seed, 1.3, link.accumulated_dispersion, 5)
    return build_hybrid_input(nl, link, gn_estimate(link))


@pytest.mark.parametrize("missing", [0, 1, 2])
def test_missing_component_rejected(missing):
    link = _link()
    parts = [NlFeatures(0.1, 0.2, 0.0, 5), link, gn_estimate(link)]
    parts[missing] = None
    with pytest.raises(ValueError, match="required"):
        build_hybrid_input(*parts)


def test_non_finite_feature_rejected():
    link = _link()
    with pytest.raises(ValueError, match="non-finite"):
        build_hybrid_input(NlFeatures(math.nan, 0.2, 0.0, 5), link, gn_estimate(link))


def test_schema_widths_and_ablation():
    x = _input()
    assert [f for f in HYBRID if f != GN_FIELD] == list(RECEIVER_ONLY)
    assert x.vector(HYBRID).shape == (len(RECEIVER_ONLY) + 1,)
    assert x.vector(HYBRID_LINK).shape == (len(HYBRID_LINK),)


def test_input_round_trip_keeps_field_order():
    x = _input()
    back = HybridInput.from_dict(x.to_dict())
    assert back == x
    assert [k for k in x.to_dict() if k != "schema_version"] == list(HYBRID_LINK)
    with pytest.raises(ValueError, match="schema_version"):
        HybridInput.from_dict({**x.to_dict(), "schema_version": 99})


# --- training modes -----------------------------------------------------------------


def _synthetic(n, seed, offset):
    g = np.random.default_rng(seed)
    inputs = []
    for _ in range(n):
        gn = g.uniform(10, 30)
        inputs.append(
            HybridInput(
                anc=g.normal(-0.2, 0.1), pnc=g.normal(1.0, 0.3), cum_cd=g.uniform(0, 3e4), channel_count=5.0,
                gn_snr_nl=gn, span_number=10.0, span_length=80.0, launch_power=0.0,
                link_length=800.0, avg_gamma=1.3, avg_alpha=0.2,
            )
        )
    gn = np.array([h.gn_snr_nl for h in inputs])
    return HybridDataset(inputs, gn + offset(g, n))


def test_residual_mode_with_perfect_gn_learns_nothing():
    train = _synthetic(300, 1, lambda g, n: np.zeros(n))
    test = _synthetic(100, 2, lambda g, n: np.zeros(n))
    model, _ = train_hybrid(train, RESIDUAL, HYBRID, HybridConfig(epochs=300, learning_rate=1e-2))
    err = predict_hybrid(model, test) - test.labels
    assert np.sqrt(np.mean(err**2)) < 0.05


def test_residual_inference_adds_gn_back_exactly():
    data = _synthetic(20, 3, lambda g, n: g.normal(-1.5, 0.5, n))
    model = init_hybrid(HYBRID, RESIDUAL, HybridConfig(), data)
    raw = forward(model, data.matrix(HYBRID))[:, 0]
    assert np.array_equal(predict_hybrid(model, data), data.gn + raw)


def test_residual_mode_starts_closer_than_direct():
    data = _synthetic(200, 4, lambda g, n: g.normal(-1.5, 0.5, n))
    cfg = HybridConfig(seed=7)
    direct = initial_loss(init_hybrid(HYBRID, DIRECT, cfg, data), data)
    resid = initial_loss(init_hybrid(HYBRID, RESIDUAL, cfg, data), data)
    assert resid < direct


def test_residual_mode_needs_gn_in_schema():
    data = _synthetic(5, 5, lambda g, n: np.zeros(n))
    with pytest.raises(ValueError, match="GN"):
        train_hybrid(data, RESIDUAL, RECEIVER_ONLY)
