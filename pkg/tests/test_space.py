import ast
import inspect
from dataclasses import fields
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telefusion.corpus import TABLE_IV_FEATURES
from telefusion.nn import MSE, evaluate, fit_normalization, mlp, serialize
from telefusion.space import (
    TABLE_V,
    AdaptConfig,
    Region,
    RegionProfile,
    RegionUpdate,
    RegressionExample,
    fed_aggregate,
    local_adapt,
    perturb_matrix,
    perturb_power,
)
from telefusion.space import usecase as space_usecase

POWER = TABLE_IV_FEATURES.index("launch_power")


def _filled(value, seed=0):
    m = mlp(3, (4,), 1, seed=seed)
    for p in m.parameters():
        p[...] = value
    return m


def _random_models(k, seed):
    g = np.random.default_rng(seed)
    out = []
    for i in range(k):
        m = mlp(3, (4,), 1, seed=i)
        for p in m.parameters():
            p[...] = g.normal(size=p.shape)
        out.append(m)
    return out


def _flat(m):
    return np.concatenate([p.ravel() for p in m.parameters()])


# --- aggregation algebra ------------------------------------------------------


def test_hand_computed_weighted_average():
    agg = fed_aggregate([_filled(0.0), _filled(4.0)], [1, 3])
    assert np.all(_flat(agg) == 3.0)


@settings(max_examples=100)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.data())
def test_aggregation_permutation_convexity_and_identity(k, seed, data):
    models = _random_models(k, seed)
    counts = data.draw(st.lists(st.integers(1, 500), min_size=k, max_size=k))
    agg = fed_aggregate(models, counts)
    perm = data.draw(st.permutations(range(k)))
    swapped = fed_aggregate([models[i] for i in perm], [counts[i] for i in perm])
    assert np.array_equal(_flat(agg), _flat(swapped))
    stack = np.stack([_flat(m) for m in models])
    assert np.all(stack.min(axis=0) <= _flat(agg)) and np.all(_flat(agg) <= stack.max(axis=0))
    if k == 1:
        assert np.array_equal(_flat(agg), _flat(models[0]))


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_equal_counts_give_unweighted_mean(k, seed):
    models = _random_models(k, seed)
    agg = _flat(fed_aggregate(models, [7] * k))
    # exact rational mean, rounded once
    mean = np.array([float(sum(map(Fraction, c)) / k) for c in np.stack([_flat(m) for m in models]).T.tolist()])
    assert np.all(np.abs(agg - mean) <= np.spacing(np.abs(mean)))


@given(st.integers(2, 5), st.integers(0, 2**32 - 1), st.floats(-10, 10))
def test_aggregation_is_linear(k, seed, a):
    ms, ns = _random_models(k, seed), _random_models(k, seed + 1)
    counts = list(range(1, k + 1))
    mix = []
    for m, n in zip(ms, ns):
        c = m.copy()
        for p, q in zip(c.parameters(), n.parameters()):
            p[...] = a * p + q
        mix.append(c)
    lhs = _flat(fed_aggregate(mix, counts))
    rhs = a * _flat(fed_aggregate(ms, counts)) + _flat(fed_aggregate(ns, counts))
    assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-13 * (1 + abs(a)))


def test_identical_models_aggregate_to_themselves():
    m = _random_models(1, 3)[0]
    agg = fed_aggregate([m.copy() for _ in range(4)], [5, 1, 9, 2])
    assert np.array_equal(_flat(agg), _flat(m))


def test_aggregation_keeps_architecture_and_input_spec():
    models = _random_models(3, 1)
    agg = fed_aggregate(models, [1, 2, 3])
    assert agg.architecture() == models[0].architecture()
    assert agg.input_spec.names == models[0].input_spec.names


def test_architecture_mismatch_rejected():
    with pytest.raises(ValueError, match="architecture"):
        fed_aggregate([mlp(3, (4,), 1), mlp(3, (5,), 1)], [1, 1])
    a, b = mlp(3, (4,), 1), mlp(3, (4,), 1)
    b = fit_normalization(b, np.arange(12.0).reshape(4, 3))
    with pytest.raises(ValueError):
        fed_aggregate([a, b], [1, 1])


@pytest.mark.parametrize("counts", [[0, 1], [-1, 2], [1]])
def test_bad_counts_rejected(counts):
    with pytest.raises(ValueError):
        fed_aggregate(_random_models(2, 0), counts)


# --- perturbation -------------------------------------------------------------


def _example():
    return RegressionExample(np.arange(1.0, 9.0), 12.5)


def test_zero_uncertainty_leaves_example_unchanged():
    ex = _example()
    out = perturb_power(ex, RegionProfile(9, 0.0, 0.0), seed=1)
    assert np.array_equal(out.features, ex.features) and out.label == ex.label


def test_only_launch_power_changes():
    ex = _example()
    out = perturb_power(ex, TABLE_V[0], seed=2)
    diff = np.flatnonzero(out.features != ex.features)
    assert diff.tolist() == [POWER]
    assert out.label == ex.label


def test_region_three_power_error_statistics():
    profile = TABLE_V[2]
    assert (profile.uncertainty_mean, profile.uncertainty_variance) == (0.6, 0.2)
    x = np.zeros((100_000, len(TABLE_IV_FEATURES)))
    d = perturb_matrix(x, profile, np.random.default_rng(3))[:, POWER]
    assert abs(d.mean() - 0.6) <= 3 * np.sqrt(0.2 / 1e5)
    assert d.var() == pytest.approx(0.2, rel=0.02)


def test_profile_validation():
    with pytest.raises(ValueError):
        RegionProfile(1, 0.3, -0.1)
    with pytest.raises(ValueError):
        RegionProfile(1, 0.3, 0.1, example_count=0)


# --- local adaptation ---------------------------------------------------------


@pytest.fixture(scope="module")
def shifted_task():
    g = np.random.default_rng(5)
    x = g.normal(size=(200, 8))
    y = x @ np.linspace(-1, 1, 8)
    model = fit_normalization(mlp(8, (16,), 1, seed=1), x)
    x_shift = x.copy()
    x_shift[:, POWER] += 0.8
    return model, x_shift, y


def test_zero_epoch_adaptation_is_identity(shifted_task):
    model, x, y = shifted_task
    out = local_adapt(model, (x, y), AdaptConfig(epochs=0))
    assert serialize(out) == serialize(model)


def test_adaptation_improves_region_fit_and_leaves_global_alone(shifted_task):
    model, x, y = shifted_task
    before = serialize(model)
    out = local_adapt(model, (x, y), AdaptConfig(epochs=30, learning_rate=1e-3))
    assert evaluate(out, (x, y), MSE)[0] < evaluate(model, (x, y), MSE)[0]
    assert serialize(model) == before


def test_region_update_carries_only_model_and_count(shifted_task):
    model, x, y = shifted_task
    region = Region(TABLE_V[0], x, y)
    upd = region.adapt(model, AdaptConfig(epochs=1))
    assert {f.name for f in fields(RegionUpdate)} == {"region_id", "n_k", "model"}
    assert upd.n_k == 200 and upd.region_id == 1


def test_driver_never_touches_region_data():
    # region data is private: the driver may only call adapt / validation_mse
    tree = ast.parse(inspect.getsource(space_usecase))
    private = [
        node.attr
        for node in ast.walk(tree)
        if isinstance(node, ast.Attribute) and node.attr in ("_x", "_y")
    ]
    assert private == []
