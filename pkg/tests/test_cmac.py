import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepcmac.cmac import (CmacLayerParams, activate, excite, init_layer, layer_gradients,
                           make_geometry, update_single_layer)
from deepcmac.exceptions import GeometryError, NonFiniteInputError, ShapeMismatchError

# mpmath, 40 digits
EXP_MINUS_16 = 1.125351747192591145e-07
THREE_OVER_E = 1.1036383235143269648
W11_AFTER = 1.0329753032633046568
W21_AFTER = 2.0329753032633046568


def two_field_layer():
    return CmacLayerParams(np.array([[-1.0], [1.0]]), np.ones((2, 1)), np.array([[1.0], [2.0]]))


@pytest.mark.parametrize("n_e, as_layers, blocks", [(5, 4, 8), (1, 1, 1), (9, 4, 12)])
def test_geometry_examples(n_e, as_layers, blocks):
    lo, hi = (-1.0, 1.0) if blocks == 1 else (-3.0, 3.0)
    geo = make_geometry(1, as_layers, n_e, lo, hi)
    assert geo.blocks_per_dim == blocks
    assert geo.receptive_fields == blocks


def test_geometry_ceil_rule_exhaustive():
    for n_e in range(1, 17):
        for a in range(1, 17):
            geo = make_geometry(1, a, n_e, -1, 1)
            assert geo.blocks_per_dim == math.ceil(n_e / a) * a
            assert geo.receptive_fields == geo.blocks_per_dim


@pytest.mark.parametrize("kwargs", [
    dict(lower_bound=3, upper_bound=-3),
    dict(lower_bound=1, upper_bound=1),
    dict(as_layers=0),
    dict(elements_per_dim=0),
    dict(input_dim=0),
])
def test_geometry_rejects_bad_input(kwargs):
    with pytest.raises(GeometryError):
        make_geometry(**kwargs)


def test_init_layer_reference_centers():
    layer = init_layer(make_geometry(1, 4, 5, -3, 3))
    np.testing.assert_allclose(layer.means[:, 0],
                               [-2.4, -1.8, -1.2, -0.6, 0.6, 1.2, 1.8, 2.4], atol=1e-12)
    np.testing.assert_allclose(layer.sigmas, 0.6, atol=1e-12)
    assert np.all(layer.weights == 0)


def test_init_layer_single_block():
    layer = init_layer(make_geometry(1, 1, 1, -1, 1))
    assert layer.means.shape == (1, 1)
    assert layer.means[0, 0] == 0.0
    assert layer.weights[0, 0] == 0.0


def test_init_layer_four_blocks_by_enumeration():
    geo = make_geometry(1, 4, 4, -2, 2)
    centers = init_layer(geo).means[:, 0]
    # enumerate the grid LB + h*i, i = 1..N_B+1, drop the midpoint
    h = 4 / 6
    grid = [-2 + h * i for i in range(1, 6)]
    expected = [g for g in grid if abs(g) > 1e-12]
    np.testing.assert_allclose(centers, expected, atol=1e-12)
    np.testing.assert_allclose(centers, -centers[::-1], atol=1e-12)
    np.testing.assert_allclose(np.diff(centers), [h, 2 * h, h], atol=1e-12)


def test_init_layer_multi_dim_repeats_centers():
    layer = init_layer(make_geometry(3, 4, 5, -3, 3), output_dim=2)
    assert layer.means.shape == (8, 3)
    assert layer.weights.shape == (8, 2)
    assert np.all(layer.means == layer.means[:, :1])


def test_excite_spot_values():
    layer = CmacLayerParams(np.array([[0.3], [-2.4]]), np.array([[0.7], [0.6]]), np.zeros((2, 1)))
    phi = excite([0.3], layer)
    assert phi[0, 0] == 1.0
    phi = excite([0.3 + 0.7], layer)
    assert phi[0, 0] == pytest.approx(math.exp(-1), abs=1e-9)
    phi = excite([0.0], layer)
    assert phi[1, 0] == pytest.approx(EXP_MINUS_16, rel=1e-9)


def test_excite_rejects_nonfinite_and_bad_shape():
    layer = two_field_layer()
    with pytest.raises(NonFiniteInputError):
        excite([np.nan], layer)
    with pytest.raises(ShapeMismatchError):
        excite([0.0, 1.0], layer)


def test_activate_hand_instance():
    act = activate([0.0], two_field_layer())
    np.testing.assert_allclose(act.fields, [math.exp(-1)] * 2, atol=1e-15)
    assert act.output[0] == pytest.approx(THREE_OVER_E, abs=1e-12)


def test_activate_zero_weights_and_single_dim():
    layer = init_layer(make_geometry(1, 4, 5, -3, 3))
    act = activate([0.37], layer)
    assert act.output[0] == 0.0
    np.testing.assert_array_equal(act.fields, act.excitations[:, 0])


def test_activate_is_pure():
    layer = CmacLayerParams(np.random.default_rng(1).normal(size=(5, 2)),
                            np.full((5, 2), 0.8), np.random.default_rng(2).normal(size=(5, 3)))
    a, b = activate([0.1, -0.4], layer), activate([0.1, -0.4], layer)
    np.testing.assert_array_equal(a.output, b.output)
    np.testing.assert_array_equal(a.excitations, b.excitations)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2),
       st.integers(0, 2**31 - 1))
def test_fields_bounded_and_product(x, seed):
    rng = np.random.default_rng(seed)
    layer = CmacLayerParams(rng.uniform(-3, 3, (4, 2)), rng.uniform(0.2, 2, (4, 2)),
                            rng.normal(size=(4, 1)))
    act = activate(x, layer)
    assert np.all(act.fields >= 0) and np.all(act.fields <= 1)
    np.testing.assert_array_equal(act.fields, np.prod(act.excitations, axis=1))


def test_field_is_one_only_at_center():
    layer = CmacLayerParams(np.array([[0.5, -0.5]]), np.ones((1, 2)), np.ones((1, 1)))
    assert activate([0.5, -0.5], layer).fields[0] == 1.0
    assert activate([0.5, -0.49], layer).fields[0] < 1.0


def test_update_zero_error_is_identity():
    layer = two_field_layer()
    act = activate([0.2], layer)
    new = update_single_layer(layer, act, [0.2], [0.0], 0.1, 0.1, 0.1)
    np.testing.assert_array_equal(new.means, layer.means)
    np.testing.assert_array_equal(new.sigmas, layer.sigmas)
    np.testing.assert_array_equal(new.weights, layer.weights)


def test_update_zero_weights_moves_only_weights():
    layer = init_layer(make_geometry(1, 4, 5, -3, 3))
    act = activate([0.5], layer)
    new = update_single_layer(layer, act, [0.5], [0.8], 0.1, 0.1, 0.01)
    np.testing.assert_array_equal(new.means, layer.means)
    np.testing.assert_array_equal(new.sigmas, layer.sigmas)
    np.testing.assert_allclose(new.weights[:, 0], 0.01 * 0.8 * act.fields, rtol=1e-15)


def test_update_weight_rule_hand_instance():
    layer = two_field_layer()
    act = activate([0.0], layer)
    e = 2.0 - act.output[0]
    new = update_single_layer(layer, act, [0.0], [e], 0.0, 0.0, 0.1)
    assert new.weights[0, 0] == pytest.approx(W11_AFTER, abs=1e-12)
    assert new.weights[1, 0] == pytest.approx(W21_AFTER, abs=1e-12)
    np.testing.assert_array_equal(new.means, layer.means)


def test_update_mean_and_sigma_rules_verbatim():
    rng = np.random.default_rng(7)
    layer = CmacLayerParams(rng.uniform(-1, 1, (3, 2)), rng.uniform(0.5, 1.5, (3, 2)),
                            rng.normal(size=(3, 2)))
    x = np.array([0.3, -0.2])
    act = activate(x, layer)
    e = np.array([0.4, -0.7])
    new = update_single_layer(layer, act, x, e, 0.05, 0.03, 0.0)
    for j in range(3):
        back = sum(e[t] * layer.weights[j, t] for t in range(2))
        for i in range(2):
            d = x[i] - layer.means[j, i]
            s = layer.sigmas[j, i]
            b = act.fields[j]
            assert new.means[j, i] == pytest.approx(
                layer.means[j, i] + 0.05 * b * 2 * d / s ** 2 * back, rel=1e-13)
            assert new.sigmas[j, i] == pytest.approx(
                layer.sigmas[j, i] + 0.03 * b * 2 * d ** 2 / s ** 3 * back, rel=1e-13)


def test_update_clamps_sigma():
    layer = CmacLayerParams(np.array([[0.0]]), np.array([[0.01]]), np.array([[-50.0]]))
    act = activate([0.005], layer)
    new = update_single_layer(layer, act, [0.005], [10.0], 0.0, 1.0, 0.0)
    assert new.sigmas[0, 0] == 1e-3


def test_update_shape_mismatch():
    layer = two_field_layer()
    with pytest.raises(ShapeMismatchError):
        update_single_layer(layer, activate([0.0], layer), [0.0], [1.0, 2.0])


def test_params_validation():
    with pytest.raises(GeometryError):
        CmacLayerParams(np.zeros((2, 1)), np.array([[1.0], [0.0]]), np.zeros((2, 1)))
    with pytest.raises(ShapeMismatchError):
        CmacLayerParams(np.zeros((2, 1)), np.ones((2, 1)), np.zeros((3, 1)))
    with pytest.raises(NonFiniteInputError):
        CmacLayerParams(np.zeros((2, 1)), np.ones((2, 1)), np.array([[np.inf], [0.0]]))


def _half_sq_error(layer, x, d):
    r = d - activate(x, layer).output
    return 0.5 * float(r @ r)


def test_single_layer_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(10):
        layer = CmacLayerParams(rng.uniform(-1, 1, (4, 2)), rng.uniform(0.5, 1.5, (4, 2)),
                                rng.normal(size=(4, 2)))
        x, d = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        act = activate(x, layer)
        grads = layer_gradients(layer, act, x, -(d - act.output))
        for g, name in zip(grads[:3], ("means", "sigmas", "weights")):
            base = getattr(layer, name)
            for idx in np.ndindex(base.shape):
                arrs = {n: getattr(layer, n).copy() for n in ("means", "sigmas", "weights")}
                arrs[name][idx] += h
                up = _half_sq_error(CmacLayerParams(**arrs), x, d)
                arrs[name][idx] -= 2 * h
                down = _half_sq_error(CmacLayerParams(**arrs), x, d)
                num = (up - down) / (2 * h)
                assert abs(num - g[idx]) <= 1e-4 * max(abs(num), abs(g[idx])) + 1e-9


def test_layer_update_is_descent():
    # small rates: squared error must not grow beyond O(eps^2)
    rng = np.random.default_rng(11)
    eps = 1e-4
    for _ in range(50):
        layer = CmacLayerParams(rng.uniform(-1, 1, (4, 1)), rng.uniform(0.5, 1.5, (4, 1)),
                                rng.normal(size=(4, 1)))
        x, d = rng.uniform(-1, 1, 1), rng.uniform(-2, 2, 1)
        act = activate(x, layer)
        before = _half_sq_error(layer, x, d)
        new = update_single_layer(layer, act, x, d - act.output, eps, eps, eps)
        assert _half_sq_error(new, x, d) <= before + 1e-10
