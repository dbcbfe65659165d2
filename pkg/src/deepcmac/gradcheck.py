"""Finite-difference check of the deep CMAC backward pass.

The reference derivative of ``0.5 * ||d - y(x)||**2`` is a central
difference over a standalone forward pass that shares no code with
:func:`deepcmac.dcmac.backward_stack`.  That forward pass runs in
``np.longdouble``: in float64 the cancellation error of a 1e-6 step
(about ``eps * O / h``) is as large as the gradients being checked.
"""
from __future__ import annotations

import numpy as np

from .cmac import CmacLayerParams
from .dcmac import DcmacModel, backward_stack, forward_stack

PARAM_NAMES = ("means", "sigmas", "weights")


def random_model(rng, n_layers, max_dim=2, max_fields=4) -> DcmacModel:
    """Random stack with widths in ``[1, max_dim]`` and ``[1, max_fields]`` fields."""
    dims = rng.integers(1, max_dim + 1, size=n_layers + 1)
    layers = []
    for l in range(n_layers):
        R = int(rng.integers(1, max_fields + 1))
        layers.append(CmacLayerParams(
            rng.uniform(-1.5, 1.5, (R, dims[l])),
            rng.uniform(0.5, 1.5, (R, dims[l])),
            rng.normal(0.0, 1.0, (R, dims[l + 1]))))
    return DcmacModel(tuple(layers))


_EXT = np.longdouble


def _objective(params, x, d):
    a = x
    for means, sigmas, weights in params:
        fields = np.prod(np.exp(-((a - means) ** 2) / sigmas ** 2), axis=1)
        a = fields @ weights
    r = d - a
    return 0.5 * np.sum(r * r)


def numeric_gradients(model: DcmacModel, x, d, step=1e-6):
    """Central-difference gradients, same layout as :func:`backward_stack`."""
    x = np.asarray(x, dtype=_EXT)
    d = np.asarray(d, dtype=_EXT)
    params = [[getattr(lay, n).astype(_EXT) for n in PARAM_NAMES] for lay in model.layers]
    h = _EXT(step)
    grads = []
    for l in range(len(params)):
        per_layer = []
        for base in params[l]:
            g = np.zeros(base.shape)
            for idx in np.ndindex(base.shape):
                orig = base[idx]
                base[idx] = orig + h
                up = _objective(params, x, d)
                base[idx] = orig - h
                down = _objective(params, x, d)
                base[idx] = orig
                g[idx] = float((up - down) / (2 * h))
            per_layer.append(g)
        grads.append(tuple(per_layer))
    return grads


def analytic_gradients(model: DcmacModel, x, d):
    y, state = forward_stack(model, x)
    return backward_stack(model, state, np.asarray(d, dtype=np.float64) - y)


def compare(analytic, numeric, small=1e-6):
    """Worst relative error, and worst absolute error among tiny gradients.

    Entries whose magnitude (largest of the two estimates) is below ``small``
    are judged by absolute error; all others by relative error.
    """
    worst_rel, worst_abs = 0.0, 0.0
    for a_layer, n_layer in zip(analytic, numeric):
        for a, n in zip(a_layer, n_layer):
            scale = np.maximum(np.abs(a), np.abs(n))
            err = np.abs(a - n)
            big = scale >= small
            if np.any(big):
                worst_rel = max(worst_rel, float(np.max(err[big] / scale[big])))
            if np.any(~big):
                worst_abs = max(worst_abs, float(np.max(err[~big])))
    return worst_rel, worst_abs


def run_suite(n_instances=50, seed=0, layer_counts=(2, 3), step=1e-6,
              max_dim=2, max_fields=4):
    """Check ``n_instances`` random models, cycling through ``layer_counts``.

    Returns ``(max_relative_error, max_absolute_error_on_tiny_gradients)``.
    """
    rng = np.random.default_rng(seed)
    worst_rel, worst_abs = 0.0, 0.0
    for i in range(n_instances):
        L = layer_counts[i % len(layer_counts)]
        model = random_model(rng, L, max_dim, max_fields)
        x = rng.uniform(-1.0, 1.0, model.layer_dims[0])
        d = rng.uniform(-1.0, 1.0, model.layer_dims[-1])
        rel, ab = compare(analytic_gradients(model, x, d), numeric_gradients(model, x, d, step))
        worst_rel, worst_abs = max(worst_rel, rel), max(worst_abs, ab)
    return worst_rel, worst_abs
