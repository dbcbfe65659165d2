"""Deep CMAC: a stack of CMAC layers trained by layer-wise backpropagation.

Layer ``l`` consumes the output vector of layer ``l - 1``.  The backward
pass carries two kinds of deltas per layer:

* ``field_deltas[l]``  -- ``dO/db`` for every receptive field of layer ``l``;
* ``output_deltas[l]`` -- ``dO/dy`` for every output of layer ``l``.

A field delta is ``W @ output_delta``; the output delta of layer ``l - 1``
comes from routing the field deltas of layer ``l`` through the Gaussians,
``dO/dy_i = sum_j dO/db_j * b_j * (-2)(y_i - m_ij) / sigma_ij**2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence

import numpy as np

from . import cmac
from .cmac import CmacGeometry, CmacLayerParams
from .exceptions import NonFiniteInputError, ShapeMismatchError

FORMAT_HEADER = "deepcmac-model 1"


@dataclass(frozen=True)
class DcmacModel:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeMismatchError("a model needs at least one layer")
        for l in range(1, len(layers)):
            if layers[l].input_dim != layers[l - 1].output_dim:
                raise ShapeMismatchError(
                    f"layer {l} takes {layers[l].input_dim} inputs but layer {l - 1} "
                    f"emits {layers[l - 1].output_dim}")
        object.__setattr__(self, "layers", layers)

    @property
    def total_layers(self) -> int:
        return len(self.layers)

    @property
    def layer_dims(self) -> List[int]:
        """Input dimension followed by every layer's output dimension."""
        return [self.layers[0].input_dim] + [lay.output_dim for lay in self.layers]

    def copy(self) -> "DcmacModel":
        return DcmacModel(tuple(lay.copy() for lay in self.layers))


@dataclass
class BackpropState:
    """Per-layer inputs and activations cached by :func:`forward_stack`."""

    inputs: list
    activations: list
    field_deltas: list = field(default_factory=list)
    output_deltas: list = field(default_factory=list)


def identity_weights(layer: CmacLayerParams, geometry: CmacGeometry, n_points=601) -> np.ndarray:
    """Readout weights making a layer pass its input through.

    Least-squares fit along the diagonal ``x = u * ones`` for ``u`` spanning
    ``[lower_bound, upper_bound]``, so that ``y_t ~= u`` for every output.
    """
    u = np.linspace(geometry.lower_bound, geometry.upper_bound, n_points)
    diff = u[:, None, None] - layer.means[None]
    fields = np.prod(np.exp(-diff ** 2 / layer.sigmas[None] ** 2), axis=2)
    coef, *_ = np.linalg.lstsq(fields, u, rcond=None)
    return np.repeat(coef[:, None], layer.output_dim, axis=1)


def make_model(geometry: CmacGeometry, n_layers: int = 3, output_dim: int = 1,
               hidden_dim: int = 1, hidden_init: str = "identity") -> DcmacModel:
    """Stack ``n_layers`` CMACs sharing one geometry and initialisation.

    The last layer starts with zero weights.  ``hidden_init`` sets the
    weights of the others: ``"identity"`` (pass-through fit, see
    :func:`identity_weights`) or ``"zeros"``.  With all-zero weights and
    symmetric centers no gradient ever reaches the hidden layers, so
    ``"zeros"`` only trains the last layer's readout.
    """
    if int(n_layers) != n_layers or n_layers < 1:
        raise ValueError(f"n_layers must be a positive integer, got {n_layers!r}")
    if hidden_init not in ("identity", "zeros"):
        raise ValueError(f"unknown hidden_init {hidden_init!r}")
    layers = []
    in_dim = geometry.input_dim
    for l in range(n_layers):
        last = l == n_layers - 1
        geo = cmac.make_geometry(in_dim, geometry.as_layers, geometry.elements_per_dim,
                                 geometry.lower_bound, geometry.upper_bound)
        lay = cmac.init_layer(geo, output_dim if last else hidden_dim)
        if not last and hidden_init == "identity":
            lay = CmacLayerParams(lay.means, lay.sigmas, identity_weights(lay, geo))
        layers.append(lay)
        in_dim = lay.output_dim
    return DcmacModel(tuple(layers))


def forward_stack(model: DcmacModel, x):
    """Run ``x`` through every layer; returns ``(y_L, state)``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (model.layer_dims[0],):
        raise ShapeMismatchError(
            f"input has shape {x.shape}, model expects ({model.layer_dims[0]},)")
    inputs, acts = [], []
    a = x
    for lay in model.layers:
        act = cmac.activate(a, lay)
        inputs.append(a)
        acts.append(act)
        a = act.output
    return a, BackpropState(inputs, acts)


def _check_state(model: DcmacModel, state: BackpropState):
    if len(state.activations) != model.total_layers:
        raise ShapeMismatchError(
            f"state holds {len(state.activations)} layers, model has {model.total_layers}")
    for lay, act in zip(model.layers, state.activations):
        if act.fields.shape != (lay.n_fields,) or act.output.shape != (lay.output_dim,):
            raise ShapeMismatchError("state was not produced by this model")


def backward_stack(model: DcmacModel, state: BackpropState, error):
    """Gradients of ``0.5 * ||d - y_L||**2`` for every layer.

    ``error`` is ``d - y_L``.  Returns a list of ``(d_means, d_sigmas,
    d_weights)`` per layer (true partial derivatives, so descent subtracts
    them) and fills ``state.field_deltas`` / ``state.output_deltas``.
    """
    _check_state(model, state)
    e = np.asarray(error, dtype=np.float64).reshape(-1)
    if e.shape != (model.layer_dims[-1],):
        raise ShapeMismatchError(f"error has shape {e.shape}, expected ({model.layer_dims[-1]},)")
    L = model.total_layers
    grads = [None] * L
    field_deltas = [None] * L
    output_deltas = [None] * L
    upstream = -e
    for l in range(L - 1, -1, -1):
        lay = model.layers[l]
        output_deltas[l] = upstream
        field_deltas[l] = lay.weights @ upstream
        d_m, d_s, d_w, d_in = cmac.layer_gradients(
            lay, state.activations[l], state.inputs[l], upstream)
        grads[l] = (d_m, d_s, d_w)
        upstream = d_in
    state.field_deltas = field_deltas
    state.output_deltas = output_deltas
    return grads


def _per_layer(rate, L):
    if np.ndim(rate) == 0:
        return [float(rate)] * L
    rate = [float(r) for r in rate]
    if len(rate) != L:
        raise ShapeMismatchError(f"expected {L} per-layer rates, got {len(rate)}")
    return rate


def train_step(model: DcmacModel, x, d, rate_m=1e-3, rate_sigma=1e-3, rate_w=1e-3,
               sigma_floor=cmac.SIGMA_FLOOR):
    """One forward/backward pass and update on a single sample.

    Rates may be scalars or one value per layer.  Returns the updated model
    and the squared error ``||d - y_L||**2`` measured before the update.
    """
    d = np.atleast_1d(np.asarray(d, dtype=np.float64))
    if not np.all(np.isfinite(d)):
        raise NonFiniteInputError("desired output contains non-finite values")
    y, state = forward_stack(model, x)
    e = d - y
    grads = backward_stack(model, state, e)
    L = model.total_layers
    rm, rs, rw = _per_layer(rate_m, L), _per_layer(rate_sigma, L), _per_layer(rate_w, L)
    new_layers = []
    for l, (lay, (g_m, g_s, g_w)) in enumerate(zip(model.layers, grads)):
        new_layers.append(CmacLayerParams(
            lay.means - rm[l] * g_m,
            np.maximum(lay.sigmas - rs[l] * g_s, sigma_floor),
            lay.weights - rw[l] * g_w))
    return DcmacModel(tuple(new_layers)), float(e @ e)


def predict_batch(model: DcmacModel, X) -> np.ndarray:
    """Vectorised forward pass over the rows of ``X`` (no caching)."""
    A = np.asarray(X, dtype=np.float64)
    for lay in model.layers:
        diff = A[:, None, :] - lay.means[None]
        fields = np.prod(np.exp(-diff ** 2 / lay.sigmas[None] ** 2), axis=2)
        A = fields @ lay.weights
    return A


def pack_model(model: DcmacModel):
    """Zero-padded ``(L, R, N)`` arrays plus per-layer dims for the compiled loop."""
    L = model.total_layers
    R = max(lay.n_fields for lay in model.layers)
    N = max(lay.input_dim for lay in model.layers)
    M = max(lay.output_dim for lay in model.layers)
    means = np.zeros((L, R, N))
    sigmas = np.ones((L, R, N))
    weights = np.zeros((L, R, M))
    dims = np.zeros((L, 3), dtype=np.int64)
    for l, lay in enumerate(model.layers):
        r, n = lay.means.shape
        means[l, :r, :n] = lay.means
        sigmas[l, :r, :n] = lay.sigmas
        weights[l, :r, :lay.output_dim] = lay.weights
        dims[l] = (n, r, lay.output_dim)
    return means, sigmas, weights, dims


def unpack_model(means, sigmas, weights, dims) -> DcmacModel:
    layers = []
    for l, (n, r, m) in enumerate(dims):
        layers.append(CmacLayerParams(means[l, :r, :n].copy(), sigmas[l, :r, :n].copy(),
                                      weights[l, :r, :m].copy()))
    return DcmacModel(tuple(layers))


# -- checkpoint text format -------------------------------------------------
#
#   deepcmac-model 1
#   L <n_layers>
#   layer <l> <input_dim> <n_fields> <output_dim>     (one line per layer)
#   m <l> <hex floats, row-major>                     (then sigma, w; per layer)
#
# Floats are written with float.hex(), so a round trip is exact.

def dumps_model(model: DcmacModel) -> str:
    lines = [FORMAT_HEADER, f"L {model.total_layers}"]
    for l, lay in enumerate(model.layers):
        lines.append(f"layer {l} {lay.input_dim} {lay.n_fields} {lay.output_dim}")
    for l, lay in enumerate(model.layers):
        for key, arr in (("m", lay.means), ("sigma", lay.sigmas), ("w", lay.weights)):
            lines.append(f"{key} {l} " + " ".join(float(v).hex() for v in arr.ravel()))
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> DcmacModel:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or " ".join(lines[0]) != FORMAT_HEADER:
        raise ValueError("not a deepcmac model file")
    if lines[1][0] != "L":
        raise ValueError("expected 'L <count>' on line 2")
    L = int(lines[1][1])
    shapes = []
    for l in range(L):
        tok = lines[2 + l]
        if tok[0] != "layer" or int(tok[1]) != l:
            raise ValueError(f"malformed layer header for layer {l}")
        shapes.append(tuple(int(t) for t in tok[2:5]))
    arrays = {}
    for tok in lines[2 + L:]:
        key, l = tok[0], int(tok[1])
        n_in, n_fields, n_out = shapes[l]
        cols = n_out if key == "w" else n_in
        vals = np.array([float.fromhex(t) for t in tok[2:]], dtype=np.float64)
        arrays[key, l] = vals.reshape(n_fields, cols)
    layers = tuple(CmacLayerParams(arrays["m", l], arrays["sigma", l], arrays["w", l])
                   for l in range(L))
    return DcmacModel(layers)


def save_model(model: DcmacModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> DcmacModel:
    return loads_model(Path(path).read_text())
