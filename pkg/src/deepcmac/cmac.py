"""Single-layer CMAC with Gaussian receptive fields.

A layer maps an input vector ``x`` (length ``N``) through ``N_R`` receptive
fields.  Field ``j`` pairs the ``j``-th block of every input dimension, so
its activation is the product of one Gaussian per dimension::

    phi[j, i] = exp(-(x[i] - m[j, i])**2 / sigma[j, i]**2)
    b[j]      = prod_i phi[j, i]
    y[t]      = sum_j w[j, t] * b[j]

Arrays are stored receptive-field-major: ``means`` and ``sigmas`` are
``(N_R, N)``, ``weights`` is ``(N_R, M)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import GeometryError, NonFiniteInputError, ShapeMismatchError

#: Lower clamp applied to every width after an update.
SIGMA_FLOOR = 1e-3


@dataclass(frozen=True)
class CmacGeometry:
    """Block layout of the association memory for one CMAC.

    ``blocks_per_dim`` is ``ceil(elements_per_dim / as_layers) * as_layers``
    and every block index forms one receptive field, so
    ``receptive_fields == blocks_per_dim``.
    """

    input_dim: int
    as_layers: int
    elements_per_dim: int
    lower_bound: float
    upper_bound: float
    blocks_per_dim: int
    receptive_fields: int

    @property
    def block_width(self) -> float:
        return (self.upper_bound - self.lower_bound) / (self.blocks_per_dim + 2)


def make_geometry(input_dim=1, as_layers=4, elements_per_dim=5,
                  lower_bound=-3.0, upper_bound=3.0) -> CmacGeometry:
    """Build a :class:`CmacGeometry`, deriving the block and field counts.

    Raises
    ------
    GeometryError
        If a count is below one or ``lower_bound >= upper_bound``.
    """
    for name, value in (("input_dim", input_dim), ("as_layers", as_layers),
                        ("elements_per_dim", elements_per_dim)):
        if int(value) != value or value < 1:
            raise GeometryError(f"{name} must be a positive integer, got {value!r}")
    lower_bound = float(lower_bound)
    upper_bound = float(upper_bound)
    if not (math.isfinite(lower_bound) and math.isfinite(upper_bound)):
        raise GeometryError("bounds must be finite")
    if lower_bound >= upper_bound:
        raise GeometryError(
            f"lower_bound ({lower_bound}) must be below upper_bound ({upper_bound})")
    as_layers = int(as_layers)
    blocks = -(-int(elements_per_dim) // as_layers) * as_layers
    return CmacGeometry(int(input_dim), as_layers, int(elements_per_dim),
                        lower_bound, upper_bound, blocks, blocks)


def block_centers(geometry: CmacGeometry) -> np.ndarray:
    """Initial Gaussian means along one input dimension.

    The range is cut into ``N_B + 2`` equal steps; the ``N_B`` centers form a
    symmetric grid with that spacing.  For even ``N_B`` the midpoint is
    skipped, which over ``[-3, 3]`` with eight blocks gives
    ``+-0.6, +-1.2, +-1.8, +-2.4``.
    """
    nb = geometry.blocks_per_dim
    h = geometry.block_width
    mid = 0.5 * (geometry.lower_bound + geometry.upper_bound)
    if nb % 2:
        offsets = np.arange(-(nb // 2), nb // 2 + 1, dtype=np.float64)
    else:
        half = np.arange(1, nb // 2 + 1, dtype=np.float64)
        offsets = np.concatenate([-half[::-1], half])
    return mid + h * offsets


@dataclass(frozen=True)
class CmacLayerParams:
    """Means, widths and readout weights of one CMAC layer."""

    means: np.ndarray
    sigmas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("means", "sigmas", "weights"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise ShapeMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
            object.__setattr__(self, name, arr)
        if self.means.shape != self.sigmas.shape:
            raise ShapeMismatchError(
                f"means {self.means.shape} and sigmas {self.sigmas.shape} differ")
        if self.weights.shape[0] != self.means.shape[0]:
            raise ShapeMismatchError(
                f"weights have {self.weights.shape[0]} rows, expected {self.means.shape[0]}")
        for name in ("means", "sigmas", "weights"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NonFiniteInputError(f"{name} contain non-finite entries")
        if np.any(self.sigmas <= 0):
            raise GeometryError("all sigmas must be positive")

    @property
    def n_fields(self) -> int:
        return self.means.shape[0]

    @property
    def input_dim(self) -> int:
        return self.means.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "CmacLayerParams":
        return CmacLayerParams(self.means.copy(), self.sigmas.copy(), self.weights.copy())


@dataclass(frozen=True)
class Activation:
    """Cached forward pass of one layer: excitations, field values, output."""

    excitations: np.ndarray
    fields: np.ndarray
    output: np.ndarray


def init_layer(geometry: CmacGeometry, output_dim: int = 1) -> CmacLayerParams:
    """Means at the block centers, widths equal to the block size, zero weights."""
    if int(output_dim) != output_dim or output_dim < 1:
        raise GeometryError(f"output_dim must be a positive integer, got {output_dim!r}")
    centers = block_centers(geometry)
    means = np.repeat(centers[:, None], geometry.input_dim, axis=1)
    sigmas = np.full_like(means, geometry.block_width)
    weights = np.zeros((geometry.receptive_fields, int(output_dim)))
    return CmacLayerParams(means, sigmas, weights)


def _as_input(x, layer: CmacLayerParams) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (layer.input_dim,):
        raise ShapeMismatchError(
            f"input has shape {x.shape}, layer expects ({layer.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError("input contains non-finite values")
    return x


def excite(x, layer: CmacLayerParams) -> np.ndarray:
    """Gaussian excitation matrix ``phi`` of shape ``(N_R, N)``."""
    x = _as_input(x, layer)
    return np.exp(-((x - layer.means) ** 2) / layer.sigmas ** 2)


def activate(x, layer: CmacLayerParams) -> Activation:
    """Forward pass through one layer."""
    x = _as_input(x, layer)
    phi = np.exp(-((x - layer.means) ** 2) / layer.sigmas ** 2)
    b = np.prod(phi, axis=1)
    return Activation(phi, b, b @ layer.weights)


def layer_gradients(layer: CmacLayerParams, activation: Activation, x, upstream):
    """Gradients of the objective through one layer.

    ``upstream`` is ``dO/dy`` for this layer's output.  Returns
    ``(d_means, d_sigmas, d_weights, d_input)``, each the true partial
    derivative of the objective (descent subtracts them).
    """
    x = _as_input(x, layer)
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if upstream.shape != (layer.output_dim,):
        raise ShapeMismatchError(
            f"upstream gradient has shape {upstream.shape}, expected ({layer.output_dim},)")
    b = activation.fields
    diff = x - layer.means
    s2 = layer.sigmas ** 2
    d_fields = layer.weights @ upstream
    coef = (d_fields * b)[:, None]
    d_means = coef * 2.0 * diff / s2
    d_sigmas = coef * 2.0 * diff ** 2 / (s2 * layer.sigmas)
    d_weights = np.outer(b, upstream)
    d_input = -np.sum(d_means, axis=0)
    return d_means, d_sigmas, d_weights, d_input


def update_single_layer(layer: CmacLayerParams, activation: Activation, x, error,
                        rate_m=1e-3, rate_sigma=1e-3, rate_w=1e-3,
                        sigma_floor=SIGMA_FLOOR) -> CmacLayerParams:
    """One online update of a standalone CMAC.

    ``error`` is ``d - y`` for the sample that produced ``activation``.
    Every parameter moves along ``+rate * b_j * (...) * sum_t e_t w_jt``
    (means and widths) or ``+rate * e_t * b_j`` (weights), all evaluated at
    the pre-update values; widths are then clamped at ``sigma_floor``.
    """
    x = _as_input(x, layer)
    e = np.asarray(error, dtype=np.float64).reshape(-1)
    if e.shape != (layer.output_dim,):
        raise ShapeMismatchError(f"error has shape {e.shape}, expected ({layer.output_dim},)")
    if not np.all(np.isfinite(e)):
        raise NonFiniteInputError("error contains non-finite values")
    b = activation.fields
    m, s, w = layer.means, layer.sigmas, layer.weights
    back = (w @ e)[:, None]
    diff = x - m
    new_m = m + rate_m * b[:, None] * (2.0 * diff / s ** 2) * back
    new_s = s + rate_sigma * b[:, None] * (2.0 * diff ** 2 / s ** 3) * back
    new_w = w + rate_w * np.outer(b, e)
    return CmacLayerParams(new_m, np.maximum(new_s, sigma_floor), new_w)
