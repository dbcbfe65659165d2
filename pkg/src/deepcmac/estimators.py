"""scikit-learn compatible adaptive filters.

All estimators learn online, one sample at a time, in the order the rows
are given.  ``fit`` starts from a fresh initialisation and makes ``epochs``
passes over the data; ``partial_fit`` makes one more pass from the current
state.  After every pass the a-priori mean squared error (errors measured
before each sample's update) is appended to ``epoch_mse_`` and the
a-priori outputs of that pass are kept in ``last_outputs_``.

Training stops early and sets ``diverged_`` when an epoch's MSE is not
finite or exceeds ``divergence_threshold``.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _kernels
from .cmac import SIGMA_FLOOR, CmacLayerParams, make_geometry
from .dcmac import DcmacModel, make_model, pack_model, predict_batch, unpack_model

DIVERGENCE_THRESHOLD = 1e6


class _OnlineRegressor(RegressorMixin, BaseEstimator):
    """Shared epoch bookkeeping; subclasses supply ``_init_state`` and ``_run_epoch``."""

    def fit(self, X, y):
        X, Y = self._validate(X, y, reset=True)
        self._init_state(X, Y)
        self.epoch_mse_ = []
        self.diverged_ = False
        for _ in range(int(self.epochs)):
            if not self._epoch(X, Y):
                break
        return self

    def partial_fit(self, X, y):
        first = not hasattr(self, "epoch_mse_")
        X, Y = self._validate(X, y, reset=first)
        if first:
            self._init_state(X, Y)
            self.epoch_mse_ = []
            self.diverged_ = False
        self._epoch(X, Y)
        return self

    def _epoch(self, X, Y):
        mse, out = self._run_epoch(X, Y)
        self.epoch_mse_.append(mse)
        self.last_outputs_ = out if self._multi_output else out[:, 0]
        if not math.isfinite(mse) or mse > self.divergence_threshold:
            self.diverged_ = True
            return False
        return True

    def _validate(self, X, y, reset):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True, dtype=np.float64)
        if reset:
            self.n_features_in_ = X.shape[1]
            self._multi_output = y.ndim == 2
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        Y = y.reshape(len(y), -1)
        return np.ascontiguousarray(X), np.ascontiguousarray(Y)


class DCMACRegressor(_OnlineRegressor):
    """Deep CMAC regressor (a single CMAC when ``n_layers == 1``).

    Parameters
    ----------
    n_layers : int
        Number of stacked CMAC layers.
    as_layers, elements_per_dim, lower_bound, upper_bound
        Block geometry shared by every layer.
    rate_m, rate_sigma, rate_w : float
        Learning rates for means, widths and weights (all layers).
    hidden_dim : int
        Output width of every layer except the last.
    hidden_init : {"identity", "zeros"}
        Initial readout of the hidden layers.
    epochs : int
        Passes made by ``fit``.
    """

    def __init__(self, n_layers=3, as_layers=4, elements_per_dim=5, lower_bound=-3.0,
                 upper_bound=3.0, rate_m=1e-3, rate_sigma=1e-3, rate_w=1e-3,
                 hidden_dim=1, hidden_init="identity", sigma_floor=SIGMA_FLOOR, epochs=1,
                 divergence_threshold=DIVERGENCE_THRESHOLD):
        self.n_layers = n_layers
        self.as_layers = as_layers
        self.elements_per_dim = elements_per_dim
        self.lower_bound = lower_bound
        self.upper_bound = upper_bound
        self.rate_m = rate_m
        self.rate_sigma = rate_sigma
        self.rate_w = rate_w
        self.hidden_dim = hidden_dim
        self.hidden_init = hidden_init
        self.sigma_floor = sigma_floor
        self.epochs = epochs
        self.divergence_threshold = divergence_threshold

    def _build_model(self, input_dim, output_dim) -> DcmacModel:
        geo = make_geometry(input_dim, self.as_layers, self.elements_per_dim,
                            self.lower_bound, self.upper_bound)
        return make_model(geo, self.n_layers, output_dim, self.hidden_dim, self.hidden_init)

    def _init_state(self, X, Y):
        self.model_ = self._build_model(X.shape[1], Y.shape[1])

    def _run_epoch(self, X, Y):
        means, sigmas, weights, dims = pack_model(self.model_)
        L = len(dims)
        out = np.empty_like(Y)
        total = _kernels.stack_epoch(
            means, sigmas, weights, dims, X, Y,
            np.full(L, float(self.rate_m)), np.full(L, float(self.rate_sigma)),
            np.full(L, float(self.rate_w)), float(self.sigma_floor), out)
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(sigmas))
                and np.all(np.isfinite(weights))):
            return math.inf, out
        self.model_ = unpack_model(means, sigmas, weights, dims)
        return total / X.shape[0], out

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        Y = predict_batch(self.model_, X)
        return Y if self._multi_output else Y[:, 0]


class CMACRegressor(DCMACRegressor):
    """Single-layer CMAC regressor."""

    def __init__(self, as_layers=4, elements_per_dim=5, lower_bound=-3.0, upper_bound=3.0,
                 rate_m=1e-3, rate_sigma=1e-3, rate_w=1e-3, sigma_floor=SIGMA_FLOOR,
                 epochs=1, divergence_threshold=DIVERGENCE_THRESHOLD):
        super().__init__(n_layers=1, as_layers=as_layers, elements_per_dim=elements_per_dim,
                         lower_bound=lower_bound, upper_bound=upper_bound, rate_m=rate_m,
                         rate_sigma=rate_sigma, rate_w=rate_w, sigma_floor=sigma_floor,
                         epochs=epochs, divergence_threshold=divergence_threshold)


class VolterraRegressor(_OnlineRegressor):
    """Second-order Volterra filter over a single input stream.

    ``X`` is one column holding the reference sequence; the delay line of
    ``n_taps`` past samples is built internally and carries over between
    epochs.  ``predict`` filters ``X`` with frozen coefficients, starting
    from an empty delay line.
    """

    _quadratic = True

    def __init__(self, n_taps=4, step_size=1e-2, epochs=1,
                 divergence_threshold=DIVERGENCE_THRESHOLD):
        self.n_taps = n_taps
        self.step_size = step_size
        self.epochs = epochs
        self.divergence_threshold = divergence_threshold

    def _validate(self, X, y, reset):
        X, Y = super()._validate(X, y, reset)
        if X.shape[1] != 1 or Y.shape[1] != 1:
            raise ValueError("tapped-delay filters take one input and one target column")
        return X, Y

    def _init_state(self, X, Y):
        if int(self.n_taps) < 1:
            raise ValueError("n_taps must be >= 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        P = int(self.n_taps)
        self.linear_taps_ = np.zeros(P)
        self.quadratic_taps_ = np.zeros((P, P))
        self.delay_line_ = np.zeros(P)

    def _run_epoch(self, X, Y):
        out = np.empty(X.shape[0])
        total = _kernels.volterra_epoch(self.linear_taps_, self.quadratic_taps_, self.delay_line_,
                                        X[:, 0], Y[:, 0], float(self.step_size),
                                        self._quadratic, out)
        return total / X.shape[0], out[:, None]

    def predict(self, X):
        check_is_fitted(self, "linear_taps_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 1:
            raise ValueError("tapped-delay filters take one input column")
        out = np.empty(X.shape[0])
        _kernels.volterra_epoch(self.linear_taps_.copy(), self.quadratic_taps_.copy(),
                                np.zeros(int(self.n_taps)), X[:, 0], np.zeros(X.shape[0]),
                                0.0, self._quadratic, out)
        return out


class LMSRegressor(VolterraRegressor):
    """Linear LMS filter (a Volterra filter without quadratic terms)."""

    _quadratic = False
