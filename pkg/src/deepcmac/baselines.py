"""Linear LMS and second-order Volterra adaptive filters.

Both work on a tapped delay line ``[x_k, x_{k-1}, ..., x_{k-P+1}]`` that
starts at zero.  The Volterra filter adds the quadratic terms
``h_ij x_{k-i} x_{k-j}`` for ``i <= j`` and adapts every coefficient with
the same step size.  Neither has a bias/DC term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NonFiniteInputError

DEFAULT_TAPS = (2, 4, 8, 16)
DEFAULT_STEPS = (1e-3, 1e-2, 1e-1)


def _check_sample(*values):
    for v in values:
        if not math.isfinite(v):
            raise NonFiniteInputError(f"non-finite sample {v!r}")


def _shift(delay, sample):
    out = np.empty_like(delay)
    out[1:] = delay[:-1]
    out[0] = sample
    return out


@dataclass(frozen=True)
class LmsFilter:
    taps: np.ndarray
    step_size: float
    delay_line: np.ndarray

    @classmethod
    def zeros(cls, n_taps: int, step_size: float) -> "LmsFilter":
        if n_taps < 1:
            raise ValueError("n_taps must be >= 1")
        if not step_size > 0:
            raise ValueError("step_size must be positive")
        return cls(np.zeros(n_taps), float(step_size), np.zeros(n_taps))


@dataclass(frozen=True)
class VolterraFilter:
    linear_taps: np.ndarray
    quadratic_taps: np.ndarray
    step_size: float
    delay_line: np.ndarray

    @classmethod
    def zeros(cls, n_taps: int, step_size: float) -> "VolterraFilter":
        if n_taps < 1:
            raise ValueError("n_taps must be >= 1")
        if not step_size > 0:
            raise ValueError("step_size must be positive")
        return cls(np.zeros(n_taps), np.zeros((n_taps, n_taps)), float(step_size),
                   np.zeros(n_taps))


def lms_step(filt: LmsFilter, sample: float, desired: float):
    """Shift ``sample`` in, filter, adapt.  Returns ``(y, e, new_filter)``."""
    _check_sample(sample, desired)
    delay = _shift(filt.delay_line, sample)
    y = float(np.dot(filt.taps, delay))
    e = desired - y
    taps = filt.taps + filt.step_size * e * delay
    return y, e, LmsFilter(taps, filt.step_size, delay)


def _quadratic_products(delay):
    P = delay.shape[0]
    iu = np.triu_indices(P)
    return iu, delay[iu[0]] * delay[iu[1]]


def volterra_step(filt: VolterraFilter, sample: float, desired: float):
    """Second-order Volterra counterpart of :func:`lms_step`."""
    _check_sample(sample, desired)
    delay = _shift(filt.delay_line, sample)
    iu, prods = _quadratic_products(delay)
    y = float(np.dot(filt.linear_taps, delay))
    for h, p in zip(filt.quadratic_taps[iu], prods):
        y += h * p
    e = desired - y
    mu = filt.step_size
    linear = filt.linear_taps + mu * e * delay
    quad = filt.quadratic_taps.copy()
    quad[iu] = quad[iu] + mu * e * prods
    return y, e, VolterraFilter(linear, quad, mu, delay)
