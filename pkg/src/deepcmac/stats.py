"""Dependent (paired) t-test with a self-contained Student-t tail.

The two-sided tail probability of Student's t with ``df`` degrees of
freedom is the regularized incomplete beta ``I_x(df/2, 1/2)`` at
``x = df / (df + t**2)``.  ``I_x`` is evaluated with the modified Lentz
continued fraction, switching to the symmetry relation
``I_x(a, b) = 1 - I_{1-x}(b, a)`` when ``x > (a + 1) / (a + b + 2)``.
"""
from __future__ import annotations

import math

import numpy as np

from .exceptions import ZeroVarianceError

_TINY = 1e-300
_EPS = 1e-16
_MAX_ITER = 500


def _beta_cf(a, b, x):
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def regularized_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    return regularized_beta(0.5 * df, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_two_sided_p(t, df)
    return 1.0 - tail if t > 0 else tail


def paired_t_test(a, b):
    """Dependent-samples t-test of ``mean(a - b) == 0``.

    Returns ``(t, p)`` with a two-sided ``p`` on ``len(a) - 1`` degrees of
    freedom.

    Raises
    ------
    ZeroVarianceError
        When all differences are identical.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("samples must be 1-D and of equal length")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least two pairs")
    diff = a - b
    sd = float(np.std(diff, ddof=1))
    if sd == 0.0:
        raise ZeroVarianceError("differences have zero variance")
    t = float(np.mean(diff)) / (sd / math.sqrt(n))
    return t, t_two_sided_p(t, n - 1)
