"""
Truncated power series on numpy arrays.

A series is an array whose first axis runs over the coefficients a_0, a_1, ... of
a_0 + a_1 h + a_2 h^2 + ...; any trailing axes are a batch of independent series
evaluated together (one per sample point).
"""
import math
from typing import Optional

import numpy as np


def factorials(count: int) -> np.ndarray:
    return np.array([math.factorial(j) for j in range(count)], dtype=float)


def _expand(weights: np.ndarray, like: np.ndarray) -> np.ndarray:
    return weights.reshape((-1,) + (1,) * (like.ndim - 1))


def taylor_from_derivatives(derivs: np.ndarray) -> np.ndarray:
    """ f, f', f'', ... -> f, f', f''/2!, ... """
    derivs = np.asarray(derivs, dtype=float)
    return derivs / _expand(factorials(derivs.shape[0]), derivs)


def derivatives_from_taylor(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    return coeffs * _expand(factorials(coeffs.shape[0]), coeffs)


def _batch_shape(*series: np.ndarray) -> tuple:
    return np.broadcast_shapes(*(s.shape[1:] for s in series))


def mul(a: np.ndarray, b: np.ndarray, order: Optional[int] = None) -> np.ndarray:
    if order is None:
        order = min(a.shape[0], b.shape[0]) - 1
    out = np.zeros((order + 1,) + _batch_shape(a, b), dtype=np.result_type(a, b))
    for k in range(order + 1):
        for i in range(max(0, k - b.shape[0] + 1), min(k, a.shape[0] - 1) + 1):
            out[k] = out[k] + a[i] * b[k - i]
    return out


def reciprocal(a: np.ndarray, order: Optional[int] = None) -> np.ndarray:
    """ 1/a for a series with nonzero constant term """
    if order is None:
        order = a.shape[0] - 1
    out = np.zeros((order + 1,) + a.shape[1:], dtype=a.dtype)
    out[0] = 1.0 / a[0]
    for k in range(1, order + 1):
        acc = np.zeros(a.shape[1:], dtype=a.dtype)
        for i in range(1, min(k, a.shape[0] - 1) + 1):
            acc = acc + a[i] * out[k - i]
        out[k] = -acc / a[0]
    return out


def divide(num: np.ndarray, den: np.ndarray, valuation: int = 0, order: Optional[int] = None) -> np.ndarray:
    """
    num/den where both series vanish to the given order; the leading
    `valuation` coefficients of each are dropped before dividing.
    """
    num, den = num[valuation:], den[valuation:]
    if order is None:
        order = min(num.shape[0], den.shape[0]) - 1
    return mul(num, reciprocal(den, order), order)


def compose(outer: np.ndarray, inner: np.ndarray, order: Optional[int] = None) -> np.ndarray:
    """ outer(inner(h)) where inner has zero constant term (ignored) """
    if order is None:
        order = inner.shape[0] - 1
    inner = inner.copy()
    inner[0] = 0.0
    batch = _batch_shape(outer, inner)
    out = np.zeros((order + 1,) + batch, dtype=np.result_type(outer, inner))
    out[0] = outer[-1]
    for j in range(outer.shape[0] - 2, -1, -1):
        out = mul(out, inner, order)
        out[0] = out[0] + outer[j]
    return out


def reversion(a: np.ndarray, order: Optional[int] = None) -> np.ndarray:
    """
    Compositional inverse b of a series a with a_0 = 0 and a_1 != 0,
    so that a(b(s)) = s to the given order.
    """
    if order is None:
        order = a.shape[0] - 1
    b = np.zeros((order + 1,) + a.shape[1:], dtype=a.dtype)
    b[1] = 1.0 / a[1]
    for k in range(2, order + 1):
        partial = compose(a[: k + 1], b[: k + 1], k)
        b[k] = -partial[k] / a[1]
    return b


def shift(a: np.ndarray, offset: np.ndarray, order: Optional[int] = None) -> np.ndarray:
    """ Re-expand sum a_k h^k about h = offset """
    if order is None:
        order = a.shape[0] - 1
    offset = np.asarray(offset, dtype=float)
    out = np.zeros((order + 1,) + np.broadcast_shapes(a.shape[1:], offset.shape), dtype=a.dtype)
    for j in range(order + 1):
        for k in range(j, a.shape[0]):
            out[j] = out[j] + a[k] * math.comb(k, j) * offset ** (k - j)
    return out


def cos_series(theta0: np.ndarray, order: int) -> np.ndarray:
    """ Taylor coefficients of cos(theta0 + h) """
    theta0 = np.asarray(theta0, dtype=float)
    derivs = np.stack([np.cos(theta0 + j * np.pi / 2) for j in range(order + 1)])
    return taylor_from_derivatives(derivs)


def sin_series(theta0: np.ndarray, order: int) -> np.ndarray:
    """ Taylor coefficients of sin(theta0 + h) """
    theta0 = np.asarray(theta0, dtype=float)
    derivs = np.stack([np.sin(theta0 + j * np.pi / 2) for j in range(order + 1)])
    return taylor_from_derivatives(derivs)


def laurent_of_reciprocal(taylor: np.ndarray, order: int, count: int) -> np.ndarray:
    """
    Coefficients c_{-m}, c_{-m+1}, ... (`count` of them) of 1/f, given the
    Taylor coefficients of f at a zero of order m.
    """
    if taylor.shape[0] < order + count:
        raise ValueError(f"need {order + count} Taylor coefficients, got {taylor.shape[0]}")
    return reciprocal(taylor[order : order + count], count - 1)


def evaluate(a: np.ndarray, h: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(a.shape[1:], np.shape(h)))
    for coeff in a[::-1]:
        out = out * h + coeff
    return out
