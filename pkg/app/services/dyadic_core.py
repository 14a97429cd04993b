# app/services/dyadic_core.py
"""Integer model of dyadic lines and their deviations from ideal lines.

All quantities are numerators over the common denominator d = 2**p - 1:
E(x, t) = num(x, t) / d and E_i(x) = ei_num(x, i) / d.
"""
import logging

import numpy as np

from app.core.errors import ArgumentError
from app.models.dyadic import DeviationNumerator, DyadicParams

logger = logging.getLogger(__name__)


def _check_coord(name: str, value: int, upper: int) -> None:
    if not 0 <= value < upper:
        raise ArgumentError(f"{name} must be in [0, {upper - 1}], got {value}")


def basic_line(x: int, i: int, params: DyadicParams) -> int:
    """round(2**i * x / d) as floor((2 * 2**i * x + d) / (2 * d)).

    d is odd, so the half-way case never occurs.
    """
    _check_coord("x", x, params.n)
    _check_coord("i", i, params.p)
    d = params.denom
    return (2 * (x << i) + d) // (2 * d)


def dyadic_line(x: int, t: int, params: DyadicParams) -> int:
    """D(x, t): sum of the basic lines selected by the binary digits of t."""
    _check_coord("x", x, params.n)
    _check_coord("t", t, params.n)
    return sum(basic_line(x, i, params) for i in range(params.p) if (t >> i) & 1)


def deviation_num(x: int, t: int, params: DyadicParams) -> DeviationNumerator:
    d_xt = dyadic_line(x, t, params)
    return DeviationNumerator(x=x, t=t, num=params.denom * d_xt - t * x, denom=params.denom)


def ei_num(x: int, i: int, params: DyadicParams) -> int:
    return params.denom * basic_line(x, i, params) - (x << i)


def rotl(x: int, i: int, params: DyadicParams) -> int:
    """Circular left shift of the p-bit string of x by i positions."""
    _check_coord("x", x, params.n)
    p = params.p
    i %= p
    return ((x << i) | (x >> (p - i))) & (params.n - 1)


# Vectorized tables. Arrays are int64; every intermediate stays below 2**50 for p <= 24.

def basic_lines(xs: np.ndarray, params: DyadicParams) -> np.ndarray:
    """Table B[i, k] = basic_line(xs[k], i), shape (p, len(xs))."""
    xs = np.asarray(xs, dtype=np.int64)
    d = params.denom
    shifts = np.arange(params.p, dtype=np.int64)[:, None]
    return (2 * (xs[None, :] << shifts) + d) // (2 * d)


def ei_nums(xs: np.ndarray, params: DyadicParams) -> np.ndarray:
    """Table e[i, k] = ei_num(xs[k], i), shape (p, len(xs))."""
    xs = np.asarray(xs, dtype=np.int64)
    shifts = np.arange(params.p, dtype=np.int64)[:, None]
    return params.denom * basic_lines(xs, params) - (xs[None, :] << shifts)


def slope_bits(ts: np.ndarray, params: DyadicParams) -> np.ndarray:
    """bits[k, i] = i-th binary digit of ts[k], shape (len(ts), p)."""
    ts = np.asarray(ts, dtype=np.int64)
    return (ts[:, None] >> np.arange(params.p, dtype=np.int64)[None, :]) & 1


def dyadic_block(x_start: int, x_stop: int, params: DyadicParams) -> np.ndarray:
    """D(x, t) for every t and x in [x_start, x_stop), shape (n, x_stop - x_start), indexed [t, x]."""
    xs = np.arange(x_start, x_stop, dtype=np.int64)
    return slope_bits(np.arange(params.n, dtype=np.int64), params) @ basic_lines(xs, params)


def deviation_block(x_start: int, x_stop: int, params: DyadicParams) -> np.ndarray:
    """num(x, t) for every t and x in [x_start, x_stop), indexed [t, x]."""
    xs = np.arange(x_start, x_stop, dtype=np.int64)
    ts = np.arange(params.n, dtype=np.int64)
    return params.denom * dyadic_block(x_start, x_stop, params) - ts[:, None] * xs[None, :]


def deviation_pairs(xs: np.ndarray, ts: np.ndarray, params: DyadicParams) -> np.ndarray:
    """num(xs[k], ts[k]) elementwise."""
    xs = np.asarray(xs, dtype=np.int64)
    ts = np.asarray(ts, dtype=np.int64)
    e = ei_nums(xs, params)
    bits = slope_bits(ts, params).T
    return (bits * e).sum(axis=0)


def rotl_array(xs: np.ndarray, i: int, params: DyadicParams) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    p = params.p
    i %= p
    return ((xs << i) | (xs >> (p - i))) & (params.n - 1)


def exact_sum(values: np.ndarray) -> int:
    """Overflow-free integer sum of an int64 array, returned as a Python int."""
    values = np.asarray(values, dtype=np.int64).ravel()
    if values.size == 0:
        return 0
    hi = values >> 32
    lo = values & 0xFFFFFFFF
    return (int(hi.sum()) << 32) + int(lo.sum())
