# app/services/fht_service.py
"""Fast Hough transform over dyadic lines."""
import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from app.core.errors import ArgumentError, ConsistencyError, DimensionError
from app.models.dyadic import DyadicParams, HoughAccumulator, Image, Quadrant
from app.services.dyadic_core import basic_lines, slope_bits

logger = logging.getLogger(__name__)

ShiftRule = Callable[[int], Tuple[int, int]]
QuadrantTransform = Callable[[Image], HoughAccumulator]

# Pixel maps applied before the Q0 transform. pixels are indexed [y, x].
FLIP_CONVENTIONS: Dict[Quadrant, str] = {
    Quadrant.Q0: "identity: pixel'(x, y) = pixel(x, y)",
    Quadrant.Q1: "transpose: pixel'(x, y) = pixel(y, x)",
    Quadrant.Q2: "mirror_x: pixel'(x, y) = pixel(n - 1 - x, y)",
    Quadrant.Q3: "transpose(mirror_x): pixel'(x, y) = pixel(n - 1 - y, x)",
}


def dyadic_shift_rule(t: int) -> Tuple[int, int]:
    """Slope index shared by both halves, and the shift of the right half."""
    return t >> 1, (t + 1) >> 1


def fht_quadrant(img: Image, shift_rule: Optional[ShiftRule] = None) -> HoughAccumulator:
    """
    Line sums over every dyadic line y = D(x, t) + h of the image.

    Strips of width m are merged pairwise into strips of width 2m, bottom-up,
    with two ping-pong buffers of shape (n, 2n - 1). Row s*m + t of a buffer
    holds the sums of strip s for slope t, column h + n - 1 for shift h.

    Args:
        img: square image with side 2**p
        shift_rule: maps t to (slope index of both halves, shift of the right half)

    Returns:
        Q0 accumulator with the number of scalar additions performed
    """
    n = img.n
    if n < 1 or n & (n - 1):
        raise DimensionError(f"image side must be a power of two, got {n}")
    rule = shift_rule or dyadic_shift_rule
    width = 2 * n - 1

    src = np.zeros((n, width), dtype=np.int64)
    # Width-1 strips: strip x, slope 0, shift h is pixel (x, h).
    src[:, n - 1:] = img.pixels.T
    dst = np.empty_like(src)
    additions = 0

    m = 1
    while m < n:
        strips = n // (2 * m)
        halves = src.reshape(strips, 2, m, width)
        left, right = halves[:, 0], halves[:, 1]
        merged = dst.reshape(strips, 2 * m, width)
        for t in range(2 * m):
            tt, c = rule(t)
            merged[:, t, :] = left[:, tt, :]
            merged[:, t, :width - c] += right[:, tt, c:]
            additions += strips * (width - c)
        src, dst = dst, src
        m *= 2

    if src.min(initial=0) < 0:
        raise ConsistencyError("negative line sum in accumulator")
    logger.debug(f"FHT n={n}: {additions} additions")
    return HoughAccumulator(quadrant=Quadrant.Q0, n=n, sums=src.copy(), additions=additions,
                            flip=FLIP_CONVENTIONS[Quadrant.Q0])


def line_rows(params: DyadicParams, t: int) -> np.ndarray:
    """D(x, t) for x = 0 .. n-1."""
    xs = np.arange(params.n, dtype=np.int64)
    bits = slope_bits(np.array([t]), params)
    return (bits @ basic_lines(xs, params))[0]


def _params_for(img: Image) -> DyadicParams:
    if img.n < 2:
        raise DimensionError("image side must be at least 2")
    return DyadicParams.of(img.n.bit_length() - 1)


def brute_line_sum(img: Image, t: int, h: int) -> int:
    """Sum of pixel(x, D(x, t) + h) computed directly from the line definition."""
    n = img.n
    if not 0 <= t < n:
        raise ArgumentError(f"t must be in [0, {n - 1}], got {t}")
    if not -(n - 1) <= h <= n - 1:
        raise ArgumentError(f"h must be in [{-(n - 1)}, {n - 1}], got {h}")
    ys = line_rows(_params_for(img), t) + h
    xs = np.arange(n)
    inside = (ys >= 0) & (ys < n)
    return int(img.pixels[ys[inside], xs[inside]].sum())


def brute_quadrant(img: Image) -> np.ndarray:
    """Every (t, h) line sum by direct summation, shape (n, 2n - 1)."""
    n = img.n
    params = _params_for(img)
    shifts = np.arange(-(n - 1), n)
    xs = np.broadcast_to(np.arange(n), (shifts.size, n))
    padded = np.zeros((3 * n - 2, n), dtype=np.int64)
    padded[n - 1:2 * n - 1] = img.pixels
    out = np.empty((n, 2 * n - 1), dtype=np.int64)
    for t in range(n):
        rows = line_rows(params, t)[None, :] + shifts[:, None] + (n - 1)
        out[t] = padded[rows, xs].sum(axis=1)
    return out


def orient(img: Image, quadrant: Quadrant) -> Image:
    pixels = img.pixels
    if quadrant == Quadrant.Q1:
        pixels = pixels.T
    elif quadrant == Quadrant.Q2:
        pixels = pixels[:, ::-1]
    elif quadrant == Quadrant.Q3:
        pixels = pixels[:, ::-1].T
    return Image.from_array(pixels)


def fht_full(img: Image, transform: Optional[QuadrantTransform] = None) -> Dict[Quadrant, HoughAccumulator]:
    """Accumulators for all four slope quadrants, each tagged with its flip convention."""
    run = transform or fht_quadrant
    result = {}
    for quadrant in Quadrant:
        acc = run(orient(img, quadrant))
        result[quadrant] = acc.model_copy(update={"quadrant": quadrant, "flip": FLIP_CONVENTIONS[quadrant]})
    return result


def addition_count(n: int) -> int:
    """Closed form of the merge additions for side n: p*n*(2n - 1) - n*(n - 1)/2."""
    p = n.bit_length() - 1
    return p * n * (2 * n - 1) - n * (n - 1) // 2
