# app/services/deviation_stats.py
"""Exhaustive and sampled statistics of the deviation E(x, t)."""
import logging
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import ndtr

from app.core.config import settings
from app.core.errors import BoundViolation, ConsistencyError, ResourceError, require
from app.core.parallel import chunk_ranges, map_ordered
from app.models.dyadic import (
    DyadicParams,
    Extrema,
    HistogramBin,
    MomentPath,
    MomentReport,
    NormalityReport,
    SamplingKind,
    SamplingMode,
    TailReport,
)
from app.services.dyadic_core import deviation_block, deviation_pairs, ei_nums, exact_sum

logger = logging.getLogger(__name__)

EXTREMA_MAX_P = 14
PAIRS_MAX_P = 12
SAMPLE_CHUNK = 1 << 18


def default_mode(params: DyadicParams) -> SamplingMode:
    if params.p <= PAIRS_MAX_P:
        return SamplingMode.exhaustive()
    return SamplingMode.sampled(settings.DYADIC_SAMPLE_COUNT, settings.DYADIC_SEED)


def _x_chunks(params: DyadicParams) -> List[Tuple[int, int]]:
    return chunk_ranges(params.n, params.n)


def exhaustive_extrema(params: DyadicParams) -> Extrema:
    """
    Exact min and max of num(x, t) over all pairs.

    Ties for the maximum resolve to the smallest (t, x).

    Returns:
        Extrema with argmax as (x, t)
    """
    if params.p > EXTREMA_MAX_P:
        raise ResourceError(f"exhaustive extrema limited to p <= {EXTREMA_MAX_P}; use sampled statistics for p={params.p}")

    def scan(bounds):
        start, stop = bounds
        block = deviation_block(start, stop, params)
        flat = int(np.argmax(block))
        t, x = divmod(flat, stop - start)
        return int(block.min()), int(block.max()), (t, x + start)

    partials = map_ordered(scan, _x_chunks(params))
    lo = min(part[0] for part in partials)
    hi = max(part[1] for part in partials)
    t, x = min(part[2] for part in partials if part[1] == hi)
    result = Extrema(p=params.p, min_num=lo, max_num=hi, argmax=(x, t), denom=params.denom)

    if 6 * hi > params.p * params.denom or -6 * lo > params.p * params.denom:
        raise BoundViolation(f"p={params.p}: |num| exceeds p*d/6 (min={lo}, max={hi})")
    if result.sharp != (params.p % 2 == 0):
        raise BoundViolation(f"p={params.p}: max_num={hi} sharpness does not match the parity of p")
    logger.info(f"Extrema p={params.p}: min={lo} max={hi} at x={x} t={t}")
    return result


def _variance(params: DyadicParams, sum_num: int, sum_num_sq: int) -> Tuple[Fraction, Fraction]:
    pairs = params.n * params.n
    d = params.denom
    mean = Fraction(sum_num, pairs * d)
    return mean, Fraction(sum_num_sq, pairs * d * d) - mean * mean


def variance_formula(params: DyadicParams) -> Fraction:
    return Fraction(params.p, 48) * (1 - Fraction(1, params.denom))


def moments(params: DyadicParams, path: Optional[MomentPath] = None) -> MomentReport:
    """
    Exact mean and variance of E over all n*n pairs.

    The pairs path sums num and num**2 over every (x, t). The x-only path uses
    num(x, t) = sum_i t_i e_i(x): summed over all t this gives
    sum_t num = 2**(p-1) s1 and sum_t num**2 = 2**(p-2) (s2 + s1**2) with
    s1 = sum_i e_i(x) and s2 = sum_i e_i(x)**2.

    Args:
        params: discretization context
        path: MomentPath.PAIRS (p <= 12) or MomentPath.X_ONLY (any p); defaults by p

    Returns:
        MomentReport with exact rationals
    """
    if path is None:
        path = MomentPath.PAIRS if params.p <= PAIRS_MAX_P else MomentPath.X_ONLY
    p, n, d = params.p, params.n, params.denom

    if path == MomentPath.PAIRS:
        if p > PAIRS_MAX_P:
            raise ResourceError(f"pairwise moments limited to p <= {PAIRS_MAX_P}; use the x-only path")

        def scan(bounds):
            block = deviation_block(bounds[0], bounds[1], params)
            return exact_sum(block), exact_sum(block * block)

        partials = map_ordered(scan, _x_chunks(params))
        sum_num = sum(part[0] for part in partials)
        sum_num_sq = sum(part[1] for part in partials)
    else:
        def scan(bounds):
            e = ei_nums(np.arange(bounds[0], bounds[1], dtype=np.int64), params)
            s1 = e.sum(axis=0)
            s2 = (e * e).sum(axis=0)
            if np.any(s1 != 0):
                raise ConsistencyError(f"p={p}: sum of E_i(x) does not vanish")
            return exact_sum(s2 + s1 * s1)

        partials = map_ordered(scan, chunk_ranges(n, p))
        sum_num = 0
        # p == 1 has e_0 identically zero.
        sum_num_sq = (sum(partials) << p) >> 2

    mean, variance = _variance(params, sum_num, sum_num_sq)
    report = MomentReport(p=p, path=path, sum_num=sum_num, sum_num_sq=sum_num_sq, mean=mean,
                          variance=variance, variance_formula=variance_formula(params))

    if sum_num != 0:
        raise ConsistencyError(f"p={p}: sum of deviations is {sum_num}, expected 0")
    if 48 * sum_num_sq != p * n * n * d * (d - 1):
        raise ConsistencyError(f"p={p}: 48*sum(num^2)={48 * sum_num_sq} != p*4^p*d*(d-1)={p * n * n * d * (d - 1)}")
    if report.variance != report.variance_formula:
        raise ConsistencyError(f"p={p}: variance {report.variance} != {report.variance_formula}")
    logger.info(f"Moments p={p} via {path.value}: variance={variance}")
    return report


def value_tally(params: DyadicParams, mode: Optional[SamplingMode] = None) -> Tuple[int, np.ndarray, int]:
    """
    Histogram of num values: counts[v + offset] pairs have num == v.

    Exhaustive mode scans all pairs (p <= 12). Sampled mode draws pairs
    uniformly in fixed chunks, chunk k from Philox(seed) jumped k + 1 times,
    so the tally does not depend on the thread count.

    Returns:
        (offset, counts, total) with offset = floor(p*d/6)
    """
    mode = mode or default_mode(params)
    offset = params.p * params.denom // 6
    size = 2 * offset + 1

    if mode.kind == SamplingKind.EXHAUSTIVE:
        if params.p > PAIRS_MAX_P:
            raise ResourceError(f"exhaustive tally limited to p <= {PAIRS_MAX_P}; use sampled mode")

        def scan(bounds):
            block = deviation_block(bounds[0], bounds[1], params)
            return np.bincount((block + offset).ravel(), minlength=size)

        partials = map_ordered(scan, _x_chunks(params))
        total = params.n * params.n
    else:
        chunks = [(start, min(start + SAMPLE_CHUNK, mode.count)) for start in range(0, mode.count, SAMPLE_CHUNK)]

        def scan(bounds):
            k = bounds[0] // SAMPLE_CHUNK
            rng = np.random.Generator(np.random.Philox(mode.seed).jumped(k + 1))
            draws = rng.integers(0, params.n, size=(2, bounds[1] - bounds[0]), dtype=np.int64)
            return np.bincount(deviation_pairs(draws[0], draws[1], params) + offset, minlength=size)

        partials = map_ordered(scan, chunks)
        total = mode.count

    counts = np.sum(partials, axis=0, dtype=np.int64)
    if counts.size != size:
        raise ConsistencyError(f"p={params.p}: deviation outside [-p*d/6, p*d/6]")
    return offset, counts, total


def tail_fraction(params: DyadicParams, threshold: Fraction, mode: Optional[SamplingMode] = None) -> TailReport:
    """Fraction of pairs with |E| >= threshold, checked against Markov's p/48 at threshold 1."""
    threshold = Fraction(threshold)
    require(threshold >= 0, f"threshold must be non-negative, got {threshold}")
    mode = mode or default_mode(params)
    offset, counts, total = value_tally(params, mode)

    values = np.arange(-offset, offset + 1, dtype=np.int64)
    # |num| / d >= a / b  <=>  |num| * b >= a * d
    hit = np.abs(values) * threshold.denominator >= threshold.numerator * params.denom
    count_ge = int(counts[hit].sum())
    report = TailReport(p=params.p, mode=mode, threshold=threshold, count_ge=count_ge, total=total,
                        fraction_ge=Fraction(count_ge, total), markov_bound=Fraction(params.p, 48))

    if threshold == 1 and report.fraction_ge >= report.markov_bound:
        if mode.kind == SamplingKind.EXHAUSTIVE:
            raise BoundViolation(f"p={params.p}: P(|E| >= 1) = {report.fraction_ge} is not below {report.markov_bound}")
        logger.warning(f"p={params.p}: sampled tail {float(report.fraction_ge):.6f} above Markov bound")
    logger.info(f"Tail p={params.p} threshold={threshold}: {count_ge}/{total}")
    return report


def histogram(params: DyadicParams, bins: int, mode: Optional[SamplingMode] = None) -> List[HistogramBin]:
    """
    Masses of E over `bins` equal bins covering [-p/6, p/6].

    A value exactly on an interior edge gives half its mass to each neighbour,
    which keeps the histogram mirror-symmetric.
    """
    require(bins >= 1, f"bins must be positive, got {bins}")
    offset, counts, total = value_tally(params, mode)
    p, d = params.p, params.denom

    values = np.arange(-offset, offset + 1, dtype=np.int64)
    # Position in bin units: (6*num + p*d) * bins / (2*p*d)
    scaled = (6 * values + p * d) * bins
    span = 2 * p * d
    index, rem = np.divmod(scaled, span)
    tie = (rem == 0) & (index > 0) & (index < bins)
    index = np.minimum(index, bins - 1)

    halves = np.zeros(bins, dtype=np.int64)
    np.add.at(halves, index, 2 * counts)
    # Move half the tied mass one bin down.
    tied = np.flatnonzero(tie & (counts > 0))
    np.subtract.at(halves, index[tied], counts[tied])
    np.add.at(halves, index[tied] - 1, counts[tied])

    width = (p / 3.0) / bins
    result = []
    for k in range(bins):
        lo = -p / 6.0 + k * width
        result.append(HistogramBin(lo=lo, hi=lo + width, center=lo + 0.5 * width,
                                   mass=Fraction(int(halves[k]), 2 * total)))
    return result


def ks_distance(params: DyadicParams, mode: Optional[SamplingMode] = None) -> NormalityReport:
    """Kolmogorov-Smirnov distance between sqrt(48) E / sqrt(p) and the standard normal."""
    mode = mode or default_mode(params)
    offset, counts, total = value_tally(params, mode)

    values = np.arange(-offset, offset + 1, dtype=np.float64)
    z = np.sqrt(48.0) * values / (params.denom * np.sqrt(params.p))
    after = np.cumsum(counts) / total
    before = np.concatenate(([0.0], after[:-1]))
    phi = ndtr(z)
    support = counts > 0
    ks = float(max(np.abs(after - phi)[support].max(), np.abs(before - phi)[support].max()))
    logger.info(f"KS p={params.p} {mode.describe()}: {ks:.6f}")
    return NormalityReport(p=params.p, mode=mode, ks_distance=min(ks, 1.0))
