# app/services/ergodic.py
"""Doubling map, characteristic functions of the deviation and twisted transfer operators."""
import logging
import math
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from app.core.config import settings
from app.core.errors import ArgumentError, BoundViolation, ResourceError
from app.core.parallel import chunk_ranges, map_ordered
from app.models.dyadic import CharFnReport, DyadicParams, GridFunction, midpoints
from app.services.deviation_stats import value_tally
from app.services.dyadic_core import ei_nums, rotl_array

logger = logging.getLogger(__name__)

Real = Union[float, Fraction]

PSI_EXACT_MAX_P = 22
PSI_DIRECT_MAX_P = 12
GAP_MAX_P = 10
CONTINUOUS_MAX_P = 16
MAX_GRID = 1 << 24
GAUSS_NODES = 7
DEFAULT_XI_GRID = [0.25 * k for k in range(17)]


def _check_unit(x: Real) -> None:
    if not 0 <= x <= 1:
        raise ArgumentError(f"argument must lie in [0, 1], got {x}")


def sawtooth_f(x: Real) -> Real:
    """-x below 1/2, 1 - x from 1/2 on."""
    _check_unit(x)
    return -x if 2 * x < 1 else 1 - x


def doubling(x: Real) -> Real:
    """T(x) = 2x mod 1, with the fixed point T(1) = 1."""
    _check_unit(x)
    if x == 1:
        return x
    y = 2 * x
    return y - 1 if y >= 1 else y


def doubling_matches_rotation(params: DyadicParams) -> bool:
    """On i/d, doubling agrees with rotl by one bit for all 2**p points."""
    d = params.denom
    i = np.arange(params.n, dtype=np.int64)
    doubled = np.where(i == d, d, (2 * i) % d)
    return bool(np.array_equal(doubled, rotl_array(i, 1, params)))


def _check_psi(params: DyadicParams, limit: int) -> None:
    if params.p > limit:
        raise ResourceError(f"limited to p <= {limit}, got p={params.p}")


def psi_exact_grid(params: DyadicParams, xis: Sequence[float]) -> List[complex]:
    """
    psi_p(xi) = 2**-p sum_{x in Delta_p} prod_i (1 + exp(i xi f(T^i x) / sqrt(p))) / 2.

    With x = k/d, d * f(T^i x) = ei_num(k, i). Chunk sums are combined in chunk
    order, so the result does not depend on the thread count.
    """
    _check_psi(params, PSI_EXACT_MAX_P)
    xis = [float(xi) for xi in xis]
    scale = 1.0 / (params.denom * math.sqrt(params.p))

    def scan(bounds):
        phases = ei_nums(np.arange(bounds[0], bounds[1], dtype=np.int64), params).astype(np.float64) * scale
        return [complex(np.sum(np.prod((1.0 + np.exp(1j * xi * phases)) / 2.0, axis=0))) for xi in xis]

    partials = map_ordered(scan, chunk_ranges(params.n, params.p))
    totals = [0j] * len(xis)
    for part in partials:
        totals = [acc + value for acc, value in zip(totals, part)]
    return [total / params.n for total in totals]


def psi_exact(params: DyadicParams, xi: float) -> complex:
    return psi_exact_grid(params, [xi])[0]


def psi_direct(params: DyadicParams, xi: float) -> complex:
    """(1/n**2) sum over all (x, t) of exp(i xi num(x, t) / (d sqrt(p)))."""
    _check_psi(params, PSI_DIRECT_MAX_P)
    offset, counts, total = value_tally(params)
    values = np.arange(-offset, offset + 1, dtype=np.float64)
    phases = np.exp(1j * float(xi) * values / (params.denom * math.sqrt(params.p)))
    return complex(np.sum(counts * phases) / total)


def _interpolate(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation of midpoint samples, held constant in the two outer half cells."""
    m = values.shape[0]
    position = points * m - 0.5
    j0 = np.clip(np.floor(position).astype(np.int64), 0, m - 2)
    w = np.clip(position - j0, 0.0, 1.0)
    return values[j0] + w * (values[j0 + 1] - values[j0])


def _sawtooth_array(points: np.ndarray) -> np.ndarray:
    return np.where(2.0 * points < 1.0, -points, 1.0 - points)


def transfer_L0(h: GridFunction) -> GridFunction:
    """
    (L0 h)(x) = (h(x/2) + h(1/2 + x/2)) / 2 on the midpoint grid.

    Interpolation clamps to the end samples in the outer half cells, so the grid
    mean is preserved exactly while a linear h is reproduced only at interior
    points: for h(x) = x the first and last cells are off by 1/(8m).
    """
    if h.m < 4:
        raise ArgumentError(f"grid size must be at least 4, got {h.m}")
    x = midpoints(h.m)
    low = _interpolate(h.values, x / 2.0)
    high = _interpolate(h.values, 0.5 + x / 2.0)
    return GridFunction(m=h.m, values=0.5 * (low + high))


def transfer_L_xi(h: GridFunction, xi: float) -> GridFunction:
    """
    Twisted operator L_xi h = L0((1 + exp(i xi f)) / 2 * h) on the midpoint grid.

    The twist is evaluated at the exact preimages, where f(x/2) = -x/2 and
    f(1/2 + x/2) = 1/2 - x/2.
    """
    if h.m < 4:
        raise ArgumentError(f"grid size must be at least 4, got {h.m}")
    x = midpoints(h.m)
    low_points, high_points = x / 2.0, 0.5 + x / 2.0
    low_twist = (1.0 + np.exp(1j * xi * _sawtooth_array(low_points))) / 2.0
    high_twist = (1.0 + np.exp(1j * xi * _sawtooth_array(high_points))) / 2.0
    low = _interpolate(h.values, low_points) * low_twist
    high = _interpolate(h.values, high_points) * high_twist
    return GridFunction(m=h.m, values=0.5 * (low + high))


def adjoint_gap(h: GridFunction, g: GridFunction) -> float:
    """|mean((L0 h) g) - mean(h (g o T))| on the grid, with g o T interpolated."""
    x = midpoints(h.m)
    doubled = np.where(x < 0.5, 2.0 * x, 2.0 * x - 1.0)
    lhs = np.mean(transfer_L0(h).values * g.values)
    rhs = np.mean(h.values * _interpolate(g.values, doubled))
    return float(abs(lhs - rhs))


def psi_nagaev(params: DyadicParams, xi: float, m: Optional[int] = None) -> complex:
    """Grid mean of L_{xi/sqrt(p)}^p 1."""
    m = m or settings.DYADIC_GRID_SIZE
    if m > MAX_GRID:
        raise ResourceError(f"grid size {m} exceeds {MAX_GRID}")
    if m < 4 or m & (m - 1):
        raise ArgumentError(f"grid size must be a power of two >= 4, got {m}")
    twist = float(xi) / math.sqrt(params.p)
    h = GridFunction.constant(m)
    for _ in range(params.p):
        h = transfer_L_xi(h, twist)
    return h.mean


def psi_continuous(params: DyadicParams, xi: float) -> complex:
    """
    integral over [0, 1] of u_p(x) = prod_i (1 + exp(i xi f(T^i x) / sqrt(p))) / 2.

    u_p is smooth on each interval (j/2**p, (j+1)/2**p), so each interval gets
    its own Gauss-Legendre rule.
    """
    _check_psi(params, CONTINUOUS_MAX_P)
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_NODES)
    n = params.n
    points = ((np.arange(n)[:, None] + (nodes[None, :] + 1.0) / 2.0) / n).ravel()
    scale = float(xi) / math.sqrt(params.p)
    u = np.ones_like(points, dtype=np.complex128)
    orbit = points
    for _ in range(params.p):
        u *= (1.0 + np.exp(1j * scale * _sawtooth_array(orbit))) / 2.0
        orbit = np.where(orbit < 0.5, 2.0 * orbit, 2.0 * orbit - 1.0)
    per_interval = (u.reshape(n, GAUSS_NODES) * weights[None, :]).sum(axis=1) / 2.0
    return complex(per_interval.sum() / n)


def discretization_gap(params: DyadicParams, xi: float) -> float:
    """|integral of u_p - mean of u_p over Delta_p|, which must stay below |xi|."""
    _check_psi(params, GAP_MAX_P)
    if xi == 0:
        return 0.0
    gap = abs(psi_continuous(params, xi) - psi_exact(params, xi))
    if not gap < abs(xi):
        raise BoundViolation(f"p={params.p}, xi={xi}: discretization gap {gap} is not below |xi|")
    return float(gap)


def gauss_reference(xis: Iterable[float]) -> List[float]:
    return [math.exp(-xi * xi / 96.0) for xi in xis]


def clt_report(p_list: Sequence[int], xi_grid: Optional[Sequence[float]] = None,
               grid: Optional[int] = None) -> List[CharFnReport]:
    """
    psi_exact against exp(-xi^2/96) for each p, optionally with the transfer-operator estimate.

    Args:
        p_list: exponents to tabulate
        xi_grid: defaults to 0.25 k for k = 0..16
        grid: grid size for psi_nagaev; omitted means no operator column

    Returns:
        One CharFnReport per p, in the order of p_list
    """
    xis = list(xi_grid) if xi_grid is not None else list(DEFAULT_XI_GRID)
    gauss = gauss_reference(xis)
    reports = []
    for p in p_list:
        params = DyadicParams.of(p)
        exact = psi_exact_grid(params, xis)
        report = CharFnReport(
            p=p,
            xi_grid=xis,
            psi_exact=exact,
            gauss_ref=gauss,
            sup_error_exact_vs_gauss=max(abs(z - g) for z, g in zip(exact, gauss)),
        )
        if grid is not None:
            nagaev = [psi_nagaev(params, xi, grid) for xi in xis]
            report.psi_nagaev = nagaev
            report.sup_error_nagaev_vs_exact = max(abs(a - b) for a, b in zip(nagaev, exact))
            report.grid_size = grid
        logger.info(f"CLT p={p}: sup |psi - gauss| = {report.sup_error_exact_vs_gauss:.3e}")
        reports.append(report)

    if not sup_errors_non_increasing(reports):
        errors = [r.sup_error_exact_vs_gauss for r in sorted(reports, key=lambda r: r.p)]
        logger.warning(f"sup error is not non-increasing in p: {[f'{e:.3e}' for e in errors]}")
    return reports


def sup_errors_non_increasing(reports: Sequence[CharFnReport]) -> bool:
    errors = [r.sup_error_exact_vs_gauss for r in sorted(reports, key=lambda r: r.p)]
    return all(later <= earlier for earlier, later in zip(errors, errors[1:]))
