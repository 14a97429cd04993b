# app/services/spectral.py
"""Circulant spectrum, hypercube quadratic forms and the trace identity.

Vectors are indexed by bit position: y[j] pairs with the j-th binary digit.
The cyclic shift P acts as (P y)[j] = y[j - 1], matching rotl on bit strings,
so that A = sum_k 2**(p-1-k) P**k has A[r][c] = 2**((p - 1 + c - r) mod p).
"""
import logging
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import ArgumentError, BoundViolation, ConsistencyError, ResourceError
from app.core.parallel import chunk_ranges, map_ordered
from app.models.dyadic import CirculantA, DyadicParams, MobiusReport, SpectralReport
from app.services.dyadic_core import deviation_block, ei_nums

logger = logging.getLogger(__name__)

HYPERCUBE_MAX_P = 20
VERTEX_AVERAGE_MAX_P = 12
EIG_RTOL = 1e-9

Matrix = Union[CirculantA, np.ndarray, Sequence[Sequence[int]]]


def shift_matrix(p: int) -> np.ndarray:
    """Cyclic permutation P with P[r][c] = 1 iff r = c + 1 (mod p)."""
    return np.roll(np.eye(p, dtype=np.int64), 1, axis=0)


def build_circulant(params: DyadicParams) -> CirculantA:
    p = params.p
    entries = [[1 << ((p - 1 + c - r) % p) for c in range(p)] for r in range(p)]
    matrix = np.array(entries, dtype=np.int64)

    shift = shift_matrix(p)
    power = np.eye(p, dtype=np.int64)
    polynomial = np.zeros((p, p), dtype=np.int64)
    for k in range(p):
        polynomial += (1 << (p - 1 - k)) * power
        power = shift @ power
    if not np.array_equal(matrix, polynomial):
        raise ConsistencyError(f"p={p}: circulant entries disagree with sum of 2^(p-1-k) P^k")
    if not np.array_equal(np.roll(matrix, 1, axis=(0, 1)), matrix):
        raise ConsistencyError(f"p={p}: matrix is not circulant")
    return CirculantA(p=p, entries=entries)


def roots_of_unity(p: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(p) / p)


def eigs_via_roots(params: DyadicParams) -> List[complex]:
    """
    Eigenvalues (2**p - 1) / (2 - lambda_k) over the p-th roots of unity.

    The eigenvector paired with lambda_k is v[r] = lambda_k**(-r), the
    eigenvector of P for lambda_k. Each pair is checked by its residual and
    the whole set against numpy.linalg.eigvals.
    """
    p, d = params.p, params.denom
    a = build_circulant(params).as_array().astype(np.float64)
    lambdas = roots_of_unity(p)
    mus = d / (2.0 - lambdas)
    mus[0] = float(d)
    r = np.arange(p)

    for k, (lam, mu) in enumerate(zip(lambdas, mus)):
        v = np.exp(-2j * np.pi * k * r / p)
        residual = np.max(np.abs(a @ v - mu * v))
        scale = np.max(np.abs(mu * v))
        if not residual < EIG_RTOL * scale:
            raise ConsistencyError(f"p={p}, k={k}: eigen residual {residual:.3e} exceeds {EIG_RTOL} * {scale:.3e}")

    numeric = list(np.linalg.eigvals(a))
    for mu in mus:
        j = int(np.argmin([abs(mu - z) for z in numeric]))
        if abs(mu - numeric[j]) > 1e-8 * d:
            raise ConsistencyError(f"p={p}: eigenvalue {mu} not found by numpy.linalg.eigvals")
        numeric.pop(j)
    return [complex(mu) for mu in mus]


def min_symmetrized_eig(params: DyadicParams) -> Union[Fraction, float]:
    """
    Smallest eigenvalue of (A + A^T) / 2, i.e. (2**p - 1) * min_k Re f(lambda_k).

    Re f(e^{i theta}) = (2 - cos theta) / (5 - 4 cos theta) grows with cos theta,
    so the minimum sits at the root closest to -1. For even p that root is -1
    and the value is exactly (2**p - 1) / 3.
    """
    p, d = params.p, params.denom
    if p % 2 == 0:
        value: Union[Fraction, float] = Fraction(d, 3)
    else:
        value = float(d * np.min(np.real(1.0 / (2.0 - roots_of_unity(p)))))
        if not value > d / 3.0:
            raise BoundViolation(f"p={p}: symmetrized minimum {value} is not above (2^p-1)/3")

    a = build_circulant(params).as_array().astype(np.float64)
    numeric = float(np.linalg.eigvalsh((a + a.T) / 2.0).min())
    if abs(numeric - float(value)) > EIG_RTOL * d:
        raise ConsistencyError(f"p={p}: eigvalsh gives {numeric}, closed form gives {float(value)}")
    return value


def binary_ell(y: Sequence[Fraction]) -> Fraction:
    """sum_j 2**j y[j]."""
    return sum((Fraction(v) * (1 << j) for j, v in enumerate(y)), Fraction(0))


def rotate(y: Sequence, i: int) -> list:
    """P**i y, with (P y)[j] = y[j - 1]."""
    i %= len(y)
    return list(y[-i:]) + list(y[:-i]) if i else list(y)


def bilinear(matrix: Sequence[Sequence[int]], y: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(matrix[r][c]) * y[r] * y[c] for r in range(len(y)) for c in range(len(y))), Fraction(0))


def quad_form_a(y: Sequence, params: DyadicParams) -> Fraction:
    """a(y) = sum_i y[p-1-i] * binary_ell(P**i y), checked against <A y, y>."""
    p = params.p
    if len(y) != p:
        raise ArgumentError(f"vector must have length {p}, got {len(y)}")
    y = [Fraction(v) for v in y]
    shifted = sum((y[p - 1 - i] * binary_ell(rotate(y, i)) for i in range(p)), Fraction(0))
    direct = bilinear(build_circulant(params).entries, y)
    if shifted != direct:
        raise ConsistencyError(f"p={p}: a(y)={shifted} but <Ay,y>={direct}")
    return shifted


def sign_vertices(start: int, stop: int, p: int, fix_first: bool = True) -> np.ndarray:
    """Sign patterns s in {+1, -1}**p for vertex indices [start, stop).

    With fix_first, s[0] = +1 and bit j-1 of the index sets s[j] = -1;
    otherwise bit j sets s[j] = -1.
    """
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    if fix_first:
        bits = (idx >> np.arange(p - 1, dtype=np.int64)[None, :]) & 1
        bits = np.concatenate([np.zeros((bits.shape[0], 1), dtype=np.int64), bits], axis=1)
    else:
        bits = (idx >> np.arange(p, dtype=np.int64)[None, :]) & 1
    return 1 - 2 * bits


def vertex_forms(signs: np.ndarray, p: int) -> np.ndarray:
    """<A s, s> per row via cyclic correlations C_k = sum_r s[r] s[r - k]."""
    total = np.zeros(signs.shape[0], dtype=np.int64)
    for k in range(p):
        correlation = (signs * np.roll(signs, k, axis=1)).sum(axis=1)
        total += (1 << (p - 1 - k)) * correlation
    return total


def shifted_forms(signs: np.ndarray, p: int) -> np.ndarray:
    """4 a(s/2) per row from the shifted-sum definition sum_i s[p-1-i] * binary_ell(P**i s)."""
    powers = np.left_shift(1, np.arange(p, dtype=np.int64))
    total = np.zeros(signs.shape[0], dtype=np.int64)
    for i in range(p):
        total += signs[:, p - 1 - i] * (np.roll(signs, i, axis=1) @ powers)
    return total


def check_quad_form_on_vertices(params: DyadicParams) -> bool:
    """Shifted-sum and circulant evaluations of a(y) agree on every vertex."""
    p = params.p
    if p > VERTEX_AVERAGE_MAX_P:
        raise ResourceError(f"vertex enumeration limited to p <= {VERTEX_AVERAGE_MAX_P}, got {p}")
    signs = sign_vertices(0, 1 << p, p, fix_first=False)
    return bool(np.array_equal(shifted_forms(signs, p), vertex_forms(signs, p)))


def hypercube_min(params: DyadicParams) -> Tuple[int, Tuple[int, ...]]:
    """
    Minimum of 4 a(y) over vertices y in {+1/2, -1/2}**p.

    a(-y) = a(y), so only sign patterns with s[0] = +1 are enumerated.

    Returns:
        (min_times4, argmin sign pattern); the first minimum in enumeration order
    """
    p, d = params.p, params.denom
    if p > HYPERCUBE_MAX_P:
        raise ResourceError(f"hypercube enumeration limited to p <= {HYPERCUBE_MAX_P}, got {p}")

    def scan(bounds):
        forms = vertex_forms(sign_vertices(bounds[0], bounds[1], p), p)
        j = int(np.argmin(forms))
        return int(forms[j]), bounds[0] + j

    partials = map_ordered(scan, chunk_ranges(1 << (p - 1), p))
    best, index = min(partials)
    argmin = tuple(int(s) for s in sign_vertices(index, index + 1, p)[0])

    if 3 * best < p * d:
        raise BoundViolation(f"p={p}: hypercube minimum {best} below (p/3)(2^p-1)")
    if (3 * best == p * d) != (p % 2 == 0):
        raise BoundViolation(f"p={p}: hypercube minimum {best} sharpness does not match the parity of p")
    logger.info(f"Hypercube p={p}: min 4a={best} at {argmin}")
    return best, argmin


def q_values(params: DyadicParams, x_start: int = 0, x_stop: Optional[int] = None) -> np.ndarray:
    """d * q(x) = sum_i bit_{p-1-i}(x) * ei_num(x, i) for x in [x_start, x_stop)."""
    x_stop = params.n if x_stop is None else x_stop
    xs = np.arange(x_start, x_stop, dtype=np.int64)
    p = params.p
    reversed_bits = (xs[None, :] >> (p - 1 - np.arange(p, dtype=np.int64))[:, None]) & 1
    return (reversed_bits * ei_nums(xs, params)).sum(axis=0)


def q_of_x(x: int, params: DyadicParams) -> Fraction:
    if not 0 <= x < params.n:
        raise ArgumentError(f"x must be in [0, {params.n - 1}], got {x}")
    return Fraction(int(q_values(params, x, x + 1)[0]), params.denom)


def max_q(params: DyadicParams) -> Fraction:
    partials = map_ordered(lambda b: int(q_values(params, b[0], b[1]).max()), chunk_ranges(params.n, params.p))
    return Fraction(max(partials), params.denom)


def check_q_is_row_max(params: DyadicParams) -> bool:
    """q(x) equals max_t E(x, t) for every x."""
    def scan(bounds):
        block = deviation_block(bounds[0], bounds[1], params)
        return bool(np.array_equal(block.max(axis=0), q_values(params, bounds[0], bounds[1])))

    return all(map_ordered(scan, chunk_ranges(params.n, params.n)))


def q_vertex_identity(params: DyadicParams) -> bool:
    """4 d q(x) = p d - <A s, s> with s[j] = 2 bit_j(x) - 1, for every x."""
    p, d = params.p, params.denom

    def scan(bounds):
        signs = -sign_vertices(bounds[0], bounds[1], p, fix_first=False)
        return bool(np.array_equal(4 * q_values(params, bounds[0], bounds[1]), p * d - vertex_forms(signs, p)))

    return all(map_ordered(scan, chunk_ranges(params.n, p)))


def _as_int_matrix(matrix: Matrix, p: int) -> np.ndarray:
    if isinstance(matrix, CirculantA):
        matrix = matrix.entries
    arr = np.asarray(matrix, dtype=np.int64)
    if arr.shape != (p, p):
        raise ArgumentError(f"matrix must be {p}x{p}, got {arr.shape}")
    return arr


def trace_expectation_check(params: DyadicParams, matrix: Matrix, denominator: int = 1) -> Tuple[Fraction, Fraction]:
    """
    Average of <M y, y> over the vertices y in {+1/2, -1/2}**p against tr(M) / 4.

    Args:
        params: discretization context, p <= 12
        matrix: integer p x p matrix, read as matrix / denominator
        denominator: common positive denominator of the entries

    Returns:
        (vertex average, trace / 4) as exact rationals
    """
    p = params.p
    if p > VERTEX_AVERAGE_MAX_P:
        raise ResourceError(f"vertex average limited to p <= {VERTEX_AVERAGE_MAX_P}, got {p}")
    if denominator < 1:
        raise ArgumentError("denominator must be positive")
    m = _as_int_matrix(matrix, p)
    signs = sign_vertices(0, 1 << p, p, fix_first=False)
    forms = np.einsum("vi,ij,vj->v", signs, m, signs)
    lhs = Fraction(int(forms.sum()), 4 * (1 << p) * denominator)
    rhs = Fraction(int(np.trace(m)), 4 * denominator)
    if lhs != rhs:
        raise ConsistencyError(f"p={p}: vertex average {lhs} != trace/4 {rhs}")
    return lhs, rhs


def centered_ell_weights(params: DyadicParams) -> List[int]:
    """Integer weights w with centered_ell(x) = sum_j w[j] x[j] / d."""
    d = params.denom
    return [(d if j == params.p - 1 else 0) - (1 << j) for j in range(params.p)]


def centered_ell(x: Sequence, params: DyadicParams) -> Fraction:
    """x[p-1] - d**-1 * sum_j 2**j x[j]."""
    if len(x) != params.p:
        raise ArgumentError(f"vector must have length {params.p}, got {len(x)}")
    return Fraction(x[-1]) - binary_ell(x) / params.denom


def centered_ell_form(params: DyadicParams) -> Tuple[List[List[int]], int]:
    """Matrix of the quadratic form centered_ell(x)**2 as (integer entries, denominator d**2)."""
    w = centered_ell_weights(params)
    return [[wr * wc for wc in w] for wr in w], params.denom ** 2


def centered_ell_trace(params: DyadicParams) -> Fraction:
    """sum_i centered_ell(e_i)**2 with e_i = P**i e_0, checked against (1/3)(1 - 1/d)."""
    d = params.denom
    total = Fraction(sum(w * w for w in centered_ell_weights(params)), d * d)
    expected = Fraction(1, 3) * (1 - Fraction(1, d))
    if total != expected:
        raise ConsistencyError(f"p={params.p}: trace {total} != {expected}")
    return total


def centered_ell_rotation_sum(x: Sequence, params: DyadicParams) -> Fraction:
    return sum((centered_ell(rotate(x, i), params) for i in range(params.p)), Fraction(0))


def mobius_circle(samples: int = 10_000, tolerance: float = 1e-12) -> MobiusReport:
    """Image of the unit circle under f(z) = 1/(2 - z): the circle with center 2/3 and radius 1/3."""
    if samples < 2:
        raise ArgumentError("need at least two samples")
    theta = 2.0 * np.pi * np.arange(samples) / samples
    values = 1.0 / (2.0 - np.exp(1j * theta))
    mirrored = values[(-np.arange(samples)) % samples]
    report = MobiusReport(
        samples=samples,
        center=2.0 / 3.0,
        radius=1.0 / 3.0,
        max_radius_error=float(np.max(np.abs(np.abs(values - 2.0 / 3.0) - 1.0 / 3.0))),
        leftmost=float(np.min(values.real)),
        max_conjugation_error=float(np.max(np.abs(mirrored - np.conj(values)))),
        tolerance=tolerance,
    )
    return report


def spectral_report(params: DyadicParams, with_hypercube: Optional[bool] = None) -> SpectralReport:
    p, d = params.p, params.denom
    eigenvalues = eigs_via_roots(params)
    minimum = min_symmetrized_eig(params)
    if with_hypercube is None:
        with_hypercube = p <= HYPERCUBE_MAX_P
    best, argmin = hypercube_min(params) if with_hypercube else (None, None)
    return SpectralReport(
        p=p,
        eigenvalues=eigenvalues,
        min_sym_eig=float(minimum),
        min_sym_eig_exact=minimum if isinstance(minimum, Fraction) else None,
        hypercube_min_times4=best,
        hypercube_argmin=argmin,
        bound_times4=Fraction(p * d, 3),
        sharp=p % 2 == 0,
    )
