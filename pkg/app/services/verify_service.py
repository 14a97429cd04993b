# app/services/verify_service.py
"""Acceptance runner: every numerical claim as a named PASS/FAIL check."""
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from app.core.config import settings
from app.core.errors import ConsistencyError, DyadicError
from app.models.dyadic import (
    CheckResult,
    DyadicParams,
    GridFunction,
    Image,
    MomentPath,
    Quadrant,
    SamplingMode,
    VerifyLevel,
    VerifySummary,
)
from app.services import deviation_stats, ergodic, spectral
from app.services.fht_service import QuadrantTransform, addition_count, brute_quadrant, fht_full, fht_quadrant, orient

logger = logging.getLogger(__name__)

GOLDEN_SAMPLE_COUNT = 10_000_000
GOLDEN_SEED = 1
KS_GOLDEN_SLACK = 0.005
GOLDEN_KEYS = {
    "ks_sampled_p16",
    "ks_sampled_count",
    "ks_sampled_seed",
    "clt_sup_error_p8",
    "clt_sup_error_p16",
    "psi20_xi1_gauss_gap",
}

LEVELS: Dict[VerifyLevel, Dict[str, Any]] = {
    VerifyLevel.QUICK: {
        "fht_sizes": [8, 16, 32],
        "fht_images": 20,
        "p_max": 8,
        "eig_p_max": 8,
        "min_re_p_max": 8,
        "hypercube_p_max": 8,
        "random_vectors": 100,
        "random_vector_p_max": 8,
        "q_row_max_p_max": 8,
        "ell_trace_p_max": 8,
        "psi_p_max": 8,
        "direct_p_max": 8,
        "doubling_p_max": 8,
        "gap_p_max": 8,
        "x_only_p_max": 8,
    },
    VerifyLevel.FULL: {
        "fht_sizes": [8, 16, 32, 64],
        "fht_images": 20,
        "p_max": 12,
        "eig_p_max": 12,
        "min_re_p_max": 20,
        "hypercube_p_max": 16,
        "random_vectors": 1000,
        "random_vector_p_max": 20,
        "q_row_max_p_max": 10,
        "ell_trace_p_max": 20,
        "psi_p_max": 20,
        "direct_p_max": 10,
        "doubling_p_max": 16,
        "gap_p_max": 10,
        "x_only_p_max": 20,
    },
}

GAP_XIS = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ConsistencyError(message)


def _rng(stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(GOLDEN_SEED).jumped(stream + 1))


def sampled_ks_p16() -> float:
    sampled = SamplingMode.sampled(GOLDEN_SAMPLE_COUNT, GOLDEN_SEED)
    return deviation_stats.ks_distance(DyadicParams.of(16), sampled).ks_distance


def clt_golden_values() -> Dict[str, float]:
    reports = ergodic.clt_report([8, 16], xi_grid=ergodic.DEFAULT_XI_GRID)
    psi20 = ergodic.psi_exact(DyadicParams.of(20), 1.0)
    return {
        "clt_sup_error_p8": reports[0].sup_error_exact_vs_gauss,
        "clt_sup_error_p16": reports[1].sup_error_exact_vs_gauss,
        "psi20_xi1_gauss_gap": abs(psi20 - math.exp(-1.0 / 96.0)),
    }


def compute_golden() -> Dict[str, Any]:
    """Oracle values stored with the repository and compared by the full level."""
    return {
        "ks_sampled_p16": sampled_ks_p16(),
        "ks_sampled_count": GOLDEN_SAMPLE_COUNT,
        "ks_sampled_seed": GOLDEN_SEED,
        **clt_golden_values(),
    }


class VerificationService:
    """Runs the acceptance checks for one level."""

    def __init__(self, level: VerifyLevel = VerifyLevel.QUICK, fht_transform: Optional[QuadrantTransform] = None,
                 golden_path: Optional[str] = None):
        self.level = level
        self.limits = LEVELS[level]
        self.fht_transform = fht_transform or fht_quadrant
        self.golden_path = Path(golden_path or settings.DYADIC_GOLDEN_PATH)

    def _checks(self) -> List[tuple[str, Callable[[], str]]]:
        checks = [
            ("fht_oracle", self.check_fht_oracle),
            ("fht_linearity", self.check_fht_linearity),
            ("fht_additions", self.check_fht_additions),
            ("worst_case_bound", self.check_worst_case),
            ("moment_identity", self.check_moments),
            ("markov_tail", self.check_markov_tail),
            ("eigen_residuals", self.check_eigen_residuals),
            ("symmetrized_minimum", self.check_symmetrized_minimum),
            ("hypercube_minimum", self.check_hypercube),
            ("quadratic_form", self.check_quadratic_form),
            ("q_maximum", self.check_q_maximum),
            ("trace_lemma", self.check_trace_lemma),
            ("centered_ell", self.check_centered_ell),
            ("mobius_circle", self.check_mobius),
            ("psi_exact_symmetry", self.check_psi_symmetry),
            ("psi_direct_sum", self.check_psi_direct),
            ("doubling_rotation", self.check_doubling),
            ("transfer_operator", self.check_transfer_operator),
            ("discretization_gap", self.check_gap),
            ("nagaev_identity", self.check_nagaev),
            ("clt_convergence", self.check_clt),
            ("ks_convergence", self.check_ks),
        ]
        if self.level == VerifyLevel.FULL:
            checks.append(("ks_golden", self.check_ks_golden))
            checks.append(("golden_values", self.check_golden))
        return checks

    def run(self) -> VerifySummary:
        results = []
        for name, check in self._checks():
            try:
                detail = check()
                results.append(CheckResult(name=name, passed=True, detail=detail))
            except DyadicError as e:
                logger.error(f"Check {name} failed: {e}")
                results.append(CheckResult(name=name, passed=False, detail=str(e)))
        passed = all(r.passed for r in results)
        logger.info(f"Verify {self.level.value}: {sum(r.passed for r in results)}/{len(results)} checks passed")
        return VerifySummary(level=self.level, passed=passed, checks=results)

    @staticmethod
    def render_table(summary: VerifySummary) -> str:
        width = max(len(c.name) for c in summary.checks)
        lines = []
        for c in summary.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status}  {c.name.ljust(width)}  {c.detail}")
        lines.append(f"{'PASS' if summary.passed else 'FAIL'}  overall ({summary.level.value})")
        return "\n".join(lines)

    @staticmethod
    def render_json(summary: VerifySummary) -> str:
        return json.dumps(summary.model_dump(mode="json"), indent=2, sort_keys=True)

    # FHT

    def _random_image(self, rng: np.random.Generator, n: int) -> Image:
        return Image.from_array(rng.integers(0, 256, size=(n, n), dtype=np.int64))

    def check_fht_oracle(self) -> str:
        cells = 0
        for stream, n in enumerate(self.limits["fht_sizes"]):
            rng = _rng(stream)
            for k in range(self.limits["fht_images"]):
                img = self._random_image(rng, n)
                accumulators = fht_full(img, transform=self.fht_transform)
                for quadrant in Quadrant:
                    sums = accumulators[quadrant].sums
                    expected = brute_quadrant(orient(img, quadrant))
                    _expect(np.array_equal(sums, expected),
                            f"n={n} image {k} quadrant {quadrant.value}: FHT differs from direct line sums "
                            f"in {int(np.count_nonzero(sums != expected))} cells")
                    _expect(bool(np.all(sums.sum(axis=1) == img.total)),
                            f"n={n} image {k} quadrant {quadrant.value}: line sums do not conserve the image total")
                    cells += sums.size
        return f"{cells} cells equal to direct sums"

    def check_fht_linearity(self) -> str:
        rng = _rng(100)
        alpha = 3
        for n in self.limits["fht_sizes"]:
            a, b = self._random_image(rng, n), self._random_image(rng, n)
            combined = Image.from_array(alpha * a.pixels + b.pixels)
            lhs = self.fht_transform(combined).sums
            rhs = alpha * self.fht_transform(a).sums + self.fht_transform(b).sums
            _expect(np.array_equal(lhs, rhs), f"n={n}: transform is not linear")
        return f"alpha={alpha} on sizes {self.limits['fht_sizes']}"

    def check_fht_additions(self) -> str:
        small = self.fht_transform(Image.from_array(np.zeros((8, 8), dtype=np.int64))).additions
        _expect(small == addition_count(8), f"n=8: {small} additions, expected {addition_count(8)}")
        counts = {}
        for n in (512, 1024):
            counts[n] = self.fht_transform(Image.from_array(np.zeros((n, n), dtype=np.int64))).additions
            p = n.bit_length() - 1
            _expect(counts[n] <= 3 * n * (2 * n) * p, f"n={n}: {counts[n]} additions above 3*n*2n*log2(n)")
        ratio = counts[1024] / counts[512]
        _expect(3.5 <= ratio <= 4.6, f"addition ratio 1024/512 = {ratio:.4f} outside [3.5, 4.6]")
        return f"n=8: {small}; ratio 1024/512 = {ratio:.4f}"

    # Deviation statistics

    def check_worst_case(self) -> str:
        parts = []
        for p in range(2, self.limits["p_max"] + 1):
            ext = deviation_stats.exhaustive_extrema(DyadicParams.of(p))
            _expect(ext.min_num == -ext.max_num, f"p={p}: min {ext.min_num} is not -max {ext.max_num}")
            parts.append(f"p={p}:{6 * ext.max_num}{'=' if ext.sharp else '<'}{p * ext.denom}")
        return " ".join(parts)

    def check_moments(self) -> str:
        parts = []
        for p in range(2, self.limits["p_max"] + 1):
            params = DyadicParams.of(p)
            pairs = deviation_stats.moments(params, MomentPath.PAIRS)
            x_only = deviation_stats.moments(params, MomentPath.X_ONLY)
            _expect(pairs.variance == x_only.variance, f"p={p}: pair and x-only variances differ")
            parts.append(f"p={p}:{pairs.variance}")
        for p in range(self.limits["p_max"] + 1, self.limits["x_only_p_max"] + 1):
            report = deviation_stats.moments(DyadicParams.of(p), MomentPath.X_ONLY)
            parts.append(f"p={p}:{report.variance}")
        return "variance " + " ".join(parts)

    def check_markov_tail(self) -> str:
        p = self.limits["p_max"]
        tail = deviation_stats.tail_fraction(DyadicParams.of(p), Fraction(1))
        _expect(tail.fraction_ge < tail.markov_bound, f"p={p}: {tail.fraction_ge} not below {tail.markov_bound}")
        return f"p={p}: {tail.count_ge}/{tail.total} pairs with |E| >= 1 (< {tail.markov_bound})"

    # Spectral

    def check_eigen_residuals(self) -> str:
        for p in range(1, self.limits["eig_p_max"] + 1):
            spectral.eigs_via_roots(DyadicParams.of(p))
        return f"p <= {self.limits['eig_p_max']}"

    def check_symmetrized_minimum(self) -> str:
        for p in range(1, self.limits["min_re_p_max"] + 1):
            params = DyadicParams.of(p)
            value = spectral.min_symmetrized_eig(params)
            if p % 2 == 0:
                _expect(value == Fraction(params.denom, 3), f"p={p}: minimum {value} is not (2^p-1)/3")
            else:
                _expect(value > params.denom / 3, f"p={p}: minimum {value} not above (2^p-1)/3")
        return f"p <= {self.limits['min_re_p_max']}"

    def check_hypercube(self) -> str:
        parts = []
        for p in range(1, self.limits["hypercube_p_max"] + 1):
            best, _ = spectral.hypercube_min(DyadicParams.of(p))
            parts.append(f"p={p}:{best}")
        return " ".join(parts)

    def check_quadratic_form(self) -> str:
        for p in range(1, min(self.limits["p_max"], spectral.VERTEX_AVERAGE_MAX_P) + 1):
            _expect(spectral.check_quad_form_on_vertices(DyadicParams.of(p)), f"p={p}: a(y) != <Ay,y> on a vertex")
        rng = _rng(200)
        count = self.limits["random_vectors"]
        for p in range(2, self.limits["random_vector_p_max"] + 1):
            params = DyadicParams.of(p)
            trials = count if p == self.limits["random_vector_p_max"] else max(1, count // 10)
            for _ in range(trials):
                nums = rng.integers(-50, 51, size=p)
                dens = rng.integers(1, 20, size=p)
                spectral.quad_form_a([Fraction(int(a), int(b)) for a, b in zip(nums, dens)], params)
        return f"vertices p <= {min(self.limits['p_max'], spectral.VERTEX_AVERAGE_MAX_P)}, random rationals p <= {self.limits['random_vector_p_max']}"

    def check_q_maximum(self) -> str:
        for p in range(2, self.limits["p_max"] + 1):
            params = DyadicParams.of(p)
            top = spectral.max_q(params)
            ext = deviation_stats.exhaustive_extrema(params)
            _expect(top == Fraction(ext.max_num, params.denom), f"p={p}: max q {top} != max E {ext.max_num}/{params.denom}")
            _expect(spectral.q_vertex_identity(params), f"p={p}: 4 d q(x) != p d - <As,s>")
            best, _ = spectral.hypercube_min(params)
            _expect(top == Fraction(p, 4) - Fraction(best, 4 * params.denom), f"p={p}: max q does not match hypercube minimum")
            if p <= self.limits["q_row_max_p_max"]:
                _expect(spectral.check_q_is_row_max(params), f"p={p}: q(x) != max_t E(x,t)")
        return f"p <= {self.limits['p_max']}"

    def check_trace_lemma(self) -> str:
        rng = _rng(300)
        for p in range(1, self.limits["p_max"] + 1):
            params = DyadicParams.of(p)
            spectral.trace_expectation_check(params, spectral.build_circulant(params))
            for _ in range(10):
                spectral.trace_expectation_check(params, rng.integers(-9, 10, size=(p, p)))
            form, denominator = spectral.centered_ell_form(params)
            spectral.trace_expectation_check(params, form, denominator)
        return f"circulant, 10 random matrices and the centered ell form, p <= {self.limits['p_max']}"

    def check_centered_ell(self) -> str:
        rng = _rng(400)
        for p in range(1, self.limits["ell_trace_p_max"] + 1):
            params = DyadicParams.of(p)
            spectral.centered_ell_trace(params)
            _expect(spectral.centered_ell([1] * p, params) == 0, f"p={p}: ell(1) != 0")
            x = [Fraction(int(a), int(b)) for a, b in zip(rng.integers(-50, 51, size=p), rng.integers(1, 20, size=p))]
            _expect(spectral.centered_ell_rotation_sum(x, params) == 0, f"p={p}: rotations of ell do not sum to 0")
        return f"p <= {self.limits['ell_trace_p_max']}"

    def check_mobius(self) -> str:
        report = spectral.mobius_circle()
        _expect(report.ok, f"radius error {report.max_radius_error:.3e}, leftmost {report.leftmost!r}")
        return f"{report.samples} samples, radius error {report.max_radius_error:.1e}"

    # Ergodic

    def check_psi_symmetry(self) -> str:
        xis = ergodic.DEFAULT_XI_GRID
        for p in range(1, self.limits["psi_p_max"] + 1):
            params = DyadicParams.of(p)
            values = ergodic.psi_exact_grid(params, xis + [-xi for xi in xis])
            forward, backward = values[:len(xis)], values[len(xis):]
            _expect(forward[0] == 1, f"p={p}: psi(0) = {forward[0]}")
            _expect(all(abs(z.imag) <= 1e-12 and abs(z) <= 1 + 1e-12 for z in forward), f"p={p}: psi not real or exceeds 1")
            _expect(all(abs(a - b.conjugate()) <= 1e-12 for a, b in zip(backward, forward)), f"p={p}: psi(-xi) != conj psi(xi)")
        return f"p <= {self.limits['psi_p_max']}"

    def check_psi_direct(self) -> str:
        worst = 0.0
        for p in range(1, self.limits["direct_p_max"] + 1):
            params = DyadicParams.of(p)
            for xi in ergodic.DEFAULT_XI_GRID:
                worst = max(worst, abs(ergodic.psi_exact(params, xi) - ergodic.psi_direct(params, xi)))
        _expect(worst <= 1e-12, f"max |psi_exact - direct| = {worst:.3e}")
        return f"p <= {self.limits['direct_p_max']}, max difference {worst:.1e}"

    def check_doubling(self) -> str:
        for p in range(1, self.limits["doubling_p_max"] + 1):
            _expect(ergodic.doubling_matches_rotation(DyadicParams.of(p)), f"p={p}: doubling differs from rotl")
        return f"p <= {self.limits['doubling_p_max']}"

    def check_transfer_operator(self) -> str:
        m = 1 << 10
        rng = _rng(500)
        ones = GridFunction.constant(m)
        _expect(np.array_equal(ergodic.transfer_L0(ones).values, ones.values), "L0 does not fix constants")
        h = GridFunction(m=m, values=rng.standard_normal(m) + 1j * rng.standard_normal(m))
        _expect(abs(ergodic.transfer_L0(h).mean - h.mean) <= 1e-12, "L0 does not preserve the mean")
        _expect(np.array_equal(ergodic.transfer_L_xi(h, 0.0).values, ergodic.transfer_L0(h).values), "L_0 twisted != L0")
        for xi in (0.5, 1.0, 2.0):
            expected = (1.0 + 2.0 * math.sin(xi / 2.0) / xi) / 2.0
            got = ergodic.transfer_L_xi(ones, xi).mean
            _expect(abs(got - expected) <= 1e-6, f"xi={xi}: mean(L_xi 1) = {got}, expected {expected}")
        return f"m={m}"

    def check_gap(self) -> str:
        worst = 0.0
        gaps: Dict[float, float] = {}
        for p in range(1, self.limits["gap_p_max"] + 1):
            for xi in GAP_XIS:
                gaps[xi] = ergodic.discretization_gap(DyadicParams.of(p), xi)
                worst = max(worst, gaps[xi] / xi)
        # gaps now hold the largest p; doubling xi scales them by about 4
        ratio = gaps[0.5] / gaps[0.25]
        return f"p <= {self.limits['gap_p_max']}, max gap/|xi| = {worst:.4f}, gap(0.5)/gap(0.25) = {ratio:.3f}"

    def check_nagaev(self) -> str:
        params = DyadicParams.of(6)
        continuous = ergodic.psi_continuous(params, 1.0)
        exact = ergodic.psi_exact(params, 1.0)
        nagaev = ergodic.psi_nagaev(params, 1.0, 1 << 14)
        error = abs(nagaev - continuous)
        _expect(error < 1e-3, f"|nagaev - integral| = {error:.3e}")
        gap = abs(continuous - exact)
        _expect(abs(nagaev - exact) <= gap + 1e-3, f"|nagaev - exact| = {abs(nagaev - exact):.3e} above gap {gap:.3e} + 1e-3")
        coarse = abs(ergodic.psi_nagaev(params, 1.0, 1 << 10) - continuous)
        fine = abs(ergodic.psi_nagaev(params, 1.0, 1 << 11) - continuous)
        ratio = coarse / fine if fine > 0 else math.inf
        _expect(ratio >= 1.8, f"grid refinement ratio {ratio:.3f} below 1.8")
        return f"p=6 xi=1: error {error:.1e}, refinement ratio {ratio:.2f}"

    def check_clt(self) -> str:
        pair = [2, 8] if self.level == VerifyLevel.QUICK else [8, 16]
        reports = ergodic.clt_report(pair)
        _expect(ergodic.sup_errors_non_increasing(reports),
                f"sup error p={pair[1]} ({reports[1].sup_error_exact_vs_gauss:.3e}) not below p={pair[0]} "
                f"({reports[0].sup_error_exact_vs_gauss:.3e})")
        return " ".join(f"p={r.p}:{r.sup_error_exact_vs_gauss:.6f}" for r in reports)

    def check_ks(self) -> str:
        ps = [4, 8] if self.level == VerifyLevel.QUICK else [4, 8, 12]
        values = [deviation_stats.ks_distance(DyadicParams.of(p), SamplingMode.exhaustive()).ks_distance for p in ps]
        _expect(all(b < a for a, b in zip(values, values[1:])), f"KS not decreasing: {values}")
        return " ".join(f"p={p}:{v:.6f}" for p, v in zip(ps, values))

    # Stored oracle

    def _golden(self) -> Dict[str, Any]:
        if not self.golden_path.exists():
            raise ConsistencyError(f"no golden file at {self.golden_path}; run the golden command")
        try:
            golden = json.loads(self.golden_path.read_text())
        except json.JSONDecodeError as e:
            raise ConsistencyError(f"golden file {self.golden_path} is not valid JSON: {e}")
        missing = sorted(GOLDEN_KEYS - set(golden))
        _expect(not missing, f"golden file {self.golden_path} lacks {missing}")
        return golden

    def check_ks_golden(self) -> str:
        golden = self._golden()
        _expect(golden["ks_sampled_count"] == GOLDEN_SAMPLE_COUNT and golden["ks_sampled_seed"] == GOLDEN_SEED,
                f"golden KS drawn with count={golden['ks_sampled_count']} seed={golden['ks_sampled_seed']}, "
                f"expected count={GOLDEN_SAMPLE_COUNT} seed={GOLDEN_SEED}")
        value = sampled_ks_p16()
        limit = golden["ks_sampled_p16"] + KS_GOLDEN_SLACK
        _expect(value <= limit, f"sampled KS p=16 {value:.6f} above golden {golden['ks_sampled_p16']:.6f} + {KS_GOLDEN_SLACK}")
        return f"p=16(sampled):{value:.6f} golden:{golden['ks_sampled_p16']:.6f}"

    def check_golden(self) -> str:
        golden = self._golden()
        current = clt_golden_values()
        _expect(current["clt_sup_error_p16"] < current["clt_sup_error_p8"], "sup error p=16 not below p=8")
        for key in ("clt_sup_error_p8", "clt_sup_error_p16"):
            _expect(abs(current[key] - golden[key]) <= 1e-9, f"{key} {current[key]!r} differs from golden {golden[key]!r}")
        _expect(current["psi20_xi1_gauss_gap"] <= golden["psi20_xi1_gauss_gap"] + 1e-6,
                f"|psi_20(1) - exp(-1/96)| {current['psi20_xi1_gauss_gap']:.3e} above golden")
        return f"golden file {self.golden_path}"
