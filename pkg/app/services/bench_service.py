# app/services/bench_service.py
"""Timing and addition counts of the quadrant transform."""
import logging
import time

import numpy as np

from app.core.config import settings
from app.core.errors import require
from app.models.dyadic import BenchReport, Image
from app.services.fht_service import fht_quadrant

logger = logging.getLogger(__name__)

MAX_BENCH_SIDE = 4096
# largest tolerated ratio between zero-image and random-image wall times
TIMING_SPREAD = 3.0


class BenchService:
    """Service for measuring the FHT at side n against side n/2."""

    def __init__(self, seed: int | None = None):
        self.seed = settings.DYADIC_SEED if seed is None else seed

    def _timed(self, img: Image) -> tuple[int, float]:
        start = time.perf_counter()
        acc = fht_quadrant(img)
        return acc.additions, time.perf_counter() - start

    def run(self, n: int) -> BenchReport:
        """
        Time random images of side n and n/2 and a zero image of side n.

        Args:
            n: power of two in [4, 4096]

        Returns:
            BenchReport with counts, their ratio and the idealized ratio 4 log2(n) / log2(n/2)
        """
        require(4 <= n <= MAX_BENCH_SIDE and not n & (n - 1), f"n must be a power of two in [4, {MAX_BENCH_SIDE}], got {n}")
        rng = np.random.Generator(np.random.Philox(self.seed))
        half = n // 2
        p = n.bit_length() - 1

        additions_half, seconds_half = self._timed(Image.from_array(rng.integers(0, 256, size=(half, half))))
        additions_n, seconds_n = self._timed(Image.from_array(rng.integers(0, 256, size=(n, n))))
        zero_additions, seconds_zero = self._timed(Image.from_array(np.zeros((n, n), dtype=np.int64)))
        if zero_additions != additions_n:
            logger.warning(f"n={n}: addition count depends on image content ({zero_additions} vs {additions_n})")
        slower, faster = max(seconds_zero, seconds_n), min(seconds_zero, seconds_n)
        if faster > 0 and slower / faster > TIMING_SPREAD:
            logger.warning(f"n={n}: zero image took {seconds_zero:.4f}s against {seconds_n:.4f}s for a random image")

        report = BenchReport(
            n=n,
            half_n=half,
            additions_n=additions_n,
            additions_half=additions_half,
            ratio=additions_n / additions_half,
            ideal_ratio=4.0 * p / (p - 1),
            bound_n=3 * n * (2 * n) * p,
            seconds_n=seconds_n,
            seconds_half=seconds_half,
            seconds_zero_image=seconds_zero,
        )
        logger.info(f"Bench n={n}: {additions_n} additions in {seconds_n:.3f}s, ratio {report.ratio:.4f}")
        return report

    @staticmethod
    def render(report: BenchReport) -> str:
        return "\n".join([
            f"n={report.half_n}: additions={report.additions_half} time={report.seconds_half:.4f}s",
            f"n={report.n}: additions={report.additions_n} time={report.seconds_n:.4f}s",
            f"n={report.n} zero image: time={report.seconds_zero_image:.4f}s",
            f"ratio={report.ratio:.4f} ideal={report.ideal_ratio:.4f} bound(n)={report.bound_n}",
        ])
