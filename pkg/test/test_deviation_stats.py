# test/test_deviation_stats.py
"""Tests for extrema, moments, tails, histograms and KS distances of E(x, t)."""
from fractions import Fraction

import numpy as np
import pytest

from app.core.config import settings
from app.core.errors import ArgumentError, ResourceError
from app.models.dyadic import MomentPath, SamplingKind, SamplingMode
from app.services import deviation_stats
from app.services.deviation_stats import (
    default_mode,
    exhaustive_extrema,
    histogram,
    ks_distance,
    moments,
    tail_fraction,
    value_tally,
    variance_formula,
)
from app.services.dyadic_core import deviation_block


def _fraction(pair):
    return Fraction(pair[0], pair[1])


class TestExtrema:
    def test_examples(self, expected, params):
        for case in expected["extrema"]:
            ext = exhaustive_extrema(params(case["p"]))
            assert ext.max_num == case["max_num"]
            if "argmax" in case:
                assert list(ext.argmax) == case["argmax"]

    @pytest.mark.parametrize("p", range(2, 11))
    def test_sharp_for_even_p_only(self, params, p):
        ext = exhaustive_extrema(params(p))
        assert ext.sharp == (p % 2 == 0)
        assert ext.min_num == -ext.max_num
        assert 6 * ext.max_num <= p * ext.denom

    def test_argmax_attains_max(self, params):
        prm = params(7)
        ext = exhaustive_extrema(prm)
        x, t = ext.argmax
        block = deviation_block(0, prm.n, prm)
        assert block[t, x] == ext.max_num
        # No earlier (t, x) in row-major order attains the maximum.
        assert int(np.argmax(block)) == t * prm.n + x

    def test_chunking_does_not_change_result(self, params, monkeypatch):
        prm = params(8)
        whole = exhaustive_extrema(prm)
        monkeypatch.setattr(settings, "DYADIC_CHUNK_CELLS", 1000)
        monkeypatch.setattr(settings, "DYADIC_THREADS", 4)
        assert exhaustive_extrema(prm) == whole

    def test_resource_limit(self, params):
        with pytest.raises(ResourceError):
            exhaustive_extrema(params(deviation_stats.EXTREMA_MAX_P + 1))


class TestMoments:
    def test_examples(self, expected, params):
        for case in expected["variance"]:
            if case["p"] > 8:
                continue
            report = moments(params(case["p"]))
            assert report.variance == _fraction(case["value"])
            assert report.mean == 0
            if "sum_num_sq" in case:
                assert report.sum_num_sq == case["sum_num_sq"]

    @pytest.mark.parametrize("p", range(1, 10))
    def test_paths_agree(self, params, p):
        pairs = moments(params(p), MomentPath.PAIRS)
        x_only = moments(params(p), MomentPath.X_ONLY)
        assert pairs.sum_num_sq == x_only.sum_num_sq
        assert pairs.variance == x_only.variance == variance_formula(params(p))

    def test_default_path_switches_above_pairs_limit(self, params):
        assert moments(params(13)).path == MomentPath.X_ONLY
        assert moments(params(4)).path == MomentPath.PAIRS

    def test_x_only_large_p(self, params):
        prm = params(20)
        report = moments(prm, MomentPath.X_ONLY)
        assert report.variance == Fraction(20, 48) * (1 - Fraction(1, prm.denom))

    def test_pairs_limit(self, params):
        with pytest.raises(ResourceError):
            moments(params(13), MomentPath.PAIRS)

    @pytest.mark.slow
    def test_p12_both_paths(self, expected, params):
        case = next(c for c in expected["variance"] if c["p"] == 12)
        assert moments(params(12), MomentPath.PAIRS).variance == _fraction(case["value"])
        assert moments(params(12), MomentPath.X_ONLY).variance == _fraction(case["value"])


class TestTally:
    def test_exhaustive_total(self, params):
        prm = params(5)
        offset, counts, total = value_tally(prm, SamplingMode.exhaustive())
        assert total == prm.n * prm.n
        assert counts.sum() == total
        assert offset == 5 * 31 // 6
        # E(x, t) and E(x, n-1-t) pair up, so the tally is mirror-symmetric.
        assert np.array_equal(counts, counts[::-1])

    def test_sampled_is_reproducible_and_thread_independent(self, params, monkeypatch):
        prm = params(9)
        monkeypatch.setattr(deviation_stats, "SAMPLE_CHUNK", 1000)
        mode = SamplingMode.sampled(5500, 7)
        monkeypatch.setattr(settings, "DYADIC_THREADS", 1)
        single = value_tally(prm, mode)
        monkeypatch.setattr(settings, "DYADIC_THREADS", 6)
        multi = value_tally(prm, mode)
        assert single[2] == multi[2] == 5500
        assert np.array_equal(single[1], multi[1])

    def test_seed_changes_sample(self, params):
        prm = params(9)
        a = value_tally(prm, SamplingMode.sampled(2000, 1))[1]
        b = value_tally(prm, SamplingMode.sampled(2000, 2))[1]
        assert not np.array_equal(a, b)

    def test_exhaustive_limit(self, params):
        with pytest.raises(ResourceError):
            value_tally(params(13), SamplingMode.exhaustive())

    def test_default_mode(self, params):
        assert default_mode(params(12)).kind == SamplingKind.EXHAUSTIVE
        mode = default_mode(params(16))
        assert mode.kind == SamplingKind.SAMPLED
        assert mode.count == settings.DYADIC_SAMPLE_COUNT

    def test_sampled_mode_requires_seed(self):
        with pytest.raises(ValueError):
            SamplingMode(kind=SamplingKind.SAMPLED, count=10)


class TestTail:
    def test_zero_threshold(self, params):
        assert tail_fraction(params(6), Fraction(0)).fraction_ge == 1

    def test_p2_third(self, params):
        report = tail_fraction(params(2), Fraction(1, 3))
        assert report.count_ge == 4
        assert report.fraction_ge == Fraction(4, 16)

    def test_markov(self, params):
        report = tail_fraction(params(8), Fraction(1))
        assert report.fraction_ge < report.markov_bound == Fraction(8, 48)

    @pytest.mark.slow
    def test_markov_p12(self, params):
        report = tail_fraction(params(12), Fraction(1))
        assert report.fraction_ge < Fraction(1, 4)

    def test_negative_threshold(self, params):
        with pytest.raises(ArgumentError):
            tail_fraction(params(3), Fraction(-1, 2))


class TestHistogram:
    def test_p2_three_bins(self, expected, params):
        case = expected["histogram"]
        bins = histogram(params(case["p"]), case["bins"])
        assert [b.mass for b in bins] == [_fraction(m) for m in case["masses"]]

    def test_single_bin(self, params):
        bins = histogram(params(7), 1)
        assert len(bins) == 1
        assert bins[0].mass == 1
        assert bins[0].lo == pytest.approx(-7 / 6)
        assert bins[0].hi == pytest.approx(7 / 6)

    @pytest.mark.parametrize("count", [2, 7, 8, 24])
    def test_mirror_symmetric(self, params, count):
        bins = histogram(params(6), count)
        masses = [b.mass for b in bins]
        assert masses == masses[::-1]
        assert sum(masses) == 1

    def test_zero_bins(self, params):
        with pytest.raises(ArgumentError):
            histogram(params(3), 0)


class TestKS:
    def test_point_mass(self, params):
        assert ks_distance(params(1)).ks_distance == pytest.approx(0.5)

    def test_decreases_with_p(self, params):
        ks4 = ks_distance(params(4), SamplingMode.exhaustive()).ks_distance
        ks8 = ks_distance(params(8), SamplingMode.exhaustive()).ks_distance
        assert ks8 < ks4

    @pytest.mark.slow
    def test_p12_below_p8(self, params):
        ks8 = ks_distance(params(8), SamplingMode.exhaustive()).ks_distance
        ks12 = ks_distance(params(12), SamplingMode.exhaustive()).ks_distance
        assert ks12 < ks8

    def test_sampled_report(self, params):
        mode = SamplingMode.sampled(20000, 3)
        report = ks_distance(params(14), mode)
        assert report.mode == mode
        assert 0.0 <= report.ks_distance <= 1.0
