# test/test_image_service.py
"""Tests for PGM input and CSV report output."""
import csv
from fractions import Fraction

import numpy as np
import pytest

from app.core.errors import DimensionError, ParseError
from app.models.dyadic import HoughAccumulator, Image, Quadrant, SamplingMode
from app.services import deviation_stats, ergodic
from app.services.dyadic_core import deviation_num, dyadic_line
from app.services.fht_service import fht_full, fht_quadrant
from app.services.image_service import ImageService, next_power_of_two, rational
from app.services.spectral import spectral_report


@pytest.fixture
def image_service():
    return ImageService()


def _read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestReadPgm:
    def test_ascii_zeros(self, image_service, write_p2):
        img = image_service.read_pgm(write_p2(np.zeros((8, 8), dtype=np.int64)))
        assert img.n == 8
        assert not img.pixels.any()

    def test_header_comment(self, image_service, write_p2):
        pixels = np.arange(16).reshape(4, 4)
        img = image_service.read_pgm(write_p2(pixels, comment="made by hand"))
        assert np.array_equal(img.pixels, pixels)

    def test_not_power_of_two(self, image_service, write_p2):
        path = write_p2(np.ones((6, 6), dtype=np.int64))
        with pytest.raises(DimensionError, match="8x8"):
            image_service.read_pgm(path)

    def test_padding(self, image_service, write_p2):
        pixels = np.ones((6, 6), dtype=np.int64)
        img = image_service.read_pgm(write_p2(pixels), pad=True)
        assert img.n == 8
        assert np.array_equal(img.pixels[:6, :6], pixels)
        assert int((img.pixels == 0).sum()) == 28

    def test_padding_rectangle(self, image_service, write_p2):
        img = image_service.read_pgm(write_p2(np.ones((3, 5), dtype=np.int64)), pad=True)
        assert img.n == 8
        assert img.total == 15

    def test_binary_8bit(self, image_service, tmp_path, random_image):
        img = random_image(16)
        path = tmp_path / "img.pgm"
        image_service.write_pgm(img, path)
        assert path.read_bytes().startswith(b"P5\n16 16\n")
        assert np.array_equal(image_service.read_pgm(path).pixels, img.pixels)

    def test_binary_16bit(self, image_service, tmp_path, random_image):
        img = random_image(8, high=65536)
        path = tmp_path / "img16.pgm"
        image_service.write_pgm(img, path)
        assert np.array_equal(image_service.read_pgm(path).pixels, img.pixels)

    def test_ascii_writer(self, image_service, tmp_path, random_image):
        img = random_image(4)
        path = tmp_path / "img.pgm"
        image_service.write_pgm(img, path, binary=False)
        assert np.array_equal(image_service.read_pgm(path).pixels, img.pixels)

    @pytest.mark.parametrize("content", [
        b"P6\n2 2\n255\n" + bytes(12),
        b"P2\n2 2\n",
        b"P2\n2 2\n255\n1 2 3\n",
        b"P5\n2 2\n255\n" + bytes(3),
        b"P2\n2 x\n255\n1 2 3 4\n",
        b"P2\n2 2\n70000\n1 2 3 4\n",
        b"P2\n2 2\n3\n1 2 3 4\n",
        b"P2\n2 2\n255\n1 a 3 4\n",
    ])
    def test_malformed(self, image_service, tmp_path, content):
        path = tmp_path / "bad.pgm"
        path.write_bytes(content)
        with pytest.raises(ParseError):
            image_service.read_pgm(path)


class TestAccumulatorCsv:
    def test_zero_image(self, image_service, tmp_path):
        acc = fht_quadrant(Image.from_array(np.zeros((8, 8), dtype=np.int64)))
        path = tmp_path / "acc.csv"
        assert image_service.write_accumulator_csv(acc, path) == 8 * 15
        rows = _read_csv(path)
        assert rows[0] == ["quadrant", "t", "h", "sum"]
        assert all(row[3] == "0" for row in rows[1:])
        # t ascending, then h ascending
        assert rows[1][:3] == ["0", "0", "-7"]
        assert rows[15][:3] == ["0", "0", "7"]
        assert rows[16][:3] == ["0", "1", "-7"]

    def test_delta_image(self, image_service, tmp_path, delta_image):
        n = 8
        path = tmp_path / "acc.csv"
        image_service.write_accumulator_csv(list(fht_full(delta_image(n, 3, 5)).values()), path)
        rows = _read_csv(path)[1:]
        assert len(rows) == 4 * n * (2 * n - 1)
        for quadrant in Quadrant:
            ones = [r for r in rows if r[0] == quadrant.value and r[3] == "1"]
            assert len(ones) == n
            assert {r[3] for r in rows if r[0] == quadrant.value} == {"0", "1"}

    def test_read_back(self, image_service, tmp_path, random_image):
        accumulators = fht_full(random_image(8))
        path = tmp_path / "acc.csv"
        image_service.write_accumulator_csv(list(accumulators.values()), path)
        parsed = image_service.read_accumulator_csv(path)
        assert set(parsed) == set(Quadrant)
        for quadrant, acc in accumulators.items():
            assert np.array_equal(parsed[quadrant].sums, acc.sums)

    def test_deterministic_bytes(self, image_service, tmp_path, random_image):
        acc = fht_quadrant(random_image(8))
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        image_service.write_accumulator_csv(acc, first)
        image_service.write_accumulator_csv(acc, second)
        assert first.read_bytes() == second.read_bytes()

    def test_bad_header(self, image_service, tmp_path):
        path = tmp_path / "acc.csv"
        path.write_text("q,t,h,sum\n")
        with pytest.raises(ParseError):
            image_service.read_accumulator_csv(path)

    def test_bad_row(self, image_service, tmp_path):
        path = tmp_path / "acc.csv"
        path.write_text("quadrant,t,h,sum\n0,0,x,1\n")
        with pytest.raises(ParseError):
            image_service.read_accumulator_csv(path)

    def test_stdout(self, image_service, capsys):
        acc = HoughAccumulator(quadrant=Quadrant.Q0, n=1, sums=np.array([[4]], dtype=np.int64))
        image_service.write_accumulator_csv(acc, "-")
        assert capsys.readouterr().out == "quadrant,t,h,sum\n0,0,0,4\n"


class TestReports:
    def test_rational(self):
        assert rational(Fraction(4094, 16380)) == "2047/8190"
        assert rational(Fraction(0)) == "0/1"
        assert rational(3) == "3/1"

    def test_next_power_of_two(self):
        assert [next_power_of_two(v) for v in (1, 2, 3, 6, 8, 9)] == [1, 2, 4, 8, 8, 16]

    def test_stats(self, image_service, tmp_path, params):
        prm = params(2)
        path = tmp_path / "stats.csv"
        image_service.write_stats_csv(path, deviation_stats.exhaustive_extrema(prm), deviation_stats.moments(prm),
                                      deviation_stats.tail_fraction(prm, Fraction(1)))
        rows = {row[0]: row[1:] for row in _read_csv(path)}
        assert rows["statistic"] == ["value", "float"]
        assert rows["variance"][0] == "1/36"
        assert rows["max_num"][0] == "1"
        assert rows["max_deviation"][0] == "1/3"

    def test_stats_without_extrema(self, image_service, tmp_path, params):
        prm = params(3)
        path = tmp_path / "stats.csv"
        image_service.write_stats_csv(path, None, deviation_stats.moments(prm),
                                      deviation_stats.tail_fraction(prm, Fraction(1)))
        names = [row[0] for row in _read_csv(path)]
        assert "max_num" not in names
        assert "variance_formula" in names

    def test_histogram(self, image_service, tmp_path, params):
        path = tmp_path / "hist.csv"
        image_service.write_histogram_csv(path, deviation_stats.histogram(params(2), 3))
        rows = _read_csv(path)
        assert rows[0] == ["lo", "hi", "center", "mass", "mass_float"]
        assert [r[3] for r in rows[1:]] == ["1/8", "3/4", "1/8"]

    def test_ks(self, image_service, tmp_path, params):
        path = tmp_path / "ks.csv"
        image_service.write_ks_csv(path, [deviation_stats.ks_distance(params(1), SamplingMode.exhaustive())])
        assert _read_csv(path)[1] == ["1", "exhaustive", "0.500000"]

    def test_spectral(self, image_service, tmp_path, params):
        path = tmp_path / "spectral.csv"
        image_service.write_spectral_csv(path, spectral_report(params(2)))
        rows = _read_csv(path)
        assert len(rows) == 1 + 2 + 1
        assert rows[-1][0] == "summary"
        assert rows[-1][4:] == ["1/1", "2", "2/1", "true"]

    def test_charfn(self, image_service, tmp_path):
        reports = ergodic.clt_report([1, 2], xi_grid=[0.0, 1.0], grid=64)
        path = tmp_path / "clt.csv"
        image_service.write_charfn_csv(path, reports)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# gauss = exp(-xi^2/96)")
        assert lines[1].split(",")[:5] == ["p", "xi", "re_psi", "im_psi", "gauss"]
        assert len(lines) == 2 + 4

    def test_line(self, image_service, tmp_path, params):
        prm = params(3)
        path = tmp_path / "line.csv"
        image_service.write_line_csv(path, [(dyadic_line(x, 6, prm), deviation_num(x, 6, prm)) for x in (0, 4)])
        rows = _read_csv(path)
        assert rows[0] == ["x", "D", "num", "E", "E_float"]
        assert rows[1][:4] == ["0", "0", "0", "0/1"]
        assert rows[2][:4] == ["4", "3", "-3", "-3/7"]
        assert float(rows[2][4]) == pytest.approx(-3 / 7)
