# app/services/image_service.py
"""PGM image reading and CSV report writing."""
import csv
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import DimensionError, ParseError
from app.models.dyadic import (
    CharFnReport,
    DeviationNumerator,
    Extrema,
    HistogramBin,
    HoughAccumulator,
    Image,
    MomentReport,
    NormalityReport,
    Quadrant,
    SpectralReport,
    TailReport,
)

logger = logging.getLogger(__name__)

MAX_GRAY = 65535
ACCUMULATOR_HEADER = ["quadrant", "t", "h", "sum"]
LINE_HEADER = ["x", "D", "num", "E", "E_float"]
CLT_HEADER = ["p", "xi", "re_psi", "im_psi", "gauss", "abs_err", "nagaev_re", "nagaev_im", "nagaev_err"]
CLT_NOTE = ("# gauss = exp(-xi^2/96): limit variance 1/48 with the conventional 1/2 in the exponent; "
            "the closing formula exp(-sigma^2 xi^2) is read as shorthand for it")

PathLike = Union[str, Path]


def rational(value: Fraction) -> str:
    """Serialize as num/den."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def _float(value) -> str:
    return f"{float(value):.17g}"


def next_power_of_two(value: int) -> int:
    return 1 << max(0, (value - 1).bit_length())


class ImageService:
    """Service for image and report files."""

    def _header_tokens(self, data: bytes) -> Tuple[List[bytes], int]:
        """Read magic, width, height, maxval; skip comments. Returns tokens and raster offset."""
        tokens: List[bytes] = []
        pos = 0
        size = len(data)
        while len(tokens) < 4:
            while pos < size and data[pos:pos + 1].isspace():
                pos += 1
            if pos >= size:
                raise ParseError("truncated PGM header")
            if data[pos:pos + 1] == b"#":
                while pos < size and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
                continue
            start = pos
            while pos < size and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
        # Exactly one whitespace byte separates maxval from a binary raster.
        if pos >= size or not data[pos:pos + 1].isspace():
            if tokens[0] == b"P5":
                raise ParseError("missing whitespace after PGM maxval")
        return tokens, pos + 1

    def read_pgm(self, path: PathLike, pad: bool = False) -> Image:
        """
        Read a P2 or P5 gray map.

        Args:
            path: file to read
            pad: zero-pad right and bottom to the next power-of-two square

        Returns:
            Square Image with side 2**p
        """
        data = Path(path).read_bytes()
        tokens, offset = self._header_tokens(data)
        magic = tokens[0]
        if magic not in (b"P2", b"P5"):
            raise ParseError(f"unsupported PGM magic {magic!r}, expected P2 or P5")
        try:
            width, height, maxval = (int(tok) for tok in tokens[1:4])
        except ValueError as e:
            raise ParseError(f"malformed PGM header: {e}") from e
        if width < 1 or height < 1:
            raise ParseError(f"invalid PGM size {width}x{height}")
        if not 1 <= maxval <= MAX_GRAY:
            raise ParseError(f"PGM maxval must be in [1, {MAX_GRAY}], got {maxval}")

        count = width * height
        if magic == b"P5":
            dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
            raster = data[offset:offset + count * dtype.itemsize]
            if len(raster) < count * dtype.itemsize:
                raise ParseError(f"truncated PGM raster: expected {count} samples")
            pixels = np.frombuffer(raster, dtype=dtype).astype(np.int64)
        else:
            fields = data[offset:].split()
            if len(fields) < count:
                raise ParseError(f"truncated PGM raster: expected {count} samples, found {len(fields)}")
            try:
                pixels = np.array([int(f) for f in fields[:count]], dtype=np.int64)
            except ValueError as e:
                raise ParseError(f"non-numeric PGM sample: {e}") from e
        if pixels.size and (pixels.max() > maxval or pixels.min() < 0):
            raise ParseError(f"PGM sample outside [0, {maxval}]")
        pixels = pixels.reshape(height, width)

        side = next_power_of_two(max(width, height))
        if (width, height) != (side, side):
            if not pad:
                raise DimensionError(
                    f"image is {width}x{height}; FHT needs a square with power-of-two side "
                    f"(use {side}x{side} or --pad)")
            padded = np.zeros((side, side), dtype=np.int64)
            padded[:height, :width] = pixels
            logger.info(f"Padded {width}x{height} image to {side}x{side}")
            pixels = padded
        logger.debug(f"Read {magic.decode()} image {path} ({side}x{side}, maxval {maxval})")
        return Image.from_array(pixels)

    def write_pgm(self, img: Image, path: PathLike, binary: bool = True) -> None:
        maxval = max(1, int(img.pixels.max(initial=0)))
        if maxval > MAX_GRAY:
            raise ParseError(f"pixel value {maxval} exceeds {MAX_GRAY}")
        header = f"{'P5' if binary else 'P2'}\n{img.n} {img.n}\n{maxval}\n".encode()
        if binary:
            dtype = ">u2" if maxval > 255 else "u1"
            body = img.pixels.astype(dtype).tobytes()
        else:
            body = "\n".join(" ".join(str(int(v)) for v in row) for row in img.pixels).encode() + b"\n"
        Path(path).write_bytes(header + body)

    def _write_rows(self, path: PathLike, header: Sequence[str], rows: Iterable[Sequence], preamble: str = "") -> None:
        """Write a CSV with a header row; path "-" writes to standard output."""
        if str(path) == "-":
            self._emit(sys.stdout, header, rows, preamble)
            return
        with open(path, "w", newline="") as handle:
            self._emit(handle, header, rows, preamble)

    @staticmethod
    def _emit(handle, header: Sequence[str], rows: Iterable[Sequence], preamble: str) -> None:
        if preamble:
            handle.write(preamble + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    def write_accumulator_csv(self, accumulators: Union[HoughAccumulator, Sequence[HoughAccumulator]], path: PathLike) -> int:
        """
        Write quadrant,t,h,sum rows, t ascending then h ascending within each quadrant.

        Returns:
            Number of data rows written
        """
        if isinstance(accumulators, HoughAccumulator):
            accumulators = [accumulators]
        rows = []
        for acc in accumulators:
            q = acc.quadrant.value
            for t in range(acc.n):
                row = acc.sums[t]
                rows.extend((q, t, h, int(row[h + acc.n - 1])) for h in acc.shifts)
        self._write_rows(path, ACCUMULATOR_HEADER, rows)
        logger.info(f"Wrote {len(rows)} accumulator rows to {path}")
        return len(rows)

    def read_accumulator_csv(self, path: PathLike) -> Dict[Quadrant, HoughAccumulator]:
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != ACCUMULATOR_HEADER:
                raise ParseError(f"expected header {','.join(ACCUMULATOR_HEADER)}, got {header}")
            cells: Dict[Quadrant, List[Tuple[int, int, int]]] = {}
            for line, row in enumerate(reader, start=2):
                try:
                    q, t, h, total = Quadrant(row[0]), int(row[1]), int(row[2]), int(row[3])
                except (ValueError, IndexError) as e:
                    raise ParseError(f"{path}:{line}: malformed accumulator row {row}") from e
                cells.setdefault(q, []).append((t, h, total))

        result = {}
        for q, entries in cells.items():
            n = max(t for t, _, _ in entries) + 1
            sums = np.zeros((n, 2 * n - 1), dtype=np.int64)
            for t, h, total in entries:
                if not -(n - 1) <= h <= n - 1:
                    raise ParseError(f"shift {h} out of range for n={n}")
                sums[t, h + n - 1] = total
            result[q] = HoughAccumulator(quadrant=q, n=n, sums=sums)
        return result

    def write_stats_csv(self, path: PathLike, extrema: Optional[Extrema], report: MomentReport, tail: TailReport) -> None:
        """statistic,value,float rows; rationals as num/den. Extrema rows are omitted when not computed."""
        rows = [("p", report.p, report.p)]
        if extrema is not None:
            rows += [
                ("min_num", extrema.min_num, extrema.min_num),
                ("max_num", extrema.max_num, extrema.max_num),
                ("argmax_x", extrema.argmax[0], extrema.argmax[0]),
                ("argmax_t", extrema.argmax[1], extrema.argmax[1]),
                ("max_deviation", rational(Fraction(extrema.max_num, extrema.denom)), _float(Fraction(extrema.max_num, extrema.denom))),
            ]
        rows += [
            ("bound_p_over_6", rational(Fraction(report.p, 6)), _float(Fraction(report.p, 6))),
            ("sum_num", report.sum_num, report.sum_num),
            ("sum_num_sq", report.sum_num_sq, report.sum_num_sq),
            ("mean", rational(report.mean), _float(report.mean)),
            ("variance", rational(report.variance), _float(report.variance)),
            ("variance_formula", rational(report.variance_formula), _float(report.variance_formula)),
            ("tail_threshold", rational(tail.threshold), _float(tail.threshold)),
            ("tail_count_ge", tail.count_ge, tail.count_ge),
            ("tail_fraction_ge", rational(tail.fraction_ge), _float(tail.fraction_ge)),
            ("markov_bound", rational(tail.markov_bound), _float(tail.markov_bound)),
        ]
        self._write_rows(path, ["statistic", "value", "float"], rows)

    def write_histogram_csv(self, path: PathLike, bins: Sequence[HistogramBin]) -> None:
        rows = [(_float(b.lo), _float(b.hi), _float(b.center), rational(b.mass), _float(b.mass)) for b in bins]
        self._write_rows(path, ["lo", "hi", "center", "mass", "mass_float"], rows)

    def write_line_csv(self, path: PathLike, lines: Sequence[Tuple[int, DeviationNumerator]]) -> None:
        """Rows of (D(x, t), deviation) pairs as x,D,num,E,E_float."""
        rows = [(dev.x, d, dev.num, rational(dev.value), f"{float(dev.value):.17g}") for d, dev in lines]
        self._write_rows(path, LINE_HEADER, rows)

    def write_ks_csv(self, path: PathLike, reports: Sequence[NormalityReport]) -> None:
        rows = [(r.p, r.mode.describe(), f"{r.ks_distance:.6f}") for r in reports]
        self._write_rows(path, ["p", "mode", "ks_distance"], rows)

    def write_spectral_csv(self, path: PathLike, report: SpectralReport) -> None:
        """One row per eigenvalue, then one summary row."""
        rows: List[Sequence] = [("eigenvalue", k, _float(z.real), _float(z.imag), "", "", "", "")
                                for k, z in enumerate(report.eigenvalues)]
        min_sym = rational(report.min_sym_eig_exact) if report.min_sym_eig_exact is not None else _float(report.min_sym_eig)
        hyper = "" if report.hypercube_min_times4 is None else report.hypercube_min_times4
        rows.append(("summary", "", "", "", min_sym, hyper, rational(report.bound_times4), str(report.sharp).lower()))
        self._write_rows(path, ["row", "k", "re", "im", "min_sym_eig", "hypercube_min_times4", "bound_times4", "sharp"], rows)

    def write_charfn_csv(self, path: PathLike, reports: Sequence[CharFnReport]) -> None:
        rows = []
        for r in reports:
            for j, xi in enumerate(r.xi_grid):
                z, g = r.psi_exact[j], r.gauss_ref[j]
                if r.psi_nagaev is not None:
                    w = r.psi_nagaev[j]
                    nagaev = (_float(w.real), _float(w.imag), _float(abs(w - z)))
                else:
                    nagaev = ("", "", "")
                rows.append((r.p, _float(xi), _float(z.real), _float(z.imag), _float(g), _float(abs(z - g)), *nagaev))
        self._write_rows(path, CLT_HEADER, rows, preamble=CLT_NOTE)
