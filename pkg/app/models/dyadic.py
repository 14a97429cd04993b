# app/models/dyadic.py
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from app.core.errors import ArgumentError, DimensionError

MAX_P = 24


class Quadrant(str, Enum):
    Q0 = "0"
    Q1 = "1"
    Q2 = "2"
    Q3 = "3"


class SamplingKind(str, Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"


class MomentPath(str, Enum):
    PAIRS = "pairs"
    X_ONLY = "x_only"


class VerifyLevel(str, Enum):
    QUICK = "quick"
    FULL = "full"


class Command(str, Enum):
    FHT = "fht"
    LINE = "line"
    DEV_STATS = "dev stats"
    DEV_HIST = "dev hist"
    DEV_KS = "dev ks"
    SPECTRAL = "spectral"
    CLT = "clt"
    VERIFY = "verify"
    BENCH = "bench"
    GOLDEN = "golden"


class DyadicParams(BaseModel):
    """Discretization context: image side n = 2**p and deviation denominator 2**p - 1."""
    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=1, le=MAX_P)

    @computed_field
    @property
    def n(self) -> int:
        return 1 << self.p

    @computed_field
    @property
    def denom(self) -> int:
        return (1 << self.p) - 1

    @classmethod
    def of(cls, p: int) -> "DyadicParams":
        if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_P:
            raise ArgumentError(f"p must be an integer in [1, {MAX_P}], got {p!r}")
        return cls(p=int(p))


class DeviationNumerator(BaseModel):
    """Numerator of E(x, t) over the common denominator 2**p - 1."""
    model_config = ConfigDict(frozen=True)

    x: int
    t: int
    num: int
    denom: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.denom)


class Image(BaseModel):
    """Square gray-level image, pixels indexed [y, x]."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    pixels: np.ndarray

    @classmethod
    def from_array(cls, pixels) -> "Image":
        arr = np.asarray(pixels)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"image must be square, got shape {arr.shape}")
        side = arr.shape[0]
        if side < 1 or side & (side - 1):
            raise DimensionError(f"image side must be a power of two, got {side}")
        if arr.size and arr.min() < 0:
            raise ArgumentError("pixel values must be non-negative")
        arr = np.ascontiguousarray(arr, dtype=np.int64)
        arr.flags.writeable = False
        return cls(n=side, pixels=arr)

    @property
    def total(self) -> int:
        return int(self.pixels.sum())


class HoughAccumulator(BaseModel):
    """Line sums of one slope quadrant.

    sums[t, h + n - 1] is the sum over the dyadic line with slope index t and
    shift h, for h in [-(n - 1), n - 1].
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    quadrant: Quadrant
    n: int
    sums: np.ndarray
    additions: int = 0
    flip: str = ""

    @model_validator(mode="after")
    def _check_shape(self):
        if self.sums.shape != (self.n, 2 * self.n - 1):
            raise ValueError(f"sums must have shape ({self.n}, {2 * self.n - 1}), got {self.sums.shape}")
        return self

    def at(self, t: int, h: int) -> int:
        return int(self.sums[t, h + self.n - 1])

    @property
    def shifts(self) -> range:
        return range(-(self.n - 1), self.n)


class SamplingMode(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: SamplingKind = SamplingKind.EXHAUSTIVE
    count: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _sampled_needs_count(self):
        if self.kind == SamplingKind.SAMPLED and (self.count is None or self.seed is None):
            raise ValueError("sampled mode requires count and seed")
        return self

    @classmethod
    def exhaustive(cls) -> "SamplingMode":
        return cls()

    @classmethod
    def sampled(cls, count: int, seed: int) -> "SamplingMode":
        return cls(kind=SamplingKind.SAMPLED, count=count, seed=seed)

    def describe(self) -> str:
        if self.kind == SamplingKind.EXHAUSTIVE:
            return "exhaustive"
        return f"sampled(count={self.count}, seed={self.seed})"


class Extrema(BaseModel):
    p: int
    min_num: int
    max_num: int
    argmax: Tuple[int, int]
    denom: int

    @property
    def sharp(self) -> bool:
        return 6 * self.max_num == self.p * self.denom


class MomentReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: int
    path: MomentPath
    sum_num: int
    sum_num_sq: int
    mean: Fraction
    variance: Fraction
    variance_formula: Fraction


class TailReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: int
    mode: SamplingMode
    threshold: Fraction
    count_ge: int
    total: int
    fraction_ge: Fraction
    markov_bound: Fraction


class NormalityReport(BaseModel):
    p: int
    mode: SamplingMode
    ks_distance: float = Field(ge=0.0, le=1.0)
    normalization: str = "e -> sqrt(48) * e / sqrt(p)"


class HistogramBin(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    lo: float
    hi: float
    center: float
    mass: Fraction


class CirculantA(BaseModel):
    """A[r][c] = 2**((p - 1 + c - r) mod p)."""
    p: int
    entries: List[List[int]]

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)


class SpectralReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: int
    eigenvalues: List[complex]
    min_sym_eig: float
    min_sym_eig_exact: Optional[Fraction] = None
    hypercube_min_times4: Optional[int] = None
    hypercube_argmin: Optional[Tuple[int, ...]] = None
    bound_times4: Fraction
    sharp: bool


class MobiusReport(BaseModel):
    samples: int
    center: float
    radius: float
    max_radius_error: float
    leftmost: float
    max_conjugation_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return (
            self.max_radius_error <= self.tolerance
            and abs(self.leftmost - 1.0 / 3.0) <= self.tolerance
            and self.max_conjugation_error <= self.tolerance
        )


class GridFunction(BaseModel):
    """Complex samples at midpoints (j + 1/2) / m of [0, 1]."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    m: int
    values: np.ndarray

    @model_validator(mode="after")
    def _check_grid(self):
        if self.m < 2 or self.m & (self.m - 1):
            raise ValueError(f"grid size must be a power of two >= 2, got {self.m}")
        if self.values.shape != (self.m,):
            raise ValueError(f"values must have shape ({self.m},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        return self

    @classmethod
    def constant(cls, m: int, value: complex = 1.0) -> "GridFunction":
        return cls(m=m, values=np.full(m, value, dtype=np.complex128))

    @classmethod
    def sample(cls, m: int, fn) -> "GridFunction":
        return cls(m=m, values=np.asarray(fn(midpoints(m)), dtype=np.complex128))

    @property
    def mean(self) -> complex:
        return complex(self.values.mean())


def midpoints(m: int) -> np.ndarray:
    return (np.arange(m, dtype=np.float64) + 0.5) / m


class CharFnReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    p: int
    xi_grid: List[float]
    psi_exact: List[complex]
    gauss_ref: List[float]
    sup_error_exact_vs_gauss: float
    psi_nagaev: Optional[List[complex]] = None
    sup_error_nagaev_vs_exact: Optional[float] = None
    grid_size: Optional[int] = None


class RunConfig(BaseModel):
    """Validated command-line arguments of one invocation."""
    command: Command
    p: Optional[int] = Field(default=None, ge=1, le=MAX_P)
    p_list: List[int] = Field(default_factory=list)
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=1 << 64)
    sample_count: Optional[int] = Field(default=None, ge=1)
    bins: Optional[int] = Field(default=None, ge=1)
    xi_max: Optional[float] = Field(default=None, ge=0.0)
    xi_steps: Optional[int] = Field(default=None, ge=1)
    grid: Optional[int] = None
    pad: bool = False
    level: VerifyLevel = VerifyLevel.QUICK
    quadrant: Optional[str] = None
    t: Optional[int] = Field(default=None, ge=0)
    x: Optional[int] = Field(default=None, ge=0)
    n: Optional[int] = None
    json_output: bool = False

    @field_validator("p_list")
    @classmethod
    def _p_in_range(cls, v: List[int]) -> List[int]:
        for p in v:
            if not 1 <= p <= MAX_P:
                raise ValueError(f"p must be in [1, {MAX_P}], got {p}")
        return v

    @field_validator("grid", "n")
    @classmethod
    def _power_of_two(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and (v < 2 or v & (v - 1)):
            raise ValueError(f"must be a power of two >= 2, got {v}")
        return v

    @field_validator("quadrant")
    @classmethod
    def _quadrant_choice(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v != "all" and v not in {q.value for q in Quadrant}:
            raise ValueError("quadrant must be one of all, 0, 1, 2, 3")
        return v

    @model_validator(mode="after")
    def _line_coordinates(self):
        if self.p is not None:
            n = 1 << self.p
            if self.t is not None and self.t >= n:
                raise ValueError(f"t must be < {n}")
            if self.x is not None and self.x >= n:
                raise ValueError(f"x must be < {n}")
        return self


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class VerifySummary(BaseModel):
    level: VerifyLevel
    passed: bool
    checks: List[CheckResult]


class BenchReport(BaseModel):
    n: int
    half_n: int
    additions_n: int
    additions_half: int
    ratio: float
    ideal_ratio: float
    bound_n: int
    seconds_n: float
    seconds_half: float
    seconds_zero_image: float
