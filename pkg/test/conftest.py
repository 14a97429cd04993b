"""Pytest configuration and fixtures for the dyadic-fht test suite."""
from pathlib import Path

import numpy as np
import pytest
import yaml

# Load environment variables from .env file - same as the command line
from dotenv import load_dotenv
load_dotenv()

from app.core.config import settings
from app.models.dyadic import DyadicParams, Image

FIXTURES_DIR = Path(__file__).parent / "fixtures"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: marks tests as slow running")


@pytest.fixture(scope="session")
def expected():
    """Worked examples shared by the unit tests."""
    with open(FIXTURES_DIR / "expected_values.yaml") as f:
        return yaml.safe_load(f)


@pytest.fixture
def params():
    """Factory for DyadicParams by exponent."""
    return DyadicParams.of


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(settings.DYADIC_SEED))


@pytest.fixture
def random_image(rng):
    def make(n: int, high: int = 256) -> Image:
        return Image.from_array(rng.integers(0, high, size=(n, n), dtype=np.int64))
    return make


@pytest.fixture
def delta_image():
    def make(n: int, x: int, y: int) -> Image:
        pixels = np.zeros((n, n), dtype=np.int64)
        pixels[y, x] = 1
        return Image.from_array(pixels)
    return make


@pytest.fixture
def write_p2(tmp_path):
    """Write an ASCII gray map and return its path."""
    def write(pixels, name: str = "image.pgm", maxval: int = 255, comment: str = "") -> Path:
        pixels = np.asarray(pixels)
        height, width = pixels.shape
        lines = ["P2"]
        if comment:
            lines.append(f"# {comment}")
        lines += [f"{width} {height}", str(maxval)]
        lines += [" ".join(str(int(v)) for v in row) for row in pixels]
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path
    return write
