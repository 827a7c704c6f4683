"""Pytest configuration and shared fixtures for wassdyn tests."""

import sys
from collections.abc import Callable, Iterator
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from wassdyn.config import get_settings  # noqa: E402
from wassdyn.dynamics import Affine, PitchforkTime1, SquareNegative  # noqa: E402
from wassdyn.measure import DiscreteMeasure, measure_from_arrays  # noqa: E402

settings.register_profile(
    "wassdyn",
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.load_profile("wassdyn")


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> Iterator[None]:
    """Fresh settings per test; tracing goes to a temp dir and never to the home directory."""
    for key in ("WASSDYN_THREADS", "WASSDYN_LOG_FILE", "WASSDYN_TRACE", "WASSDYN_COMPRESSION_CAP"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("WASSDYN_TRACE_DIR", str(tmp_path / "traces"))
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def random_measure(rng: np.random.Generator) -> Callable[..., DiscreteMeasure]:
    """Factory: ``random_measure(n, dim=1, uniform=False, scale=2.0)``."""

    def make(n: int, dim: int = 1, *, uniform: bool = False, scale: float = 2.0) -> DiscreteMeasure:
        x = rng.uniform(-scale, scale, size=(n, dim))
        w = np.full(n, 1.0 / n) if uniform else rng.dirichlet(np.ones(n))
        return measure_from_arrays(x, w)

    return make


@pytest.fixture
def pitchfork() -> PitchforkTime1:
    return PitchforkTime1()


@pytest.fixture
def sqneg() -> SquareNegative:
    return SquareNegative()


@pytest.fixture
def halve() -> Affine:
    return Affine.scalar(0.5, 0.0)


@pytest.fixture
def measure_file(tmp_path: Path) -> Callable[[str, str], Path]:
    """Factory writing a measure file: ``measure_file("mu.txt", "0.5 0\\n0.5 1\\n")``."""

    def write(name: str, body: str) -> Path:
        path = tmp_path / name
        path.write_text(body, encoding="utf-8")
        return path

    return write
