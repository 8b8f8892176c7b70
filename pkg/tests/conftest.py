import numpy as np
import pytest

from planetforge.noise import NoiseSpec
from planetforge.spheremap import PlanetSpec


@pytest.fixture
def small_planet() -> PlanetSpec:
    """Planet with gentle relief, cheap enough for per-test tessellation."""
    return PlanetSpec(
        base_radius=1000.0,
        elevation_noise=NoiseSpec(seed=11, octaves=4, frequency=0.002, amplitude=20.0),
        detail_noise=NoiseSpec(seed=22, octaves=3, frequency=0.05, amplitude=2.0),
        max_depth=3,
    )


@pytest.fixture
def smooth_planet() -> PlanetSpec:
    """Zero-amplitude planet: the displaced surface is exactly the spheroid."""
    return PlanetSpec(
        base_radius=1000.0,
        elevation_noise=NoiseSpec(seed=1, octaves=1, frequency=0.001, amplitude=0.0),
        detail_noise=NoiseSpec(seed=2, octaves=1, frequency=0.01, amplitude=0.0),
        max_depth=4,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
