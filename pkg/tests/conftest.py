import pytest

from abqsim.dynamics import PropagatorConfig
from abqsim.experiments import ABExperimentConfig


def small_geometry(**overrides) -> ABExperimentConfig:
    """Coarse (a = 0.2) copy of the reference two-slit setup, mirror symmetric about y = 12.7."""
    kw = dict(
        nx=192, ny=128, spacing=0.2, barrier_column=64, screen_column=156,
        slit_centers=(10.3, 15.1), solenoid_center=(12.7, 12.7), packet_center=(6.0, 12.7),
        propagator=PropagatorConfig(0.004, 14.0),
    )
    kw.update(overrides)
    return ABExperimentConfig(**kw)


@pytest.fixture(scope="session")
def small_config():
    return small_geometry()
