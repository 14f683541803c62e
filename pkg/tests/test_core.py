import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abqsim.core import (
    DegenerateStateError,
    DimensionError,
    Lattice2D,
    PhysicalConstants,
    RingGrid,
    RingState,
    Wavefunction2D,
    gaussian_packet,
    inner_product,
    norm,
    normalize,
    wrap_phase,
)


def ring_mode(grid, n):
    return RingState(grid, np.exp(1j * n * grid.thetas) / np.sqrt(2 * np.pi * grid.radius))


def random_wavefunction(rng, lattice):
    amp = rng.normal(size=lattice.shape) + 1j * rng.normal(size=lattice.shape)
    amp[~lattice.mask] = 0
    return Wavefunction2D(lattice, amp)


@pytest.mark.parametrize("field", ["hbar", "mass", "charge", "light_speed"])
def test_constants_must_be_positive(field):
    with pytest.raises(ValueError, match=field):
        PhysicalConstants(**{field: -1.0})


@pytest.mark.parametrize("n", [6, 7, 9])
def test_ring_grid_requires_even_n_at_least_8(n):
    with pytest.raises(ValueError):
        RingGrid(1.0, n)


def test_ring_grid_angles():
    grid = RingGrid(2.0, 16)
    assert np.all(np.diff(grid.thetas) > 0)
    assert grid.thetas[0] == 0 and grid.thetas[-1] < 2 * np.pi
    assert grid.measure == pytest.approx(2.0 * 2 * np.pi / 16)


def test_lattice_needs_an_interior_point():
    with pytest.raises(ValueError):
        Lattice2D(4, 4, 0.1, mask=np.zeros((4, 4), bool))


def test_wavefunction_rejects_amplitude_on_wall():
    mask = np.ones((4, 4), bool)
    mask[1, 1] = False
    lat = Lattice2D(4, 4, 0.1, mask=mask)
    with pytest.raises(ValueError):
        Wavefunction2D(lat, np.ones((4, 4)))


def test_inner_product_identity_and_orthogonality():
    grid = RingGrid(1.0, 64)
    psi0, psi1 = ring_mode(grid, 0), ring_mode(grid, 1)
    assert inner_product(psi0, psi0) == pytest.approx(1.0, abs=1e-14)
    assert abs(inner_product(psi0, psi1)) < 1e-14


def test_inner_product_global_phase():
    rng = np.random.default_rng(1)
    lat = Lattice2D(8, 9, 0.3)
    psi = normalize(random_wavefunction(rng, lat))
    rotated = psi.replace(np.exp(0.7j) * psi.amplitudes)
    # direct summation oracle
    expected = np.sum(np.conj(psi.amplitudes) * rotated.amplitudes) * 0.3 ** 2
    assert inner_product(psi, rotated) == pytest.approx(expected, abs=1e-14)
    assert inner_product(psi, rotated) == pytest.approx(np.cos(0.7) + 1j * np.sin(0.7), abs=1e-13)


def test_inner_product_grid_mismatch():
    a = ring_mode(RingGrid(1.0, 16), 0)
    b = ring_mode(RingGrid(1.0, 32), 0)
    with pytest.raises(DimensionError):
        inner_product(a, b)
    lat = Lattice2D(4, 4, 0.1)
    with pytest.raises(DimensionError):
        inner_product(a, Wavefunction2D(lat, np.ones((4, 4))))


def test_normalize_zero_state():
    with pytest.raises(DegenerateStateError):
        normalize(RingState(RingGrid(1.0, 8), np.zeros(8)))


def test_normalize_fixed_point_and_scale_invariance():
    rng = np.random.default_rng(2)
    lat = Lattice2D(6, 5, 0.2)
    psi = normalize(random_wavefunction(rng, lat))
    assert np.max(np.abs(normalize(psi).amplitudes - psi.amplitudes)) < 1e-12
    scaled = psi.replace(3 * psi.amplitudes)
    assert np.max(np.abs(normalize(scaled).amplitudes - psi.amplitudes)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_normalize_random_grid(seed):
    rng = np.random.default_rng(seed)
    lat = Lattice2D(7, 5, 0.15)
    psi = normalize(random_wavefunction(rng, lat))
    assert abs(norm(psi) - 1) < 1e-12
    assert abs(norm(normalize(psi)) - 1) < 1e-12


def test_inner_product_sesquilinear_and_conjugate_symmetric():
    rng = np.random.default_rng(3)
    lat = Lattice2D(5, 6, 0.1)
    for _ in range(100):
        a, b = random_wavefunction(rng, lat), random_wavefunction(rng, lat)
        alpha = complex(rng.normal(), rng.normal())
        lhs = inner_product(a.replace(alpha * a.amplitudes), b)
        rhs = np.conj(alpha) * inner_product(a, b)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)
        assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), rel=1e-14)


def test_values_are_immutable():
    state = ring_mode(RingGrid(1.0, 8), 1)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 0


def test_gaussian_packet_normalized_and_masked():
    mask = np.ones((20, 20), bool)
    mask[10, :] = False
    lat = Lattice2D(20, 20, 0.1, mask=mask)
    psi = gaussian_packet(lat, (1.0, 1.0), 0.3, (2.0, 0.0))
    assert abs(norm(psi) - 1) < 1e-12
    assert np.all(psi.amplitudes[10, :] == 0)


def test_wrap_phase_interval():
    x = np.array([-np.pi, np.pi, 3 * np.pi, 0.1, -3.0 * np.pi / 2])
    w = wrap_phase(x)
    assert np.all((w > -np.pi) & (w <= np.pi))
    np.testing.assert_allclose(w, [np.pi, np.pi, np.pi, 0.1, np.pi / 2])
