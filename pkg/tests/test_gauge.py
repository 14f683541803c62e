import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid
from scipy.special import jv

from abqsim.core import (
    DimensionError,
    Lattice2D,
    PhysicalConstants,
    RingGrid,
    RingState,
    TopologyError,
    WindingError,
    gaussian_packet,
    inner_product,
)
from abqsim.gauge import (
    Connection1D,
    GaugeFunction,
    GaugePotential,
    apply_to_potential,
    apply_to_state,
    connection_from_lambda,
    is_pure_gauge,
    winding_number,
)

NAT = PhysicalConstants()
SI_LIKE = PhysicalConstants(hbar=1.3, mass=0.7, charge=2.1, light_speed=3.0)


def ring_eigenstate(grid, n):
    return RingState(grid, np.exp(1j * n * grid.thetas) / np.sqrt(2 * np.pi * grid.radius))


def smooth_random_lambda(rng, lattice, n_modes=4, amplitude=1.0):
    X, Y = lattice.meshgrid()
    Lx, Ly = lattice.nx * lattice.spacing, lattice.ny * lattice.spacing
    lam = np.zeros(lattice.shape)
    for _ in range(n_modes):
        kx, ky = rng.integers(1, 4, size=2)
        ph = rng.uniform(0, 2 * np.pi)
        lam += amplitude * rng.normal() * np.cos(2 * np.pi * (kx * X / Lx + ky * Y / Ly) + ph)
    return GaugeFunction(lattice, lam)


def make_annulus(n=40, a=0.1, center=(2.05, 2.05), radius=0.35):
    lat = Lattice2D(n, n, a)
    X, Y = lat.meshgrid()
    hole = (X - center[0]) ** 2 + (Y - center[1]) ** 2 < radius ** 2
    return lat.with_mask(~hole), center


# ---------------------------------------------------------------- states

def test_identity_gauge_leaves_state():
    grid = RingGrid(1.0, 32)
    psi = ring_eigenstate(grid, 2)
    out = apply_to_state(GaugeFunction(grid, np.zeros(32)), psi)
    np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)


def test_constant_gauge_is_global_phase():
    lat = Lattice2D(10, 12, 0.2)
    psi = gaussian_packet(lat, (1.0, 1.2), 0.4, (1.0, 0.5))
    ref = gaussian_packet(lat, (0.8, 1.0), 0.5)
    out = apply_to_state(GaugeFunction(lat, np.full(lat.shape, 1.3)), psi)
    for other in (psi, ref):
        # direct summation oracle
        expected = np.sum(np.conj(other.amplitudes) * psi.amplitudes) * lat.measure * np.exp(1.3j)
        assert inner_product(other, out) == pytest.approx(expected, abs=1e-14)


def test_sine_gauge_changes_momentum_not_density():
    grid = RingGrid(1.0, 64)
    psi = ring_eigenstate(grid, 3)
    g = GaugeFunction.on_ring(grid, np.sin)
    out = apply_to_state(g, psi)
    np.testing.assert_allclose(np.abs(out.amplitudes) ** 2, np.abs(psi.amplitudes) ** 2, rtol=1e-15)
    before = np.abs(np.fft.fft(psi.amplitudes)) ** 2
    after = np.abs(np.fft.fft(out.amplitudes)) ** 2
    assert np.argmax(before) == 3
    # Jacobi-Anger: e^{i sin theta} e^{3 i theta} has weight J_k(1)^2 on mode 3 + k
    for k in range(-4, 5):
        assert after[(3 + k) % 64] / after.sum() == pytest.approx(jv(k, 1.0) ** 2, rel=1e-10, abs=1e-14)
    np.testing.assert_allclose(after.sum(), before.sum(), rtol=1e-13)


def test_state_density_exactly_preserved_on_lattice():
    rng = np.random.default_rng(5)
    mask = np.ones((12, 9), bool)
    mask[4:6, 3:5] = False
    lat = Lattice2D(12, 9, 0.1, mask=mask)
    psi = gaussian_packet(lat, (0.6, 0.4), 0.3, (2.0, 1.0))
    out = apply_to_state(smooth_random_lambda(rng, lat), psi)
    np.testing.assert_allclose(np.abs(out.amplitudes), np.abs(psi.amplitudes), rtol=1e-15)
    assert np.all(out.amplitudes[~mask] == 0)


def test_domain_mismatch():
    grid = RingGrid(1.0, 16)
    with pytest.raises(DimensionError):
        apply_to_state(GaugeFunction(grid, np.zeros(16)), ring_eigenstate(RingGrid(1.0, 32), 0))
    lat = Lattice2D(5, 5, 0.1)
    with pytest.raises(DimensionError):
        apply_to_potential(GaugeFunction(Lattice2D(6, 5, 0.1), np.zeros((6, 5))), GaugePotential.zero(lat))


def test_on_ring_rejects_non_integer_jump():
    with pytest.raises(WindingError):
        GaugeFunction.on_ring(RingGrid(1.0, 16), lambda t: 0.3 * t)


# ---------------------------------------------------------------- potentials

def test_constant_gauge_leaves_potential():
    rng = np.random.default_rng(0)
    lat = Lattice2D(7, 6, 0.3)
    p = GaugePotential(lat, rng.normal(size=(6, 6)), rng.normal(size=(7, 5)), rng.normal(size=(7, 6)))
    out = apply_to_potential(GaugeFunction(lat, np.full(lat.shape, 2.5)), p, SI_LIKE)
    np.testing.assert_array_equal(out.ax, p.ax)
    np.testing.assert_array_equal(out.ay, p.ay)
    np.testing.assert_array_equal(out.v, p.v)


@pytest.mark.parametrize("consts", [NAT, SI_LIKE])
def test_linear_gauge_gives_uniform_vector_potential(consts):
    lat = Lattice2D(9, 7, 0.25)
    g = GaugeFunction.on_lattice(lat, lambda x, y: 0.2 * x)
    out = apply_to_potential(g, GaugePotential.zero(lat), consts)
    scale = consts.hbar * consts.light_speed / consts.charge
    np.testing.assert_allclose(out.ax, -0.2 * scale, rtol=1e-12)
    np.testing.assert_allclose(out.ay, 0.0, atol=1e-15)
    # finite-difference oracle on the continuum function at link midpoints
    X, Y = lat.meshgrid()
    h = 1e-6
    lam = lambda x: 0.2 * x
    fd = (lam(X[:-1] + lat.spacing / 2 + h) - lam(X[:-1] + lat.spacing / 2 - h)) / (2 * h)
    np.testing.assert_allclose(out.ax, -scale * fd, rtol=1e-8)


def test_time_dependent_gauge_shifts_scalar_potential():
    lat = Lattice2D(5, 5, 0.1)
    base = GaugePotential.zero(lat).with_scalar(0.3)
    exact = GaugeFunction.on_lattice(lat, lambda x, y, t: 0.5 * t + 0 * x, time=1.7,
                                     rate=lambda x, y, t: 0.5 + 0 * x, time_dependent=True)
    for consts in (NAT, SI_LIKE):
        out = apply_to_potential(exact, base, consts)
        np.testing.assert_allclose(out.v, 0.3 - 0.5 * consts.hbar / consts.charge, rtol=1e-14)
        np.testing.assert_allclose(out.ax, 0.0, atol=0)
    numeric = GaugeFunction.on_lattice(lat, lambda x, y, t: 0.5 * t + 0 * x, time=1.7, time_dependent=True)
    np.testing.assert_allclose(apply_to_potential(numeric, base).v, -0.2, rtol=1e-9)


def test_gauge_then_inverse_round_trip():
    rng = np.random.default_rng(7)
    lat = Lattice2D(15, 11, 0.1)
    p = GaugePotential.uniform_field(lat, 1.7) + GaugePotential.zero(lat).with_scalar(rng.normal(size=lat.shape))
    g = smooth_random_lambda(rng, lat, amplitude=3.0)
    back = apply_to_potential(g, apply_to_potential(g.inverse(), p, SI_LIKE), SI_LIKE)
    np.testing.assert_allclose(back.ax, p.ax, atol=1e-12)
    np.testing.assert_allclose(back.ay, p.ay, atol=1e-12)
    np.testing.assert_allclose(back.v, p.v, atol=1e-12)


# ---------------------------------------------------------------- connections

def test_connection_of_sine():
    grid = RingGrid(1.0, 64)
    for consts in (NAT, SI_LIKE):
        c = connection_from_lambda(GaugeFunction.on_ring(grid, np.sin), consts)
        np.testing.assert_allclose(c.omega, -consts.hbar * np.cos(grid.thetas), atol=1e-12)
        assert abs(c.circulation()) < 1e-12


def test_connection_of_constant():
    grid = RingGrid(1.0, 32)
    c = connection_from_lambda(GaugeFunction(grid, np.full(32, 4.2)))
    np.testing.assert_allclose(c.omega, 0.0, atol=1e-14)


def test_connection_of_winding_three():
    grid = RingGrid(1.0, 128)
    lam = lambda t: 3 * t + 0.2 * np.sin(2 * t)
    g = GaugeFunction.on_ring(grid, lam)
    assert g.winding == 3
    c = connection_from_lambda(g, SI_LIKE)
    # trapezoid-rule oracle on a fine grid using the analytic derivative
    t = np.linspace(0, 2 * np.pi, 20001)
    omega = -SI_LIKE.hbar * (3 + 0.4 * np.cos(2 * t))
    oracle = trapezoid(omega, t)
    assert c.circulation() == pytest.approx(oracle, rel=1e-10)
    assert c.circulation() == pytest.approx(-6 * np.pi * SI_LIKE.hbar, rel=1e-12)


def test_lattice_connection_is_pure_gauge_potential():
    rng = np.random.default_rng(11)
    lat = Lattice2D(10, 8, 0.2)
    g = smooth_random_lambda(rng, lat)
    p = connection_from_lambda(g, SI_LIKE)
    assert p.provenance == "pure_gauge"
    lam = g.values
    scale = SI_LIKE.hbar * SI_LIKE.light_speed / SI_LIKE.charge
    np.testing.assert_allclose(p.ax, -scale * (lam[1:] - lam[:-1]) / 0.2, rtol=1e-13, atol=1e-13)


def test_winding_numbers():
    grid = RingGrid(1.0, 64)
    assert winding_number(connection_from_lambda(GaugeFunction.on_ring(grid, np.sin))).winding == 0
    res = winding_number(connection_from_lambda(GaugeFunction.on_ring(grid, lambda t: t), SI_LIKE), SI_LIKE)
    assert res.winding == 1 and res.distance < 1e-12
    assert res.circulation == pytest.approx(-2 * np.pi * SI_LIKE.hbar)


def test_physical_flux_is_not_a_winding():
    grid = RingGrid(1.0, 64)
    with pytest.raises(WindingError) as info:
        winding_number(Connection1D(grid, np.full(64, -0.37)))
    assert info.value.circulation == pytest.approx(-0.74 * np.pi, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(w=st.integers(-4, 4), coeffs=st.lists(st.floats(-2, 2), min_size=1, max_size=6))
def test_winding_invariant_under_zero_circulation_perturbation(w, coeffs):
    grid = RingGrid(1.0, 64)
    base = connection_from_lambda(GaugeFunction.on_ring(grid, lambda t: w * t))
    bump = sum(c * np.cos((k + 1) * grid.thetas + k) for k, c in enumerate(coeffs))
    perturbed = Connection1D(grid, base.omega + bump)
    assert winding_number(perturbed).winding == winding_number(base).winding == w


# ---------------------------------------------------------------- flatness

def test_gradient_field_is_pure_gauge_with_witness():
    lat = Lattice2D(20, 16, 0.1)
    X, Y = lat.meshgrid()
    chi = np.sin(1.3 * X) * np.cos(0.7 * Y) + 0.4 * X * Y
    p = GaugePotential(lat, np.diff(chi, axis=0) / 0.1, np.diff(chi, axis=1) / 0.1, np.zeros(lat.shape))
    res = is_pure_gauge(p)
    assert res.flat and bool(res)
    # A = -(hbar c / q) grad W, so W = -chi up to a constant
    diff = res.witness.values + chi
    np.testing.assert_allclose(diff - diff[0, 0], 0.0, atol=1e-12)
    # the witness undoes the potential
    undone = apply_to_potential(res.witness.inverse(), p)
    assert np.abs(undone.ax).max() < 1e-10 and np.abs(undone.ay).max() < 1e-10


def test_random_pure_gauge_is_flat():
    rng = np.random.default_rng(4)
    lat, _ = make_annulus()
    p = connection_from_lambda(smooth_random_lambda(rng, lat, amplitude=5.0), SI_LIKE)
    assert is_pure_gauge(p, SI_LIKE).flat


def test_uniform_field_is_not_flat():
    lat = Lattice2D(10, 10, 0.1)
    res = is_pure_gauge(GaugePotential.uniform_field(lat, 1.0))
    assert not res.flat and res.witness is None
    assert res.max_plaquette == pytest.approx(0.01, rel=1e-10)


def test_solenoid_annulus_fractional_and_integer_flux():
    lat, center = make_annulus()
    frac = is_pure_gauge(GaugePotential.solenoid(lat, center, 0.37))
    assert not frac.flat
    assert frac.max_plaquette < 1e-12  # locally flat everywhere
    # loop-integral oracle: the only nontrivial holonomy is 2 pi * 0.37
    assert frac.max_loop == pytest.approx(2 * np.pi * 0.37, rel=1e-10)
    assert frac.n_independent_loops == (lat.mask[:-1] & lat.mask[1:]).sum() + (lat.mask[:, :-1] & lat.mask[:, 1:]).sum() - lat.mask.sum() + 1
    whole = is_pure_gauge(GaugePotential.solenoid(lat, center, 1.0))
    assert whole.flat


def test_disconnected_region_is_topology_error():
    mask = np.ones((10, 10), bool)
    mask[5, :] = False
    lat = Lattice2D(10, 10, 0.1, mask=mask)
    with pytest.raises(TopologyError):
        is_pure_gauge(GaugePotential.zero(lat))
