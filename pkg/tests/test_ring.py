import numpy as np
import pytest

from abqsim.core import DimensionError, PhysicalConstants, RingGrid, RingState, inner_product
from abqsim.ring import (
    FluxConfig,
    analytic_spectrum,
    numerical_spectrum,
    peierls_ring_matrix,
    spectral_hamiltonian_matrix,
    spectrum_flux_sweep,
)

NAT = PhysicalConstants()


def flux(alpha):
    return FluxConfig.from_alpha(alpha, NAT)


def test_flux_config_consistency():
    consts = PhysicalConstants(hbar=2.0, charge=3.0)
    f = FluxConfig.from_flux(1.5, consts)
    assert f.alpha == pytest.approx(3.0 * 1.5 / (2 * np.pi * 2.0), rel=1e-15)
    with pytest.raises(ValueError):
        FluxConfig(1.0, 0.5, consts)


def test_analytic_zero_flux_levels():
    spec = analytic_spectrum(NAT, 1.0, flux(0.0), [0, 1, -1, 2, -2])
    assert list(spec.energies) == [0.0, 0.5, 0.5, 2.0, 2.0]
    # ties: smaller |n| first, positive before negative
    assert list(spec.quantum_numbers) == [0, 1, -1, 2, -2]


def test_analytic_half_flux_degenerate():
    spec = analytic_spectrum(NAT, 1.0, flux(0.5), [0, 1])
    assert spec.energies[0] == spec.energies[1] == 0.125


def test_analytic_quarter_flux():
    spec = analytic_spectrum(NAT, 1.0, flux(0.25), [1])
    assert spec.energies[0] == pytest.approx(0.28125, rel=1e-15)


def test_analytic_with_dimensional_constants():
    consts = PhysicalConstants(hbar=1.5, mass=2.0, charge=0.5)
    f = FluxConfig.from_alpha(0.3, consts)
    spec = analytic_spectrum(consts, 0.7, f, [2])
    assert spec.energies[0] == pytest.approx(1.5 ** 2 / (2 * 2.0 * 0.49) * (2 - 0.3) ** 2, rel=1e-14)


def test_analytic_requires_levels():
    with pytest.raises(ValueError):
        analytic_spectrum(NAT, 1.0, flux(0.0), [])


def test_analytic_flux_periodicity():
    ns = range(-6, 7)
    # dyadic alphas: alpha + 1 is exact in floating point, so the sets match bitwise
    for alpha in (0.0, 0.25, 0.5, 0.75):
        low = analytic_spectrum(NAT, 1.0, flux(alpha), ns)
        high = analytic_spectrum(NAT, 1.0, flux(alpha + 1), [n + 1 for n in ns])
        assert {(lvl.n + 1, lvl.energy) for lvl in low.levels} == set(high.levels)
    for alpha in (0.13, 0.77):
        low = analytic_spectrum(NAT, 1.0, flux(alpha), ns)
        high = analytic_spectrum(NAT, 1.0, flux(alpha + 1), [n + 1 for n in ns])
        np.testing.assert_allclose(sorted(low.energies), sorted(high.energies), rtol=1e-14, atol=1e-15)


def test_spectral_zero_flux_lowest_levels():
    spec = numerical_spectrum(NAT, RingGrid(1.0, 512), flux(0.0), "spectral", 5)
    np.testing.assert_allclose(spec.energies, [0, 0.5, 0.5, 2.0, 2.0], atol=1e-10)


def test_spectral_eigenfunctions_are_eigenvectors():
    grid = RingGrid(1.0, 64)
    spec = numerical_spectrum(NAT, grid, flux(0.3), "spectral", 6)
    H = spectral_hamiltonian_matrix(NAT, grid, flux(0.3))
    for idx, lvl in enumerate(spec.levels):
        psi = spec.eigenfunctions[idx]
        np.testing.assert_allclose(H @ psi, lvl.energy * psi, atol=1e-10)
        assert inner_product(spec.state(idx), spec.state(idx)) == pytest.approx(1.0, abs=1e-12)


def test_spectral_large_gauge_periodicity():
    grid = RingGrid(1.0, 512)
    a = numerical_spectrum(NAT, grid, flux(0.3), "spectral", 20).energies
    b = numerical_spectrum(NAT, grid, flux(1.3), "spectral", 20).energies
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_spectral_matches_analytic_up_to_quarter_band():
    grid = RingGrid(1.3, 64)
    for alpha in (0.0, 0.41):
        num = numerical_spectrum(NAT, grid, flux(alpha), "spectral", 64)
        ref = {lvl.n: lvl.energy for lvl in analytic_spectrum(NAT, 1.3, flux(alpha), range(-16, 17)).levels}
        for lvl in num.levels:
            if abs(lvl.n) <= 16:
                assert lvl.energy == pytest.approx(ref[lvl.n], rel=1e-10, abs=1e-15)


def test_gauge_shift_conjugation_leaves_levels():
    grid = RingGrid(1.0, 128)
    Hmat = spectral_hamiltonian_matrix(NAT, grid, flux(0.3))
    for w in (1, -2, 3):
        U = np.diag(np.exp(-1j * w * grid.thetas))
        conj = U @ Hmat @ U.conj().T
        # conjugation acts as alpha -> alpha - w on the low (non-aliased) modes
        shifted = spectral_hamiltonian_matrix(NAT, grid, flux(0.3 - w))
        e0 = np.linalg.eigvalsh(Hmat)[:20]
        np.testing.assert_allclose(np.linalg.eigvalsh(conj)[:20], e0, atol=1e-10)
        np.testing.assert_allclose(np.linalg.eigvalsh(shifted)[:20], e0, atol=1e-10)


def test_numerical_k_too_large():
    with pytest.raises(DimensionError):
        numerical_spectrum(NAT, RingGrid(1.0, 16), flux(0.0), "spectral", 17)
    with pytest.raises(ValueError):
        numerical_spectrum(NAT, RingGrid(1.0, 16), flux(0.0), "bogus", 3)


def test_peierls_matrix_hermitian():
    H = peierls_ring_matrix(NAT, RingGrid(1.0, 32), flux(0.37)).toarray()
    np.testing.assert_allclose(H, H.conj().T, atol=0)


def fd_ground_error(n_points, alpha=0.25):
    spec = numerical_spectrum(NAT, RingGrid(1.0, n_points), flux(alpha), "peierls_fd", 1)
    return abs(spec.energies[0] - 0.5 * alpha ** 2)


def test_peierls_fd_ground_state_and_richardson():
    errors = [fd_ground_error(n) for n in (256, 512, 1024)]
    assert errors[1] < 5e-4
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)
    # Richardson extrapolation of the O(dtheta^2) sequence lands on the exact value
    e512 = numerical_spectrum(NAT, RingGrid(1.0, 512), flux(0.25), "peierls_fd", 1).energies[0]
    e1024 = numerical_spectrum(NAT, RingGrid(1.0, 1024), flux(0.25), "peierls_fd", 1).energies[0]
    assert (4 * e1024 - e512) / 3 == pytest.approx(0.03125, abs=1e-10)


def test_peierls_fd_labels_follow_fourier_content():
    spec = numerical_spectrum(NAT, RingGrid(1.0, 128), flux(0.0), "peierls_fd", 5)
    assert list(spec.quantum_numbers) == [0, 1, -1, 2, -2]
    spec = numerical_spectrum(NAT, RingGrid(1.0, 128), flux(0.3), "peierls_fd", 3)
    assert list(spec.quantum_numbers) == [0, 1, -1]


def test_flux_sweep_zero_flux_rows():
    rows = spectrum_flux_sweep(NAT, 1.0, [0.0], [0, 1, -1])
    assert [(r.alpha, r.n, r.energy) for r in rows] == [(0.0, 0, 0.0), (0.0, 1, 0.5), (0.0, -1, 0.5)]


def test_flux_sweep_ordering_and_symmetry():
    alphas = np.linspace(0, 1, 11)
    rows = spectrum_flux_sweep(NAT, 1.0, alphas[::-1], range(-3, 4))
    keys = [(r.alpha, r.energy) for r in rows]
    assert keys == sorted(keys)
    ground = {}
    for r in rows:
        ground.setdefault(r.alpha, r.energy)
    g = np.array([ground[a] for a in alphas])
    np.testing.assert_allclose(g, g[::-1], atol=1e-15)
    assert ground[0.5] == 0.125
    assert min(ground, key=ground.get) in (0.0, 1.0)


def test_flux_sweep_rejects_nonfinite():
    with pytest.raises(ValueError):
        spectrum_flux_sweep(NAT, 1.0, [np.nan], [0])


def test_ring_state_round_trip_through_hamiltonian():
    from abqsim.ring import RingHamiltonian

    grid = RingGrid(1.0, 32)
    H = RingHamiltonian(NAT, grid, flux(0.2))
    psi = RingState(grid, np.exp(1j * grid.thetas))
    out = H.apply(psi)
    assert isinstance(out, RingState)
    with pytest.raises(DimensionError):
        H.pack(RingState(RingGrid(1.0, 16), np.ones(16)))
