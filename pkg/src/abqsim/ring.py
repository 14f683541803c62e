"""Charged particle on a flux-threaded ring.

The Hamiltonian is ``(-i hbar d/dtheta - hbar alpha)^2 / (2 m R^2)`` with the
reduced flux ``alpha = q Phi / (2 pi hbar)`` (the ring convention keeps ``c``
absorbed into the flux).  Two numerical routes are provided: the spectral
route works in the angular-momentum basis, where the Hamiltonian is exactly
diagonal, and the ``peierls_fd`` route diagonalizes the nearest-neighbour
chain with link phases.  The latter carries O(dtheta^2) dispersion error and
exists as an independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .core import DimensionError, PhysicalConstants, RingGrid, RingState

__all__ = [
    "FluxConfig",
    "RingLevel",
    "RingSpectrum",
    "SweepRow",
    "analytic_spectrum",
    "numerical_spectrum",
    "spectrum_flux_sweep",
    "spectral_hamiltonian_matrix",
    "peierls_ring_matrix",
    "RingHamiltonian",
]


@dataclass(frozen=True)
class FluxConfig:
    """Magnetic flux through the ring and its reduced value ``alpha``."""

    flux: float
    alpha: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        expected = self.constants.charge * self.flux / (2.0 * np.pi * self.constants.hbar)
        if abs(expected - self.alpha) > 1e-14 * max(1.0, abs(self.alpha)):
            raise ValueError(f"alpha={self.alpha!r} inconsistent with flux={self.flux!r}")

    @classmethod
    def from_alpha(cls, alpha: float, constants: PhysicalConstants = PhysicalConstants()) -> "FluxConfig":
        flux = alpha * 2.0 * np.pi * constants.hbar / constants.charge
        return cls(float(flux), float(alpha), constants)

    @classmethod
    def from_flux(cls, flux: float, constants: PhysicalConstants = PhysicalConstants()) -> "FluxConfig":
        alpha = constants.charge * flux / (2.0 * np.pi * constants.hbar)
        return cls(float(flux), float(alpha), constants)


class RingLevel(NamedTuple):
    n: int
    energy: float


@dataclass(frozen=True, eq=False)
class RingSpectrum:
    levels: tuple
    eigenfunctions: Optional[np.ndarray] = None  # shape (len(levels), N)
    grid: Optional[RingGrid] = None

    @property
    def energies(self) -> np.ndarray:
        return np.array([lvl.energy for lvl in self.levels])

    @property
    def quantum_numbers(self) -> np.ndarray:
        return np.array([lvl.n for lvl in self.levels], dtype=int)

    def state(self, index: int) -> RingState:
        if self.eigenfunctions is None or self.grid is None:
            raise ValueError("spectrum was computed without eigenfunctions")
        return RingState(self.grid, self.eigenfunctions[index])


def _level_key(n: int, energy: float):
    # ascending energy; ties: smaller |n| first, then positive n
    return (energy, abs(n), n < 0)


def _energy_scale(consts: PhysicalConstants, radius: float) -> float:
    return consts.hbar ** 2 / (2.0 * consts.mass * radius ** 2)


def analytic_spectrum(
    consts: PhysicalConstants, radius: float, flux: FluxConfig, n_range: Iterable[int]
) -> RingSpectrum:
    """Exact levels ``(hbar^2 / 2 m R^2) (n - alpha)^2`` for ``n`` in ``n_range``."""
    ns = [int(n) for n in n_range]
    if not ns:
        raise ValueError("n_range must be nonempty")
    scale = _energy_scale(consts, radius)
    levels = sorted(
        (RingLevel(n, scale * (n - flux.alpha) ** 2) for n in ns),
        key=lambda lvl: _level_key(*lvl),
    )
    return RingSpectrum(tuple(levels))


def _mode_numbers(n_points: int) -> np.ndarray:
    return np.rint(np.fft.fftfreq(n_points, d=1.0 / n_points)).astype(int)


def spectral_hamiltonian_matrix(consts: PhysicalConstants, grid: RingGrid, flux: FluxConfig) -> np.ndarray:
    """Dense position-space matrix of the spectral (FFT) ring Hamiltonian."""
    n = _mode_numbers(grid.n_points)
    symbol = _energy_scale(consts, grid.radius) * (n - flux.alpha) ** 2
    eye = np.eye(grid.n_points, dtype=np.complex128)
    return np.fft.ifft(symbol[:, None] * np.fft.fft(eye, axis=0), axis=0)


def peierls_ring_matrix(consts: PhysicalConstants, grid: RingGrid, flux: FluxConfig) -> sp.csr_matrix:
    """Nearest-neighbour chain with link phase ``exp(-i alpha dtheta)``."""
    N = grid.n_points
    hop = consts.hbar ** 2 / (2.0 * consts.mass * grid.radius ** 2 * grid.dtheta ** 2)
    phase = np.exp(-1j * flux.alpha * grid.dtheta)
    k = np.arange(N)
    kp = (k + 1) % N
    rows = np.concatenate([k, k, kp])
    cols = np.concatenate([k, kp, k])
    vals = np.concatenate([
        np.full(N, 2.0 * hop, dtype=np.complex128),
        np.full(N, -hop * phase),
        np.full(N, -hop * np.conj(phase)),
    ])
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def _label_fd_levels(energies: np.ndarray, vecs: np.ndarray, scale: float) -> list:
    """Assign angular-momentum labels to FD eigenvectors (cluster-aware)."""
    N = vecs.shape[0]
    modes = _mode_numbers(N)
    power = np.abs(np.fft.fft(vecs, axis=0)) ** 2
    labels = [0] * len(energies)
    tol = 1e-9 * max(scale, abs(energies).max(initial=0.0))
    start = 0
    while start < len(energies):
        stop = start + 1
        while stop < len(energies) and energies[stop] - energies[start] <= tol:
            stop += 1
        cluster_power = power[:, start:stop].sum(axis=1)
        top = np.argsort(-cluster_power, kind="stable")[: stop - start]
        chosen = sorted((int(m) for m in modes[top]), key=lambda m: (abs(m), m < 0))
        labels[start:stop] = chosen
        start = stop
    return labels


def numerical_spectrum(
    consts: PhysicalConstants,
    grid: RingGrid,
    flux: FluxConfig,
    method: str = "spectral",
    k: int = 5,
) -> RingSpectrum:
    """The ``k`` lowest levels of the discretized ring Hamiltonian.

    Parameters
    ----------
    method : {"spectral", "peierls_fd"}
        ``spectral`` works in the Fourier basis, exact for ``|n| <= N/4``;
        ``peierls_fd`` diagonalizes the N x N nearest-neighbour chain.
    """
    N = grid.n_points
    if k > N or k < 1:
        raise DimensionError(f"k={k} must lie in [1, {N}]")
    norm = 1.0 / np.sqrt(2.0 * np.pi * grid.radius)
    if method == "spectral":
        n = _mode_numbers(N)
        energies = _energy_scale(consts, grid.radius) * (n - flux.alpha) ** 2
        order = sorted(range(N), key=lambda idx: _level_key(int(n[idx]), energies[idx]))[:k]
        levels = tuple(RingLevel(int(n[idx]), float(energies[idx])) for idx in order)
        funcs = np.array([norm * np.exp(1j * lvl.n * grid.thetas) for lvl in levels])
        return RingSpectrum(levels, funcs, grid)
    if method == "peierls_fd":
        H = peierls_ring_matrix(consts, grid, flux).toarray()
        energies, vecs = scipy.linalg.eigh(H, subset_by_index=(0, k - 1))
        labels = _label_fd_levels(energies, vecs, _energy_scale(consts, grid.radius))
        vecs = vecs / np.sqrt(grid.measure)
        levels = [RingLevel(n, float(e)) for n, e in zip(labels, energies)]
        order = sorted(range(k), key=lambda idx: _level_key(*levels[idx]))
        return RingSpectrum(tuple(levels[i] for i in order), vecs[:, order].T.copy(), grid)
    raise ValueError(f"unknown method {method!r}; expected 'spectral' or 'peierls_fd'")


class SweepRow(NamedTuple):
    alpha: float
    n: int
    energy: float


def spectrum_flux_sweep(
    consts: PhysicalConstants, radius: float, alphas: Sequence[float], n_range: Iterable[int]
) -> list:
    """Analytic levels for every ``alpha``, ordered by (alpha, energy)."""
    alphas = [float(a) for a in alphas]
    if not all(np.isfinite(alphas)):
        raise ValueError("alphas must be finite")
    ns = list(n_range)
    rows = []
    for alpha in sorted(alphas):
        spec = analytic_spectrum(consts, radius, FluxConfig.from_alpha(alpha, consts), ns)
        rows.extend(SweepRow(alpha, lvl.n, lvl.energy) for lvl in spec.levels)
    return rows


class RingHamiltonian:
    """Peierls ring chain in the form expected by :func:`abqsim.dynamics.evolve`."""

    def __init__(self, consts: PhysicalConstants, grid: RingGrid, flux: FluxConfig):
        self.grid = grid
        self.flux = flux
        self.matrix = peierls_ring_matrix(consts, grid, flux)

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def pack(self, state: RingState) -> np.ndarray:
        if state.grid != self.grid:
            raise DimensionError("state and Hamiltonian live on different ring grids")
        return np.array(state.amplitudes)

    def unpack(self, vec: np.ndarray, time: float) -> RingState:
        return RingState(self.grid, vec, time)

    def apply(self, state: RingState) -> RingState:
        return self.unpack(self.matrix @ self.pack(state), state.time)
