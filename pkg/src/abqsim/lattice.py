"""Gauge-covariant lattice operators (Peierls substitution).

Link phases are ``theta = (q / hbar c) * integral of A along the link`` in the
+x or +y direction.  The Hamiltonian reads

    (H psi)(i, j) = t [4 psi(i, j) - e^{i theta_x(i, j)} psi(i + 1, j)
                    - e^{-i theta_x(i - 1, j)} psi(i - 1, j) - (same along y)]
                    + q V(i, j) psi(i, j),        t = hbar^2 / (2 m a^2),

with links touching masked sites removed.  Under ``psi -> e^{i Lambda} psi``
and ``A -> A - (hbar c / q) grad Lambda`` it transforms as ``U H U^dagger``
to machine precision, so its continuum limit is ``(p + qA/c)^2 / 2m + qV``.
Curvature sign convention: the counter-clockwise plaquette phase equals
``(q / hbar c) B_z a^2`` with ``B_z = dAy/dx - dAx/dy``.  The covariant
momenta ``pi = p + qA/c`` then obey ``[pi_x, pi_y] = -i hbar (q / c) B_z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    DimensionError,
    Lattice2D,
    PhysicalConstants,
    SingularityError,
    Wavefunction2D,
    wrap_phase,
)
from .gauge import GaugePotential, _solenoid_angle_steps

__all__ = [
    "LinkPhases",
    "DiscreteHamiltonian",
    "PlaquetteCurvature",
    "CommutatorReport",
    "build_link_phases",
    "build_hamiltonian",
    "plaquette_curvature",
    "covariant_translation",
    "covariant_commutator_check",
    "loop_phase",
    "lowest_eigenstates",
]


@dataclass(frozen=True, eq=False)
class LinkPhases:
    """Phases on x-links ``(nx-1, ny)`` and y-links ``(nx, ny-1)``.

    ``horizontal_present`` / ``vertical_present`` flag links whose two
    endpoints are interior; only those carry hopping.
    """

    lattice: Lattice2D
    horizontal: np.ndarray
    vertical: np.ndarray

    @property
    def horizontal_present(self) -> np.ndarray:
        m = self.lattice.mask
        return m[:-1, :] & m[1:, :]

    @property
    def vertical_present(self) -> np.ndarray:
        m = self.lattice.mask
        return m[:, :-1] & m[:, 1:]


def build_link_phases(p: GaugePotential, consts: PhysicalConstants = PhysicalConstants()) -> LinkPhases:
    lattice = p.lattice
    if p.provenance == "solenoid" and p.solenoids:
        hor = np.zeros((lattice.nx - 1, lattice.ny))
        ver = np.zeros((lattice.nx, lattice.ny - 1))
        for center, alpha in p.solenoids:
            hor = hor + alpha * _solenoid_angle_steps(lattice, center, 0)
            ver = ver + alpha * _solenoid_angle_steps(lattice, center, 1)
    else:
        scale = consts.phase_per_potential * lattice.spacing
        hor, ver = scale * p.ax, scale * p.ay
    links = LinkPhases(lattice, hor, ver)

    X, Y = lattice.meshgrid()
    for center, _ in p.solenoids:
        on_site = (np.abs(X - center[0]) < 1e-12 * lattice.spacing) & (np.abs(Y - center[1]) < 1e-12 * lattice.spacing)
        if np.any(on_site & lattice.mask):
            raise SingularityError(f"solenoid centre {center} sits on an interior lattice point")
    bad = np.isnan(hor) & links.horizontal_present
    bad_v = np.isnan(ver) & links.vertical_present
    if bad.any() or bad_v.any():
        raise SingularityError("a hopping link passes through a solenoid centre")
    return links


@dataclass(frozen=True, eq=False)
class DiscreteHamiltonian:
    """Sparse Peierls Hamiltonian acting on the interior sites.

    ``matrix`` acts on packed vectors (interior sites in row-major order).
    """

    links: LinkPhases
    onsite: np.ndarray
    hopping: float
    matrix: sp.csr_matrix
    index: np.ndarray  # (nx, ny) -> packed index, -1 on masked sites

    @property
    def lattice(self) -> Lattice2D:
        return self.links.lattice

    @property
    def diagonal(self) -> np.ndarray:
        return self.onsite[self.lattice.mask]

    def pack(self, state: Wavefunction2D) -> np.ndarray:
        if not state.grid.same_as(self.lattice):
            raise DimensionError("state and Hamiltonian live on different lattices")
        return state.amplitudes[self.lattice.mask]

    def unpack(self, vec: np.ndarray, time: float = 0.0) -> Wavefunction2D:
        full = np.zeros(self.lattice.shape, dtype=np.complex128)
        full[self.lattice.mask] = vec
        return Wavefunction2D(self.lattice, full, time)

    def apply(self, state: Wavefunction2D) -> Wavefunction2D:
        return self.unpack(self.matrix @ self.pack(state), state.time)

    def expectation(self, state: Wavefunction2D) -> float:
        vec = self.pack(state)
        return float(np.vdot(vec, self.matrix @ vec).real * self.lattice.measure)


def build_hamiltonian(p: GaugePotential, consts: PhysicalConstants = PhysicalConstants(),
                      grid: Optional[Lattice2D] = None) -> DiscreteHamiltonian:
    lattice = p.lattice
    if grid is not None and not grid.same_as(lattice):
        raise DimensionError("potential is defined on a different lattice")
    links = build_link_phases(p, consts)
    t = consts.hbar ** 2 / (2.0 * consts.mass * lattice.spacing ** 2)
    onsite = 4.0 * t + consts.charge * np.array(p.v)

    mask = lattice.mask
    index = np.full(lattice.shape, -1, dtype=np.int64)
    index[mask] = np.arange(int(mask.sum()))

    hx, hy = links.horizontal_present, links.vertical_present
    src = np.concatenate([index[:-1, :][hx], index[:, :-1][hy]])
    dst = np.concatenate([index[1:, :][hx], index[:, 1:][hy]])
    forward = -t * np.exp(1j * np.concatenate([links.horizontal[hx], links.vertical[hy]]))
    diag = index[mask]
    rows = np.concatenate([diag, src, dst])
    cols = np.concatenate([diag, dst, src])
    vals = np.concatenate([onsite[mask].astype(np.complex128), forward, np.conj(forward)])
    n = diag.size
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return DiscreteHamiltonian(links, onsite, t, matrix, index)


def lowest_eigenstates(H: DiscreteHamiltonian, k: int = 1, sigma: Optional[float] = None):
    """``k`` lowest eigenpairs as (energies, list of normalized Wavefunction2D)."""
    n = H.matrix.shape[0]
    if n <= 2000:
        energies, vecs = np.linalg.eigh(H.matrix.toarray())
        energies, vecs = energies[:k], vecs[:, :k]
    else:
        shift = float(H.diagonal.min() - 4.0 * H.hopping) if sigma is None else sigma
        energies, vecs = spla.eigsh(H.matrix, k=k, sigma=shift, which="LM")
        order = np.argsort(energies)
        energies, vecs = energies[order], vecs[:, order]
    states = [H.unpack(vecs[:, m] / np.sqrt(H.lattice.measure)) for m in range(k)]
    return energies, states


@dataclass(frozen=True, eq=False)
class PlaquetteCurvature:
    """Counter-clockwise plaquette phases wrapped to (-pi, pi], shape (nx-1, ny-1).

    ``valid`` marks plaquettes whose four link phases are finite; ``present``
    those whose four links all carry hopping.
    """

    values: np.ndarray
    valid: np.ndarray
    present: np.ndarray
    spacing: float

    def total(self) -> float:
        return float(np.sum(self.values[self.valid]))

    def field(self, consts: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
        """Plaquette-averaged ``B_z`` implied by the phases."""
        return self.values / (consts.phase_per_potential * self.spacing ** 2)


def plaquette_curvature(l: LinkPhases) -> PlaquetteCurvature:
    hor, ver = l.horizontal, l.vertical
    raw = hor[:, :-1] + ver[1:, :] - hor[:, 1:] - ver[:-1, :]
    valid = np.isfinite(raw)
    values = np.where(valid, wrap_phase(np.where(valid, raw, 0.0)), np.nan)
    hx, hy = l.horizontal_present, l.vertical_present
    present = hx[:, :-1] & hy[1:, :] & hx[:, 1:] & hy[:-1, :]
    return PlaquetteCurvature(values, valid, present, l.lattice.spacing)


def covariant_translation(l: LinkPhases, psi: np.ndarray, axis: int) -> np.ndarray:
    """``(T psi)(r) = exp(i theta_link) psi(r + a e_axis)``, zero across absent links."""
    out = np.zeros_like(psi, dtype=np.complex128)
    if axis == 0:
        phase = np.where(l.horizontal_present, np.exp(1j * np.nan_to_num(l.horizontal)), 0.0)
        out[:-1, :] = phase * psi[1:, :]
    else:
        phase = np.where(l.vertical_present, np.exp(1j * np.nan_to_num(l.vertical)), 0.0)
        out[:, :-1] = phase * psi[:, 1:]
    return out


class CommutatorReport(NamedTuple):
    max_commutator: float          # max |[T_x, T_y] psi| / max |psi|
    max_phase_deviation: float     # max |arg(T_x T_y psi / T_y T_x psi) - F|
    extracted_field: np.ndarray    # B_z per present plaquette (NaN elsewhere)
    mean_field: float
    commutator_coefficient: complex  # -i hbar (q / c) <B_z>: continuum [pi_x, pi_y]
    curvature: PlaquetteCurvature


def covariant_commutator_check(p: GaugePotential, consts: PhysicalConstants = PhysicalConstants(),
                               grid: Optional[Lattice2D] = None, trials: int = 5,
                               rng: Optional[np.random.Generator] = None) -> CommutatorReport:
    """Probe ``T_x T_y = exp(i F) T_y T_x`` on random states.

    The local phase read off from the commutator gives the field
    ``B_z = (hbar c / q) F / a^2`` independently of :func:`plaquette_curvature`,
    against which it is compared.
    """
    if grid is not None and not grid.same_as(p.lattice):
        raise DimensionError("potential is defined on a different lattice")
    rng = np.random.default_rng(0) if rng is None else rng
    lattice = p.lattice
    links = build_link_phases(p, consts)
    curv = plaquette_curvature(links)
    present = curv.present
    F = np.where(present, curv.values, 0.0)

    max_comm = 0.0
    max_dev = 0.0
    local = None
    for _ in range(max(1, trials)):
        psi = rng.normal(size=lattice.shape) + 1j * rng.normal(size=lattice.shape)
        psi[~lattice.mask] = 0.0
        xy = covariant_translation(links, covariant_translation(links, psi, 1), 0)
        yx = covariant_translation(links, covariant_translation(links, psi, 0), 1)
        comm = xy - yx
        max_comm = max(max_comm, float(np.abs(comm).max() / np.abs(psi).max()))
        c, d = xy[:-1, :-1][present], yx[:-1, :-1][present]
        phase = np.angle(c * np.conj(d))
        if phase.size:
            max_dev = max(max_dev, float(np.abs(wrap_phase(phase - F[present])).max()))
        if local is None:
            local = phase
    extracted = np.full(present.shape, np.nan)
    scale = 1.0 / (consts.phase_per_potential * lattice.spacing ** 2)
    extracted[present] = scale * local
    mean_field = float(np.mean(extracted[present])) if present.any() else 0.0
    # T_a = exp(i a pi_a / hbar), so T_x T_y = exp(-(a / hbar)^2 [pi_x, pi_y]) T_y T_x
    coeff = -1j * consts.hbar * consts.charge / consts.light_speed * mean_field
    return CommutatorReport(max_comm, max_dev, extracted, mean_field, coeff, curv)


def loop_phase(l: LinkPhases, path) -> float:
    """Sum of oriented link phases along a closed or open nearest-neighbour path.

    ``path`` is a sequence of ``(i, j)`` sites; consecutive sites must be
    lattice neighbours.
    """
    total = 0.0
    pts = [tuple(map(int, s)) for s in path]
    for (i0, j0), (i1, j1) in zip(pts[:-1], pts[1:]):
        di, dj = i1 - i0, j1 - j0
        if (abs(di), abs(dj)) == (1, 0):
            total += l.horizontal[min(i0, i1), j0] * di
        elif (abs(di), abs(dj)) == (0, 1):
            total += l.vertical[i0, min(j0, j1)] * dj
        elif di or dj:
            raise ValueError(f"sites {(i0, j0)} and {(i1, j1)} are not neighbours")
    return float(total)
