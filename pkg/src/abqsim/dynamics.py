"""Crank-Nicolson propagation of lattice and ring states.

Each step solves ``(1 + i dt H / 2 hbar) psi_next = (1 - i dt H / 2 hbar) psi``
with Jacobi-preconditioned BiCGSTAB, warm-started from the current state.
Only the action of ``H`` and its diagonal are used.  A time-dependent
Hamiltonian is given as a callable ``t -> H`` and sampled at the midpoint of
every step (piecewise constant, O(dt^2)).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import IntegrationError, PhysicalConstants, RingState, Wavefunction2D, norm
from .lattice import LinkPhases, covariant_translation

__all__ = [
    "PropagatorConfig",
    "EvolutionRecord",
    "evolve",
    "expectation_kinetic_momentum",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropagatorConfig:
    """Step size and solver settings.

    A negative ``dt`` integrates backwards in time (used for time-reversal
    checks); ``total_time`` is then the (positive) duration.
    """

    dt: float
    total_time: float
    scheme: str = "crank_nicolson"
    linear_solver_tolerance: float = 1e-11
    max_solver_iterations: int = 500
    snapshot_stride: int = 0  # 0: only initial and final state

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt != 0):
            raise ValueError("dt must be finite and nonzero")
        if not (self.total_time >= 0):
            raise ValueError("total_time must be nonnegative")
        if self.scheme != "crank_nicolson":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if not (0 < self.linear_solver_tolerance <= 1e-6):
            raise ValueError("linear_solver_tolerance must lie in (0, 1e-6]")
        if self.max_solver_iterations < 1:
            raise ValueError("max_solver_iterations must be positive")
        if self.snapshot_stride < 0:
            raise ValueError("snapshot_stride must be nonnegative")
        steps = self.total_time / abs(self.dt)
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ValueError("total_time must be an integer multiple of |dt|")

    @property
    def n_steps(self) -> int:
        return int(round(self.total_time / abs(self.dt)))

    def reversed(self) -> "PropagatorConfig":
        return PropagatorConfig(-self.dt, self.total_time, self.scheme, self.linear_solver_tolerance,
                                self.max_solver_iterations, self.snapshot_stride)


@dataclass(frozen=True, eq=False)
class EvolutionRecord:
    snapshots: List[Tuple[int, float, Union[Wavefunction2D, RingState]]]  # (step, time, state)
    norm_drift: float
    energy_drift: float
    solver_iterations: int = 0

    @property
    def final(self):
        return self.snapshots[-1][2]

    @property
    def times(self) -> np.ndarray:
        return np.array([t for _, t, _ in self.snapshots])


def _step_operators(H, dt: float, hbar: float):
    tau = 0.5 * dt / hbar
    n = H.matrix.shape[0]
    eye = sp.identity(n, dtype=np.complex128, format="csr")
    lhs = (eye + 1j * tau * H.matrix).tocsr()
    rhs = (eye - 1j * tau * H.matrix).tocsr()
    inv_diag = 1.0 / (1.0 + 1j * tau * H.diagonal)
    precond = spla.LinearOperator((n, n), matvec=lambda x: inv_diag * x.ravel(), dtype=np.complex128)
    return lhs, rhs, precond


def evolve(s0, H, cfg: PropagatorConfig, consts: PhysicalConstants = PhysicalConstants(),
           on_step: Optional[Callable[[int, np.ndarray], None]] = None) -> EvolutionRecord:
    """Propagate ``s0`` for ``cfg.total_time``.

    ``H`` is a :class:`~abqsim.lattice.DiscreteHamiltonian` /
    :class:`~abqsim.ring.RingHamiltonian`, or a callable ``t -> H``.
    ``on_step(step, packed_vector)`` is called after every step.
    """
    time_dependent = callable(H) and not hasattr(H, "matrix")
    H0 = H(s0.time + 0.5 * cfg.dt) if time_dependent else H
    if abs(norm(s0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")

    measure = s0.measure
    psi = H0.pack(s0).astype(np.complex128)
    lhs, rhs, precond = _step_operators(H0, cfg.dt, consts.hbar)
    e0 = float(np.vdot(psi, H0.matrix @ psi).real * measure)

    t = s0.time
    snapshots = [(0, t, s0)]
    norm_drift = 0.0
    energy_drift = 0.0
    total_iters = 0
    counter = [0]

    def _count(_):
        counter[0] += 1

    for step in range(1, cfg.n_steps + 1):
        if time_dependent and step > 1:
            H0 = H(t + 0.5 * cfg.dt)
            lhs, rhs, precond = _step_operators(H0, cfg.dt, consts.hbar)
        b = rhs @ psi
        counter[0] = 0
        new, info = spla.bicgstab(lhs, b, x0=psi, rtol=cfg.linear_solver_tolerance, atol=0.0,
                                  maxiter=cfg.max_solver_iterations, M=precond, callback=_count)
        if info != 0 or not np.all(np.isfinite(new)):
            raise IntegrationError("linear solver did not converge", step)
        total_iters += counter[0]
        psi = new
        t = s0.time + step * cfg.dt
        nrm = np.sqrt(np.vdot(psi, psi).real * measure)
        norm_drift = max(norm_drift, abs(nrm - 1.0))
        if on_step is not None:
            on_step(step, psi)
        last = step == cfg.n_steps
        if last or (cfg.snapshot_stride and step % cfg.snapshot_stride == 0):
            snapshots.append((step, t, H0.unpack(psi, t)))
            if not time_dependent:
                e = float(np.vdot(psi, H0.matrix @ psi).real * measure)
                energy_drift = max(energy_drift, abs(e - e0) / max(abs(e0), np.finfo(float).tiny))
    log.debug("evolved %d steps, %d solver iterations", cfg.n_steps, total_iters)
    return EvolutionRecord(snapshots, norm_drift, energy_drift, total_iters)


def expectation_kinetic_momentum(s: Wavefunction2D, links: LinkPhases,
                                 consts: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    """``<pi>`` from covariant differences.

    ``pi_axis = (hbar / 2 i a) (T - T^dagger)`` with ``T`` the covariant link
    translation, so ``<pi_axis> = (hbar / a) Im <psi|T psi>``.  Invariant under
    joint gauge transformations of ``s`` and ``links``.
    """
    if not s.grid.same_as(links.lattice):
        raise ValueError("state and link phases live on different lattices")
    psi = s.amplitudes
    a = s.grid.spacing
    out = np.empty(2)
    for axis in (0, 1):
        t = np.vdot(psi, covariant_translation(links, psi, axis)) * s.measure
        out[axis] = consts.hbar / a * t.imag
    return out
