"""Shared value types: physical constants, grids, states and error classes.

All states carry their grid so that inner products can include the proper
measure element (``R * dtheta`` on a ring, ``a**2`` on the lattice).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "ABQSimError",
    "DimensionError",
    "DegenerateStateError",
    "TopologyError",
    "SingularityError",
    "WindingError",
    "IntegrationError",
    "TransmissionError",
    "NoFringeError",
    "PhysicalConstants",
    "RingGrid",
    "Lattice2D",
    "RingState",
    "Wavefunction2D",
    "inner_product",
    "norm",
    "normalize",
    "gaussian_packet",
    "wrap_phase",
]


# ----------------------------------------------------------------------------
# errors

class ABQSimError(Exception):
    """Base class; ``category`` and ``exit_code`` feed the CLI error table."""

    category = "internal"
    exit_code = 1


class DimensionError(ABQSimError, ValueError):
    category = "dimension"
    exit_code = 4


class DegenerateStateError(ABQSimError, ValueError):
    category = "degenerate_state"
    exit_code = 5


class TopologyError(ABQSimError, ValueError):
    category = "topology"
    exit_code = 6


class SingularityError(ABQSimError, ValueError):
    category = "singularity"
    exit_code = 7


class WindingError(ABQSimError, ValueError):
    """Circulation is not an integer multiple of ``2*pi*hbar``."""

    category = "not_a_winding"
    exit_code = 8

    def __init__(self, message: str, circulation: float, distance: float):
        super().__init__(message)
        self.circulation = circulation
        self.distance = distance


class IntegrationError(ABQSimError, RuntimeError):
    category = "integration"
    exit_code = 9

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class TransmissionError(ABQSimError, RuntimeError):
    category = "insufficient_transmission"
    exit_code = 10


class NoFringeError(ABQSimError, RuntimeError):
    category = "no_fringe"
    exit_code = 11


# ----------------------------------------------------------------------------
# helpers

def wrap_phase(x):
    """Wrap angles to the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


# ----------------------------------------------------------------------------
# value types

@dataclass(frozen=True)
class PhysicalConstants:
    """hbar, particle mass, charge and speed of light (natural units by default)."""

    hbar: float = 1.0
    mass: float = 1.0
    charge: float = 1.0
    light_speed: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "charge", "light_speed"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    @property
    def phase_per_potential(self) -> float:
        """Factor q/(hbar c) turning a line integral of A into a phase."""
        return self.charge / (self.hbar * self.light_speed)


@dataclass(frozen=True)
class RingGrid:
    radius: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        if int(self.n_points) != self.n_points or self.n_points < 8 or self.n_points % 2:
            raise ValueError(f"n_points must be an even integer >= 8, got {self.n_points!r}")

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_points

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dtheta

    @property
    def measure(self) -> float:
        return self.radius * self.dtheta


@dataclass(frozen=True, eq=False)
class Lattice2D:
    """Square lattice with a boolean interior mask.

    Site ``(i, j)`` sits at ``origin + a * (i, j)``.  Masked-out sites
    (``mask == False``) are hard walls: the wavefunction vanishes there and
    the links touching them carry no hopping.
    """

    nx: int
    ny: int
    spacing: float
    origin: tuple = (0.0, 0.0)
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be positive integers")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        mask = np.ones((self.nx, self.ny), bool) if self.mask is None else np.asarray(self.mask, bool)
        if mask.shape != (self.nx, self.ny):
            raise DimensionError(f"mask shape {mask.shape} != {(self.nx, self.ny)}")
        if not mask.any():
            raise ValueError("lattice needs at least one interior point")
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.spacing * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.spacing * np.arange(self.ny)

    def meshgrid(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def measure(self) -> float:
        return self.spacing ** 2

    def with_mask(self, mask) -> "Lattice2D":
        return Lattice2D(self.nx, self.ny, self.spacing, self.origin, mask)

    def restricted(self, patch) -> "Lattice2D":
        """Same lattice with the interior reduced to ``mask & patch``."""
        return self.with_mask(self.mask & np.asarray(patch, bool))

    def same_as(self, other) -> bool:
        return (
            isinstance(other, Lattice2D)
            and self.shape == other.shape
            and self.spacing == other.spacing
            and self.origin == other.origin
            and np.array_equal(self.mask, other.mask)
        )


@dataclass(frozen=True, eq=False)
class RingState:
    grid: RingGrid
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.grid.n_points,):
            raise DimensionError(f"ring amplitudes shape {amp.shape} != ({self.grid.n_points},)")
        if not np.all(np.isfinite(amp)):
            raise ValueError("ring amplitudes must be finite")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @property
    def measure(self) -> float:
        return self.grid.measure

    def replace(self, amplitudes, time=None) -> "RingState":
        return RingState(self.grid, amplitudes, self.time if time is None else time)


@dataclass(frozen=True, eq=False)
class Wavefunction2D:
    grid: Lattice2D
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != self.grid.shape:
            raise DimensionError(f"amplitudes shape {amp.shape} != {self.grid.shape}")
        if not np.all(np.isfinite(amp)):
            raise ValueError("amplitudes must be finite")
        if np.any(amp[~self.grid.mask] != 0):
            raise ValueError("amplitudes must vanish on masked-out points")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @property
    def measure(self) -> float:
        return self.grid.measure

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def replace(self, amplitudes, time=None) -> "Wavefunction2D":
        return Wavefunction2D(self.grid, amplitudes, self.time if time is None else time)


State = Union[RingState, Wavefunction2D]


def _check_same_grid(a: State, b: State) -> None:
    if type(a) is not type(b):
        raise DimensionError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, RingState):
        if a.grid != b.grid:
            raise DimensionError("ring states live on different grids")
    elif not a.grid.same_as(b.grid):
        raise DimensionError("wavefunctions live on different lattices")


def inner_product(a: State, b: State) -> complex:
    """<a|b> including the grid measure element."""
    _check_same_grid(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.measure)


def norm(s: State) -> float:
    return float(np.sqrt(np.vdot(s.amplitudes, s.amplitudes).real * s.measure))


def normalize(s: State) -> State:
    nrm = norm(s)
    if not nrm > 0:
        raise DegenerateStateError("cannot normalize the zero state")
    return s.replace(s.amplitudes / nrm)


def gaussian_packet(
    lattice: Lattice2D,
    center: Sequence[float],
    sigma: float,
    k: Sequence[float] = (0.0, 0.0),
    time: float = 0.0,
) -> Wavefunction2D:
    """Normalized Gaussian ``exp(-|r - r0|^2 / (4 sigma^2) + i k.r)``.

    ``sigma`` is the standard deviation of the position density, so the free
    spreading law reads ``sigma(t)^2 = sigma^2 + (hbar t / (2 m sigma))^2``.
    Amplitudes on masked sites are set to zero before normalizing.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    X, Y = lattice.meshgrid()
    dx, dy = X - center[0], Y - center[1]
    amp = np.exp(-(dx ** 2 + dy ** 2) / (4.0 * sigma ** 2) + 1j * (k[0] * dx + k[1] * dy))
    amp[~lattice.mask] = 0.0
    return normalize(Wavefunction2D(lattice, amp, time))
