"""Numerical Aharonov-Bohm effects: flux-threaded ring spectra, gauge
covariance on Peierls lattices, and two-slit interference around a shielded
solenoid."""
from .core import (
    ABQSimError,
    DegenerateStateError,
    DimensionError,
    IntegrationError,
    Lattice2D,
    NoFringeError,
    PhysicalConstants,
    RingGrid,
    RingState,
    SingularityError,
    TopologyError,
    TransmissionError,
    Wavefunction2D,
    WindingError,
    gaussian_packet,
    inner_product,
    norm,
    normalize,
)
from .dynamics import PropagatorConfig, evolve, expectation_kinetic_momentum
from .gauge import GaugeFunction, GaugePotential, apply_to_potential, apply_to_state, is_pure_gauge, winding_number
from .lattice import build_hamiltonian, build_link_phases, covariant_commutator_check, plaquette_curvature
from .ring import FluxConfig, analytic_spectrum, numerical_spectrum, spectrum_flux_sweep

__all__ = [
    "ABQSimError",
    "DegenerateStateError",
    "DimensionError",
    "IntegrationError",
    "Lattice2D",
    "NoFringeError",
    "PhysicalConstants",
    "RingGrid",
    "RingState",
    "SingularityError",
    "TopologyError",
    "TransmissionError",
    "Wavefunction2D",
    "WindingError",
    "gaussian_packet",
    "inner_product",
    "norm",
    "normalize",
    "PropagatorConfig",
    "evolve",
    "expectation_kinetic_momentum",
    "GaugeFunction",
    "GaugePotential",
    "apply_to_potential",
    "apply_to_state",
    "is_pure_gauge",
    "winding_number",
    "build_hamiltonian",
    "build_link_phases",
    "covariant_commutator_check",
    "plaquette_curvature",
    "FluxConfig",
    "analytic_spectrum",
    "numerical_spectrum",
    "spectrum_flux_sweep",
]

__version__ = "0.1.0"
