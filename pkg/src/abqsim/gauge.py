"""Phase conventions, connections and background potentials.

A gauge function ``Lambda`` changes the phase convention of the position
basis: states pick up ``exp(i Lambda)`` pointwise and the potentials shift as

    A -> A - (hbar c / q) grad Lambda,    V -> V - (hbar / q) dLambda/dt.

Vector potentials live on the links of the lattice (``ax[i, j]`` is the mean
of ``A_x`` along the link ``(i, j) -> (i + 1, j)``), so the centred gradient
of ``Lambda`` at a link midpoint is exactly the difference of its endpoint
values.  This keeps every gauge transformation exact on the lattice.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .core import (
    DimensionError,
    Lattice2D,
    PhysicalConstants,
    RingGrid,
    RingState,
    TopologyError,
    Wavefunction2D,
    WindingError,
    wrap_phase,
)

__all__ = [
    "GaugeFunction",
    "Connection1D",
    "Solenoid",
    "GaugePotential",
    "WindingResult",
    "PureGaugeResult",
    "apply_to_state",
    "apply_to_potential",
    "connection_from_lambda",
    "winding_number",
    "is_pure_gauge",
    "PROVENANCES",
]

PROVENANCES = ("pure_gauge", "solenoid", "uniform_B", "custom")


# ----------------------------------------------------------------------------
# gauge functions

@dataclass(frozen=True, eq=False)
class GaugeFunction:
    """A phase convention ``Lambda`` over a ring or a lattice.

    On a ring, ``values`` holds the periodic part and ``winding`` the integer
    ``w`` so that ``Lambda(theta) = w theta + values``.  On a lattice,
    ``values`` are node values at ``time``; ``provider(t)`` optionally gives
    the node values at other times and ``rate(t)`` their time derivative.
    """

    domain: Union[RingGrid, Lattice2D]
    values: np.ndarray
    winding: int = 0
    time: float = 0.0
    provider: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)
    rate: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if isinstance(self.domain, RingGrid):
            if vals.shape != (self.domain.n_points,):
                raise DimensionError("ring gauge function has the wrong length")
            if int(self.winding) != self.winding:
                raise ValueError("winding must be an integer")
            finite = np.isfinite(vals)
        else:
            if vals.shape != self.domain.shape:
                raise DimensionError("lattice gauge function has the wrong shape")
            if self.winding:
                raise ValueError("winding is only meaningful on a ring")
            finite = np.isfinite(vals[self.domain.mask])
        if not np.all(finite):
            raise ValueError("gauge function must be finite on the domain")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "winding", int(self.winding))

    @classmethod
    def on_ring(cls, grid: RingGrid, func: Callable[[np.ndarray], np.ndarray], winding: Optional[int] = None):
        """Sample ``func(theta)`` and split off its integer winding."""
        thetas = grid.thetas
        total = np.asarray(func(thetas), dtype=float)
        if winding is None:
            jump = float(func(np.array([2 * np.pi]))[0] - func(np.array([0.0]))[0])
            winding = int(round(jump / (2 * np.pi)))
            if abs(jump - 2 * np.pi * winding) > 1e-9 * max(1.0, abs(jump)):
                raise WindingError(
                    "function is not single valued up to an integer winding",
                    circulation=jump, distance=abs(jump / (2 * np.pi) - winding),
                )
        return cls(grid, total - winding * thetas, winding)

    @classmethod
    def on_lattice(cls, lattice: Lattice2D, func: Callable, time: float = 0.0,
                   rate: Optional[Callable] = None, time_dependent: bool = False):
        """Sample ``func(x, y)`` (or ``func(x, y, t)`` if ``time_dependent``)."""
        X, Y = lattice.meshgrid()
        if time_dependent:
            provider = lambda t: np.asarray(func(X, Y, t), dtype=float) * np.ones(lattice.shape)
            rate_fn = None if rate is None else (lambda t: np.asarray(rate(X, Y, t), float) * np.ones(lattice.shape))
            return cls(lattice, provider(time), time=time, provider=provider, rate=rate_fn)
        return cls(lattice, np.asarray(func(X, Y), float) * np.ones(lattice.shape), time=time)

    def total(self, time: Optional[float] = None) -> np.ndarray:
        """Full values of Lambda on the grid (ring: including ``w theta``)."""
        if isinstance(self.domain, RingGrid):
            return self.values + self.winding * self.domain.thetas
        if time is None or self.provider is None or time == self.time:
            return np.array(self.values)
        return np.asarray(self.provider(time), dtype=float)

    def time_derivative(self, time: Optional[float] = None) -> np.ndarray:
        t = self.time if time is None else time
        if self.rate is not None:
            return np.asarray(self.rate(t), dtype=float)
        if self.provider is None:
            return np.zeros(np.shape(self.values))
        h = 1e-5 * max(1.0, abs(t))
        return (np.asarray(self.provider(t + h)) - np.asarray(self.provider(t - h))) / (2.0 * h)

    def inverse(self) -> "GaugeFunction":
        provider = None if self.provider is None else (lambda t, f=self.provider: -np.asarray(f(t)))
        rate = None if self.rate is None else (lambda t, f=self.rate: -np.asarray(f(t)))
        return GaugeFunction(self.domain, -self.values, -self.winding, self.time, provider, rate)


@dataclass(frozen=True, eq=False)
class Connection1D:
    grid: RingGrid
    omega: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        if om.shape != (self.grid.n_points,):
            raise DimensionError("connection has the wrong length")
        om = om.copy()
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)

    def circulation(self) -> float:
        """Periodic trapezoid rule for the loop integral of omega over theta."""
        return float(np.sum(self.omega) * self.grid.dtheta)


# ----------------------------------------------------------------------------
# potentials

class Solenoid(NamedTuple):
    center: tuple
    alpha: float


def _solenoid_angle_steps(lattice: Lattice2D, center, axis: int) -> np.ndarray:
    """Wrapped polar-angle increments along x-links (axis 0) or y-links (axis 1).

    Links passing through the centre get NaN.
    """
    X, Y = lattice.meshgrid()
    z = (X - center[0]) + 1j * (Y - center[1])
    if axis == 0:
        z0, z1 = z[:-1, :], z[1:, :]
    else:
        z0, z1 = z[:, :-1], z[:, 1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        step = np.angle(z1 / z0)
    # centre on the segment: the endpoints point in opposite directions
    eps = 1e-12 * lattice.spacing
    through = (np.abs(z0) < eps) | (np.abs(z1) < eps) | (
        (np.abs(np.imag(z1 * np.conj(z0))) < eps * lattice.spacing) & (np.real(z1 * np.conj(z0)) < 0)
    )
    step[through] = np.nan
    return step


@dataclass(frozen=True, eq=False)
class GaugePotential:
    """Static background ``(A, V)`` on a lattice.

    ``ax`` has shape ``(nx - 1, ny)`` and ``ay`` shape ``(nx, ny - 1)``; each
    entry is the link-averaged component of ``A``.  ``v`` lives on sites.
    """

    lattice: Lattice2D
    ax: np.ndarray
    ay: np.ndarray
    v: np.ndarray
    provenance: str = "custom"
    solenoids: tuple = ()

    def __post_init__(self):
        nx, ny = self.lattice.shape
        shapes = {"ax": (nx - 1, ny), "ay": (nx, ny - 1), "v": (nx, ny)}
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not np.all(np.isfinite(self.v[self.lattice.mask])):
            raise ValueError("scalar potential must be finite on interior points")
        object.__setattr__(self, "solenoids", tuple(Solenoid(tuple(map(float, s[0])), float(s[1])) for s in self.solenoids))

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, lattice: Lattice2D) -> "GaugePotential":
        nx, ny = lattice.shape
        return cls(lattice, np.zeros((nx - 1, ny)), np.zeros((nx, ny - 1)), np.zeros((nx, ny)), "pure_gauge")

    @classmethod
    def from_fields(cls, lattice: Lattice2D, vector: Optional[Callable] = None,
                    scalar: Optional[Callable] = None, provenance: str = "custom") -> "GaugePotential":
        """Sample ``vector(x, y) -> (Ax, Ay)`` at link midpoints and ``scalar(x, y)`` on sites."""
        X, Y = lattice.meshgrid()
        a = lattice.spacing
        nx, ny = lattice.shape
        ax, ay = np.zeros((nx - 1, ny)), np.zeros((nx, ny - 1))
        if vector is not None:
            ax = np.broadcast_to(vector(X[:-1, :] + a / 2, Y[:-1, :])[0], ax.shape)
            ay = np.broadcast_to(vector(X[:, :-1], Y[:, :-1] + a / 2)[1], ay.shape)
        v = np.zeros((nx, ny)) if scalar is None else np.broadcast_to(scalar(X, Y), (nx, ny))
        return cls(lattice, ax, ay, v, provenance)

    @classmethod
    def uniform_field(cls, lattice: Lattice2D, B: float, gauge: str = "landau") -> "GaugePotential":
        """Uniform ``B_z``; Landau gauge ``A = (-B y, 0)`` or symmetric ``(-B y / 2, B x / 2)``."""
        if gauge == "landau":
            vec = lambda x, y: (-B * y, 0.0 * x)
        elif gauge == "symmetric":
            vec = lambda x, y: (-0.5 * B * y, 0.5 * B * x)
        else:
            raise ValueError(f"unknown gauge {gauge!r}")
        return cls.from_fields(lattice, vec, provenance="uniform_B")

    @classmethod
    def solenoid(cls, lattice: Lattice2D, center, alpha: float,
                 consts: PhysicalConstants = PhysicalConstants()) -> "GaugePotential":
        """Ideal thin solenoid with reduced flux ``alpha = q Phi / (2 pi hbar c)``.

        Outside the centre ``A = (Phi / 2 pi) grad(polar angle)``, so the link
        averages are exact angle increments.
        """
        scale = alpha / (consts.phase_per_potential * lattice.spacing)
        ax = scale * _solenoid_angle_steps(lattice, center, 0)
        ay = scale * _solenoid_angle_steps(lattice, center, 1)
        return cls(lattice, ax, ay, np.zeros(lattice.shape), "solenoid", (Solenoid(tuple(center), alpha),))

    def with_scalar(self, v) -> "GaugePotential":
        return replace(self, v=np.broadcast_to(np.asarray(v, float), self.lattice.shape))

    def restricted(self, patch) -> "GaugePotential":
        return replace(self, lattice=self.lattice.restricted(patch))

    def __add__(self, other: "GaugePotential") -> "GaugePotential":
        if not self.lattice.same_as(other.lattice):
            raise DimensionError("potentials live on different lattices")
        prov = self.provenance if self.provenance == other.provenance else "custom"
        return GaugePotential(self.lattice, self.ax + other.ax, self.ay + other.ay, self.v + other.v,
                              prov, self.solenoids + other.solenoids)


# ----------------------------------------------------------------------------
# operations

def _check_domain(g: GaugeFunction, domain) -> None:
    if isinstance(g.domain, RingGrid):
        ok = isinstance(domain, RingGrid) and g.domain == domain
    else:
        ok = isinstance(domain, Lattice2D) and g.domain.same_as(domain)
    if not ok:
        raise DimensionError("gauge function and target live on different domains")


def apply_to_state(g: GaugeFunction, s: Union[RingState, Wavefunction2D]):
    """Multiply amplitudes by ``exp(i Lambda)`` pointwise."""
    _check_domain(g, s.grid)
    lam = g.total(s.time)
    factor = np.exp(1j * lam)
    if isinstance(s, Wavefunction2D):
        factor = np.where(s.grid.mask, factor, 0.0)
    return s.replace(factor * s.amplitudes)


def apply_to_potential(g: GaugeFunction, p: GaugePotential, consts: PhysicalConstants = PhysicalConstants(),
                       time: Optional[float] = None) -> GaugePotential:
    """``A -> A - (hbar c / q) grad Lambda`` and ``V -> V - (hbar / q) dLambda/dt``."""
    if isinstance(g.domain, RingGrid) or not g.domain.shape == p.lattice.shape \
            or g.domain.spacing != p.lattice.spacing or g.domain.origin != p.lattice.origin:
        raise DimensionError("gauge function and potential live on different lattices")
    t = g.time if time is None else time
    lam = g.total(t)
    a = p.lattice.spacing
    k = consts.hbar * consts.light_speed / consts.charge
    ax = p.ax - k * np.diff(lam, axis=0) / a
    ay = p.ay - k * np.diff(lam, axis=1) / a
    v = p.v - (consts.hbar / consts.charge) * np.broadcast_to(g.time_derivative(t), p.v.shape)
    prov = "pure_gauge" if p.provenance == "pure_gauge" else "custom"
    return GaugePotential(p.lattice, ax, ay, v, prov, p.solenoids)


def connection_from_lambda(g: GaugeFunction, consts: PhysicalConstants = PhysicalConstants(),
                           time: Optional[float] = None):
    """``omega = -hbar grad Lambda``.

    On a ring this is a :class:`Connection1D` (spectral derivative of the
    periodic part plus the winding); on a lattice it is the pure-gauge
    potential ``A = (c / q) omega`` with ``V = -(hbar / q) dLambda/dt``.
    """
    if isinstance(g.domain, RingGrid):
        grid = g.domain
        deriv = _ring_derivative(g.values, grid.dtheta) + g.winding
        return Connection1D(grid, -consts.hbar * deriv)
    return apply_to_potential(g, GaugePotential.zero(g.domain), consts, time)


def _ring_derivative(values: np.ndarray, dtheta: float) -> np.ndarray:
    n = values.size
    modes = np.fft.fftfreq(n, d=1.0 / n)
    modes[n // 2] = 0.0  # Nyquist mode has no unambiguous derivative
    return np.fft.ifft(1j * modes * np.fft.fft(values)).real


class WindingResult(NamedTuple):
    winding: int
    circulation: float
    distance: float


def winding_number(c: Connection1D, consts: PhysicalConstants = PhysicalConstants(),
                   tolerance: float = 0.05) -> WindingResult:
    """Integer ``w = round(-circulation / (2 pi hbar))``.

    ``distance`` is ``|-circulation / (2 pi hbar) - w|``; if it exceeds
    ``tolerance`` the connection is a physical flux rather than a change of
    phase convention and :class:`WindingError` is raised.
    """
    circ = c.circulation()
    ratio = -circ / (2.0 * np.pi * consts.hbar)
    w = int(np.rint(ratio))
    dist = abs(ratio - w)
    if dist > tolerance:
        raise WindingError(
            f"circulation {circ:.6g} is {dist:.3g} away from a multiple of 2*pi*hbar",
            circulation=circ, distance=dist,
        )
    return WindingResult(w, circ, dist)


class PureGaugeResult(NamedTuple):
    flat: bool
    witness: Optional[GaugeFunction]
    max_plaquette: float
    max_loop: float
    n_independent_loops: int

    def __bool__(self) -> bool:
        return self.flat


def _interior_graph(lattice: Lattice2D):
    import scipy.sparse as sp

    mask = lattice.mask
    nx, ny = lattice.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    hx = mask[:-1, :] & mask[1:, :]
    hy = mask[:, :-1] & mask[:, 1:]
    rows = np.concatenate([idx[:-1, :][hx], idx[:, :-1][hy]])
    cols = np.concatenate([idx[1:, :][hx], idx[:, 1:][hy]])
    graph = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(nx * ny, nx * ny)).tocsr()
    return graph, hx, hy


def is_pure_gauge(p: GaugePotential, consts: PhysicalConstants = PhysicalConstants(),
                  tol: float = 1e-10) -> PureGaugeResult:
    """Flatness test for the static vector potential (``V`` is ignored).

    Flat means every interior plaquette phase is below ``tol`` and every
    independent loop of the interior link graph (including loops around
    holes) has trivial holonomy modulo ``2 pi``.  The witness ``Lambda``
    satisfies ``A = -(hbar c / q) grad Lambda`` modulo ``2 pi`` per link.
    """
    from .lattice import build_link_phases, plaquette_curvature

    lattice = p.lattice
    graph, hx, hy = _interior_graph(lattice)
    interior = np.flatnonzero(lattice.mask.ravel())
    n_comp, labels = connected_components(graph, directed=False)
    if np.unique(labels[interior]).size > 1:
        raise TopologyError("interior region is not connected")

    links = build_link_phases(p, consts)
    curv = plaquette_curvature(links)
    plaq = np.abs(curv.values[curv.present])
    max_plaq = float(plaq.max(initial=0.0))

    # spanning tree: W(node) = W(parent) - phase(parent -> node)
    nx, ny = lattice.shape
    base = int(interior[0])
    order, pred = breadth_first_order(graph, base, directed=False, return_predecessors=True)
    th_x, th_y = links.horizontal, links.vertical
    W = np.zeros(nx * ny)
    for node in order[1:]:
        parent = pred[node]
        (pi, pj), (ci, cj) = divmod(parent, ny), divmod(node, ny)
        if ci == pi + 1:
            step = th_x[pi, pj]
        elif ci == pi - 1:
            step = -th_x[ci, cj]
        elif cj == pj + 1:
            step = th_y[pi, pj]
        else:
            step = -th_y[ci, cj]
        W[node] = W[parent] - step
    W = W.reshape(nx, ny)
    res_x = wrap_phase(th_x + np.diff(W, axis=0))[hx]
    res_y = wrap_phase(th_y + np.diff(W, axis=1))[hy]
    max_loop = float(np.abs(np.concatenate([res_x, res_y])).max(initial=0.0))
    n_loops = int(hx.sum() + hy.sum()) - (interior.size - 1)

    flat = max_plaq < tol and max_loop < tol
    witness = None
    if flat:
        W[~lattice.mask] = 0.0
        witness = GaugeFunction(lattice, W)
    return PureGaugeResult(flat, witness, max_plaq, max_loop, n_loops)
