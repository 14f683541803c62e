"""Command-line front end.

Usage::

    abqsim <command> --config run.toml [--out DIR] [--seed N]

Every run writes ``resolved_config.json`` (all defaults filled in), the
command's CSV files and ``summary.json``, which lists every emitted file.
Exit codes:

====  ==========================
0     success
1     internal error
2     config parse error
3     config validation error
4     dimension mismatch
5     degenerate (zero) state
6     topology error
7     solenoid singularity
8     not an integer winding
9     solver did not converge
10    insufficient transmission
11    no fringes
====  ==========================
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .config import COMMANDS, RunConfig, experiment_config, load_config
from .core import ABQSimError, Lattice2D, RingGrid, gaussian_packet, wrap_phase
from .dynamics import evolve, expectation_kinetic_momentum
from .gauge import (
    GaugeFunction,
    GaugePotential,
    apply_to_potential,
    connection_from_lambda,
    is_pure_gauge,
    winding_number,
)
from .lattice import build_hamiltonian, build_link_phases, covariant_commutator_check, loop_phase, plaquette_curvature
from .ring import spectrum_flux_sweep

log = logging.getLogger("abqsim")

EXIT_CODES = {
    "ok": 0,
    "internal": 1,
    "config_parse": 2,
    "config_validation": 3,
    "dimension": 4,
    "degenerate_state": 5,
    "topology": 6,
    "singularity": 7,
    "not_a_winding": 8,
    "integration": 9,
    "insufficient_transmission": 10,
    "no_fringe": 11,
}


class _Outputs:
    """Tracks emitted files relative to the output directory."""

    def __init__(self, root: Path):
        self.root = root
        self.files = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _random_lambda(rng: np.random.Generator):
    c = rng.normal(size=5)
    return lambda x, y: c[0] * np.sin(x + c[1]) + c[2] * np.cos(0.5 * y + c[3]) + 0.2 * c[4] * x * y


def _potential(model, lattice: Lattice2D, rng):
    kind = model.kind
    if kind == "zero":
        p = GaugePotential.zero(lattice)
    elif kind == "pure_gauge":
        p = apply_to_potential(GaugeFunction.on_lattice(lattice, _random_lambda(rng)), GaugePotential.zero(lattice))
    elif kind == "uniform_B":
        p = GaugePotential.uniform_field(lattice, model.field, model.gauge)
    else:
        if model.hole_radius > 0:
            X, Y = lattice.meshgrid()
            hole = (X - model.center[0]) ** 2 + (Y - model.center[1]) ** 2 <= model.hole_radius ** 2
            lattice = lattice.with_mask(lattice.mask & ~hole)
        p = GaugePotential.solenoid(lattice, model.center, model.alpha)
    return p.with_scalar(model.scalar) if model.scalar else p


# commands -----------------------------------------------------------------------

def cmd_ring_spectrum(cfg: RunConfig, out: _Outputs, rng) -> dict:
    from .experiments import run_static_ring_experiment

    p = cfg.parameters
    consts = p.constants.build()
    grid = RingGrid(p.radius, p.n_points)
    rows = run_static_ring_experiment(consts, p.radius, grid, p.alphas, p.n_levels)
    io.write_csv(out.path("ring_spectrum.csv"),
                 ["alpha", "n", "analytic", "spectral", "peierls_fd", "spectral_error", "fd_error", "degenerate"],
                 rows)
    levels = spectrum_flux_sweep(consts, p.radius, p.alphas, range(p.n_min, p.n_max + 1))
    io.write_csv(out.path("analytic_levels.csv"), ["alpha", "n", "energy"], levels)
    spec_err = max(r.spectral_error / max(r.analytic, 1.0) for r in rows)
    fd_err = float(np.nanmax([r.fd_error for r in rows]))
    return {
        "max_spectral_error": spec_err,
        "max_fd_error": fd_err,
        "degenerate_levels": sum(r.degenerate for r in rows),
        "checks": {"spectral_matches_analytic": bool(spec_err < 1e-10)},
    }


def cmd_gauge_check(cfg: RunConfig, out: _Outputs, rng) -> dict:
    p = cfg.parameters
    consts = p.constants.build()
    lattice = Lattice2D(p.lattice.nx, p.lattice.ny, p.lattice.spacing)
    pot = _potential(p.potential, lattice, rng)
    lattice = pot.lattice
    links = build_link_phases(pot, consts)
    curv = plaquette_curvature(links)
    ii, jj = np.nonzero(curv.valid)
    io.write_csv(out.path("plaquettes.csv"), ["i", "j", "phase"], zip(ii, jj, curv.values[curv.valid]))

    flat = is_pure_gauge(pot, consts)
    comm = covariant_commutator_check(pot, consts, trials=p.trials, rng=rng)
    nx, ny = lattice.shape
    boundary = [(i, 0) for i in range(nx - 1)] + [(nx - 1, j) for j in range(ny - 1)]
    boundary += [(i, ny - 1) for i in range(nx - 1, 0, -1)] + [(0, j) for j in range(ny - 1, -1, -1)]
    holonomy = loop_phase(links, boundary)

    # covariance of the Hamiltonian under a random single-valued transformation
    g = GaugeFunction.on_lattice(lattice, _random_lambda(rng))
    H = build_hamiltonian(pot, consts)
    Hg = build_hamiltonian(apply_to_potential(g, pot, consts), consts)
    U = np.exp(1j * g.values[lattice.mask])
    psi = rng.normal(size=H.matrix.shape[0]) + 1j * rng.normal(size=H.matrix.shape[0])
    covariance = float(np.max(np.abs(Hg.matrix @ (U * psi) - U * (H.matrix @ psi))))

    # ring: a random single-valued phase convention carries no winding
    grid = RingGrid(1.0, p.ring_points)
    c = rng.normal(size=3)
    lam = GaugeFunction.on_ring(grid, lambda t: c[0] * np.sin(t) + c[1] * np.cos(2 * t + c[2]))
    ring = winding_number(connection_from_lambda(lam, consts), consts)
    return {
        "flat": bool(flat.flat),
        "max_plaquette": flat.max_plaquette,
        "max_loop": flat.max_loop,
        "independent_loops": flat.n_independent_loops,
        "winding": int(round(holonomy / (2 * np.pi))),
        "boundary_holonomy": holonomy,
        "ring_winding": ring.winding,
        "max_commutator": comm.max_commutator,
        "mean_field": comm.mean_field,
        "hamiltonian_covariance_error": covariance,
        "checks": {
            "commutator_matches_curvature": bool(comm.max_phase_deviation < 1e-10),
            "hamiltonian_covariant": bool(covariance < 1e-10 * max(1.0, H.hopping)),
            "ring_winding_zero": ring.winding == 0,
        },
    }


def cmd_holonomy(cfg: RunConfig, out: _Outputs, rng) -> dict:
    from .experiments import predict_fringe_shift_holonomy

    rows = []
    for alpha in cfg.parameters.alphas:
        pred = predict_fringe_shift_holonomy(experiment_config(cfg, alpha))
        rows.append((alpha, pred, float(wrap_phase(2 * np.pi * alpha))))
    io.write_csv(out.path("holonomy.csv"), ["alpha", "predicted_rad", "two_pi_alpha_wrapped"], rows)
    dev = max(abs(float(wrap_phase(r[1] - r[2]))) for r in rows)
    return {"max_deviation": dev, "checks": {"holonomy_is_two_pi_alpha": bool(dev < 1e-10)}}


def cmd_evolve(cfg: RunConfig, out: _Outputs, rng) -> dict:
    p = cfg.parameters
    consts = p.constants.build()
    lattice = Lattice2D(p.lattice.nx, p.lattice.ny, p.lattice.spacing)
    pot = _potential(p.potential, lattice, rng)
    H = build_hamiltonian(pot, consts)
    psi0 = gaussian_packet(pot.lattice, p.packet.center, p.packet.sigma, p.packet.k)
    rec = evolve(psi0, H, p.run.build(), consts)
    rows = []
    for step, t, s in rec.snapshots:
        if p.write_snapshots:
            rel = f"snapshots/snap_{step:06}.csv"
            io.write_snapshot((out.root / rel).parent, step, s)
            out.files.append(rel)
        rho = s.density * s.measure
        X, Y = s.grid.meshgrid()
        mx, my = np.sum(rho * X), np.sum(rho * Y)
        pi = expectation_kinetic_momentum(s, H.links, consts)
        rows.append((step, t, float(np.sum(rho)), H.expectation(s), mx, my,
                     float(np.sqrt(np.sum(rho * (X - mx) ** 2))), pi[0], pi[1]))
    io.write_csv(out.path("observables.csv"),
                 ["step", "time", "norm", "energy", "x_mean", "y_mean", "width_x", "pi_x", "pi_y"], rows)
    return {
        "norm_drift": rec.norm_drift,
        "energy_drift": rec.energy_drift,
        "solver_iterations": rec.solver_iterations,
        "checks": {"unitary": bool(rec.norm_drift < 1e-7)},
    }


def _fringe_summary(res) -> dict:
    return {
        "alpha": res.alpha,
        "shift_rad": res.fringe_shift_vs_reference,
        "predicted_rad": res.predicted_shift,
        "deviation_rad": res.deviation_from_prediction,
        "visibility": res.visibility,
        "k_star": res.k_star,
        "transmitted_fraction": res.transmitted_fraction,
        "central_extremum": res.central_extremum,
        "norm_drift": res.norm_drift,
    }


def cmd_interfere(cfg: RunConfig, out: _Outputs, rng) -> dict:
    from .experiments import run_ab_interference

    alpha = cfg.parameters.alpha
    ref = run_ab_interference(experiment_config(cfg, 0.0))
    res = ref if alpha == 0.0 else run_ab_interference(experiment_config(cfg, alpha), ref)
    io.write_profile(out.path("profile_reference.csv"), ref.y, ref.screen_profile)
    io.write_profile(out.path("profile.csv"), res.y, res.screen_profile)
    summary = _fringe_summary(res)
    summary["checks"] = {"shift_matches_holonomy": bool(res.deviation_from_prediction < 0.15)}
    return summary


def cmd_sweep(cfg: RunConfig, out: _Outputs, rng) -> dict:
    from .experiments import fringe_shift_sweep

    rows, results = fringe_shift_sweep(experiment_config(cfg, 0.0), cfg.parameters.alphas)
    io.write_csv(out.path("sweep.csv"), ["alpha", "shift_rad", "predicted_rad", "visibility"], rows)
    for idx, res in enumerate(results):
        io.write_profile(out.path(f"profiles/profile_{idx:03}.csv"), res.y, res.screen_profile)
    dev = max(r.deviation_from_prediction for r in results)
    return {
        "runs": [_fringe_summary(r) for r in results],
        "max_deviation_rad": dev,
        "checks": {"shifts_match_holonomy": bool(dev < 0.15)},
    }


COMMAND_TABLE = {
    "ring-spectrum": cmd_ring_spectrum,
    "gauge-check": cmd_gauge_check,
    "holonomy": cmd_holonomy,
    "evolve": cmd_evolve,
    "interfere": cmd_interfere,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig, out_dir: Optional[Path] = None) -> int:
    """Execute ``cfg``, writing all outputs; returns the exit code."""
    root = Path(out_dir if out_dir is not None else cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    out = _Outputs(root)
    _write_json(out.path("resolved_config.json"), cfg.resolved())
    rng = np.random.default_rng(cfg.seed)
    summary = {"command": cfg.command, "seed": cfg.seed}
    try:
        summary["results"] = COMMAND_TABLE[cfg.command](cfg, out, rng)
        summary["status"] = "ok"
        code = 0
    except ABQSimError as exc:
        summary.update(status="error", category=exc.category, message=str(exc))
        code = exc.exit_code
    out.files.append("summary.json")
    summary["files"] = list(out.files)
    _write_json(root / "summary.json", summary)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abqsim", description="Aharonov-Bohm simulations.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="TOML run configuration")
    parser.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized checks (overrides seed)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
    except OSError as exc:
        print(json.dumps({"status": "error", "category": "config_parse", "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES["config_parse"]
    except ABQSimError as exc:
        print(json.dumps({"status": "error", "category": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    code = run(cfg, args.out)
    if code:
        summary = json.loads(((args.out or Path(cfg.output_dir)) / "summary.json").read_text())
        print(json.dumps({k: summary[k] for k in ("status", "category", "message")}), file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
