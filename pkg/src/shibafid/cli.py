"""Command-line entry point.

Subcommands::

    calibrate   J=0 gap, coherence-length estimate, coarse transition bracket
    solve       one self-consistent solution: spectrum, gap field,
                magnetization, impurity density matrix
    sweep       fidelity sweep over the J grid (ascending and descending),
                CSV + JSON summary
    spatial     per-site fidelity map against a reference site at fixed J
    verify      exact-diagonalization and invariant suites

Exit codes: 0 success, 2 configuration error, 3 convergence failure,
4 verification failure.  The ``SHIBAFID_OUTPUT_DIR`` environment variable
overrides the configured output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bdg import solve_self_consistent
from .config import (
    RunConfig,
    apply_overrides,
    config_to_dict,
    default_config,
    load_config,
    save_config,
)
from .errors import ConfigError, ConvergenceError, ShibaFidError, TransitionNotFoundError
from .lattice import LatticeConfig
from .metrics import FidelityRecord
from .model import ModelParams, electronic_magnetization
from .rdm import one_site_rdm
from .sweep import SweepPlan, locate_transition, run_sweep, spatial_map
from .verify import MUTATIONS, run_verification
from .wick import build_correlators, orbitals_for_sites

log = logging.getLogger("shibafid")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_VERIFY = 4

CSV_COLUMNS = [
    "J", "delta_J", "mode",
    "site_a_x", "site_a_y", "site_b_x", "site_b_y",
    "F", "H", "F_minus_H", "F_charge", "F_spin", "C2",
    "total_magnetization", "min_positive_level", "iterations", "residual",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_records_csv(path: Path, records, lattice: LatticeConfig) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            ax, ay = lattice.site_coords(r.site_a[0])
            # one-site rows compare two single sites; two-site rows carry the pair
            second = r.site_b[0] if len(r.site_a) == 1 else r.site_a[1]
            bx, by = lattice.site_coords(second)
            writer.writerow(
                [
                    _fmt(r.j_value), _fmt(r.delta_j), r.mode,
                    ax, ay, bx, by,
                    _fmt(r.fidelity), _fmt(r.h_value), _fmt(r.fidelity - r.h_value),
                    _fmt(r.f_charge), _fmt(r.f_spin), _fmt(r.c2),
                    _fmt(r.total_magnetization), _fmt(r.min_positive_level),
                    _fmt(r.iterations), _fmt(r.residual),
                ]
            )


def _outdir(config: RunConfig) -> Path:
    out = config.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(config: RunConfig, j: float) -> int:
    lattice, params = config.lattice, config.model.with_j(j)
    solver = config.solver
    solution = solve_self_consistent(
        params, lattice, mixing=solver.mixing, tol=solver.tol, max_iter=solver.max_iter
    )
    out = _outdir(config)

    with open(out / "spectrum.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "energy"])
        for n, e in enumerate(solution.energies):
            writer.writerow([n, _fmt(float(e))])

    per_site_m, total_m = electronic_magnetization(solution, params.phi)
    with open(out / "gap_field.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site", "x", "y", "re_delta", "im_delta"])
        for s in range(lattice.n_sites):
            x, y = lattice.site_coords(s)
            d = complex(solution.gap[s])
            writer.writerow([s, x, y, _fmt(d.real), _fmt(d.imag)])
    with open(out / "magnetization.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site", "x", "y", "m_axis"])
        for s in range(lattice.n_sites):
            x, y = lattice.site_coords(s)
            writer.writerow([s, x, y, _fmt(float(per_site_m[s]))])

    lc = params.resolve_impurity(lattice)
    table = build_correlators(solution, orbitals_for_sites([lc]))
    rho = one_site_rdm(table, lc)
    (out / "impurity_rdm.json").write_text(json.dumps(rho.to_json_dict(), indent=2) + "\n")

    summary = {
        "j": j,
        "iterations": solution.iterations,
        "residual": solution.residual,
        "total_magnetization": total_m,
        "min_positive_level": float(solution.pos_energies[0]),
        "impurity_gap": [float(np.real(solution.gap[lc])), float(np.imag(solution.gap[lc]))],
        "mean_abs_gap": float(np.mean(np.abs(solution.gap))),
    }
    (out / "solve_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    log.info("solved J=%g in %d iterations; outputs in %s", j, solution.iterations, out)
    return EXIT_OK


def _fermi_velocity(params: ModelParams) -> float:
    """Mean |grad_k eps| over the infinite-lattice Fermi surface (fine k grid)."""
    ks = np.linspace(-np.pi, np.pi, 401)
    kx, ky = np.meshgrid(ks, ks)
    eps = -2.0 * params.t * (np.cos(kx) + np.cos(ky)) - params.eps_f
    speed = 2.0 * params.t * np.hypot(np.sin(kx), np.sin(ky))
    shell = np.abs(eps) < 0.05 * params.t
    return float(speed[shell].mean()) if shell.any() else 2.0 * params.t


def cmd_calibrate(config: RunConfig, coarse_step: float = 0.1) -> int:
    lattice, params, solver = config.lattice, config.model, config.solver
    out = _outdir(config)
    solution = solve_self_consistent(
        params.with_j(0.0), lattice,
        mixing=solver.mixing, tol=solver.tol, max_iter=solver.max_iter,
    )
    bulk_gap = float(np.abs(solution.gap[params.resolve_impurity(lattice)]))
    if bulk_gap < 1e-6:
        report = {
            "status": "failure",
            "bulk_gap": bulk_gap,
            "hint": "no gapped solution at J=0; increase g or omega_d",
        }
        (out / "calibration.json").write_text(json.dumps(report, indent=2) + "\n")
        print("calibration failure: J=0 gap collapsed (Delta_0 = %.3g)" % bulk_gap)
        return EXIT_CONVERGENCE

    coherence = _fermi_velocity(params) / (np.pi * bulk_gap)

    plan = SweepPlan(
        j_min=config.sweep.j_min, j_max=config.sweep.j_max, j_step=coarse_step,
        delta_j=coarse_step, mode="one_site_same_site", warm_start=True,
    )
    result = run_sweep(plan, params, lattice, solver)
    lc = params.resolve_impurity(lattice)
    bracket = None
    j0 = None
    try:
        estimate = locate_transition(result.records, lc)
        j0 = estimate.j0
        bracket = [estimate.j0 - coarse_step, estimate.j0 + coarse_step]
    except TransitionNotFoundError:
        pass

    report = {
        "status": "ok" if bracket else "no-transition-in-range",
        "g": params.g,
        "omega_d": params.omega_d,
        "bulk_gap": bulk_gap,
        "coherence_length_estimate": coherence,
        "lattice": [lattice.width, lattice.height],
        "coarse_step": coarse_step,
        "transition_bracket": bracket,
        "j0_coarse": j0,
        "sweep_failures": result.failures,
    }
    (out / "calibration.json").write_text(json.dumps(report, indent=2) + "\n")
    save_config(config, out / "calibrated_config.json")
    print(
        f"Delta_0 = {bulk_gap:.6f}, coherence length ~ {coherence:.2f} sites, "
        + (f"J0 bracket {bracket}" if bracket else "no transition in range")
    )
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    lattice, params, solver = config.lattice, config.model, config.solver
    out = _outdir(config)
    plan = config.sweep
    lc = params.resolve_impurity(lattice)

    summary = {"mode": plan.mode, "g": params.g, "omega_d": params.omega_d, "branches": {}}
    for descending, label in ((False, "up"), (True, "down")):
        result = run_sweep(plan, params, lattice, solver, descending=descending,
                           workers=config.workers)
        path = out / f"sweep_{plan.mode}_{label}.csv"
        write_records_csv(path, result.records, lattice)
        branch = {"csv": str(path), "failures": result.failures}
        if plan.mode == "one_site_same_site" and result.records:
            try:
                est = locate_transition(result.records, lc)
                branch["transition"] = {
                    "j0": est.j0, "uncertainty": est.uncertainty, "f_min": est.f_min,
                    "j_magnetization": est.j_magnetization, "j_level_min": est.j_level_min,
                    "signatures_consistent": est.consistent,
                }
            except TransitionNotFoundError as err:
                branch["transition"] = {"error": str(err)}
        summary["branches"][label] = branch
        log.info("%s branch: %d records", label, len(result.records))

    up = summary["branches"]["up"].get("transition", {})
    down = summary["branches"]["down"].get("transition", {})
    if "j0" in up and "j0" in down:
        summary["hysteresis"] = abs(up["j0"] - down["j0"])
    (out / "sweep_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_spatial(config: RunConfig, j_values, reference: int | None) -> int:
    lattice, params, solver = config.lattice, config.model, config.solver
    out = _outdir(config)
    ref = params.resolve_impurity(lattice) if reference is None else reference
    for j in j_values:
        field = spatial_map(params, lattice, j, reference=ref, solver=solver)
        path = out / f"spatial_J{j:g}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["site", "x", "y", "F"])
            for s in range(lattice.n_sites):
                x, y = lattice.site_coords(s)
                writer.writerow([s, x, y, _fmt(float(field[s]))])
        log.info("spatial map at J=%g written to %s", j, path)
    return EXIT_OK


def cmd_verify(config: RunConfig, mutate: str | None) -> int:
    report = run_verification(seed=config.seed, mutate=mutate)
    for line in report.lines():
        print(line)
    if not report.passed:
        print("verification FAILED")
        return EXIT_VERIFY
    print("verification passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shibafid",
        description="Superconductor-with-impurity simulator and partial-state fidelity analysis",
    )
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )
    parser.add_argument("--output-dir", help="override the output directory")
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("calibrate", help="J=0 gap, coherence length, coarse J0 bracket")
    p_solve = sub.add_parser("solve", help="one self-consistent solution")
    p_solve.add_argument("--j", type=float, required=True, help="exchange coupling J")
    sub.add_parser("sweep", help="fidelity sweep over the configured J grid")
    p_spatial = sub.add_parser("spatial", help="per-site fidelity map at fixed J")
    p_spatial.add_argument("--j", type=float, action="append", required=True,
                           help="coupling value (repeatable)")
    p_spatial.add_argument("--reference", type=int, default=None,
                           help="reference site id (default: impurity)")
    p_verify = sub.add_parser("verify", help="oracle and invariant suites")
    p_verify.add_argument("--mutate", choices=MUTATIONS, default=None,
                          help="inject a known defect; the suite must then fail")
    return parser


def _load(args) -> RunConfig:
    config = load_config(args.config) if args.config else default_config()
    config = apply_overrides(config, args.overrides)
    if args.output_dir:
        config = apply_overrides(config, [f"output_dir={args.output_dir}"])
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        config = _load(args)
        if args.command == "calibrate":
            return cmd_calibrate(config)
        if args.command == "solve":
            return cmd_solve(config, args.j)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "spatial":
            return cmd_spatial(config, args.j, args.reference)
        if args.command == "verify":
            return cmd_verify(config, args.mutate)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ShibaFidError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
