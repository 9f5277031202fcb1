"""Coupling sweeps: fidelity curves along a J grid and the transition locator.

A sweep walks the exchange coupling J over a regular grid, converging the
gap field at J and J + delta_j, building the requested reduced density
matrices from the two solutions, and emitting one record per compared
pair.  Warm starts reuse the previous grid point's converged field, which
matters near the first-order transition; ascending and descending passes
may then settle on different branches, so both are worth recording.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bdg import BdgSolution, SolverOptions, solve_self_consistent
from .errors import ConvergenceError, TransitionNotFoundError
from .lattice import LatticeConfig
from .metrics import FidelityRecord, c2_quotient, charge_spin_split, fidelity, h_overlap
from .model import ModelParams, electronic_magnetization
from .rdm import one_site_rdm, two_site_rdm
from .wick import build_correlators, orbitals_for_sites

log = logging.getLogger(__name__)

MODES = ("one_site_same_site", "one_site_spatial", "two_site", "c2")
NO_TRANSITION_FLOOR = 0.999


@dataclass(frozen=True)
class SweepPlan:
    """Grid and mode of one sweep.

    ``sites`` selects targets per mode: site ids for the one-site modes
    (reference sites for the spatial mode), axis offsets delta_l from the
    impurity for the two-site modes.  Empty means mode defaults: impurity,
    first neighbour and a deep bulk site for one-site; delta_l = 1..6
    (clipped to the lattice edge) for two-site.
    """

    j_min: float = 0.5
    j_max: float = 3.5
    j_step: float = 0.05
    delta_j: float = 0.05
    mode: str = "one_site_same_site"
    sites: tuple[int, ...] = ()
    warm_start: bool = True

    def __post_init__(self):
        if self.j_step <= 0 or self.delta_j <= 0:
            raise ValueError("j_step and delta_j must be positive")
        if self.mode not in MODES:
            raise ValueError(f"unknown sweep mode {self.mode!r}; expected one of {MODES}")

    def grid(self) -> np.ndarray:
        if self.j_max < self.j_min:
            return np.array([])
        count = int(np.floor((self.j_max - self.j_min) / self.j_step + 1e-9)) + 1
        return self.j_min + self.j_step * np.arange(count)


@dataclass
class SweepResult:
    records: list[FidelityRecord] = field(default_factory=list)
    failures: list[tuple[float, str]] = field(default_factory=list)


def default_one_site_targets(params: ModelParams, lattice: LatticeConfig) -> tuple[int, ...]:
    """Impurity, its +x neighbour, and a deep bulk site."""
    lc = params.resolve_impurity(lattice)
    x, y = lattice.site_coords(lc)
    neighbor = lattice.site_index(min(x + 1, lattice.width - 1), y)
    bulk = lattice.site_index(min(1, lattice.width - 1), min(1, lattice.height - 1))
    targets = [lc, neighbor, bulk]
    return tuple(dict.fromkeys(targets))  # dedupe, keep order


def default_two_site_offsets(params: ModelParams, lattice: LatticeConfig) -> tuple[int, ...]:
    lc = params.resolve_impurity(lattice)
    x, _ = lattice.site_coords(lc)
    max_dl = lattice.width - 1 - x
    return tuple(range(1, min(6, max_dl) + 1))


def partner_site(params: ModelParams, lattice: LatticeConfig, delta_l: int) -> int:
    """Site delta_l steps along +x from the impurity."""
    lc = params.resolve_impurity(lattice)
    x, y = lattice.site_coords(lc)
    return lattice.site_index(x + delta_l, y)


def _solve(params, lattice, init, solver: SolverOptions) -> BdgSolution:
    return solve_self_consistent(
        params, lattice, init=init, mixing=solver.mixing, tol=solver.tol, max_iter=solver.max_iter
    )


def _point_records(plan, params, lattice, j, sol_a, sol_b) -> list[FidelityRecord]:
    """Records comparing the states at J (sol_a) and J + delta_j (sol_b)."""
    lc = params.resolve_impurity(lattice)
    _, total_m = electronic_magnetization(sol_a, params.phi)
    diag = dict(
        total_magnetization=total_m,
        min_positive_level=float(sol_a.pos_energies[0]),
        iterations=sol_a.iterations,
        residual=sol_a.residual,
    )
    records = []
    if plan.mode == "one_site_same_site":
        sites = plan.sites or default_one_site_targets(params, lattice)
        orbitals = orbitals_for_sites(sites)
        table_a = build_correlators(sol_a, orbitals)
        table_b = build_correlators(sol_b, orbitals)
        for s in sites:
            rho_a = one_site_rdm(table_a, s)
            rho_b = one_site_rdm(table_b, s)
            f = fidelity(rho_a, rho_b)
            h = h_overlap(rho_a, rho_b)
            f_charge, f_spin = charge_spin_split(rho_a, rho_b)
            records.append(
                FidelityRecord(
                    j_value=j, delta_j=plan.delta_j, mode=plan.mode,
                    site_a=(s,), site_b=(s,), fidelity=f, h_value=h,
                    f_charge=f_charge, f_spin=f_spin, **diag,
                ).check_invariants()
            )
    else:  # two_site / c2
        offsets = plan.sites or default_two_site_offsets(params, lattice)
        partners = [partner_site(params, lattice, dl) for dl in offsets]
        orbitals = orbitals_for_sites([lc] + partners)
        table_a = build_correlators(sol_a, orbitals)
        table_b = build_correlators(sol_b, orbitals)
        f1_lc = fidelity(one_site_rdm(table_a, lc), one_site_rdm(table_b, lc))
        for partner in partners:
            rho_a = two_site_rdm(table_a, lc, partner)
            rho_b = two_site_rdm(table_b, lc, partner)
            f2 = fidelity(rho_a, rho_b)
            h2 = h_overlap(rho_a, rho_b)
            f1_p = fidelity(one_site_rdm(table_a, partner), one_site_rdm(table_b, partner))
            records.append(
                FidelityRecord(
                    j_value=j, delta_j=plan.delta_j, mode=plan.mode,
                    site_a=(lc, partner), site_b=(lc, partner), fidelity=f2, h_value=h2,
                    c2=c2_quotient(f2, f1_lc, f1_p), **diag,
                ).check_invariants()
            )
    return records


def _spatial_records(plan, params, lattice, j, sol) -> list[FidelityRecord]:
    """Same-J fidelity between each reference site's state and every site's state."""
    references = plan.sites or (params.resolve_impurity(lattice),)
    table = build_correlators(sol, orbitals_for_sites(range(lattice.n_sites)))
    _, total_m = electronic_magnetization(sol, params.phi)
    states = [one_site_rdm(table, s) for s in range(lattice.n_sites)]
    records = []
    for ref in references:
        for s in range(lattice.n_sites):
            records.append(
                FidelityRecord(
                    j_value=j, delta_j=0.0, mode=plan.mode,
                    site_a=(ref,), site_b=(s,),
                    fidelity=fidelity(states[ref], states[s]),
                    h_value=h_overlap(states[ref], states[s]),
                    total_magnetization=total_m,
                    min_positive_level=float(sol.pos_energies[0]),
                    iterations=sol.iterations, residual=sol.residual,
                ).check_invariants()
            )
    return records


def run_sweep(
    plan: SweepPlan,
    params: ModelParams,
    lattice: LatticeConfig,
    solver: SolverOptions = SolverOptions(),
    descending: bool = False,
    workers: int | None = None,
) -> SweepResult:
    """Execute one sweep pass; a convergence failure skips that grid point only.

    With ``plan.warm_start`` the grid is traversed in order (reversed when
    ``descending``) and each point starts from the previous converged
    field; without it every point starts cold and points may run in a
    thread pool of ``workers``.
    """
    grid = plan.grid()
    if descending:
        grid = grid[::-1]
    result = SweepResult()
    if grid.size == 0:
        return result

    spatial = plan.mode == "one_site_spatial"
    chained = (
        plan.warm_start
        and not spatial
        and abs(plan.j_step - plan.delta_j) < 1e-12
    )

    if plan.warm_start or workers in (None, 0, 1):
        gap = None
        solutions: dict[float, BdgSolution] = {}

        def solve_at(j_val):
            nonlocal gap
            sol = _solve(params.with_j(j_val), lattice, gap if plan.warm_start else None, solver)
            if plan.warm_start:
                gap = sol.gap
            return sol

        if chained:
            # delta_j equals the grid step: consecutive solves pair up, and the
            # extended list is already in warm-start traversal order
            if descending:
                extended = np.append(grid[0] + plan.delta_j, grid)
            else:
                extended = np.append(grid, grid[-1] + plan.delta_j)
            for j_val in extended:
                try:
                    solutions[round(float(j_val), 12)] = solve_at(float(j_val))
                except ConvergenceError as err:
                    result.failures.append((float(j_val), str(err)))
                    log.warning("J=%.4f failed to converge: %s", j_val, err)
            for j_val in grid:
                a = solutions.get(round(float(j_val), 12))
                b = solutions.get(round(float(j_val + plan.delta_j), 12))
                if a is None or b is None:
                    continue
                result.records.extend(_point_records(plan, params, lattice, float(j_val), a, b))
                log.info("J=%.4f done (%d iterations)", j_val, a.iterations)
        else:
            for j_val in grid:
                try:
                    sol_a = solve_at(float(j_val))
                    if spatial:
                        result.records.extend(
                            _spatial_records(plan, params, lattice, float(j_val), sol_a)
                        )
                    else:
                        sol_b = _solve(
                            params.with_j(float(j_val) + plan.delta_j), lattice,
                            sol_a.gap if plan.warm_start else None, solver,
                        )
                        result.records.extend(
                            _point_records(plan, params, lattice, float(j_val), sol_a, sol_b)
                        )
                    log.info("J=%.4f done (%d iterations)", j_val, sol_a.iterations)
                except ConvergenceError as err:
                    result.failures.append((float(j_val), str(err)))
                    log.warning("J=%.4f failed to converge: %s", j_val, err)
    else:
        def one_point(j_val: float):
            sol_a = _solve(params.with_j(j_val), lattice, None, solver)
            if spatial:
                return _spatial_records(plan, params, lattice, j_val, sol_a)
            sol_b = _solve(params.with_j(j_val + plan.delta_j), lattice, None, solver)
            return _point_records(plan, params, lattice, j_val, sol_a, sol_b)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [(pool.submit(one_point, float(j)), float(j)) for j in grid]
            # gather in grid order so the output is independent of scheduling
            for fut, j_val in futures:
                try:
                    result.records.extend(fut.result())
                except ConvergenceError as err:
                    result.failures.append((j_val, str(err)))
                    log.warning("J=%.4f failed to converge: %s", j_val, err)

    return result


def spatial_map(
    params: ModelParams,
    lattice: LatticeConfig,
    j: float,
    reference: int | None = None,
    solver: SolverOptions = SolverOptions(),
    init=None,
) -> np.ndarray:
    """Per-site fidelity field against a reference site at fixed J."""
    if reference is None:
        reference = params.resolve_impurity(lattice)
    sol = _solve(params.with_j(j), lattice, init, solver)
    table = build_correlators(sol, orbitals_for_sites(range(lattice.n_sites)))
    ref_state = one_site_rdm(table, reference)
    return np.array(
        [fidelity(ref_state, one_site_rdm(table, s)) for s in range(lattice.n_sites)]
    )


@dataclass(frozen=True)
class TransitionEstimate:
    """Grid location of the transition and its cross-check signatures."""

    j0: float
    uncertainty: float
    f_min: float
    j_fidelity: float
    j_magnetization: float | None
    j_level_min: float | None
    consistent: bool


def locate_transition(records, impurity_site: int, grid_step: float | None = None) -> TransitionEstimate:
    """Estimate the critical coupling from impurity-site one-site records.

    The primary estimate is the grid J minimizing the fidelity; the
    magnetization-jump location and the in-gap level minimum serve as
    cross-checks, flagged inconsistent when they stray by more than one
    grid step.  Raises :class:`TransitionNotFoundError` when no fidelity
    dips below the detection floor.
    """
    rows = sorted(
        (r for r in records if r.site_a == (impurity_site,) and r.site_b == (impurity_site,)),
        key=lambda r: r.j_value,
    )
    if not rows:
        raise ValueError("no impurity-site records in input")
    j_vals = np.array([r.j_value for r in rows])
    f_vals = np.array([r.fidelity for r in rows])
    if grid_step is None:
        grid_step = float(np.min(np.diff(j_vals))) if len(j_vals) > 1 else 0.0

    k = int(np.argmin(f_vals))
    if f_vals[k] > NO_TRANSITION_FLOOR:
        raise TransitionNotFoundError(
            f"fidelity never drops below {NO_TRANSITION_FLOOR} (min {f_vals[k]:.6f})"
        )
    j_f = float(j_vals[k])

    j_m = None
    mags = np.array([np.nan if r.total_magnetization is None else r.total_magnetization for r in rows])
    if np.all(np.isfinite(mags)) and len(mags) > 1:
        j_m = float(j_vals[int(np.argmax(np.abs(np.diff(mags)))) + 1])

    j_l = None
    levels = np.array([np.nan if r.min_positive_level is None else r.min_positive_level for r in rows])
    if np.all(np.isfinite(levels)):
        j_l = float(j_vals[int(np.argmin(levels))])

    others = [j for j in (j_m, j_l) if j is not None]
    tol = grid_step + 1e-9
    consistent = all(abs(j - j_f) <= tol for j in others)
    return TransitionEstimate(
        j0=j_f,
        uncertainty=grid_step,
        f_min=float(f_vals[k]),
        j_fidelity=j_f,
        j_magnetization=j_m,
        j_level_min=j_l,
        consistent=consistent,
    )
