"""Self-contained verification suite behind the `verify` CLI subcommand.

Runs the exact-diagonalization equivalence checks and the randomized
invariant suites on small inputs.  A mutation mode deliberately corrupts
the pairing-sum signs to demonstrate that the suite actually detects such
errors.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import wick
from .bdg import BdgSolution, eigensolve, solve_self_consistent
from .errors import DegenerateSpectrumError
from .lattice import LatticeConfig
from .metrics import classical_fidelity, fidelity, h_overlap
from .model import ModelParams, assemble_bdg_matrix
from .oracle import fock_expectation, fock_ground_state, fock_oracle_rdm
from .rdm import one_site_rdm, partial_trace, two_site_rdm
from .wick import build_correlators, orbitals_for_sites, wick_expectation

ORACLE_TOL = 1e-10

MUTATIONS = ("wick-sign",)


@dataclass
class VerificationReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self):
        for name, ok, detail in self.checks:
            status = "PASS" if ok else "FAIL"
            yield f"[{status}] {name}" + (f"  ({detail})" if detail else "")


@contextmanager
def mutated_wick_sign():
    """Flip the sign of one pairing in every multi-pair sum (test of the tests)."""
    original = wick._pairing_data

    def broken(n_pairs: int):
        pairs, signs = original(n_pairs)
        if n_pairs >= 2:
            signs = signs.copy()
            signs[1] = -signs[1]
        return pairs, signs

    wick._pairing_data = broken
    try:
        yield
    finally:
        wick._pairing_data = original


def _random_case(rng, n_sites_target: int):
    shapes = {2: (1, 2), 3: (1, 3), 4: (2, 2), 5: (1, 5), 6: (2, 3)}
    lat = LatticeConfig(*shapes[n_sites_target])
    n = lat.n_sites
    gap = rng.normal(0.3, 0.25, n) + 1j * rng.normal(0.0, 0.2, n)
    params = ModelParams(
        t=1.0,
        eps_f=rng.normal(-0.6, 0.5),
        g=1.0,
        omega_d=9.0,
        j_coupling=float(abs(rng.normal(0.7, 0.5))),
        phi=float(rng.uniform(0.0, np.pi)),
        impurity_site=int(rng.integers(n)),
    )
    return lat, params, gap


def fixed_gap_solution(params: ModelParams, lat: LatticeConfig, gap) -> BdgSolution:
    """Quasiparticle solution at a frozen gap field (no self-consistency)."""
    from .bdg import _split_positive

    energies, vectors = eigensolve(assemble_bdg_matrix(params, lat, gap))
    pos_e, u, v = _split_positive(energies, vectors)
    return BdgSolution(
        energies=energies, pos_energies=pos_e, u=u, v=v,
        gap=np.asarray(gap), temperature=params.temperature, iterations=1, residual=0.0,
    )


def _random_string(rng, orbitals, length):
    return [
        (orbitals[int(rng.integers(len(orbitals)))], bool(rng.integers(2))) for _ in range(length)
    ]


def _check_oracle_equivalence(rng):
    worst = 0.0
    tested = 0
    for size in (2, 3, 4, 5, 6):
        for _ in range(2):
            lat, params, gap = _random_case(rng, size)
            try:
                sol = fixed_gap_solution(params, lat, gap)
                table = build_correlators(sol, orbitals_for_sites(range(lat.n_sites)))
                sites = [int(s) for s in rng.choice(lat.n_sites, size=2, replace=False)]
                err = np.max(
                    np.abs(
                        one_site_rdm(table, sites[0]).matrix
                        - fock_oracle_rdm(params, lat, gap, [sites[0]]).matrix
                    )
                )
                err = max(
                    err,
                    np.max(
                        np.abs(
                            two_site_rdm(table, sites[0], sites[1]).matrix
                            - fock_oracle_rdm(params, lat, gap, sites).matrix
                        )
                    ),
                )
            except DegenerateSpectrumError:
                continue  # crossing point drawn by chance; not a testable input
            worst = max(worst, float(err))
            tested += 1
    return worst <= ORACLE_TOL and tested >= 8, f"{tested} cases, worst entry error {worst:.2e}"


def _check_strings_vs_fock(rng):
    lat, params, gap = _random_case(rng, 3)
    sol = fixed_gap_solution(params, lat, gap)
    table = build_correlators(sol, orbitals_for_sites(range(lat.n_sites)))
    _, psi = fock_ground_state(params, lat, gap)
    orbitals = orbitals_for_sites(range(lat.n_sites))
    worst = 0.0
    for length in (2, 4, 6, 8):
        for _ in range(6):
            string = _random_string(rng, orbitals, length)
            a = wick_expectation(string, table)
            b = fock_expectation(string, psi, lat.n_sites)
            worst = max(worst, abs(a - b))
    return worst <= ORACLE_TOL, f"worst error {worst:.2e}"


def _check_conjugate_reversal(rng):
    lat, params, gap = _random_case(rng, 4)
    sol = fixed_gap_solution(params, lat, gap)
    orbitals = orbitals_for_sites(range(lat.n_sites))
    table = build_correlators(sol, orbitals)
    worst = 0.0
    for _ in range(20):
        string = _random_string(rng, orbitals, int(rng.choice([2, 4, 6])))
        forward = wick_expectation(string, table)
        reversed_conj = wick_expectation([(orb, not dag) for orb, dag in reversed(string)], table)
        worst = max(worst, abs(forward - np.conj(reversed_conj)))
    return worst <= 1e-10, f"worst error {worst:.2e}"


def _check_anticommutator(rng):
    lat, params, gap = _random_case(rng, 4)
    sol = fixed_gap_solution(params, lat, gap)
    orbitals = orbitals_for_sites(range(lat.n_sites))
    table = build_correlators(sol, orbitals)
    worst = 0.0
    for _ in range(20):
        prefix = _random_string(rng, orbitals, 2)
        suffix = _random_string(rng, orbitals, 2)
        a = orbitals[int(rng.integers(len(orbitals)))]
        b = orbitals[int(rng.integers(len(orbitals)))]
        plus = wick_expectation(prefix + [(a, False), (b, True)] + suffix, table)
        swapped = wick_expectation(prefix + [(b, True), (a, False)] + suffix, table)
        remainder = wick_expectation(prefix + suffix, table) if a == b else 0.0
        worst = max(worst, abs(plus + swapped - remainder))
    return worst <= 1e-10, f"worst error {worst:.2e}"


def _check_rdm_consistency(rng):
    lat = LatticeConfig(5, 5)
    params = ModelParams(g=2.0, omega_d=6.0, j_coupling=1.2)
    sol = solve_self_consistent(params, lat, tol=1e-9)
    lc = params.resolve_impurity(lat)
    table = build_correlators(sol, orbitals_for_sites([lc, lc + 1]))
    rho2 = two_site_rdm(table, lc, lc + 1)
    rho1 = one_site_rdm(table, lc)
    ptrace_err = float(np.max(np.abs(partial_trace(rho2, 0).matrix - rho1.matrix)))

    parity = (0, 0, 1, 1)
    cross = 0.0
    for r in range(16):
        for c in range(16):
            if (parity[r // 4] + parity[r % 4]) % 2 != (parity[c // 4] + parity[c % 4]) % 2:
                cross = max(cross, abs(rho2.matrix[r, c]))
    ok = ptrace_err <= 1e-10 and cross == 0.0
    return ok, f"partial-trace error {ptrace_err:.2e}, cross-parity max {cross:.2e}"


def _check_spectrum_symmetry(rng):
    lat = LatticeConfig(5, 5)
    worst = 0.0
    for _ in range(3):
        p = ModelParams(
            g=float(rng.uniform(1.0, 3.0)), omega_d=6.0,
            j_coupling=float(rng.uniform(0.0, 3.0)), phi=float(rng.uniform(0, np.pi)),
        )
        gap_draw = rng.normal(0.4, 0.2, lat.n_sites)
        w, _ = eigensolve(assemble_bdg_matrix(p, lat, gap_draw))
        worst = max(worst, float(np.max(np.abs(np.sort(w) + np.sort(-w)[::-1]))))
    return worst <= 1e-8, f"worst mismatch {worst:.2e}"


def _random_state(rng, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _check_fidelity_axioms(rng):
    worst = 0.0
    for _ in range(200):
        dim = int(rng.choice([4, 16]))
        rho_a = _random_state(rng, dim)
        rho_b = _random_state(rng, dim)
        f = fidelity(rho_a, rho_b)
        h = h_overlap(rho_a, rho_b)
        worst = max(worst, abs(f - fidelity(rho_b, rho_a)))
        worst = max(worst, abs(fidelity(rho_a, rho_a) - 1.0))
        worst = max(worst, h - f, f - 1.0, -h)
        obs = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        obs = obs + obs.conj().T
        worst = max(worst, f - classical_fidelity(rho_a, rho_b, obs))
    return worst <= 1e-9, f"worst violation {worst:.2e}"


_CHECKS = [
    ("oracle equivalence (1- and 2-site states vs exact diagonalization)", _check_oracle_equivalence),
    ("pairing sum vs exact expectation on random operator strings", _check_strings_vs_fock),
    ("conjugate-reversal symmetry of operator strings", _check_conjugate_reversal),
    ("anticommutator identity {c_a, c+_b} = delta_ab inside strings", _check_anticommutator),
    ("partial-trace consistency and parity superselection zeros", _check_rdm_consistency),
    ("spectrum symmetric under energy negation", _check_spectrum_symmetry),
    ("fidelity axioms (symmetry, identity, 0<=H<=F<=1, F<=Fc)", _check_fidelity_axioms),
]


def run_verification(seed: int = 7, mutate: str | None = None) -> VerificationReport:
    if mutate is not None and mutate not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutate!r}; available: {MUTATIONS}")
    report = VerificationReport()
    if mutate == "wick-sign":
        with mutated_wick_sign():
            _run_all(report, seed)
    else:
        _run_all(report, seed)
    return report


def _run_all(report: VerificationReport, seed: int):
    for offset, (name, check) in enumerate(_CHECKS):
        rng = np.random.default_rng(seed + offset)
        try:
            ok, detail = check(rng)
        except Exception as err:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(err).__name__}: {err}"
        report.add(name, ok, detail)
