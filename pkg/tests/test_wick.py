import numpy as np
import pytest

from shibafid import (
    LatticeConfig,
    ModelParams,
    build_correlators,
    fock_expectation,
    fock_ground_state,
    orbitals_for_sites,
    wick_expectation,
)
from shibafid.verify import fixed_gap_solution
from shibafid.wick import _pairing_data

UP, DOWN = 0, 1


@pytest.fixture
def two_by_two_table(fixed_gap_case):
    lat, params, gap, solution = fixed_gap_case
    table = build_correlators(solution, orbitals_for_sites(range(lat.n_sites)))
    _, psi = fock_ground_state(params, lat, gap)
    return lat, table, psi


def test_pairing_count_for_eight_operators():
    pairs, signs = _pairing_data(4)
    assert pairs.shape == (105, 4, 2)
    assert set(signs) <= {1.0, -1.0}


def test_two_string_equals_table_entry(two_by_two_table):
    _, table, _ = two_by_two_table
    a, b = (0, UP), (3, DOWN)
    string = [(a, True), (b, False)]
    assert wick_expectation(string, table) == pytest.approx(
        complex(table.cdag_c[table.index[a], table.index[b]]), abs=1e-15
    )


def test_odd_string_vanishes(two_by_two_table):
    _, table, _ = two_by_two_table
    assert wick_expectation([((0, UP), True)], table) == 0.0
    assert wick_expectation([((0, UP), True), ((1, UP), False), ((2, DOWN), False)], table) == 0.0


def test_empty_string_is_identity(two_by_two_table):
    _, table, _ = two_by_two_table
    assert wick_expectation([], table) == 1.0


def test_density_density_matches_pairing_formula(two_by_two_table):
    # <n_a n_b> = <n_a><n_b> - <c+c+><cc> + <c+c><cc+>, the three pairings
    _, table, _ = two_by_two_table
    a, b = (0, UP), (1, DOWN)
    ia, ib = table.index[a], table.index[b]
    string = [(a, True), (a, False), (b, True), (b, False)]
    direct = wick_expectation(string, table)
    expected = (
        table.cdag_c[ia, ia] * table.cdag_c[ib, ib]
        - table.cdag_cdag[ia, ib] * table.c_c[ia, ib]
        + table.cdag_c[ia, ib] * table.c_cdag[ia, ib]
    )
    assert direct == pytest.approx(expected, abs=1e-14)


def test_strings_match_exact_ground_state(two_by_two_table):
    lat, table, psi = two_by_two_table
    rng = np.random.default_rng(5)
    orbitals = orbitals_for_sites(range(lat.n_sites))
    for length in (2, 4, 6, 8):
        for _ in range(8):
            string = [
                (orbitals[int(rng.integers(len(orbitals)))], bool(rng.integers(2)))
                for _ in range(length)
            ]
            wick_value = wick_expectation(string, table)
            exact = fock_expectation(string, psi, lat.n_sites)
            assert wick_value == pytest.approx(exact, abs=1e-10)


def test_conjugate_reversal(two_by_two_table):
    lat, table, _ = two_by_two_table
    rng = np.random.default_rng(6)
    orbitals = orbitals_for_sites(range(lat.n_sites))
    for _ in range(30):
        length = int(rng.choice([2, 4, 6]))
        string = [
            (orbitals[int(rng.integers(len(orbitals)))], bool(rng.integers(2)))
            for _ in range(length)
        ]
        mirrored = [(orb, not dag) for orb, dag in reversed(string)]
        assert wick_expectation(string, table) == pytest.approx(
            np.conj(wick_expectation(mirrored, table)), abs=1e-12
        )


def test_anticommutator_identity(two_by_two_table):
    lat, table, _ = two_by_two_table
    rng = np.random.default_rng(7)
    orbitals = orbitals_for_sites(range(lat.n_sites))
    for _ in range(30):
        prefix = [
            (orbitals[int(rng.integers(len(orbitals)))], bool(rng.integers(2))) for _ in range(2)
        ]
        suffix = [
            (orbitals[int(rng.integers(len(orbitals)))], bool(rng.integers(2))) for _ in range(2)
        ]
        a = orbitals[int(rng.integers(len(orbitals)))]
        b = orbitals[int(rng.integers(len(orbitals)))]
        lhs = wick_expectation(prefix + [(a, False), (b, True)] + suffix, table)
        rhs = wick_expectation(prefix + [(b, True), (a, False)] + suffix, table)
        delta = wick_expectation(prefix + suffix, table) if a == b else 0.0
        assert lhs + rhs == pytest.approx(delta, abs=1e-12)


def test_table_invariants(two_by_two_table):
    _, table, _ = two_by_two_table
    n = table.cdag_c
    assert np.max(np.abs(n - n.conj().T)) < 1e-12  # <c+_a c_b> = conj(<c+_b c_a>)
    densities = np.real(np.diag(n))
    assert np.all(densities >= -1e-12) and np.all(densities <= 1 + 1e-12)
    anom = table.c_c
    assert np.max(np.abs(anom + anom.T)) < 1e-12  # antisymmetry
    assert np.max(np.abs(np.diag(anom))) < 1e-12
    # <c_a c+_b> = delta_ab - <c+_b c_a> (completeness of the transform)
    k = n.shape[0]
    assert np.max(np.abs(table.c_cdag - (np.eye(k) - n.T))) < 1e-12
    # <c+_a c+_b> = conj(<c_b c_a>)
    assert np.max(np.abs(table.cdag_cdag - anom.conj().T)) < 1e-12


def test_missing_orbital_rejected(two_by_two_table):
    lat, _, _ = two_by_two_table
    params = ModelParams(g=1.0, omega_d=8.0)
    gap = np.full(lat.n_sites, 0.3)
    sol = fixed_gap_solution(params, lat, gap)
    table = build_correlators(sol, orbitals_for_sites([0, 1]))
    with pytest.raises(ValueError):
        wick_expectation([((2, UP), True), ((2, UP), False)], table)


def test_free_fermion_density_oracle():
    # J=0, no pairing, periodic 4x4 at eps_f=-1: the filled-k-shell count
    # fixes the density to 2 * 5 / 16 per site
    lat = LatticeConfig(4, 4, boundary="periodic")
    params = ModelParams(t=1.0, eps_f=-1.0, g=1.0, omega_d=8.0, j_coupling=0.0)
    sol = fixed_gap_solution(params, lat, np.zeros(lat.n_sites))
    table = build_correlators(sol, orbitals_for_sites(range(lat.n_sites)))
    occupied_k = 0
    ks = 2.0 * np.pi * np.arange(4) / 4
    for kx in ks:
        for ky in ks:
            if -2.0 * (np.cos(kx) + np.cos(ky)) - params.eps_f < 0:
                occupied_k += 1
    expected = 2.0 * occupied_k / lat.n_sites
    assert expected == pytest.approx(0.625)
    densities = np.real(np.diag(table.cdag_c))
    per_site = densities.reshape(lat.n_sites, 2).sum(axis=1)
    assert np.allclose(per_site, expected, atol=1e-10)


def test_finite_temperature_occupations(fixed_gap_case):
    lat, params, gap, _ = fixed_gap_case
    import dataclasses

    warm_params = dataclasses.replace(params, temperature=0.5)
    warm = fixed_gap_solution(warm_params, lat, gap)
    table = build_correlators(warm, orbitals_for_sites(range(lat.n_sites)))
    densities = np.real(np.diag(table.cdag_c))
    assert np.all((densities > 0) & (densities < 1))
    # completeness identity holds at any temperature
    k = densities.size
    assert np.max(np.abs(table.c_cdag - (np.eye(k) - table.cdag_c.T))) < 1e-12
