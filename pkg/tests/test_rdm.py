import json

import numpy as np
import pytest

from shibafid import (
    DensityMatrix,
    LatticeConfig,
    ModelParams,
    build_correlators,
    fock_oracle_rdm,
    one_site_rdm,
    orbitals_for_sites,
    partial_trace,
    two_site_rdm,
)
from shibafid.errors import DensityMatrixError
from shibafid.rdm import ONE_SITE_BASIS, psd_spectrum, two_site_basis
from shibafid.verify import fixed_gap_solution

PARITY = (0, 0, 1, 1)


@pytest.fixture
def pipeline_states(fixed_gap_case):
    lat, params, gap, solution = fixed_gap_case
    table = build_correlators(solution, orbitals_for_sites(range(lat.n_sites)))
    return lat, params, gap, table


def test_one_site_matches_oracle_everywhere(pipeline_states):
    lat, params, gap, table = pipeline_states
    for site in range(lat.n_sites):
        ours = one_site_rdm(table, site)
        exact = fock_oracle_rdm(params, lat, gap, [site])
        assert np.max(np.abs(ours.matrix - exact.matrix)) < 1e-10


def test_two_site_matches_oracle(pipeline_states):
    lat, params, gap, table = pipeline_states
    for pair in ((0, 1), (0, 3), (2, 1)):
        ours = two_site_rdm(table, *pair)
        exact = fock_oracle_rdm(params, lat, gap, pair)
        assert np.max(np.abs(ours.matrix - exact.matrix)) < 1e-10


def test_partial_trace_consistency(pipeline_states):
    lat, _, _, table = pipeline_states
    rho2 = two_site_rdm(table, 0, 3)
    assert np.max(np.abs(partial_trace(rho2, 0).matrix - one_site_rdm(table, 0).matrix)) < 1e-10
    assert np.max(np.abs(partial_trace(rho2, 1).matrix - one_site_rdm(table, 3).matrix)) < 1e-10


def test_exchange_symmetry_under_swap(pipeline_states):
    _, _, _, table = pipeline_states
    rho_ij = two_site_rdm(table, 0, 3).matrix
    rho_ji = two_site_rdm(table, 3, 0).matrix
    swap = np.zeros((16, 16))
    for a in range(4):
        for b in range(4):
            swap[4 * b + a, 4 * a + b] = 1.0
    # note: the basis product order is swapped by a permutation; fermionic
    # signs cancel because only even-parity blocks are populated
    swapped = swap @ rho_ij @ swap.T
    odd_odd_sign_fix = np.ones((16, 16))
    for r in range(16):
        for c in range(16):
            pr = (PARITY[r // 4], PARITY[r % 4])
            pc = (PARITY[c // 4], PARITY[c % 4])
            # reordering two odd local states flips the embedded operator sign
            odd_odd_sign_fix[r, c] = (-1) ** (pr[0] * pr[1]) * (-1) ** (pc[0] * pc[1])
    assert np.max(np.abs(rho_ji - swapped * odd_odd_sign_fix)) < 1e-10


def test_parity_blocks_exact_zero(pipeline_states):
    _, _, _, table = pipeline_states
    rho2 = two_site_rdm(table, 0, 1).matrix
    count = 0
    for r in range(16):
        for c in range(16):
            if (PARITY[r // 4] + PARITY[r % 4]) % 2 != (PARITY[c // 4] + PARITY[c % 4]) % 2:
                assert rho2[r, c] == 0.0
                count += 1
    assert count == 128


def test_trace_hermiticity_psd(pipeline_states):
    lat, _, _, table = pipeline_states
    for site in range(lat.n_sites):
        rho = one_site_rdm(table, site)
        m = rho.matrix
        assert abs(np.trace(m) - 1.0) < 1e-10
        assert np.max(np.abs(m - m.conj().T)) < 1e-10
        assert np.linalg.eigvalsh(m)[0] > -1e-10
    rho2 = two_site_rdm(table, 0, 2)
    assert abs(np.trace(rho2.matrix) - 1.0) < 1e-10
    assert np.linalg.eigvalsh(rho2.matrix)[0] > -1e-10


def test_one_site_spin_symmetry_without_impurity():
    lat = LatticeConfig(2, 2)
    params = ModelParams(g=1.0, omega_d=8.0, j_coupling=0.0)
    gap = np.full(lat.n_sites, 0.45)
    sol = fixed_gap_solution(params, lat, gap)
    table = build_correlators(sol, orbitals_for_sites([0]))
    rho = one_site_rdm(table, 0).matrix
    assert rho[2, 2] == pytest.approx(rho[3, 3], abs=1e-12)  # up and down equal
    assert abs(rho[2, 3]) < 1e-12  # no spin coherence


def test_vacuum_limit():
    # chemical potential far below the band: the site is empty
    lat = LatticeConfig(2, 2)
    params = ModelParams(t=1.0, eps_f=-50.0, g=1.0, omega_d=200.0, j_coupling=0.0)
    sol = fixed_gap_solution(params, lat, np.zeros(lat.n_sites))
    table = build_correlators(sol, orbitals_for_sites([0]))
    rho = one_site_rdm(table, 0).matrix
    assert np.allclose(rho, np.diag([1.0, 0.0, 0.0, 0.0]), atol=1e-10)


def test_disconnected_sites_give_product_state():
    # t=0 with on-site pairing only: the two-site state factorizes
    lat = LatticeConfig(1, 2)
    params = ModelParams(t=1e-12, eps_f=-0.4, g=1.0, omega_d=8.0, j_coupling=0.0)
    gap = np.array([0.5, 0.32])
    sol = fixed_gap_solution(params, lat, gap)
    table = build_correlators(sol, orbitals_for_sites([0, 1]))
    rho2 = two_site_rdm(table, 0, 1).matrix
    product = np.kron(one_site_rdm(table, 0).matrix, one_site_rdm(table, 1).matrix)
    assert np.max(np.abs(rho2 - product)) < 1e-9


def test_basis_labels():
    assert ONE_SITE_BASIS == ("empty", "double", "up", "down")
    labels = two_site_basis()
    assert len(labels) == 16
    assert labels[0] == "empty|empty"
    assert labels[5] == "double|double"


def test_json_roundtrip(pipeline_states):
    _, _, _, table = pipeline_states
    rho = two_site_rdm(table, 0, 1)
    payload = json.loads(json.dumps(rho.to_json_dict()))
    back = DensityMatrix.from_json_dict(payload)
    assert back.basis == rho.basis
    assert back.sites == rho.sites
    assert np.max(np.abs(back.matrix - rho.matrix)) < 1e-15


def test_validate_rejects_bad_matrices():
    bad_trace = DensityMatrix(np.diag([0.5, 0.1, 0.0, 0.0]), ONE_SITE_BASIS, (0,))
    with pytest.raises(DensityMatrixError):
        bad_trace.validate()
    not_hermitian = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    not_hermitian[0, 1] = 0.3
    with pytest.raises(DensityMatrixError):
        DensityMatrix(not_hermitian, ONE_SITE_BASIS, (0,)).validate()
    indefinite = np.diag([1.4, -0.4, 0.0, 0.0])
    with pytest.raises(DensityMatrixError):
        DensityMatrix(indefinite, ONE_SITE_BASIS, (0,)).validate()


def test_psd_spectrum_clipping():
    w, _ = psd_spectrum(np.diag([1.0 + 5e-11, -5e-11, 0.0, 0.0]))
    assert np.all(w >= 0)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DensityMatrixError):
        psd_spectrum(np.diag([1.1, -0.1, 0.0, 0.0]))


def test_two_site_requires_distinct_sites(pipeline_states):
    _, _, _, table = pipeline_states
    with pytest.raises(ValueError):
        two_site_rdm(table, 1, 1)
