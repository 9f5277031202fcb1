import math

import numpy as np
import pytest

from shibafid import (
    ConvergenceError,
    LatticeConfig,
    ModelParams,
    assemble_bdg_matrix,
    eigensolve,
    fermi,
    gap_update,
    solve_self_consistent,
    uniform_gap,
)


def test_eigensolve_two_level():
    w, vec = eigensolve(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(w, [-1.0, 1.0])
    assert np.allclose(vec @ vec.T, np.eye(2), atol=1e-14)


def test_eigensolve_identity():
    w, _ = eigensolve(np.eye(36))
    assert np.allclose(w, 1.0)


def test_eigensolve_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigensolve(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigensolve_reconstruction_and_orthonormality(rng):
    a = rng.standard_normal((60, 60)) + 1j * rng.standard_normal((60, 60))
    h = a + a.conj().T
    w, vec = eigensolve(h)
    norm = np.linalg.norm(h, 2)
    residual = np.max(np.abs(h @ vec - vec * w[None, :]))
    assert residual <= 1e-10 * norm
    gram = vec.conj().T @ vec
    assert np.max(np.abs(gram - np.eye(60))) <= 1e-10


def test_eigensolve_phase_convention_deterministic(rng):
    a = rng.standard_normal((24, 24)) + 1j * rng.standard_normal((24, 24))
    h = a + a.conj().T
    _, v1 = eigensolve(h)
    _, v2 = eigensolve(h.copy())
    assert np.array_equal(v1, v2)
    anchors = np.argmax(np.abs(v1), axis=0)
    pivots = v1[anchors, np.arange(24)]
    assert np.all(pivots.real > 0)
    assert np.max(np.abs(pivots.imag)) < 1e-12


def test_particle_hole_symmetry_random_draws():
    # criterion: eigenvalue multiset equals its negation on 7x7 draws
    lat = LatticeConfig(7, 7)
    rng = np.random.default_rng(11)
    for _ in range(10):
        params = ModelParams(
            t=1.0,
            eps_f=float(rng.uniform(-2.0, 0.5)),
            g=float(rng.uniform(1.0, 3.0)),
            omega_d=6.0,
            j_coupling=float(rng.uniform(0.0, 3.0)),
            phi=float(rng.uniform(0.0, np.pi)),
        )
        gap = rng.normal(0.4, 0.2, lat.n_sites) + 1j * rng.normal(0.0, 0.1, lat.n_sites)
        w = np.linalg.eigvalsh(assemble_bdg_matrix(params, lat, gap))
        assert np.max(np.abs(np.sort(w) + np.sort(-w)[::-1])) < 1e-8


def test_fermi_values():
    assert fermi(0.0, 1.0) == pytest.approx(0.5)
    assert fermi(2.0, 0.0) == 0.0
    assert fermi(-2.0, 0.0) == 1.0
    assert fermi(0.0, 0.0) == 0.5
    assert fermi(1.0, 1.0) == pytest.approx(1.0 / (math.e + 1.0), abs=1e-12)
    assert fermi(1000.0, 1.0) == pytest.approx(0.0, abs=1e-12)  # no overflow
    values = fermi(np.array([-1.0, 0.0, 1.0]), 0.5)
    assert np.all((values >= 0) & (values <= 1))


def test_gap_update_zero_coupling(fixed_gap_case):
    lat, params, gap, solution = fixed_gap_case
    new = gap_update(solution, ModelParams(g=0.0, omega_d=8.0))
    assert np.max(np.abs(new)) == 0.0


def test_solve_g0_converges_immediately():
    lat = LatticeConfig(3, 3)
    sol = solve_self_consistent(ModelParams(g=0.0), lat, init=np.zeros(9))
    assert sol.iterations == 1
    assert np.max(np.abs(sol.gap)) == 0.0


def test_solve_uniform_without_impurity():
    # open boundaries enhance the field near the walls, but without the
    # impurity it must keep the full point-group symmetry of the sample;
    # periodic wrap restores exact uniformity
    lat = LatticeConfig(5, 5)
    sol = solve_self_consistent(ModelParams(g=2.0, omega_d=6.0, j_coupling=0.0), lat)
    field = np.real(sol.gap).reshape(5, 5)
    assert np.all(field > 0.05)
    for mirror in (field[::-1, :], field[:, ::-1], field.T):
        assert np.max(np.abs(field - mirror)) < 1e-7
    wrap = LatticeConfig(5, 5, boundary="periodic")
    sol_p = solve_self_consistent(ModelParams(g=2.0, omega_d=6.0), wrap)
    assert np.max(np.abs(sol_p.gap - sol_p.gap[0])) < 1e-7


def test_fixed_point_idempotent():
    lat = LatticeConfig(4, 4)
    params = ModelParams(g=2.0, omega_d=6.0, j_coupling=0.8)
    tol = 1e-9
    sol = solve_self_consistent(params, lat, tol=tol)
    change = np.max(np.abs(gap_update(sol, params) - sol.gap))
    assert change < tol


def test_solve_deterministic():
    lat = LatticeConfig(4, 4)
    params = ModelParams(g=2.0, omega_d=6.0, j_coupling=1.1)
    a = solve_self_consistent(params, lat)
    b = solve_self_consistent(params, lat)
    assert np.array_equal(a.gap, b.gap)
    assert np.array_equal(a.energies, b.energies)
    assert a.iterations == b.iterations


def test_convergence_error_carries_history():
    lat = LatticeConfig(4, 4)
    with pytest.raises(ConvergenceError) as excinfo:
        solve_self_consistent(ModelParams(g=2.0, omega_d=6.0), lat, max_iter=3, tol=1e-14)
    assert len(excinfo.value.residuals) == 3


def test_solution_orthonormality_and_symmetry():
    lat = LatticeConfig(4, 4)
    params = ModelParams(g=2.2, omega_d=6.0, j_coupling=1.5, phi=0.6)
    sol = solve_self_consistent(params, lat)
    w = sol.energies
    assert np.max(np.abs(np.sort(w) + np.sort(-w)[::-1])) < 1e-8
    assert sol.pos_energies.shape == (2 * lat.n_sites,)
    assert np.all(sol.pos_energies > 0)
    # psi_n columns reassembled from (u, v) must be orthonormal
    psi = np.zeros((4 * lat.n_sites, 2 * lat.n_sites), dtype=complex)
    psi[0::4, :] = sol.u[:, :, 0].T
    psi[1::4, :] = sol.v[:, :, 1].T
    psi[2::4, :] = sol.u[:, :, 1].T
    psi[3::4, :] = sol.v[:, :, 0].T
    gram = psi.conj().T @ psi
    assert np.max(np.abs(gram - np.eye(2 * lat.n_sites))) < 1e-10


def test_invalid_solver_arguments():
    lat = LatticeConfig(3, 3)
    with pytest.raises(ValueError):
        solve_self_consistent(ModelParams(), lat, mixing=0.0)
    with pytest.raises(ValueError):
        solve_self_consistent(ModelParams(), lat, tol=-1.0)
    with pytest.raises(ValueError):
        solve_self_consistent(ModelParams(), lat, max_iter=0)
