"""Fock-space exact diagonalization for small clusters.

This module is the independent cross-check of the quasiparticle pipeline:
it never touches the pairing-sum machinery.  The many-body Hamiltonian
with a FIXED gap field is quadratic, so its ground state in the full
4^N-dimensional Fock space is the quasiparticle vacuum; reduced density
matrices obtained here by honest partial tracing must agree entry by
entry with the correlator-based construction.

Occupation-number basis with Jordan-Wigner ordering by site then spin:
orbital p = 2*site + spin (spin 0=up, 1=down), basis state k has orbital
p occupied iff bit p of k is set, and

    |k> = c+_{p1} c+_{p2} ... |vac>,   p1 < p2 < ...

so c+_p |k> carries the sign (-1)^(number of occupied orbitals below p).
Practical up to N = 6 sites (dimension 4096).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import DegenerateSpectrumError
from .lattice import LatticeConfig
from .model import DOWN, UP, ModelParams, _check_gap
from .rdm import ONE_SITE_BASIS, DensityMatrix, two_site_basis

MAX_ORACLE_SITES = 6
DEGENERACY_TOL = 1e-9
_DENSE_CUTOFF = 2048


def _orbital(site: int, spin: int) -> int:
    return 2 * site + spin


def _jw_sign(state: int, p: int) -> int:
    return -1 if bin(state & ((1 << p) - 1)).count("1") % 2 else 1


def _apply_annihilate(state: int, p: int):
    if not (state >> p) & 1:
        return None
    return state ^ (1 << p), _jw_sign(state, p)


def _apply_create(state: int, p: int):
    if (state >> p) & 1:
        return None
    return state | (1 << p), _jw_sign(state, p)


def apply_operator_string(string, psi: np.ndarray, n_sites: int) -> np.ndarray:
    """Apply an ordered product of electron operators to a Fock-space vector.

    ``string`` uses the same ((site, spin), dagger) encoding as the
    pairing-sum engine; operators act right to left.
    """
    dim = 1 << (2 * n_sites)
    if psi.shape != (dim,):
        raise ValueError("state vector size does not match the lattice")
    current = np.asarray(psi, dtype=np.complex128)
    for (site, spin), dagger in reversed(list(string)):
        p = _orbital(site, spin)
        out = np.zeros_like(current)
        apply = _apply_create if dagger else _apply_annihilate
        for k in np.nonzero(current)[0]:
            res = apply(int(k), p)
            if res is not None:
                k2, sign = res
                out[k2] += sign * current[k]
        current = out
    return current


def fock_expectation(string, psi: np.ndarray, n_sites: int) -> complex:
    """<psi| O |psi> for an ordered product of electron operators."""
    return complex(np.vdot(psi, apply_operator_string(string, psi, n_sites)))


def build_fock_hamiltonian(params: ModelParams, lattice: LatticeConfig, gap) -> sp.csr_matrix:
    """Sparse many-body matrix of the model with a fixed gap field."""
    if lattice.n_sites > MAX_ORACLE_SITES:
        raise ValueError(f"oracle limited to {MAX_ORACLE_SITES} sites (4^N Fock dimension)")
    gap = _check_gap(gap, lattice)
    n = lattice.n_sites
    dim = 1 << (2 * n)
    lc = params.resolve_impurity(lattice)

    rows, cols, vals = [], [], []

    def add(row, col, val):
        if val != 0:
            rows.append(row)
            cols.append(col)
            vals.append(val)

    sin_t = params.j_coupling * np.sin(params.phi)
    cos_t = params.j_coupling * np.cos(params.phi)
    bonds = lattice.bonds()

    for k in range(dim):
        diag = 0.0
        for site in range(n):
            n_up = (k >> _orbital(site, UP)) & 1
            n_dn = (k >> _orbital(site, DOWN)) & 1
            diag += -params.eps_f * (n_up + n_dn)
            if site == lc:
                diag += -sin_t * (n_up - n_dn)
        add(k, k, diag)

        # hopping -t (c+_is c_js + c+_js c_is)
        for (i, j) in bonds:
            for spin in (UP, DOWN):
                for (a, b) in ((i, j), (j, i)):
                    res = _apply_annihilate(k, _orbital(b, spin))
                    if res is None:
                        continue
                    k1, s1 = res
                    res = _apply_create(k1, _orbital(a, spin))
                    if res is None:
                        continue
                    k2, s2 = res
                    add(k2, k, -params.t * s1 * s2)

        # pairing D_i c+_iu c+_id + D_i* c_id c_iu
        for site in range(n):
            d = complex(gap[site])
            if d == 0:
                continue
            res = _apply_create(k, _orbital(site, DOWN))
            if res is not None:
                k1, s1 = res
                res = _apply_create(k1, _orbital(site, UP))
                if res is not None:
                    k2, s2 = res
                    add(k2, k, d * s1 * s2)
            res = _apply_annihilate(k, _orbital(site, UP))
            if res is not None:
                k1, s1 = res
                res = _apply_annihilate(k1, _orbital(site, DOWN))
                if res is not None:
                    k2, s2 = res
                    add(k2, k, np.conj(d) * s1 * s2)

        # transverse impurity coupling -J cos(phi) (c+_u c_d + c+_d c_u)
        if cos_t != 0:
            for (a, b) in ((UP, DOWN), (DOWN, UP)):
                res = _apply_annihilate(k, _orbital(lc, b))
                if res is None:
                    continue
                k1, s1 = res
                res = _apply_create(k1, _orbital(lc, a))
                if res is None:
                    continue
                k2, s2 = res
                add(k2, k, -cos_t * s1 * s2)

    h = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=np.complex128)
    if abs(h - h.getH()).max() > 1e-12:
        raise AssertionError("Fock Hamiltonian lost hermiticity")
    return h


def fock_ground_state(params: ModelParams, lattice: LatticeConfig, gap) -> tuple[float, np.ndarray]:
    """Energy and vector of the unique many-body ground state.

    Raises :class:`DegenerateSpectrumError` when the lowest level is
    (numerically) degenerate; the oracle declares such inputs untestable.
    """
    h = build_fock_hamiltonian(params, lattice, gap)
    dim = h.shape[0]
    if dim <= _DENSE_CUTOFF:
        w, vecs = np.linalg.eigh(h.toarray())
        e0, e1 = float(w[0]), float(w[1])
        psi = vecs[:, 0]
    else:
        rng = np.random.default_rng(12345)
        v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        w, vecs = eigsh(h, k=4, which="SA", v0=v0, tol=0)
        order = np.argsort(w)
        e0, e1 = float(w[order[0]]), float(w[order[1]])
        psi = vecs[:, order[0]]
    if e1 - e0 < DEGENERACY_TOL:
        raise DegenerateSpectrumError(
            f"many-body ground state degenerate (gap {e1 - e0:.2e}); input untestable"
        )
    return e0, psi / np.linalg.norm(psi)


def reduce_state(psi: np.ndarray, n_sites: int, sites) -> np.ndarray:
    """Partial trace onto 1 or 2 sites, with fermionic reordering signs.

    The kept orbitals are moved to the front of the Jordan-Wigner order
    (in the order site_0 up, site_0 down, site_1 up, site_1 down); each
    basis amplitude picks up the parity of the permutation restricted to
    its occupied orbitals.  Returns the reduced matrix over occupation
    indices (bit k = kept orbital k occupied).
    """
    sites = tuple(sites)
    if len(sites) not in (1, 2) or len(set(sites)) != len(sites):
        raise ValueError("sites must be one or two distinct site ids")
    kept = [_orbital(s, spin) for s in sites for spin in (UP, DOWN)]
    env = [p for p in range(2 * n_sites) if p not in kept]
    new_order = kept + env  # new position of orbital p = new_order.index(p)
    new_pos = {p: q for q, p in enumerate(new_order)}

    n_kept = len(kept)
    dim_sub = 1 << n_kept
    dim_env = 1 << len(env)
    m = np.zeros((dim_sub, dim_env), dtype=np.complex128)
    for k in np.nonzero(psi)[0]:
        occupied = [p for p in range(2 * n_sites) if (int(k) >> p) & 1]
        permuted = [new_pos[p] for p in occupied]
        inversions = sum(
            1
            for a in range(len(permuted))
            for b in range(a + 1, len(permuted))
            if permuted[a] > permuted[b]
        )
        sign = -1 if inversions % 2 else 1
        sub = 0
        envi = 0
        for q in permuted:
            if q < n_kept:
                sub |= 1 << q
            else:
                envi |= 1 << (q - n_kept)
        m[sub, envi] += sign * psi[k]
    return m @ m.conj().T


# occupation-bit index (bit0 = up, bit1 = down) of each basis label
_LABEL_TO_OCC = (0b00, 0b11, 0b01, 0b10)


def _occ_permutation(n_labels: int) -> np.ndarray:
    if n_labels == 4:
        return np.array(_LABEL_TO_OCC)
    perm = np.empty(16, dtype=int)
    for a in range(4):
        for b in range(4):
            perm[4 * a + b] = _LABEL_TO_OCC[a] | (_LABEL_TO_OCC[b] << 2)
    return perm


def fock_oracle_rdm(params: ModelParams, lattice: LatticeConfig, gap, sites) -> DensityMatrix:
    """Reduced density matrix of the exact ground state, in the labelled basis."""
    sites = tuple(int(s) for s in np.atleast_1d(sites))
    _, psi = fock_ground_state(params, lattice, gap)
    rho_occ = reduce_state(psi, lattice.n_sites, sites)
    perm = _occ_permutation(4 if len(sites) == 1 else 16)
    rho = rho_occ[np.ix_(perm, perm)]
    basis = ONE_SITE_BASIS if len(sites) == 1 else two_site_basis()
    return DensityMatrix(matrix=rho, basis=basis, sites=sites).validate()
