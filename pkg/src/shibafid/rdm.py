"""One-site (4x4) and two-site (16x16) reduced density matrices.

Local basis, in this fixed order::

    0: |empty>    no electron
    1: |double>   both spins          (= c+_up c+_down |vac>)
    2: |up>       one spin-up
    3: |down>     one spin-down

Two-site states are the 16 products in lexicographic (site-i label,
site-j label) order, ``index = 4 * label_i + label_j``, built with the
orbital creation order (i up, i down, j up, j down).

Matrix elements are expectation values of ket-bra operators: entry
``rho[r, c] = < op(|c><r|) >``.  Each ket-bra is expanded
programmatically into a polynomial of electron-operator strings

    |c><r| = [creators of c, ascending] * prod_(o empty in both) (1 - n_o)
             * [annihilators of r, descending]

and evaluated with the pairing-sum engine; strings reach length eight
when both sites are doubly occupied.  Entries between states of unequal
local particle-number parity vanish identically (superselection) and are
set to exact zero rather than evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DensityMatrixError
from .model import DOWN, UP
from .wick import CorrelatorTable, wick_expectation

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

ONE_SITE_BASIS = ("empty", "double", "up", "down")
# occupied spins of each label, in creation order (up before down)
_LABEL_SPINS = ((), (UP, DOWN), (UP,), (DOWN,))
_LABEL_PARITY = (0, 0, 1, 1)


def two_site_basis() -> tuple[str, ...]:
    return tuple(f"{a}|{b}" for a, b in product(ONE_SITE_BASIS, ONE_SITE_BASIS))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian unit-trace PSD matrix with a labelled occupation basis."""

    matrix: np.ndarray
    basis: tuple[str, ...]
    sites: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> "DensityMatrix":
        m = self.matrix
        if m.shape != (len(self.basis), len(self.basis)):
            raise DensityMatrixError("matrix shape does not match basis size")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise DensityMatrixError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise DensityMatrixError(f"trace {np.trace(m)} differs from 1 beyond tolerance")
        smallest = float(np.linalg.eigvalsh(m)[0])
        if smallest < -PSD_TOL:
            raise DensityMatrixError(f"negative eigenvalue {smallest:.3e} beyond tolerance")
        return self

    def to_json_dict(self) -> dict:
        """Documented serialization: row-major entries as [re, im] pairs."""
        return {
            "dim": self.dim,
            "basis": list(self.basis),
            "sites": list(self.sites),
            "entries": [[float(z.real), float(z.imag)] for z in self.matrix.ravel()],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "DensityMatrix":
        dim = int(payload["dim"])
        entries = np.array(
            [complex(re, im) for re, im in payload["entries"]], dtype=np.complex128
        ).reshape(dim, dim)
        return cls(
            matrix=entries,
            basis=tuple(payload["basis"]),
            sites=tuple(int(s) for s in payload["sites"]),
        )


def psd_spectrum(matrix: np.ndarray, clip: float = PSD_TOL):
    """Eigendecomposition of a density matrix with the fixed clipping rule.

    Eigenvalues in [-clip, 0) are set to zero and the spectrum is
    renormalized to unit sum; anything more negative raises.
    """
    w, vecs = np.linalg.eigh(matrix)
    if w[0] < -clip:
        raise DensityMatrixError(f"eigenvalue {w[0]:.3e} below -{clip:.0e}; not a state")
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise DensityMatrixError("state has vanished after clipping")
    return w / total, vecs


def _ketbra_monomials(ket_labels, bra_labels, sites):
    """Expand |ket><bra| into (coefficient, operator string) monomials.

    ``ket_labels`` and ``bra_labels`` are per-site basis labels; ``sites``
    fixes the orbital order.  Projector factors (1 - n_o) survive only on
    orbitals empty in both states.
    """
    create = [
        ((site, spin), True) for site, lab in zip(sites, ket_labels) for spin in _LABEL_SPINS[lab]
    ]
    annihilate = [
        ((site, spin), False) for site, lab in zip(sites, bra_labels) for spin in _LABEL_SPINS[lab]
    ]
    annihilate.reverse()
    ket_occ = {op[0] for op in create}
    bra_occ = {(site, spin) for site, lab in zip(sites, bra_labels) for spin in _LABEL_SPINS[lab]}
    empty = [
        (site, spin)
        for site in sites
        for spin in (UP, DOWN)
        if (site, spin) not in ket_occ and (site, spin) not in bra_occ
    ]

    monomials = [(1.0, [])]
    for orb in empty:
        extended = []
        for coeff, ops in monomials:
            extended.append((coeff, ops))
            extended.append((-coeff, ops + [(orb, True), (orb, False)]))
        monomials = extended
    return [(coeff, create + ops + annihilate) for coeff, ops in monomials]


def _assemble_rdm(table: CorrelatorTable, sites, label_tuples, parities) -> np.ndarray:
    dim = len(label_tuples)
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for r in range(dim):
        for c in range(dim):
            if parities[r] != parities[c]:
                continue  # exact zero by parity superselection
            value = 0.0 + 0.0j
            for coeff, string in _ketbra_monomials(label_tuples[c], label_tuples[r], sites):
                value += coeff * wick_expectation(string, table)
            rho[r, c] = value
    return rho


def one_site_rdm(table: CorrelatorTable, site: int) -> DensityMatrix:
    """4x4 reduced state of a single site.

    The charge sector {empty, double} decouples from the spin sector
    {up, down}; the construction leaves the cross entries at exact zero.
    """
    labels = [(k,) for k in range(4)]
    rho = _assemble_rdm(table, (site,), labels, _LABEL_PARITY)
    return DensityMatrix(matrix=rho, basis=ONE_SITE_BASIS, sites=(site,)).validate()


def two_site_rdm(table: CorrelatorTable, site_i: int, site_j: int) -> DensityMatrix:
    """16x16 reduced state of an ordered pair of distinct sites."""
    if site_i == site_j:
        raise ValueError("two-site state needs two distinct sites")
    labels = [(a, b) for a in range(4) for b in range(4)]
    parities = [(_LABEL_PARITY[a] + _LABEL_PARITY[b]) % 2 for a, b in labels]
    rho = _assemble_rdm(table, (site_i, site_j), labels, parities)
    return DensityMatrix(matrix=rho, basis=two_site_basis(), sites=(site_i, site_j)).validate()


def partial_trace(rho2: DensityMatrix, keep: int) -> DensityMatrix:
    """Trace a two-site state down to one of its sites (keep = 0 or 1)."""
    if rho2.dim != 16:
        raise ValueError("partial_trace expects a two-site (16x16) state")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 (first site) or 1 (second site)")
    m = rho2.matrix.reshape(4, 4, 4, 4)  # (i_row, j_row, i_col, j_col)
    reduced = np.einsum("abcb->ac", m) if keep == 0 else np.einsum("abad->bd", m)
    return DensityMatrix(
        matrix=reduced, basis=ONE_SITE_BASIS, sites=(rho2.sites[keep],)
    ).validate()
