"""Two-point correlator tables and a generic fermionic pairing-sum evaluator.

A ground (or thermal) state of a quadratic Hamiltonian is Gaussian, so the
expectation of any product of electron operators reduces to a signed sum
over complete pairings of two-operator contractions.  The sign of a
pairing is the parity of its crossing number, i.e. the Pfaffian sign.  A
string of eight operators has 105 pairings; everything needed here stays
at or below that length, so the sums are evaluated directly rather than
through precomputed symbolic expressions.

Orbitals are (site, spin) tuples with spin 0=up, 1=down; operators are
(orbital, dagger) tuples.  Contractions are looked up in the original
relative order of the paired operators; no normal-ordering pass is made.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bdg import fermi
from .errors import DegenerateSpectrumError
from .model import DOWN, UP

Orbital = tuple[int, int]  # (site, spin)
Operator = tuple[Orbital, bool]  # (orbital, dagger)


def orbitals_for_sites(sites) -> tuple[Orbital, ...]:
    """Both spin orbitals for each site, in (site order, up-then-down) order."""
    return tuple((s, spin) for s in sites for spin in (UP, DOWN))


@dataclass(frozen=True)
class CorrelatorTable:
    """All two-point functions between a fixed set of orbitals.

    The four arrays are indexed by orbital position in ``orbitals``:
    ``cdag_c[a, b] = <c+_a c_b>``, ``c_cdag[a, b] = <c_a c+_b>``,
    ``c_c[a, b] = <c_a c_b>`` and ``cdag_cdag[a, b] = <c+_a c+_b>``.
    """

    orbitals: tuple[Orbital, ...]
    cdag_c: np.ndarray
    c_cdag: np.ndarray
    c_c: np.ndarray
    cdag_cdag: np.ndarray
    index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index.update({orb: k for k, orb in enumerate(self.orbitals)})

    def contraction(self, op_a: Operator, op_b: Operator) -> complex:
        """<O_a O_b> for two operators in their original relative order."""
        (orb_a, dag_a), (orb_b, dag_b) = op_a, op_b
        try:
            a, b = self.index[orb_a], self.index[orb_b]
        except KeyError as err:
            raise ValueError(f"orbital {err.args[0]} not covered by this table") from None
        if dag_a and dag_b:
            return self.cdag_cdag[a, b]
        if dag_a:
            return self.cdag_c[a, b]
        if dag_b:
            return self.c_cdag[a, b]
        return self.c_c[a, b]


def build_correlators(solution, orbitals, temperature: float | None = None) -> CorrelatorTable:
    """Correlator table of the quasiparticle (thermal) state of a solution.

    Substitutes the quasiparticle expansion of the electron operators and
    uses <g+_n g_m> = f_n d_nm, <g_n g+_m> = (1-f_n) d_nm on the
    positive-energy states.  At T=0 this is the quasiparticle vacuum.
    """
    orbitals = tuple(orbitals)
    if temperature is None:
        temperature = solution.temperature
    n_pos, n_sites = solution.u.shape[0], solution.u.shape[1]
    if n_pos != 2 * n_sites:
        raise DegenerateSpectrumError("solution does not hold a complete positive-energy set")

    k = len(orbitals)
    dtype = np.complex128
    ufac = np.empty((n_pos, k), dtype=dtype)
    vfac = np.empty((n_pos, k), dtype=dtype)
    for pos, (site, spin) in enumerate(orbitals):
        if not (0 <= site < n_sites):
            raise ValueError(f"site {site} outside solution lattice")
        ufac[:, pos] = solution.u[:, site, spin]
        # sign of the gamma+ coefficient in c: -v* for spin up, +v* for spin down
        sign = -1.0 if spin == UP else 1.0
        vfac[:, pos] = sign * np.conj(solution.v[:, site, spin])

    f = fermi(solution.pos_energies, temperature)
    of = 1.0 - f
    cdag_c = np.einsum("n,na,nb->ab", f, ufac.conj(), ufac) + np.einsum(
        "n,na,nb->ab", of, vfac.conj(), vfac
    )
    c_cdag = np.einsum("n,na,nb->ab", of, ufac, ufac.conj()) + np.einsum(
        "n,na,nb->ab", f, vfac, vfac.conj()
    )
    c_c = np.einsum("n,na,nb->ab", of, ufac, vfac) + np.einsum("n,na,nb->ab", f, vfac, ufac)
    cdag_cdag = np.einsum("n,na,nb->ab", f, ufac.conj(), vfac.conj()) + np.einsum(
        "n,na,nb->ab", of, vfac.conj(), ufac.conj()
    )
    return CorrelatorTable(
        orbitals=orbitals, cdag_c=cdag_c, c_cdag=c_cdag, c_c=c_c, cdag_cdag=cdag_cdag
    )


def _enumerate_pairings(indices: tuple[int, ...]) -> list[list[tuple[int, int]]]:
    if not indices:
        return [[]]
    first, rest = indices[0], indices[1:]
    out = []
    for pos, partner in enumerate(rest):
        remainder = rest[:pos] + rest[pos + 1 :]
        for tail in _enumerate_pairings(remainder):
            out.append([(first, partner)] + tail)
    return out


def _crossing_sign(pairing) -> int:
    crossings = 0
    for a, (p1, q1) in enumerate(pairing):
        for p2, q2 in pairing[a + 1 :]:
            # pairs are emitted with p1 < p2; they cross iff p2 lies inside
            # (p1, q1) while q2 lies outside
            if p1 < p2 < q1 < q2:
                crossings += 1
    return -1 if crossings % 2 else 1


@lru_cache(maxsize=None)
def _pairing_data(n_pairs: int) -> tuple[np.ndarray, np.ndarray]:
    """All pairings of 2*n_pairs positions and their permutation signs."""
    pairings = _enumerate_pairings(tuple(range(2 * n_pairs)))
    pairs = np.array(pairings, dtype=np.intp)  # (n_pairings, n_pairs, 2)
    signs = np.array([_crossing_sign(p) for p in pairings], dtype=np.float64)
    return pairs, signs


def wick_expectation(string, table: CorrelatorTable) -> complex:
    """Gaussian-state expectation of an ordered product of electron operators.

    ``string`` is a sequence of ((site, spin), dagger) pairs.  Odd-length
    strings vanish by parity superselection; the empty string is the
    identity.
    """
    string = list(string)
    length = len(string)
    if length % 2:
        return 0.0 + 0.0j
    if length == 0:
        return 1.0 + 0.0j
    if length == 2:
        return complex(table.contraction(string[0], string[1]))

    contr = np.zeros((length, length), dtype=np.complex128)
    for p in range(length):
        for q in range(p + 1, length):
            contr[p, q] = table.contraction(string[p], string[q])

    pairs, signs = _pairing_data(length // 2)
    terms = contr[pairs[:, :, 0], pairs[:, :, 1]].prod(axis=1)
    return complex(signs @ terms)
