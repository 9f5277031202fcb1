"""Distinguishability measures on density matrices.

Implements the mixed-state fidelity

    F(rho_a, rho_b) = Tr sqrt( sqrt(rho_a) rho_b sqrt(rho_a) )

together with the eigenbasis-rotation indicator H = Tr(sqrt(rho_a)
sqrt(rho_b)), the measurement-based classical fidelity, the two-site
correlation quotient, and the charge/spin decomposition of one-site
fidelities.  All matrix square roots go through Hermitian spectral
decompositions with the shared clipping rule; the dimensions here are 4
and 16, so nothing fancier is warranted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DensityMatrixError
from .rdm import DensityMatrix, psd_spectrum

SYMMETRY_TOL = 1e-9
REALITY_TOL = 1e-10
BLOCK_LEAK_TOL = 1e-8
_EIG_CLIP = 1e-10


@dataclass(frozen=True)
class FidelityRecord:
    """One sweep sample; ``None`` marks fields a mode does not produce."""

    j_value: float
    delta_j: float
    mode: str
    site_a: tuple[int, ...]
    site_b: tuple[int, ...]
    fidelity: float
    h_value: float
    f_charge: float | None = None
    f_spin: float | None = None
    c2: float | None = None
    total_magnetization: float | None = None
    min_positive_level: float | None = None
    iterations: int | None = None
    residual: float | None = None

    def check_invariants(self):
        if not (-1e-9 <= self.h_value <= self.fidelity + 1e-9):
            raise ValueError(f"record violates 0 <= H <= F: H={self.h_value}, F={self.fidelity}")
        if self.fidelity > 1 + 1e-9:
            raise ValueError(f"record violates F <= 1: F={self.fidelity}")
        return self


def _as_matrix(rho) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _sqrt_state(rho: np.ndarray) -> np.ndarray:
    w, vecs = psd_spectrum(rho, clip=_EIG_CLIP)
    return (vecs * np.sqrt(w)) @ vecs.conj().T


def fidelity(rho_a, rho_b) -> float:
    """Fidelity between two density matrices.

    Returns a value in [0, 1]: 1 for identical states, 0 for states with
    orthogonal supports.  Symmetric in its arguments (to numerical
    accuracy) and invariant under a common unitary rotation.

    Evaluated through the equivalent trace-norm form
    ``Tr |sqrt(rho_a) sqrt(rho_b)|``: summing singular values does not
    amplify roundoff the way square-rooting near-zero eigenvalues of
    ``sqrt(rho_a) rho_b sqrt(rho_a)`` would, which is what keeps
    rank-deficient (pure) states accurate to 1e-10.
    """
    a, b = _as_matrix(rho_a), _as_matrix(rho_b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    singular_values = np.linalg.svd(_sqrt_state(a) @ _sqrt_state(b), compute_uv=False)
    return float(singular_values.sum())


def h_overlap(rho_a, rho_b) -> float:
    """Tr(sqrt(rho_a) sqrt(rho_b)); equals the fidelity iff the states commute.

    The gap F - H is the scalar indicator of a non-trivial mixed-state
    holonomy: F = H exactly when the two states share an eigenbasis.
    """
    a, b = _as_matrix(rho_a), _as_matrix(rho_b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    value = np.trace(_sqrt_state(a) @ _sqrt_state(b))
    if abs(value.imag) > REALITY_TOL:
        raise DensityMatrixError(f"overlap has imaginary part {value.imag:.3e}")
    return float(value.real)


def holonomy_deviation(rho_a, rho_b) -> float:
    """Spectral-norm distance from identity of the polar-decomposition unitary.

    The unitary V in sqrt(rho_a) sqrt(rho_b) = |sqrt(rho_a) sqrt(rho_b)| V
    is recovered from an SVD; on rank-deficient states only its action on
    the support is meaningful.
    """
    a, b = _as_matrix(rho_a), _as_matrix(rho_b)
    left, _, right = np.linalg.svd(_sqrt_state(a) @ _sqrt_state(b))
    v = left @ right
    return float(np.linalg.norm(v - np.eye(v.shape[0]), 2))


def classical_fidelity(rho_a, rho_b, observable) -> float:
    """Overlap of the outcome distributions of one measurement.

    The observable's spectral projectors (degenerate eigenvalues merged at
    relative tolerance 1e-10) define outcome probabilities p(k) for both
    states; returns sum_k sqrt(p_a(k) p_b(k)).  For every observable this
    upper-bounds the fidelity.
    """
    a, b = _as_matrix(rho_a), _as_matrix(rho_b)
    obs = np.asarray(observable)
    if obs.shape != a.shape:
        raise ValueError(f"observable shape {obs.shape} does not match states {a.shape}")
    if np.max(np.abs(obs - obs.conj().T)) > 1e-10 * max(1.0, float(np.max(np.abs(obs)))):
        raise ValueError("observable is not Hermitian")
    w, vecs = np.linalg.eigh(obs)
    scale = max(1.0, float(np.max(np.abs(w))))
    probs_a = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), a, vecs))
    probs_b = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), b, vecs))
    total = 0.0
    start = 0
    for stop in range(1, w.size + 1):
        if stop == w.size or w[stop] - w[stop - 1] > 1e-10 * scale:
            pa = max(probs_a[start:stop].sum(), 0.0)
            pb = max(probs_b[start:stop].sum(), 0.0)
            total += np.sqrt(pa * pb)
            start = stop
    return float(total)


def c2_quotient(f_two_site: float, f_one_site_first: float, f_one_site_second: float) -> float:
    """Two-site fidelity over the product of its one-site fidelities.

    Identically 1 for a product (uncorrelated) two-site state; a
    diagnostic of total correlations, not a correlation measure.
    """
    denom = f_one_site_first * f_one_site_second
    if denom <= 0:
        raise ValueError("one-site fidelities vanish; quotient is singular")
    return f_two_site / denom


def charge_spin_split(rho_a, rho_b) -> tuple[float, float]:
    """Fidelity of the charge {empty, double} and spin {up, down} blocks.

    Each 2x2 block is renormalized to unit trace before comparison.
    Raises when weight leaks between the blocks beyond 1e-8.
    """
    a, b = _as_matrix(rho_a), _as_matrix(rho_b)
    if a.shape != (4, 4) or b.shape != (4, 4):
        raise ValueError("charge/spin split is defined for one-site (4x4) states")
    out = []
    for block in (slice(0, 2), slice(2, 4)):
        pair = []
        for m in (a, b):
            off = m.copy()
            off[block, block] = 0.0
            leak = max(np.max(np.abs(off[block, :])), np.max(np.abs(off[:, block])))
            if leak > BLOCK_LEAK_TOL:
                raise DensityMatrixError(f"charge/spin block leakage {leak:.3e} above tolerance")
            sub = m[block, block]
            tr = float(np.trace(sub).real)
            if tr <= BLOCK_LEAK_TOL:
                raise DensityMatrixError("block has (numerically) zero weight; cannot renormalize")
            pair.append(sub / tr)
        out.append(fidelity(pair[0], pair[1]))
    return out[0], out[1]
