"""Eigensolution of the quasiparticle matrix and the self-consistent gap loop.

The 4N x 4N matrix from :func:`shibafid.model.assemble_bdg_matrix` has a
spectrum symmetric about zero; the 2N positive-energy eigenvectors define
the quasiparticle operators and therefore all correlation functions.  The
order parameter is iterated to a fixed point of

    D_i = g * sum_{0 < e_n < omega_d} (1/2 - f(e_n)) *
          [ u_n(i,up) v_n*(i,down) + u_n(i,down) v_n*(i,up) ]

with linear mixing between iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, DegenerateSpectrumError
from .lattice import LatticeConfig
from .model import ModelParams, assemble_bdg_matrix, uniform_gap

HERMITICITY_TOL = 1e-10
# Eigenvalues below this magnitude (relative to the spectral scale) count
# as zero modes; they are excluded from the gap sum and flag degeneracy.
ZERO_MODE_RTOL = 1e-12


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the self-consistency loop."""

    mixing: float = 0.5
    tol: float = 1e-8
    max_iter: int = 500


@dataclass(frozen=True)
class BdgSolution:
    """Converged spectrum, quasiparticle amplitudes and gap field.

    ``energies`` holds all 4N eigenvalues in ascending order.  The
    amplitude arrays ``u`` and ``v`` have shape (2N, n_sites, 2) with the
    spin axis ordered (up, down) and cover only the positive-energy states
    listed in ``pos_energies``; the negative-energy partners follow from
    the particle-hole map and carry no extra information.
    """

    energies: np.ndarray
    pos_energies: np.ndarray
    u: np.ndarray
    v: np.ndarray
    gap: np.ndarray
    temperature: float
    iterations: int
    residual: float

    @property
    def n_sites(self) -> int:
        return self.u.shape[1]

    def occupations(self) -> np.ndarray:
        """Thermal occupation of each stored positive-energy state."""
        return fermi(self.pos_energies, self.temperature)


def fermi(energy, temperature: float) -> np.ndarray:
    """Fermi function 1/(exp(e/T)+1); the T=0 limit is a step with value 1/2 at e=0."""
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    energy = np.asarray(energy, dtype=float)
    if temperature == 0:
        return np.where(energy < 0, 1.0, np.where(energy > 0, 0.0, 0.5))
    return expit(-energy / temperature)


def eigensolve(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full spectral decomposition of a Hermitian matrix.

    Eigenvalues come out ascending.  Each eigenvector's global phase is
    fixed by making its largest-magnitude component real and positive, so
    repeated runs give bit-identical amplitudes.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > HERMITICITY_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    w, vec = np.linalg.eigh(h)
    anchor = np.argmax(np.abs(vec), axis=0)
    pivots = vec[anchor, np.arange(vec.shape[1])]
    if np.iscomplexobj(vec):
        phases = pivots / np.abs(pivots)
        vec = vec * np.conj(phases)[None, :]
    else:
        vec = vec * np.sign(pivots)[None, :]
    return w, vec


def _split_positive(energies: np.ndarray, vectors: np.ndarray):
    """Select the positive-energy eigenvectors and reshape to (u, v) amplitudes."""
    n4 = energies.size
    if n4 % 4:
        raise ValueError("spectrum size is not a multiple of 4")
    n = n4 // 4
    scale = max(1.0, float(np.max(np.abs(energies))))
    positive = energies > ZERO_MODE_RTOL * scale
    if int(positive.sum()) != 2 * n:
        raise DegenerateSpectrumError(
            f"expected {2 * n} positive-energy states, found {int(positive.sum())} "
            "(zero modes present; the requested point sits on a level crossing)"
        )
    pos_e = energies[positive]
    psi = vectors[:, positive].T.reshape(2 * n, n, 4)
    u = psi[:, :, (0, 2)]  # components (u_up, u_down)
    v = psi[:, :, (3, 1)]  # components (v_up, v_down)
    return pos_e, u, v


def _gap_from_amplitudes(pos_energies, u, v, params: ModelParams) -> np.ndarray:
    """Evaluate the gap equation from positive-energy amplitudes."""
    if params.g == 0:
        pair = u[:, :, 0] * np.conj(v[:, :, 1])
        return np.zeros(u.shape[1], dtype=pair.dtype)
    window = pos_energies < params.omega_d  # pos_energies are already > 0
    weight = 0.5 - fermi(pos_energies[window], params.temperature)
    pair = u[window, :, 0] * np.conj(v[window, :, 1]) + u[window, :, 1] * np.conj(v[window, :, 0])
    return params.g * np.einsum("n,ni->i", weight, pair)


def gap_update(solution: BdgSolution, params: ModelParams) -> np.ndarray:
    """One application of the gap equation to an existing solution."""
    return _gap_from_amplitudes(solution.pos_energies, solution.u, solution.v, params)


def solve_self_consistent(
    params: ModelParams,
    lattice: LatticeConfig,
    init=None,
    mixing: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> BdgSolution:
    """Iterate assemble -> diagonalize -> gap update until the field is stationary.

    ``init`` seeds the gap field (uniform 0.5 by default); pass the
    converged field of a nearby parameter point to warm-start.  The loop
    stops once ``max_i |D_new_i - D_old_i| < tol``; the returned solution
    holds the amplitudes diagonalized at exactly the returned gap field.

    Raises :class:`ConvergenceError` with the residual history if the
    budget of ``max_iter`` iterations is exhausted.
    """
    if not (0 < mixing <= 1):
        raise ValueError("mixing must be in (0, 1]")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")

    gap = uniform_gap(lattice) if init is None else np.array(init, copy=True)
    residuals = []
    for iteration in range(1, max_iter + 1):
        h = assemble_bdg_matrix(params, lattice, gap)
        energies, vectors = eigensolve(h)
        pos_e, u, v = _split_positive(energies, vectors)
        new_gap = _gap_from_amplitudes(pos_e, u, v, params)
        residual = float(np.max(np.abs(new_gap - gap)))
        residuals.append(residual)
        if residual < tol:
            return BdgSolution(
                energies=energies,
                pos_energies=pos_e,
                u=u,
                v=v,
                gap=gap,
                temperature=params.temperature,
                iterations=iteration,
                residual=residual,
            )
        gap = mixing * new_gap + (1.0 - mixing) * gap

    raise ConvergenceError(
        f"gap iteration did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {residuals[-1]:.3e})",
        residuals=residuals,
    )
