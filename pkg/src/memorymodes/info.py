"""Entropy and correlation diagnostics along density-matrix series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .density import DensityMatrix, partial_trace_atom, partial_trace_pseudomodes
from .models import TimeGrid

__all__ = [
    "EIGENVALUE_FLOOR",
    "InfoSeries",
    "von_neumann_entropy",
    "mutual_information",
    "info_series",
]

#: eigenvalues below this are treated as exact zeros (integration noise guard)
EIGENVALUE_FLOOR = 1e-12


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def von_neumann_entropy(rho) -> float:
    """Spectral entropy -sum(p ln p) in nats.

    The matrix is Hermitized before diagonalizing and eigenvalues below
    ``EIGENVALUE_FLOOR`` count as zero, which guards against logarithms of
    tiny negatives produced by integration noise.
    """
    mat = _as_matrix(rho)
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    eigs = eigs[eigs > EIGENVALUE_FLOOR]
    if eigs.size == 0:
        return 0.0
    return float(-np.sum(eigs * np.log(eigs)))


def mutual_information(rho_joint) -> float:
    """I = S(emitter) + S(modes) - S(joint) across the emitter|modes split."""
    rho = rho_joint if isinstance(rho_joint, DensityMatrix) else DensityMatrix(rho_joint)
    s_atom = von_neumann_entropy(partial_trace_pseudomodes(rho))
    s_modes = von_neumann_entropy(partial_trace_atom(rho))
    return s_atom + s_modes - von_neumann_entropy(rho)


@dataclass(frozen=True)
class InfoSeries:
    """Entropies of the marginals and the joint state, plus their combination."""

    grid: TimeGrid
    entropy_atom: np.ndarray
    entropy_modes: np.ndarray
    entropy_joint: np.ndarray
    mutual_information: np.ndarray


def info_series(densities: Sequence[DensityMatrix], grid: TimeGrid) -> InfoSeries:
    """Evaluate the entropy diagnostics at every point of a joint-state series."""
    if len(densities) != grid.n_steps:
        raise ValueError(f"expected {grid.n_steps} states, got {len(densities)}")
    s_atom = np.empty(grid.n_steps)
    s_modes = np.empty(grid.n_steps)
    s_joint = np.empty(grid.n_steps)
    for k, rho in enumerate(densities):
        s_atom[k] = von_neumann_entropy(partial_trace_pseudomodes(rho))
        s_modes[k] = von_neumann_entropy(partial_trace_atom(rho))
        s_joint[k] = von_neumann_entropy(rho)
    return InfoSeries(grid, s_atom, s_modes, s_joint, s_atom + s_modes - s_joint)
