"""Clustered Hermitian eigendecomposition and exact unitary propagation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

__all__ = ["Spectrum", "eigendecompose", "evolve", "check_hermitian"]

HERMITIAN_TOL = 1e-12


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {h.shape}")
    if not np.allclose(h, h.conj().T, rtol=0.0, atol=tol):
        raise ContractViolation("matrix is not Hermitian")
    return h


@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues of ``H`` with orthonormal eigenspace bases.

    ``bases[i]`` is an ``n x d_i`` matrix whose columns span the eigenspace of
    ``eigenvalues[i]``. Eigenvalues are ascending.
    """

    eigenvalues: np.ndarray
    bases: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return self.bases[0].shape[0]

    @property
    def multiplicities(self) -> list[int]:
        return [b.shape[1] for b in self.bases]

    @property
    def projectors(self) -> list[np.ndarray]:
        return [b @ b.conj().T for b in self.bases]

    def eigenvectors(self) -> np.ndarray:
        """All eigenvectors as columns, grouped by eigenspace."""
        return np.hstack(self.bases)

    def expanded_eigenvalues(self) -> np.ndarray:
        """Eigenvalue of each column of :meth:`eigenvectors`."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    def reconstruct(self) -> np.ndarray:
        return sum(e * p for e, p in zip(self.eigenvalues, self.projectors))


def eigendecompose(h: np.ndarray, cluster_tol: float = 1e-8) -> Spectrum:
    """Diagonalize a Hermitian matrix, merging numerically degenerate eigenvalues.

    Raw eigenvalues whose consecutive gaps are at most
    ``cluster_tol * max(1, ||H||_2)`` form one cluster; the cluster is
    represented by the mean of its members and the span of their eigenvectors.
    """
    h = check_hermitian(h)
    if cluster_tol <= 0:
        raise ContractViolation("cluster_tol must be positive")
    w, v = np.linalg.eigh(h.astype(complex))
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    cut = cluster_tol * scale
    groups: list[list[int]] = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[k - 1] <= cut:
            groups[-1].append(k)
        else:
            groups.append([k])
    eigenvalues = np.array([w[g].mean() for g in groups])
    bases = tuple(v[:, g] for g in groups)
    return Spectrum(eigenvalues, bases)


def evolve(s: Spectrum, psi: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-iHt) psi`` by summing phases over eigenspaces."""
    psi = np.asarray(psi, dtype=complex)
    out = np.zeros_like(psi)
    for e, b in zip(s.eigenvalues, s.bases):
        out += np.exp(-1j * e * t) * (b @ (b.conj().T @ psi))
    return out
