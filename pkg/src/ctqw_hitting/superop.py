"""Dense superoperators on row-major vectorized operators.

Convention: ``vec(X)[n*r + c] = X[r, c]``. Under it the map ``X -> A X B^dagger``
has matrix ``kron(A, B.conj())``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolation
from .spectral import check_hermitian

__all__ = [
    "Superoperator",
    "MeasurementSetup",
    "vectorize",
    "devectorize",
    "build_L",
    "build_N",
    "measurement_superop",
    "pencil_pair",
    "hs_adjoint",
    "solve_or_pinv",
    "sigma_extremes",
    "superop_expm_apply",
    "DEFAULT_RANK_TOL",
]

DEFAULT_RANK_TOL = 1e-9


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray
    n: int

    @property
    def order(self) -> int:
        return self.n * self.n

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Apply to an ``n x n`` operator."""
        return devectorize(self.matrix @ vectorize(x))


@dataclass(frozen=True)
class MeasurementSetup:
    """Projective check of ``final_vertex`` at Poisson times of the given rate."""

    final_vertex: int
    rate: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise ContractViolation(f"measurement rate must be finite and > 0, got {self.rate}")
        if self.final_vertex < 0:
            raise ContractViolation(f"final vertex must be non-negative, got {self.final_vertex}")

    def check(self, n: int) -> None:
        if self.final_vertex >= n:
            raise ContractViolation(f"final vertex {self.final_vertex} out of range for n={n}")

    def final_projector(self, n: int) -> np.ndarray:
        self.check(n)
        p = np.zeros((n, n), dtype=complex)
        p[self.final_vertex, self.final_vertex] = 1.0
        return p

    def complement_projector(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=complex) - self.final_projector(n)


def vectorize(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {x.shape}")
    return x.reshape(-1).astype(complex)


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ContractViolation(f"vector length {v.size} is not a perfect square")
    return v.reshape(n, n)


def _commutator_matrix(h: np.ndarray) -> np.ndarray:
    n = h.shape[0]
    eye = np.eye(n)
    return np.kron(h, eye) - np.kron(eye, h.conj())


def build_L(h: np.ndarray, rate: float) -> Superoperator:
    """Matrix of ``X -> X + (i/rate) [H, X]``."""
    h = check_hermitian(h)
    if not rate > 0:
        raise ContractViolation(f"rate must be > 0, got {rate}")
    n = h.shape[0]
    m = np.eye(n * n, dtype=complex) + (1j / rate) * _commutator_matrix(h)
    return Superoperator(m, n)


def measurement_superop(n: int, final_vertex: int) -> Superoperator:
    """Matrix of ``X -> Q_f X Q_f`` with ``Q_f`` the projector off the final vertex."""
    q = MeasurementSetup(final_vertex, 1.0).complement_projector(n)
    return Superoperator(np.kron(q, q.conj()), n)


def build_N(h: np.ndarray, setup: MeasurementSetup) -> Superoperator:
    """The pencil ``L_rate - Q_f`` whose inverse yields hitting probability and time."""
    lop = build_L(h, setup.rate)
    setup.check(lop.n)
    return Superoperator(lop.matrix - measurement_superop(lop.n, setup.final_vertex).matrix, lop.n)


def pencil_pair(h: np.ndarray, final_vertex: int) -> tuple[np.ndarray, np.ndarray]:
    """``(A, B)`` with ``N_rate = A + B / rate``.

    ``A = I - Q_f (x) Q_f*`` is an orthogonal projector and
    ``B = i (H (x) I - I (x) H*)`` is anti-Hermitian.
    """
    h = check_hermitian(h)
    n = h.shape[0]
    a = np.eye(n * n, dtype=complex) - measurement_superop(n, final_vertex).matrix
    b = 1j * _commutator_matrix(h)
    return a, b


def hs_adjoint(s: Superoperator) -> Superoperator:
    """Adjoint under ``<X, Y> = Tr(X^dagger Y)``; the conjugate transpose of the matrix."""
    return Superoperator(s.matrix.conj().T, s.n)


def sigma_extremes(m: np.ndarray) -> tuple[float, float]:
    """Smallest and largest singular values."""
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[-1]), float(sv[0])


def solve_or_pinv(
    s: Superoperator | np.ndarray, b: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL
) -> tuple[np.ndarray, bool]:
    """Solve ``S x = b``, falling back to the minimum-norm least-squares solution.

    Singular values below ``rank_tol * sigma_max`` are treated as zero. The
    second return value is True when that fallback was used.
    """
    m = s.matrix if isinstance(s, Superoperator) else np.asarray(s)
    b = np.asarray(b, dtype=complex)
    if rank_tol <= 0:
        raise ContractViolation("rank_tol must be positive")
    if m.shape[1] != b.shape[0]:
        raise ContractViolation(f"dimension mismatch: {m.shape} vs {b.shape}")
    u, sv, vh = np.linalg.svd(m)
    if sv.size == 0 or sv[0] == 0.0:
        return np.zeros(m.shape[1], dtype=complex), True
    cutoff = rank_tol * sv[0]
    if sv[-1] > cutoff:
        return np.linalg.solve(m, b), False
    keep = sv > cutoff
    coeffs = (u[:, keep].conj().T @ b) / sv[keep]
    return vh[keep].conj().T @ coeffs, True


def superop_expm_apply(s: Superoperator | np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
    """``exp(t M) v`` for the generator ``M`` given as ``s`` (sign and scale already folded in)."""
    if t < 0:
        raise ContractViolation(f"t must be non-negative, got {t}")
    m = s.matrix if isinstance(s, Superoperator) else np.asarray(s)
    v = np.asarray(v, dtype=complex)
    if t == 0:
        return v.copy()
    return scipy.linalg.expm(t * m) @ v
