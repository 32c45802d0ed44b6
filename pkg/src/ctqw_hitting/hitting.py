"""Closed-form hitting probability and hitting time under Poisson-timed measurement.

With ``N = L_rate - Q_f`` (see :mod:`ctqw_hitting.superop`) and ``P_f`` the
projector on the final vertex::

    p_h   = Tr{P_f N^+ (rho)}
    tau_h = Tr{P_f (N^+)^2 (rho)} / rate

``N^+`` is an exact inverse when the pencil is regular and a Moore-Penrose
pseudoinverse otherwise. The pencil is singular exactly when some eigenspace of
``H`` meets the orthogonal complement of the final vertex (the dark subspace).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ContractViolation, NumericalContractError
from .graph_model import Graph, complement_witness, connected_components, hamiltonian
from .spectral import Spectrum, check_hermitian, eigendecompose
from .superop import (
    DEFAULT_RANK_TOL,
    MeasurementSetup,
    build_N,
    devectorize,
    hs_adjoint,
    pencil_pair,
    sigma_extremes,
    solve_or_pinv,
    vectorize,
)

__all__ = [
    "HittingReport",
    "DarkSubspace",
    "InfiniteHittingDiagnosis",
    "validate_density",
    "pure_density",
    "hitting_time",
    "hitting_matrices",
    "dark_subspace",
    "detect_infinite",
    "pencil_eigenvalues",
    "lambda_sweep",
    "fit_asymptotics",
    "PROBABILITY_TOL",
]

# p_h below 1 - PROBABILITY_TOL on a singular pencil means some probability never arrives.
PROBABILITY_TOL = 1e-8
IMAG_TOL = 1e-9
DENSITY_TOL = 1e-10


@dataclass(frozen=True)
class HittingReport:
    """Hitting statistics for one initial state and one measurement rate.

    ``tau_h`` is ``math.inf`` when part of the initial state never reaches the
    final vertex; ``tau_conditional`` then keeps the finite pseudoinverse value.
    """

    tau_h: float
    p_h: float
    pencil_sigma_min: float
    pencil_sigma_max: float
    dark_dim: int
    rate: float
    singular: bool
    tau_conditional: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.tau_h)

    def to_dict(self) -> dict:
        return {
            "tau_h": "inf" if self.infinite else self.tau_h,
            "infinite": self.infinite,
            "p_h": self.p_h,
            "tau_conditional": self.tau_conditional,
            "pencil_sigma_min": self.pencil_sigma_min,
            "pencil_sigma_max": self.pencil_sigma_max,
            "pencil_singular": self.singular,
            "dark_dim": self.dark_dim,
            "lambda": self.rate,
        }


@dataclass(frozen=True)
class DarkSubspace:
    """Orthonormal basis (columns) of the states that never trigger detection.

    ``energies[k]`` is the eigenvalue of ``H`` carried by column ``k``;
    ``per_eigenvalue_dims`` lists ``(E_i, dim)`` for every eigenspace, zero
    dimensions included.
    """

    basis: np.ndarray
    energies: np.ndarray
    per_eigenvalue_dims: list[tuple[float, int]]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


@dataclass(frozen=True)
class InfiniteHittingDiagnosis:
    has_infinite: bool
    witness: np.ndarray | None
    dark_nonempty: bool
    pencil_singular: bool
    complement_disconnected: bool
    dark_dim: int
    pencil_sigma_ratio: float
    criteria: dict[str, bool] = field(default_factory=dict)


def validate_density(rho: np.ndarray, n: int | None = None) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ContractViolation(f"density matrix must be square, got shape {rho.shape}")
    if n is not None and rho.shape[0] != n:
        raise ContractViolation(f"density matrix has order {rho.shape[0]}, graph has {n} vertices")
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=DENSITY_TOL):
        raise ContractViolation("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > DENSITY_TOL:
        raise ContractViolation(f"density matrix trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -DENSITY_TOL:
        raise ContractViolation("density matrix is not positive semidefinite")
    return rho


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def dark_subspace(spec: Spectrum, v_f: int, tol: float = DEFAULT_RANK_TOL) -> DarkSubspace:
    """Union over eigenspaces of ``eigenspace_i ∩ <v_f|^perp``.

    For an eigenspace with orthonormal basis ``B`` the intersection is
    ``B @ null(B[v_f, :])``: the whole eigenspace if the overlap row is below
    ``tol`` in norm, otherwise a subspace of one lower dimension.
    """
    if not 0 <= v_f < spec.n:
        raise ContractViolation(f"final vertex {v_f} out of range for n={spec.n}")
    columns, energies, dims = [], [], []
    for e, b in zip(spec.eigenvalues, spec.bases):
        row = b[v_f, :]
        if np.linalg.norm(row) <= tol:
            piece = b
        else:
            # rows 1.. of V^H span the null space of the 1 x d overlap row
            _, _, vh = np.linalg.svd(row[np.newaxis, :])
            piece = b @ vh[1:].conj().T
        dims.append((float(e), piece.shape[1]))
        if piece.shape[1]:
            columns.append(piece)
            energies.extend([float(e)] * piece.shape[1])
    basis = np.hstack(columns) if columns else np.zeros((spec.n, 0), dtype=complex)
    for k in range(basis.shape[1]):
        # fix the global phase: first non-negligible component real positive
        lead = basis[np.argmax(np.abs(basis[:, k]) > 1e-8), k]
        basis[:, k] *= abs(lead) / lead
    return DarkSubspace(basis, np.array(energies), dims)


def _pencil(h: np.ndarray, setup: MeasurementSetup):
    n_op = build_N(h, setup)
    smin, smax = sigma_extremes(n_op.matrix)
    return n_op, smin, smax


def hitting_time(
    h: np.ndarray,
    setup: MeasurementSetup,
    rho: np.ndarray,
    rank_tol: float = DEFAULT_RANK_TOL,
    spectrum: Spectrum | None = None,
) -> HittingReport:
    """Hitting probability and expected hitting time from initial state ``rho``.

    The hitting time is reported infinite exactly when the pencil is singular
    and ``p_h < 1 - 1e-8``. An initial state orthogonal to the dark subspace
    still gets the finite pseudoinverse value.
    """
    h = check_hermitian(h)
    n = h.shape[0]
    setup.check(n)
    rho = validate_density(rho, n)
    spectrum = spectrum if spectrum is not None else eigendecompose(h)
    dark = dark_subspace(spectrum, setup.final_vertex)

    n_op, smin, smax = _pencil(h, setup)
    x, sing_x = solve_or_pinv(n_op, vectorize(rho), rank_tol)
    y, _ = solve_or_pinv(n_op, x, rank_tol)
    pf = setup.final_projector(n)
    p_complex = np.trace(pf @ devectorize(x))
    tau_complex = np.trace(pf @ devectorize(y)) / setup.rate

    for name, value in (("p_h", p_complex), ("tau_h", tau_complex)):
        if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
            raise NumericalContractError(f"{name} has imaginary residue {value.imag:.3e}")
    p_h = float(p_complex.real)
    tau = float(tau_complex.real)
    singular = bool(sing_x)
    tau_h = math.inf if singular and p_h < 1.0 - PROBABILITY_TOL else tau
    return HittingReport(
        tau_h=tau_h,
        p_h=p_h,
        pencil_sigma_min=smin,
        pencil_sigma_max=smax,
        dark_dim=dark.dim,
        rate=setup.rate,
        singular=singular,
        tau_conditional=tau,
    )


def hitting_matrices(
    h: np.ndarray, setup: MeasurementSetup, rank_tol: float = DEFAULT_RANK_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Observables whose expectations give ``p_h`` and ``tau_h`` for any initial state.

    Returns ``(P, T)`` with ``Tr{P rho} = p_h`` and ``Tr{T rho} = tau_h``:
    ``P = (N^+)^dagger (P_f)`` and ``T = ((N^+)^2)^dagger (P_f) / rate``,
    adjoints taken in the Hilbert-Schmidt inner product.
    """
    h = check_hermitian(h)
    n = h.shape[0]
    adj = hs_adjoint(build_N(h, setup))
    z, _ = solve_or_pinv(adj, vectorize(setup.final_projector(n)), rank_tol)
    w, _ = solve_or_pinv(adj, z, rank_tol)
    return devectorize(z), devectorize(w) / setup.rate


def pencil_eigenvalues(
    h: np.ndarray, v_f: int, dark: DarkSubspace | None = None, cutoff: float = 1e3
) -> np.ndarray:
    """Finite complex rates ``r`` at which ``N_r = A + B/r`` is singular.

    The common kernel of ``A`` and ``B`` (operators supported on single dark
    eigenspaces) makes the pencil singular for every rate; it is projected out
    first so the remaining pencil is regular. The eigenvalue at infinity (from
    the rank deficiency of ``A``) is defective, so rounding scatters it to
    magnitudes around ``1e7`` times the spectral spread of ``H``; finite ones
    stay within a small multiple of that spread. Everything beyond
    ``cutoff * max(1, spread)`` is dropped as part of the infinite cluster.
    """
    h = check_hermitian(h)
    n = h.shape[0]
    a, b = pencil_pair(h, v_f)
    if dark is None:
        dark = dark_subspace(eigendecompose(h), v_f)
    kernel = []
    energies = dark.energies
    for i in range(dark.dim):
        for j in range(dark.dim):
            if abs(energies[i] - energies[j]) <= 1e-8 * max(1.0, abs(energies[i])):
                kernel.append(vectorize(np.outer(dark.basis[:, i], dark.basis[:, j].conj())))
    if kernel:
        k = np.array(kernel).T
        comp = scipy.linalg.null_space(k.conj().T)
        a = comp.conj().T @ a @ comp
        b = comp.conj().T @ b @ comp
    # det(A + B/r) = 0  <=>  B x = -r A x
    alpha, beta = scipy.linalg.eig(b, -a, right=False, homogeneous_eigvals=True)
    w = np.linalg.eigvalsh(h)
    bound = cutoff * max(1.0, float(w[-1] - w[0]))
    finite = np.abs(alpha) <= bound * np.abs(beta)
    return alpha[finite] / beta[finite]


def detect_infinite(
    g: Graph,
    v_f: int,
    rate: float = 1.0,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> InfiniteHittingDiagnosis:
    """Run three independent tests for initial states that never reach ``v_f``.

    (a) the dark subspace is non-empty; (b) the pencil ``N_rate`` is
    numerically singular; (c) the graph is connected and its complement is
    disconnected in a way that yields an explicit never-hitting state.
    (a) and (b) are equivalent in exact arithmetic; disagreement raises
    :class:`NumericalContractError`. (c) is sufficient but not necessary.
    """
    h = hamiltonian(g)
    dark = dark_subspace(eigendecompose(h), v_f, rank_tol)
    n_op, smin, smax = _pencil(h, MeasurementSetup(v_f, rate))
    ratio = smin / smax if smax > 0 else 0.0
    crit_a = dark.dim > 0
    crit_b = ratio < rank_tol
    if crit_a != crit_b:
        raise NumericalContractError(
            f"dark subspace dim {dark.dim} disagrees with pencil sigma ratio {ratio:.3e}"
        )
    witness_c = None
    if len(connected_components(g)) == 1:
        witness_c = complement_witness(g, v_f)
    crit_c = witness_c is not None
    witness = dark.basis[:, 0].copy() if dark.dim else witness_c
    return InfiniteHittingDiagnosis(
        has_infinite=crit_a or crit_b or crit_c,
        witness=witness,
        dark_nonempty=crit_a,
        pencil_singular=crit_b,
        complement_disconnected=crit_c,
        dark_dim=dark.dim,
        pencil_sigma_ratio=ratio,
        criteria={"dark_subspace": crit_a, "pencil_singular": crit_b, "complement": crit_c},
    )


def lambda_sweep(
    h: np.ndarray,
    v_f: int,
    rho: np.ndarray,
    rates: Sequence[float],
    workers: int | None = None,
) -> list[HittingReport]:
    """One :class:`HittingReport` per rate, in grid order."""
    rates = [float(r) for r in rates]
    if any(r <= 0 for r in rates):
        raise ContractViolation("all rates must be positive")
    if any(b < a for a, b in zip(rates, rates[1:])):
        raise ContractViolation("rate grid must be ascending")
    h = check_hermitian(h)
    spectrum = eigendecompose(h)

    def one(rate: float) -> HittingReport:
        return hitting_time(h, MeasurementSetup(v_f, rate), rho, spectrum=spectrum)

    if workers and workers > 1 and len(rates) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, rates))
    return [one(r) for r in rates]


def fit_asymptotics(sweep: Sequence[HittingReport]) -> tuple[float, float]:
    """Coefficients of ``tau_h ~ c1 * rate + c_1 / rate`` from the sweep endpoints.

    ``c_1`` is ``rate * tau_h`` at the smallest rate (weak-measurement side),
    ``c1`` is ``tau_h / rate`` at the largest (Zeno side). The sweep must reach
    ``rate <= 0.01`` and ``rate >= 100``.
    """
    if not sweep:
        raise ContractViolation("empty sweep")
    if any(r.infinite for r in sweep):
        raise ContractViolation("sweep contains an infinite hitting time; fit undefined")
    lo = min(sweep, key=lambda r: r.rate)
    hi = max(sweep, key=lambda r: r.rate)
    if lo.rate > 0.01 or hi.rate < 100:
        raise ContractViolation(
            f"sweep must span rate <= 0.01 and >= 100, got [{lo.rate}, {hi.rate}]"
        )
    return hi.tau_h / hi.rate, lo.rate * lo.tau_h
