"""Independent numerical estimates of hitting probability and hitting time.

Two routes, neither of which inverts the measurement pencil:

* Monte Carlo over measurement records: exponential waiting times, exact
  unitary evolution between checks, projective collapse at each check.
* Time integration of the no-detection master equation
  ``d rho/dt = -i[H, rho] - rate (rho - Q_f rho Q_f)``, with hitting density
  ``rate * Tr{P_f rho(t)}``.

A third routine iterates the discrete weak-measurement map whose continuum
limit is that master equation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import ContractViolation
from .hitting import dark_subspace, validate_density
from .spectral import Spectrum, check_hermitian, eigendecompose
from .superop import MeasurementSetup, build_N, devectorize, vectorize

__all__ = [
    "TrajectoryStats",
    "MasterEquationEstimate",
    "WeakLimitCurve",
    "mc_estimate",
    "master_equation_estimate",
    "survival_curve",
    "weak_limit_check",
    "default_t_max",
    "BLOCK_SIZE",
]

# Trajectory j draws from the stream keyed by (seed, j // BLOCK_SIZE). Fixed so
# results do not depend on worker count.
BLOCK_SIZE = 4096
UNIT_TOL = 1e-10


@dataclass(frozen=True)
class TrajectoryStats:
    p_h_hat: float
    p_h_stderr: float
    tau_h_hat: float
    tau_h_stderr: float
    n_traj: int
    truncated_fraction: float
    seed: int
    mean_measurements: float

    def to_dict(self) -> dict:
        return asdict(self)


def _block_sums(
    eigvecs: np.ndarray,
    energies: np.ndarray,
    psi0: np.ndarray,
    v_f: int,
    rate: float,
    count: int,
    max_meas: int,
    rng: np.random.Generator,
) -> tuple[int, float, float, int, int]:
    """Run ``count`` trajectories; return (hits, sum t, sum t^2, truncated, measurements)."""
    n = psi0.size
    # work in the eigenbasis: evolution is a phase per component
    coeffs = np.tile(eigvecs.conj().T @ psi0, (count, 1))
    row_f = eigvecs[v_f, :]
    clock = np.zeros(count)
    active = np.arange(count)
    hit_times = np.zeros(count)
    hit = np.zeros(count, dtype=bool)
    n_meas = 0
    for _ in range(max_meas):
        if active.size == 0:
            break
        m = active.size
        dt = rng.exponential(1.0 / rate, size=m)
        u = rng.random(m)
        clock[active] += dt
        c = coeffs[active] * np.exp(-1j * np.outer(dt, energies))
        amp_f = c @ row_f
        p = np.abs(amp_f) ** 2
        n_meas += m
        caught = u < p
        idx = active[caught]
        hit[idx] = True
        hit_times[idx] = clock[idx]
        keep = ~caught
        c = c[keep]
        # collapse onto Q_f: subtract the final-vertex component, renormalize
        c = c - np.outer(amp_f[keep], row_f.conj())
        norms = np.sqrt(np.maximum(1.0 - p[keep], 0.0))
        ok = norms > 0
        c[ok] /= norms[ok, None]
        active = active[keep]
        coeffs[active] = c
    truncated = int(active.size)
    t = hit_times[hit]
    return int(hit.sum()), float(np.sum(t)), float(np.sum(t * t)), truncated, n_meas


def mc_estimate(
    spec: Spectrum,
    setup: MeasurementSetup,
    psi: np.ndarray,
    n_traj: int,
    max_meas: int = 10_000,
    seed: int = 0,
    workers: int | None = None,
) -> TrajectoryStats:
    """Monte Carlo estimate of hitting probability and hitting time.

    Each trajectory waits an exponential(rate) time, evolves exactly, and
    checks the final vertex: detection with probability ``|<v_f|psi>|^2``,
    otherwise collapse onto the complement and continue. Trajectories still
    undetected after ``max_meas`` checks are counted as never hitting.

    ``tau_h_hat`` averages ``t_hit`` (0 for trajectories that never hit) over
    all trajectories, i.e. the unnormalized expectation of the first detection
    time. Results are a deterministic function of ``seed`` and ``n_traj``.
    """
    if n_traj < 1:
        raise ContractViolation("n_traj must be >= 1")
    if max_meas < 1:
        raise ContractViolation("max_meas must be >= 1")
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (spec.n,):
        raise ContractViolation(f"initial state has shape {psi.shape}, expected ({spec.n},)")
    if abs(np.linalg.norm(psi) - 1.0) > UNIT_TOL:
        raise ContractViolation(f"initial state is not normalized (norm {np.linalg.norm(psi)!r})")
    setup.check(spec.n)

    eigvecs = spec.eigenvectors()
    energies = spec.expanded_eigenvalues()
    n_blocks = -(-n_traj // BLOCK_SIZE)

    def run(block: int):
        count = min(BLOCK_SIZE, n_traj - block * BLOCK_SIZE)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
        rng = np.random.Generator(np.random.Philox(ss))
        return _block_sums(eigvecs, energies, psi, setup.final_vertex, setup.rate, count, max_meas, rng)

    if workers and workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    else:
        parts = [run(b) for b in range(n_blocks)]

    hits = sum(p[0] for p in parts)
    s1 = math.fsum(p[1] for p in parts)
    s2 = math.fsum(p[2] for p in parts)
    truncated = sum(p[3] for p in parts)
    meas = sum(p[4] for p in parts)

    p_hat = hits / n_traj
    tau_hat = s1 / n_traj
    var_tau = max(s2 / n_traj - tau_hat**2, 0.0)
    if n_traj > 1:
        var_tau *= n_traj / (n_traj - 1)
    return TrajectoryStats(
        p_h_hat=p_hat,
        p_h_stderr=math.sqrt(p_hat * (1 - p_hat) / n_traj),
        tau_h_hat=tau_hat,
        tau_h_stderr=math.sqrt(var_tau / n_traj),
        n_traj=n_traj,
        truncated_fraction=truncated / n_traj,
        seed=seed,
        mean_measurements=meas / n_traj,
    )


@dataclass(frozen=True)
class MasterEquationEstimate:
    """Quadrature estimates on ``[0, t_max]`` plus bounds on the neglected tail.

    ``p_tail_bound`` is the undetected, non-dark probability left at ``t_max``,
    an upper bound on detections after ``t_max``. ``tau_tail_estimate``
    assumes that remainder decays at ``decay_rate``.
    """

    p_h: float
    tau_h: float
    t_max: float
    n_steps: int
    p_tail_bound: float
    tau_tail_estimate: float
    decay_rate: float


def _decay_rate(h: np.ndarray, setup: MeasurementSetup) -> float:
    """Slowest decay rate of ``exp(-rate t N)`` away from its stationary (dark) modes."""
    n_op = build_N(h, setup)
    re = np.linalg.eigvals(n_op.matrix).real
    scale = max(1.0, float(np.max(np.abs(re))))
    nonzero = re[re > 1e-9 * scale]
    if nonzero.size == 0:
        return 0.0
    return setup.rate * float(nonzero.min())


def default_t_max(h: np.ndarray, setup: MeasurementSetup) -> float:
    """Integration horizon putting the exponential tail near ``e^-20``; ``50/rate`` as fallback."""
    g = _decay_rate(check_hermitian(h), setup)
    if not np.isfinite(g) or g <= 1e-12:
        return 50.0 / setup.rate
    return 20.0 / g


def survival_curve(
    h: np.ndarray, setup: MeasurementSetup, rho: np.ndarray, times: np.ndarray
) -> np.ndarray:
    """Conditional (unnormalized) states ``rho(t)`` on a uniform time grid, shape ``(len(times), n, n)``."""
    h = check_hermitian(h)
    n = h.shape[0]
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros((0, n, n), dtype=complex)
    gen = -setup.rate * build_N(h, setup).matrix
    steps = np.diff(times)
    if steps.size and not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ContractViolation("time grid must be uniform")
    v = scipy.linalg.expm(times[0] * gen) @ vectorize(rho) if times[0] else vectorize(rho)
    out = np.empty((times.size, n * n), dtype=complex)
    out[0] = v
    if steps.size:
        step = scipy.linalg.expm(steps[0] * gen)
        for k in range(1, times.size):
            v = step @ v
            out[k] = v
    return out.reshape(times.size, n, n)


def master_equation_estimate(
    h: np.ndarray,
    setup: MeasurementSetup,
    rho: np.ndarray,
    t_max: float | None = None,
    n_steps: int = 4000,
) -> MasterEquationEstimate:
    """Integrate ``rate * Tr{P_f rho(t)}`` and ``rate * t * Tr{P_f rho(t)}`` by composite Simpson."""
    h = check_hermitian(h)
    n = h.shape[0]
    setup.check(n)
    rho = validate_density(rho, n)
    if n_steps < 2:
        raise ContractViolation("n_steps must be >= 2")
    if t_max is None:
        t_max = default_t_max(h, setup)
    if t_max <= 0:
        raise ContractViolation("t_max must be positive")
    times = np.linspace(0.0, t_max, n_steps + 1)
    states = survival_curve(h, setup, rho, times)
    v_f = setup.final_vertex
    density = setup.rate * states[:, v_f, v_f].real
    p_h = float(scipy.integrate.simpson(density, x=times))
    tau_h = float(scipy.integrate.simpson(times * density, x=times))

    dark = dark_subspace(eigendecompose(h), v_f)
    dark_mass = float(np.trace(dark.projector @ rho).real)
    remaining = max(float(np.trace(states[-1]).real) - dark_mass, 0.0)
    g = _decay_rate(h, setup)
    tau_tail = remaining * (t_max + 1.0 / g) if g > 0 else math.inf
    return MasterEquationEstimate(
        p_h=p_h,
        tau_h=tau_h,
        t_max=float(t_max),
        n_steps=n_steps,
        p_tail_bound=remaining,
        tau_tail_estimate=tau_tail,
        decay_rate=g,
    )


@dataclass(frozen=True)
class WeakLimitCurve:
    times: np.ndarray
    final_population: np.ndarray
    survival: np.ndarray
    epsilon: float
    dt: float


def weak_limit_check(
    h: np.ndarray,
    setup: MeasurementSetup,
    psi: np.ndarray,
    epsilon: float,
    dt: float,
    horizon: float,
) -> WeakLimitCurve:
    """Iterate the discrete weak-measurement map on a ``dt`` grid up to ``horizon``.

    Per step, with probability weight ``1 - eps^2`` the state evolves freely
    for ``dt``; with weight ``eps^2`` a projective check finds the walker
    absent from the final vertex. Keeping only those two no-detection
    branches gives ``rho -> (1-eps^2) U rho U^dagger + eps^2 Q_f rho Q_f``,
    which tends to the master equation as ``eps -> 0`` with
    ``eps^2 / dt = rate`` fixed.
    """
    h = check_hermitian(h)
    n = h.shape[0]
    setup.check(n)
    if epsilon <= 0 or epsilon > 0.1:
        raise ContractViolation(f"epsilon must lie in (0, 0.1], got {epsilon}")
    if dt <= 0 or horizon <= 0:
        raise ContractViolation("dt and horizon must be positive")
    if abs(epsilon**2 / dt - setup.rate) > 0.01 * setup.rate:
        raise ContractViolation(
            f"eps^2/dt = {epsilon**2 / dt:.6g} differs from rate {setup.rate} by more than 1%"
        )
    psi = np.asarray(psi, dtype=complex)
    steps = int(round(horizon / dt))
    u = scipy.linalg.expm(-1j * dt * h)
    q = setup.complement_projector(n)
    keep = 1.0 - epsilon**2
    rho = np.outer(psi, psi.conj())
    pops = np.empty(steps + 1)
    surv = np.empty(steps + 1)
    v_f = setup.final_vertex
    for k in range(steps + 1):
        pops[k] = rho[v_f, v_f].real
        surv[k] = np.trace(rho).real
        rho = keep * (u @ rho @ u.conj().T) + epsilon**2 * (q @ rho @ q)
    return WeakLimitCurve(np.arange(steps + 1) * dt, pops, surv, epsilon, dt)
