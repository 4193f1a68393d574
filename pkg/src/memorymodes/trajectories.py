"""Stochastic pure-state unravelings of the exact evolutions.

Two engines share the same bookkeeping. The first runs on the emitter alone,
driven by the extracted coefficient series: while the decay rate is
non-negative members fall to the ground state, and during negative-rate
intervals ground members jump *back* into the deterministically evolving
state, restoring previously destroyed superpositions. The second is a
standard Monte Carlo wave-function process on the emitter+mode sector whose
constant leakage rates never reverse.

Because every not-yet-jumped member shares one deterministic pure state,
each engine tracks (counts, shared state) instead of individual walkers; the
per-member random draws still happen individually, addressed by
(member, step) on a counter-based stream, so results are bit-identical for
any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .amplitudes import (
    AmplitudeState1,
    AmplitudeState2,
    propagate_double,
    propagate_single,
)
from .density import DensityMatrix
from .errors import GridMismatch, InvalidRates, StepTooLarge
from .models import BandGapModel, LorentzianModel, TimeGrid, derive_two_pseudomode_constants
from .rates import RateTrajectory
from .rng import resolve_workers, step_uniforms

__all__ = [
    "MAX_JUMP_PROBABILITY",
    "NmqjEnsemble",
    "McwfEnsemble",
    "ComparisonReport",
    "run_nmqj",
    "run_mcwf_pseudomode",
    "traced_ensemble_atom_state",
    "ensemble_ground_population",
    "compare_unravelings",
]

#: hard bound on any single-step jump probability (first-order sampling)
MAX_JUMP_PROBABILITY = 0.1

# stream ids keep the two engines statistically independent under one seed
NMQJ_STREAM = 0x4E4D514A
MCWF_STREAM = 0x4D435746

# below this member count threading costs more than it saves
_MIN_CHUNK = 20_000


@dataclass(frozen=True)
class NmqjEnsemble:
    """Jump/reverse-jump ensemble on the emitter.

    ``n0[k]`` members share the normalized deterministic state ``psi0[k]``
    (components C_g, C_e, rotating frame) and ``n1[k]`` sit in the ground
    state; ``n0 + n1 == n_members`` at every step.
    """

    grid: TimeGrid
    n_members: int
    n0: np.ndarray
    n1: np.ndarray
    psi0: np.ndarray
    seed: int
    dt: float


@dataclass(frozen=True)
class McwfEnsemble:
    """Monte Carlo wave-function ensemble on the emitter+mode sector.

    ``psi0[k]`` is the shared normalized no-jump state on the sector basis
    (vacuum, modes, excited); jumped members occupy the joint ground state.
    ``jump_counts[k]`` records the jumps taken on step k per channel.
    """

    grid: TimeGrid
    n_members: int
    n0: np.ndarray
    n1: np.ndarray
    psi0: np.ndarray
    seed: int
    dt: float
    jump_counts: np.ndarray


@dataclass(frozen=True)
class ComparisonReport:
    """Ground-population agreement between the two unravelings and a reference.

    ``sigma`` is the binomial standard error from the exact probability at
    the smaller ensemble size; ``z`` is the larger of the two per-engine
    deviations in units of that engine's own standard error.
    """

    grid: TimeGrid
    pg_nmqj: np.ndarray
    pg_mcwf: np.ndarray
    pg_exact: np.ndarray
    sigma: np.ndarray
    z: np.ndarray
    max_z_score: float
    max_cross_z: float


def _coerce_unit_vector(initial, dim: int) -> np.ndarray:
    if isinstance(initial, (AmplitudeState1, AmplitudeState2)):
        raise TypeError("pass the state on the sector basis (vacuum, modes, excited)")
    vec = np.asarray(initial, dtype=complex)
    if vec.shape != (dim,):
        raise ValueError(f"expected a {dim}-component pure state, got shape {vec.shape}")
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"pure state must be normalized, got norm {norm}")
    return vec


def _count_below(
    seed: int,
    stream: int,
    step: int,
    count: int,
    thresholds: np.ndarray,
    pool: ThreadPoolExecutor | None,
    workers: int,
) -> np.ndarray:
    """How many of the step's first ``count`` draws fall below each threshold.

    Skipping a step draws nothing from other steps: positions are addressed
    by (member, step), so conditional sampling stays reproducible.
    """
    if count == 0 or thresholds[-1] <= 0.0:
        return np.zeros(len(thresholds), dtype=np.int64)

    def chunk_counts(lo: int, hi: int) -> np.ndarray:
        draws = step_uniforms(seed, stream, step, lo, hi)
        return np.array([np.count_nonzero(draws < t) for t in thresholds], dtype=np.int64)

    if pool is None or count < 2 * _MIN_CHUNK:
        return chunk_counts(0, count)
    bounds = np.linspace(0, count, workers + 1, dtype=np.int64)
    futures = [
        pool.submit(chunk_counts, int(lo), int(hi))
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    return np.sum([f.result() for f in futures], axis=0)


def run_nmqj(
    rates: RateTrajectory,
    initial,
    n_members: int,
    seed: int,
    grid: TimeGrid | None = None,
    *,
    workers: int | None = None,
    max_jump_probability: float = MAX_JUMP_PROBABILITY,
) -> NmqjEnsemble:
    """Sample the emitter unraveling driven by a signed decay-rate series.

    Per step the shared state drifts under the non-Hermitian generator
    (shift/2 - i*rate/2 acting on the excited projector) and renormalizes.
    For rate >= 0 each of the ``n0`` members falls to the ground state with
    probability rate*dt*|C_e|^2; for rate < 0 each of the ``n1`` ground
    members returns to the *current* shared state with probability
    (n0/n1)*|rate|*dt*|C_e|^2 (zero when n1 = 0, as no source members exist).
    """
    if grid is None:
        grid = rates.grid
    elif not np.array_equal(grid.times, rates.grid.times):
        raise GridMismatch("ensemble grid must match the rate grid")
    if n_members < 1:
        raise ValueError(f"need at least one member, got {n_members}")
    if not rates.valid.all():
        first = int(np.flatnonzero(~rates.valid)[0])
        raise InvalidRates(
            f"rate series is invalid at t={grid.times[first]:.6g}; "
            "the unraveling needs finite coefficients on the whole grid"
        )
    psi_init = _coerce_unit_vector(initial, 2)
    workers = resolve_workers(workers)

    times = grid.times
    dt = grid.dt
    gamma = np.asarray(rates.gamma, dtype=float)
    shift = np.asarray(rates.s, dtype=float) - 2.0 * rates.omega0

    # no-jump state: C_g frozen, C_e attenuated/rephased by the accumulated
    # complex rate; exact up to the trapezoid quadrature of the series
    half_decay = 0.5 * cumulative_trapezoid(gamma, times, initial=0.0)
    half_phase = 0.5 * cumulative_trapezoid(shift, times, initial=0.0)
    c_g, c_e = psi_init
    if c_g == 0:
        excited = (c_e / abs(c_e)) * np.exp(-1j * half_phase)
        psi0 = np.column_stack([np.zeros_like(excited), excited])
        excited_pop = np.ones(len(times))
    else:
        magnitude = abs(c_e) * np.exp(-half_decay)
        norm = np.hypot(abs(c_g), magnitude)
        unnormalized = c_e * np.exp(-half_decay - 1j * half_phase)
        psi0 = np.column_stack([np.full(len(times), c_g), unnormalized]) / norm[:, None]
        excited_pop = (magnitude / norm) ** 2

    direct = gamma >= 0.0
    p_direct = np.where(direct, gamma, 0.0) * dt * excited_pop
    worst = p_direct[:-1].max(initial=0.0)
    if worst > max_jump_probability:
        k = int(np.argmax(p_direct[:-1]))
        raise StepTooLarge(
            f"jump probability {worst:.3g} at t={times[k]:.6g} exceeds "
            f"{max_jump_probability}; refine the grid"
        )

    n_points = len(times)
    n0 = np.empty(n_points, dtype=np.int64)
    n1 = np.empty(n_points, dtype=np.int64)
    cur0, cur1 = n_members, 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    threshold = np.empty(1)
    try:
        for k in range(n_points):
            n0[k] = cur0
            n1[k] = cur1
            if k == n_points - 1:
                break
            if direct[k]:
                threshold[0] = p_direct[k]
                moved = int(_count_below(seed, NMQJ_STREAM, k, cur0, threshold, pool, workers)[0])
                cur0 -= moved
                cur1 += moved
            elif cur1 > 0:
                p_reverse = (cur0 / cur1) * (-gamma[k]) * dt * excited_pop[k]
                if p_reverse > max_jump_probability:
                    raise StepTooLarge(
                        f"reverse-jump probability {p_reverse:.3g} at t={times[k]:.6g} "
                        f"exceeds {max_jump_probability}; refine the grid or enlarge "
                        "the ensemble"
                    )
                threshold[0] = p_reverse
                moved = int(_count_below(seed, NMQJ_STREAM, k, cur1, threshold, pool, workers)[0])
                cur1 -= moved
                cur0 += moved
    finally:
        if pool is not None:
            pool.shutdown()
    return NmqjEnsemble(grid, n_members, n0, n1, psi0, seed, dt)


def run_mcwf_pseudomode(
    model: LorentzianModel | BandGapModel,
    initial,
    n_members: int,
    seed: int,
    grid: TimeGrid,
    *,
    workers: int | None = None,
    max_jump_probability: float = MAX_JUMP_PROBABILITY,
) -> McwfEnsemble:
    """Monte Carlo wave-function sampling on the emitter+mode sector.

    The deterministic no-jump state comes from the amplitude propagator (the
    vacuum component is left invariant by the non-Hermitian drift). Each
    remaining member jumps to the joint ground state with probability
    sum_i rate_i*dt*(mode-i population), resolved per channel for the
    bookkeeping; the rates are non-negative constants so no reverse jumps
    ever occur.
    """
    if n_members < 1:
        raise ValueError(f"need at least one member, got {n_members}")
    single = isinstance(model, LorentzianModel)
    dim = 3 if single else 4
    psi_init = _coerce_unit_vector(initial, dim)
    workers = resolve_workers(workers)

    vacuum = psi_init[0]
    if single:
        traj = propagate_single(model, AmplitudeState1(c1=psi_init[2], b1=psi_init[1]), grid)
        channel_rates = np.array([model.gamma])
        mode_slice = slice(1, 2)
    else:
        traj = propagate_double(
            model, AmplitudeState2(c1=psi_init[3], a1=psi_init[1], a2=psi_init[2]), grid
        )
        constants = derive_two_pseudomode_constants(model)
        channel_rates = np.array([constants.gamma_p1, constants.gamma_p2])
        mode_slice = slice(1, 3)

    n_points = grid.n_steps
    phi = np.empty((n_points, dim), dtype=complex)
    phi[:, 0] = vacuum
    phi[:, mode_slice] = traj.states[:, 1:]
    phi[:, dim - 1] = traj.c1
    norms = np.linalg.norm(phi, axis=1)
    psi0 = phi / norms[:, None]
    mode_pops = np.abs(psi0[:, mode_slice]) ** 2

    dt = grid.dt
    p_channel = mode_pops * channel_rates * dt
    p_cum = np.cumsum(p_channel, axis=1)
    worst = p_cum[:-1, -1].max(initial=0.0)
    if worst > max_jump_probability:
        k = int(np.argmax(p_cum[:-1, -1]))
        raise StepTooLarge(
            f"total jump probability {worst:.3g} at t={grid.times[k]:.6g} exceeds "
            f"{max_jump_probability}; refine the grid"
        )

    n_channels = len(channel_rates)
    n0 = np.empty(n_points, dtype=np.int64)
    n1 = np.empty(n_points, dtype=np.int64)
    jump_counts = np.zeros((n_points - 1, n_channels), dtype=np.int64)
    cur0, cur1 = n_members, 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for k in range(n_points):
            n0[k] = cur0
            n1[k] = cur1
            if k == n_points - 1:
                break
            below = _count_below(seed, MCWF_STREAM, k, cur0, p_cum[k], pool, workers)
            jump_counts[k] = np.diff(below, prepend=0)
            moved = int(below[-1])
            cur0 -= moved
            cur1 += moved
    finally:
        if pool is not None:
            pool.shutdown()
    return McwfEnsemble(grid, n_members, n0, n1, psi0, seed, dt, jump_counts)


def traced_ensemble_atom_state(ens: McwfEnsemble) -> list[DensityMatrix]:
    """Emitter marginal of the ensemble state at every step.

    Mixes the mode-traced shared state with the jumped fraction:
    (n0/N) Tr_modes |psi0><psi0| + (n1/N) |g><g|.
    """
    out = []
    n = ens.n_members
    for k in range(ens.grid.n_steps):
        psi = ens.psi0[k]
        w0 = ens.n0[k] / n
        w1 = ens.n1[k] / n
        ee = w0 * abs(psi[-1]) ** 2
        eg = w0 * psi[-1] * np.conj(psi[0])
        gg = w0 * float(np.sum(np.abs(psi[:-1]) ** 2)) + w1
        out.append(DensityMatrix(np.array([[gg, np.conj(eg)], [eg, ee]])))
    return out


def ensemble_ground_population(ens: NmqjEnsemble | McwfEnsemble) -> np.ndarray:
    """Ground population series n1/N + (n0/N)*(emitter-ground weight of psi0)."""
    ground_weight = np.sum(np.abs(ens.psi0[:, :-1]) ** 2, axis=1)
    n = ens.n_members
    return ens.n1 / n + (ens.n0 / n) * ground_weight


def _z_scores(diff: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    out = np.zeros_like(diff)
    positive = sigma > 0.0
    out[positive] = diff[positive] / sigma[positive]
    out[~positive & (diff > 1e-12)] = np.inf
    return out


def compare_unravelings(
    a: NmqjEnsemble, b: McwfEnsemble, exact: list[DensityMatrix]
) -> ComparisonReport:
    """Check both unravelings' ground populations against an exact series.

    The binomial standard error uses the exact probability, so degenerate
    points (p = 0 or 1) produce zero sigma and a zero score whenever the
    observation agrees exactly.
    """
    if not np.array_equal(a.grid.times, b.grid.times):
        raise GridMismatch("ensembles were sampled on different grids")
    if len(exact) != a.grid.n_steps:
        raise GridMismatch(
            f"reference series has {len(exact)} states for {a.grid.n_steps} grid points"
        )
    p_exact = np.array([rho.matrix[0, 0].real for rho in exact])
    variance = np.clip(p_exact * (1.0 - p_exact), 0.0, None)
    sigma_a = np.sqrt(variance / a.n_members)
    sigma_b = np.sqrt(variance / b.n_members)
    pg_a = ensemble_ground_population(a)
    pg_b = ensemble_ground_population(b)
    z_a = _z_scores(np.abs(pg_a - p_exact), sigma_a)
    z_b = _z_scores(np.abs(pg_b - p_exact), sigma_b)
    z = np.maximum(z_a, z_b)
    sigma = np.sqrt(variance / min(a.n_members, b.n_members))
    cross_sigma = np.sqrt(variance * (1.0 / a.n_members + 1.0 / b.n_members))
    cross_z = _z_scores(np.abs(pg_a - pg_b), cross_sigma)
    return ComparisonReport(
        grid=a.grid,
        pg_nmqj=pg_a,
        pg_mcwf=pg_b,
        pg_exact=p_exact,
        sigma=sigma,
        z=z,
        max_z_score=float(np.max(z)),
        max_cross_z=float(np.max(cross_z)),
    )
