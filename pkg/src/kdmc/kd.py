"""Kinetic-diffusion stepper and the limiting random-walk scheme.

Each KD time step starts with a kinetic flight. If a collision happens
before the step budget runs out, the remainder theta of the step holding
the collision is filled with one Gaussian substep whose mean and variance
are the exact kinetic moments conditioned on the freshly sampled velocity;
that velocity then seeds the next step, carrying the inter-step
correlation. A flight spanning several steps is executed as one kinetic
move and the clock jumps to the end of the step containing the collision.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    ParticleState,
    exponential_keyed,
    map_chunked,
    normal_from_counter,
    normal_keyed,
    sample_maxwellian,
    standard_exponential,
    stream_keys,
)
from .moments import conditioned_mean_var

__all__ = [
    "KdStepRecord",
    "KdEnsemble",
    "diffusive_substep",
    "simulate_kd",
    "simulate_random_walk",
    "kd_ensemble",
    "random_walk_ensemble",
]


@dataclass(frozen=True)
class KdStepRecord:
    """Outcome of a KD advance with kinetic/diffusive time bookkeeping."""

    final_state: ParticleState
    collisions_executed: int
    diffusive_time: float
    kinetic_time: float


def _step_count(state_t, dt, t_end):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    span = t_end - state_t
    if span < 0:
        raise ValueError(f"t_end {t_end} precedes current time {state_t}")
    n = round(span / dt)
    if n == 0 or abs(n * dt - span) > 1e-9 * max(abs(span), dt):
        raise ValueError(f"t_end - t = {span} is not a positive multiple of dt = {dt}")
    return n


def diffusive_substep(v_next, theta, params, rng):
    """Gaussian displacement filling a remainder theta of the time step.

    Mean and variance are the kinetic moments conditioned on the final
    velocity v_next, with the background parameters taken at the start of
    the diffusive motion.
    """
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    z = rng.normal()
    # theta = 0 gives mean 0 and variance 0, hence displacement exactly 0;
    # the draw is still consumed so counters stay aligned with kd_ensemble
    mean, var = conditioned_mean_var(params, theta, v_next)
    return mean + np.sqrt(var) * z


def simulate_kd(state, dt, t_end, field, rng):
    """Advance one particle with the kinetic-diffusion scheme to t_end.

    t_end - state.t must be a whole number of steps dt; the step grid is
    tracked by integer index (t = t0 + n * dt recomputed, never
    accumulated) so theta never drifts.
    """
    n_steps = _step_count(state.t, dt, t_end)
    x, v = state.x, state.v
    n = 0
    collisions = 0
    kinetic_time = 0.0
    diffusive_time = 0.0
    while n < n_steps:
        params = field.params_at(x)
        rem = (n_steps - n) * dt
        dtau = standard_exponential(rng) * (params.eps * params.eps / params.sigma)
        if dtau >= rem:
            x = x + (v / params.eps) * rem
            kinetic_time += rem
            n = n_steps
            break
        x = x + (v / params.eps) * dtau
        kinetic_time += dtau
        j = min(int(dtau // dt), n_steps - n - 1)
        # rounding at the grid edge can leave theta a few ulp outside [0, dt]
        theta = min(max(dt - (dtau - j * dt), 0.0), dt)
        local = field.params_at(x)
        v_next = sample_maxwellian(local, rng)
        x = x + diffusive_substep(v_next, theta, local, rng)
        diffusive_time += theta
        v = v_next
        collisions += 1
        n = n + j + 1
    return KdStepRecord(ParticleState(x, v, t_end), collisions, diffusive_time, kinetic_time)


def simulate_random_walk(state, dt, t_end, params, rng):
    """Advance one particle with the limiting random walk of the scheme.

    Per step: x += u dt + sqrt(2 (T / sigma) dt) * z. The velocity state is
    carried through unused.
    """
    n_steps = _step_count(state.t, dt, t_end)
    drift = params.u * dt
    scale = math.sqrt(2.0 * (params.temperature / params.sigma) * dt)
    x = state.x
    for _ in range(n_steps):
        x = x + drift + scale * rng.normal()
    return ParticleState(x, state.v, t_end)


@dataclass(frozen=True)
class KdEnsemble:
    """Vectorized KD results for n particles.

    loop_seconds is the summed wall time of the stepping loops alone
    (setup, allocation, and summary excluded)."""

    x: np.ndarray
    v: np.ndarray
    collisions: np.ndarray
    diffusive_time: np.ndarray
    kinetic_time: np.ndarray
    loop_seconds: float = 0.0

    @property
    def total_collisions(self):
        return int(self.collisions.sum())


def _kd_chunk(params, x0, v0, dt, n_steps, seed, streams, ctr0):
    n = x0.shape[0]
    rate_scale = params.eps * params.eps / params.sigma
    vel_mean = params.eps * params.u
    vel_sd = math.sqrt(params.temperature)

    x = x0.copy()
    v = v0.copy()
    step = np.zeros(n, dtype=np.int64)
    ctr = ctr0.copy()
    keys = stream_keys(seed, streams)
    idx = np.arange(n)

    out_x = np.empty(n)
    out_v = np.empty(n)
    out_coll = np.zeros(n, dtype=np.int64)
    out_diff = np.zeros(n)
    out_kin = np.zeros(n)

    t_loop = time.perf_counter()
    while x.size:
        rem = (n_steps - step) * dt
        e = exponential_keyed(keys, ctr)
        ctr += np.uint64(1)
        dtau = e * rate_scale
        done = dtau >= rem
        if np.any(done):
            d = idx[done]
            out_x[d] = x[done] + (v[done] / params.eps) * rem[done]
            out_v[d] = v[done]
            out_kin[d] += rem[done]
        live = ~done
        if not np.any(live):
            break
        idx = idx[live]
        keys = keys[live]
        dtau = dtau[live]
        x = x[live] + (v[live] / params.eps) * dtau
        ctr = ctr[live]
        step = step[live]
        out_kin[idx] += dtau
        j = np.minimum((dtau // dt).astype(np.int64), n_steps - step - 1)
        theta = np.minimum(np.maximum(dt - (dtau - j * dt), 0.0), dt)
        v = vel_mean + vel_sd * normal_keyed(keys, ctr)
        ctr += np.uint64(1)
        z = normal_keyed(keys, ctr)
        ctr += np.uint64(1)
        mean, var = conditioned_mean_var(params, theta, v)
        x = x + (mean + np.sqrt(var) * z)
        out_diff[idx] += theta
        out_coll[idx] += 1
        step = step + j + 1
        # particles whose collision step was the last one are finished now;
        # the scalar loop draws nothing further for them either
        at_end = step >= n_steps
        if np.any(at_end):
            d = idx[at_end]
            out_x[d] = x[at_end]
            out_v[d] = v[at_end]
            going = ~at_end
            idx = idx[going]
            keys = keys[going]
            x = x[going]
            v = v[going]
            ctr = ctr[going]
            step = step[going]
    elapsed = time.perf_counter() - t_loop
    return out_x, out_v, out_coll, out_diff, out_kin, np.array([elapsed])


def kd_ensemble(
    params,
    x0,
    v0,
    dt,
    n_steps,
    seed,
    stream_lo=0,
    ctr0=None,
    threads=1,
    chunk=1 << 16,
):
    """Advance n particles over n_steps KD steps of size dt.

    Same stream/counter discipline as kinetic_ensemble: particle i draws
    from stream stream_lo + i starting at ctr0[i]. On the no-collision
    event the draw sequence and position arithmetic coincide with
    kinetic_ensemble bit for bit.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 1 or int(n_steps) != n_steps:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps}")
    x0 = np.asarray(x0, dtype=np.float64)
    v0 = np.asarray(v0, dtype=np.float64)
    n = x0.shape[0]
    if v0.shape[0] != n:
        raise ValueError("x0 and v0 must have equal length")
    if ctr0 is None:
        ctr0 = np.zeros(n, dtype=np.uint64)
    else:
        ctr0 = np.asarray(ctr0, dtype=np.uint64)
        if ctr0.shape == ():
            ctr0 = np.full(n, ctr0, dtype=np.uint64)
    streams_all = np.arange(stream_lo, stream_lo + n, dtype=np.uint64)

    def run(lo, hi):
        return _kd_chunk(
            params, x0[lo:hi], v0[lo:hi], dt, int(n_steps), seed, streams_all[lo:hi], ctr0[lo:hi]
        )

    x, v, coll, diff, kin, loop_t = map_chunked(run, n, threads=threads, chunk=chunk)
    return KdEnsemble(x, v, coll, diff, kin, float(loop_t.sum()))


def random_walk_ensemble(
    params,
    x0,
    dt,
    n_steps,
    seed,
    stream_lo=0,
    ctr0=None,
    threads=1,
    chunk=1 << 16,
):
    """Advance n particles over n_steps random-walk steps; returns positions."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.shape[0]
    if ctr0 is None:
        ctr0 = np.zeros(n, dtype=np.uint64)
    else:
        ctr0 = np.asarray(ctr0, dtype=np.uint64)
        if ctr0.shape == ():
            ctr0 = np.full(n, ctr0, dtype=np.uint64)
    drift = params.u * dt
    scale = math.sqrt(2.0 * (params.temperature / params.sigma) * dt)
    streams_all = np.arange(stream_lo, stream_lo + n, dtype=np.uint64)

    def run(lo, hi):
        x = x0[lo:hi].copy()
        ctr = ctr0[lo:hi].copy()
        streams = streams_all[lo:hi]
        for _ in range(int(n_steps)):
            x = x + drift + scale * normal_from_counter(seed, streams, ctr)
            ctr += np.uint64(1)
        return (x,)

    (x,) = map_chunked(run, n, threads=threads, chunk=chunk)
    return x
