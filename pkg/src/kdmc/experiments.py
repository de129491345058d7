"""Experiment suites: single-step error sweeps, histograms, speedup, and
the self-verifying moment/constant checks.

Every experiment is a pure function of (config, seed): particle streams are
derived from the seed and fixed stream offsets, so reruns produce identical
rows at any thread count. Wall-clock columns are the one exception and can
be switched off (measure_time) when byte-identical output matters.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .config import MalformedConfigError, emit_csv
from .core import BackgroundParams, normal_from_counter, uniform_open_closed
from .kd import kd_ensemble, random_walk_ensemble
from .kinetic import kinetic_ensemble
from .metrics import HistogramSpec, w1_sorted
from .moments import (
    _one_minus_exp,
    bound_high_collisional,
    bound_low_conditioned,
    conditioned_mean_var,
    mean_conditioned,
    mean_unconditioned,
    var_conditioned,
    var_unconditioned,
    verify_paper_constants,
)
from .oracles import conditioned_increment_ensemble, sample_moments

__all__ = [
    "ExperimentResult",
    "run_single_step_low",
    "run_single_step_high",
    "run_histogram",
    "run_speedup",
    "run_moments_check",
    "run_constants_check",
    "run_experiment",
]

# disjoint stream ranges for the independent draw families of one point
_POINT_STRIDE = 1 << 34
_SIDE_OFFSET = 1 << 60
_PERMUTE_OFFSET = 3 << 60


@dataclass(frozen=True)
class ExperimentResult:
    header: tuple
    rows: list
    ok: bool | None = None
    message: str = ""

    def write(self, path):
        emit_csv(self.rows, path, self.header)


def _rejection_kinetic_paths(params, v0, dt, n, seed, stream_lo, threads=1):
    """Simulate kinetic single steps from (0, v0), keeping paths with at
    least one collision until n are collected.

    Candidates are scanned in stream order, so the accepted set is a pure
    function of the seed. Rejection leaves the conditioned law unbiased.
    Returns (stream ids, displacement, first overlap, last overlap, final
    velocity) of the accepted paths.
    """
    accept_p = max(float(_one_minus_exp(params.collisionality(dt))), 1e-12)
    kept = []
    got = 0
    next_candidate = 0
    while got < n:
        want = int((n - got) / accept_p * 1.15) + 64
        want = min(want, 1 << 21)
        ids = stream_lo + np.arange(next_candidate, next_candidate + want, dtype=np.uint64)
        next_candidate += want
        ens = kinetic_ensemble(
            params,
            np.zeros(want),
            np.full(want, v0),
            dt,
            seed,
            stream_lo=int(ids[0]),
            threads=threads,
        )
        keep = ens.collisions >= 1
        kept.append((ids[keep], ens.x[keep], ens.first_overlap[keep],
                     ens.last_overlap[keep], ens.v[keep]))
        got += int(keep.sum())
    parts = [np.concatenate([k[i] for k in kept])[:n] for i in range(5)]
    return tuple(parts)


def _w1_point_vs_gaussian(mean, sd, point):
    """Closed-form W1 between N(mean, sd**2) and a point mass: E|X - d|."""
    sd = np.asarray(sd, dtype=np.float64)
    t = np.where(sd > 0, (point - mean) / np.where(sd > 0, sd, 1.0), 0.0)
    phi = np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    value = sd * (2.0 * phi + t * (2.0 * ndtr(t) - 1.0))
    return np.where(sd > 0, value, np.abs(point - mean))


def _stratified_w1(order_key, a, b, bins):
    """Mean within-stratum W1 after sorting pairs into equal-count bins of
    the conditioning key: the coupling matches on the key and is optimal
    (comonotone) inside each stratum."""
    order = np.argsort(order_key, kind="stable")
    a = a[order]
    b = b[order]
    n = a.size
    edges = np.linspace(0, n, bins + 1).astype(np.int64)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            total += w1_sorted(a[lo:hi], b[lo:hi]) * (hi - lo)
    return total / n


def run_single_step_low(config):
    """Single-step kinetic-vs-KD error against the low-collisional bound.

    Paths are restricted to at least one collision by rejection. The
    (v, theta) column conditions on the final velocity and the final-flight
    window of each simulated path and averages the conditional W1, which is
    available in closed form because the conditional KD law is Gaussian and
    the conditional kinetic motion over that window is the straight flight.
    The v column couples the two simulated schemes (shared first collision
    and final velocity per pair) within strata of the final velocity.
    """
    params = BackgroundParams(config.sigma, config.u, config.temperature, config.eps)
    n = config.particles
    rows = []
    for i, dt in enumerate(config.dt_grid):
        base = config.seed
        lo = i * _POINT_STRIDE
        streams, dx_kin, tau_first, theta_last, v_next = _rejection_kinetic_paths(
            params, config.v0, dt, n, base, lo, threads=config.threads
        )
        m_last, var_last = conditioned_mean_var(params, theta_last, v_next)
        cond_w1 = _w1_point_vs_gaussian(
            m_last, np.sqrt(var_last), (v_next / params.eps) * theta_last
        )
        w1_vtheta = float(np.mean(cond_w1))
        # coupled KD paths: same first collision, same final velocity
        theta_kd = dt - tau_first
        z = normal_from_counter(base, streams + np.uint64(_SIDE_OFFSET), np.uint64(0))
        m_kd, var_kd = conditioned_mean_var(params, theta_kd, v_next)
        dx_kd = (config.v0 / params.eps) * tau_first + m_kd + np.sqrt(var_kd) * z
        w1_v = _stratified_w1(v_next, dx_kin, dx_kd, config.velocity_bins)
        rows.append((dt, w1_vtheta, w1_v, bound_low_conditioned(params, dt)))
    return ExperimentResult(("dt", "w1_cond_v_theta", "w1_cond_v", "bound"), rows)


def _permutation_floor(pooled, reps, seed, stream):
    """Mean W1 between random halves of the pooled sample: the resolution
    limit of the two-sample distance at this sample size."""
    n = pooled.size // 2
    vals = []
    for b in range(reps):
        u = uniform_open_closed(seed, np.uint64(stream + b), np.arange(pooled.size, dtype=np.uint64))
        order = np.argsort(u, kind="stable")
        vals.append(w1_sorted(pooled[order[:n]], pooled[order[n : 2 * n]]))
    return float(np.mean(vals))


def run_single_step_high(config):
    """Single-step kinetic-vs-KD error sweep over the collisionality.

    Both schemes drop the initial correlated flight (it is identical in the
    two processes and vanishes in the diffusive limit): the kinetic side
    starts from a resampled velocity and the KD side is one diffusive
    substep over the whole step. With v_final_std set, both are conditioned
    on the same pinned final velocity.
    """
    rows = []
    n = config.particles
    dt = config.dt
    for i, coll in enumerate(config.collisionality_grid):
        eps = math.sqrt(config.sigma * dt / coll)
        params = BackgroundParams(config.sigma, config.u, config.temperature, eps)
        lo = i * _POINT_STRIDE
        if config.v_final_std is None:
            v_kin = params.eps * params.u + math.sqrt(
                config.temperature
            ) * normal_from_counter(config.seed, lo + np.arange(n, dtype=np.uint64), np.uint64(0))
            v_kd = params.eps * params.u + math.sqrt(config.temperature) * normal_from_counter(
                config.seed, lo + _SIDE_OFFSET + np.arange(n, dtype=np.uint64), np.uint64(0)
            )
        else:
            pinned = params.eps * params.u + config.v_final_std * math.sqrt(config.temperature)
            v_kin = np.full(n, pinned)
            v_kd = v_kin
        dx_kin = conditioned_increment_ensemble(
            params,
            np.full(n, dt),
            v_kin,
            seed=config.seed,
            stream_lo=lo,
            ctr0=np.uint64(1),
            threads=config.threads,
        )
        z = normal_from_counter(
            config.seed, lo + _SIDE_OFFSET + np.arange(n, dtype=np.uint64), np.uint64(1)
        )
        dx_kd = mean_conditioned(params, dt, v_kd) + np.sqrt(var_conditioned(params, dt, v_kd)) * z
        w1 = w1_sorted(dx_kin, dx_kd)
        floor = _permutation_floor(
            np.concatenate([dx_kin, dx_kd]),
            config.bootstrap_reps,
            config.seed,
            _PERMUTE_OFFSET + i * config.bootstrap_reps,
        )
        bound, _ = bound_high_collisional(params, dt, dt)
        rows.append((coll, eps, w1, bound, floor))
    return ExperimentResult(("collisionality", "eps", "w1", "bound", "noise_floor"), rows)


def _bimodal_source(n, seed, stream_lo):
    """Positions at zero; velocities an even mix of N(-10, 1) and N(10, 1)."""
    streams = stream_lo + np.arange(n, dtype=np.uint64)
    sign = np.where(uniform_open_closed(seed, streams, np.uint64(0)) <= 0.5, -10.0, 10.0)
    v0 = sign + normal_from_counter(seed, streams, np.uint64(1))
    return np.zeros(n), v0


def run_histogram(config):
    """Final-position histograms of the three schemes from the bimodal
    source, one KD/random-walk step covering the whole horizon."""
    spec = HistogramSpec(config.histogram_lo, config.histogram_hi, config.histogram_bins)
    n = config.particles
    rows = []
    header = (
        "eps",
        "bin_lo",
        "bin_hi",
        "kinetic_count",
        "kd_count",
        "rw_count",
        "w1_kinetic_kd",
        "w1_kinetic_rw",
        "w1_kd_rw",
        "pooled_std",
    )
    for i, eps in enumerate(config.eps_list):
        params = BackgroundParams(config.sigma, config.u, config.temperature, eps)
        lo = i * _POINT_STRIDE
        x0, v0 = _bimodal_source(n, config.seed, lo)
        ctr0 = np.uint64(2)
        kin = kinetic_ensemble(
            params, x0, v0, config.t_end, config.seed, stream_lo=lo, ctr0=ctr0,
            threads=config.threads,
        )
        kd = kd_ensemble(
            params, x0, v0, config.dt, _steps(config), config.seed, stream_lo=lo, ctr0=ctr0,
            threads=config.threads,
        )
        rw = random_walk_ensemble(
            params, x0, config.dt, _steps(config), config.seed, stream_lo=lo, ctr0=ctr0,
            threads=config.threads,
        )
        w1_kin_kd = w1_sorted(kin.x, kd.x)
        w1_kin_rw = w1_sorted(kin.x, rw)
        w1_kd_rw = w1_sorted(kd.x, rw)
        pooled = float(np.std(np.concatenate([kin.x, kd.x]), ddof=1))
        counts = (spec.counts(kin.x), spec.counts(kd.x), spec.counts(rw))
        edges = spec.edges
        for b in range(spec.bins):
            rows.append(
                (
                    eps,
                    float(edges[b]),
                    float(edges[b + 1]),
                    int(counts[0][b]),
                    int(counts[1][b]),
                    int(counts[2][b]),
                    w1_kin_kd,
                    w1_kin_rw,
                    w1_kd_rw,
                    pooled,
                )
            )
    return ExperimentResult(header, rows)


def _steps(config):
    n = round(config.t_end / config.dt)
    if n < 1 or abs(n * config.dt - config.t_end) > 1e-9 * max(config.t_end, config.dt):
        raise MalformedConfigError(f"t_end {config.t_end} is not a multiple of dt {config.dt}")
    return n


def run_speedup(config):
    """Executed-collision counts and wall time, kinetic vs KD, over a
    collisionality sweep. Both schemes run on the same streams so the
    count ratio has almost no Monte Carlo noise."""
    rows = []
    n = config.particles
    dt = config.dt
    n_steps = _steps(config)
    header = ["collisionality", "eps", "kinetic_collisions", "kd_collisions",
              "measured_ratio", "analytic_ratio"]
    if config.measure_time:
        header += ["kinetic_seconds", "kd_seconds", "speedup"]
    for i, coll in enumerate(config.collisionality_grid):
        eps = math.sqrt(config.sigma * dt / coll)
        params = BackgroundParams(config.sigma, config.u, config.temperature, eps)
        lo = i * _POINT_STRIDE
        streams = lo + np.arange(n, dtype=np.uint64)
        v0 = params.eps * params.u + math.sqrt(config.temperature) * normal_from_counter(
            config.seed, streams, np.uint64(0)
        )
        x0 = np.zeros(n)

        def kin_run():
            return kinetic_ensemble(
                params, x0, v0, config.t_end, config.seed, stream_lo=lo, ctr0=np.uint64(1),
                threads=config.threads,
            )

        def kd_run():
            return kd_ensemble(
                params, x0, v0, dt, n_steps, config.seed, stream_lo=lo, ctr0=np.uint64(1),
                threads=config.threads,
            )

        reps = config.timing_reps if config.measure_time else 1
        kin_times, kd_times = [], []
        for _ in range(reps):
            kin = kin_run()
            kin_times.append(kin.loop_seconds)
            kd = kd_run()
            kd_times.append(kd.loop_seconds)
        kin_total = kin.total_collisions
        kd_total = kd.total_collisions
        measured = kin_total / max(kd_total, 1)
        analytic = coll / float(_one_minus_exp(coll))
        row = [coll, eps, kin_total, kd_total, measured, analytic]
        if config.measure_time:
            kin_t = float(np.median(kin_times))
            kd_t = float(np.median(kd_times))
            row += [kin_t, kd_t, kin_t / kd_t]
        rows.append(tuple(row))
    return ExperimentResult(tuple(header), rows)


_MOMENTS_COLLISIONALITY = (0.1, 1.0, 10.0, 100.0)
_MOMENTS_TEMPERATURE = (0.5, 1.0)
_MOMENTS_DRIFT = (0.0, 1.0)
_MOMENTS_VSTD = (-2.0, 0.0, 2.0)


def run_moments_check(config):
    """Closed-form moments against brute-force ensembles at 4 standard
    errors, over the collisionality/temperature/drift grid."""
    rows = []
    ok = True
    n = config.particles
    dt = config.dt
    row_index = 0
    for coll in _MOMENTS_COLLISIONALITY:
        eps = math.sqrt(config.sigma * dt / coll)
        for temp in _MOMENTS_TEMPERATURE:
            for u in _MOMENTS_DRIFT:
                params = BackgroundParams(config.sigma, u, temp, eps)
                lo = row_index * _POINT_STRIDE
                row_index += 1
                streams = lo + np.arange(n, dtype=np.uint64)
                v0 = params.eps * u + math.sqrt(temp) * normal_from_counter(
                    config.seed, streams, np.uint64(0)
                )
                kin = kinetic_ensemble(
                    params, np.zeros(n), v0, dt, config.seed, stream_lo=lo, ctr0=np.uint64(1),
                    threads=config.threads,
                )
                mom = sample_moments(kin.x)
                mean_ref = mean_unconditioned(params, dt)
                var_ref = var_unconditioned(params, dt)
                mean_ok = abs(mom.mean - mean_ref) <= 4 * mom.se_mean
                var_ok = abs(mom.variance - var_ref) <= 4 * mom.se_variance
                ok = ok and mean_ok and var_ok
                rows.append(
                    ("unconditioned", coll, temp, u, "", mean_ref, mom.mean, mom.se_mean,
                     var_ref, mom.variance, mom.se_variance, mean_ok and var_ok)
                )
                for c in _MOMENTS_VSTD:
                    v_final = params.eps * u + c * math.sqrt(temp)
                    lo = row_index * _POINT_STRIDE
                    row_index += 1
                    dx = conditioned_increment_ensemble(
                        params, dt, v_final, n=n, seed=config.seed, stream_lo=lo,
                        threads=config.threads,
                    )
                    mom = sample_moments(dx)
                    mean_ref = mean_conditioned(params, dt, v_final)
                    var_ref = var_conditioned(params, dt, v_final)
                    mean_ok = abs(mom.mean - mean_ref) <= 4 * mom.se_mean
                    var_ok = abs(mom.variance - var_ref) <= 4 * mom.se_variance
                    ok = ok and mean_ok and var_ok
                    rows.append(
                        ("conditioned", coll, temp, u, v_final, mean_ref, mom.mean, mom.se_mean,
                         var_ref, mom.variance, mom.se_variance, mean_ok and var_ok)
                    )
    header = (
        "kind", "collisionality", "temperature", "u", "v_final",
        "mean_closed", "mean_mc", "mean_se", "var_closed", "var_mc", "var_se", "ok",
    )
    message = "all moment comparisons within 4 SE" if ok else "moment comparison outside 4 SE"
    return ExperimentResult(header, rows, ok=ok, message=message)


def run_constants_check(config):
    """Quadrature reproduction of the two bound constants."""
    report = verify_paper_constants(config.quadrature_points)
    rows = [
        ("velocity_integral", report.velocity_integral, report.velocity_integral_target,
         5e-4, report.velocity_integral_ok, "quadrature"),
        ("hermite_w1", report.hermite_w1, report.hermite_w1_target,
         1e-2, report.hermite_w1_ok, "quadrature"),
        ("k4", "", report.k4, "", "", "not independently verifiable"),
    ]
    header = ("name", "computed", "target", "tolerance", "ok", "note")
    ok = report.all_ok
    message = "constants reproduced" if ok else "constant quadrature outside tolerance"
    return ExperimentResult(header, rows, ok=ok, message=message)


_RUNNERS = {
    "single-step-low": run_single_step_low,
    "single-step-high": run_single_step_high,
    "histogram": run_histogram,
    "speedup": run_speedup,
    "moments-check": run_moments_check,
    "constants-check": run_constants_check,
}


def run_experiment(config):
    return _RUNNERS[config.experiment](config)
