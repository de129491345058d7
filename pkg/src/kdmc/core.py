"""Domain types, counter-based random streams, and velocity sampling.

Velocities are stored in scaled form: a particle with velocity sample v
moves at physical speed v / eps. Post-collisional velocities follow a
Maxwellian with mean eps * u and variance T.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

__all__ = [
    "BackgroundParams",
    "ParticleState",
    "PiecewiseConstantField",
    "RngStream",
    "raw64",
    "raw64_keyed",
    "stream_keys",
    "uniform_open",
    "uniform_open_closed",
    "normal_from_counter",
    "normal_keyed",
    "exponential_from_counter",
    "exponential_keyed",
    "exponential_from_uniform",
    "sample_maxwellian",
    "standard_exponential",
    "map_chunked",
]

# splitmix64 increment and finalizer constants
_PHI = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = float(2.0**-53)


def _mix64(z):
    """splitmix64 finalizer; modular uint64 arithmetic, vectorized."""
    t = z >> _S30
    t ^= z
    t *= _M1
    z = t >> _S27
    z ^= t
    z *= _M2
    t = z >> _S31
    t ^= z
    return t


def _stream_key(seed, stream):
    # callers guarantee stream is a uint64 array of ndim >= 1
    seed = np.asarray(seed, dtype=np.uint64)
    return _mix64(seed ^ _mix64(stream + _PHI))


def raw64(seed, stream, counter):
    """64 random bits as a pure function of (seed, stream, counter).

    Each stream walks its own window of the splitmix64 Weyl orbit; the draw
    sequence is replay-exact regardless of execution order or threading.
    """
    stream = np.asarray(stream, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    # 0-d uint64 operations fall back to numpy scalars, which warn on the
    # intended modular overflow; the hash runs on 1-d views instead
    scalar_out = stream.ndim == 0 and counter.ndim == 0
    if stream.ndim == 0:
        stream = stream.reshape(1)
    if counter.ndim == 0:
        counter = counter.reshape(1)
    out = _mix64(_stream_key(seed, stream) + (counter + np.uint64(1)) * _PHI)
    return out[0] if scalar_out else out


def stream_keys(seed, stream):
    """Per-stream hash keys; drivers precompute these once per chunk so the
    per-draw work reduces to one finalizer round."""
    stream = np.asarray(stream, dtype=np.uint64)
    if stream.ndim == 0:
        return _stream_key(seed, stream.reshape(1))[0]
    return _stream_key(seed, stream)


def raw64_keyed(keys, counter):
    """raw64 with the stream key already hashed; bit-identical to raw64."""
    counter = np.asarray(counter, dtype=np.uint64)
    if counter.ndim == 0 and np.ndim(keys) == 0:
        return _mix64(np.asarray(keys, dtype=np.uint64).reshape(1) + (counter + np.uint64(1)) * _PHI)[0]
    return _mix64(keys + (counter + np.uint64(1)) * _PHI)


def _u_oc(bits):
    return ((bits >> _S11).astype(np.float64) + 1.0) * _INV53


def _u_oo(bits):
    return ((bits >> _S11).astype(np.float64) + 0.5) * _INV53


def uniform_open_closed(seed, stream, counter):
    """Uniform draw on (0, 1]; zero is impossible by construction."""
    return _u_oc(raw64(seed, stream, counter))


def uniform_open(seed, stream, counter):
    """Uniform draw on the open interval (0, 1)."""
    return _u_oo(raw64(seed, stream, counter))


def normal_from_counter(seed, stream, counter):
    """Standard normal via inverse CDF; one counter per draw."""
    return ndtri(uniform_open(seed, stream, counter))


def exponential_from_uniform(u):
    """Inverse CDF of the unit exponential: u in (0, 1] -> -ln(u)."""
    return -np.log(u)


def exponential_from_counter(seed, stream, counter):
    """Unit-exponential draw; finite because the uniform excludes 0."""
    return -np.log(uniform_open_closed(seed, stream, counter))


def normal_keyed(keys, counter):
    return ndtri(_u_oo(raw64_keyed(keys, counter)))


def exponential_keyed(keys, counter):
    return -np.log(_u_oc(raw64_keyed(keys, counter)))


@dataclass
class RngStream:
    """Counter-based random stream keyed by (seed, stream id).

    Streams with distinct ids are statistically independent, and every draw
    is a pure function of (seed, stream, counter), so trajectories replay
    bit-identically across runs and thread schedules. The counter is the
    only mutable state.
    """

    seed: int
    stream: int = 0
    counter: int = 0

    def _next_counters(self, size):
        if size is None:
            c = self.counter
            self.counter += 1
            return c
        c = np.arange(self.counter, self.counter + size, dtype=np.uint64)
        self.counter += size
        return c

    def uniform_open_closed(self, size=None):
        return uniform_open_closed(self.seed, self.stream, self._next_counters(size))

    def uniform_open(self, size=None):
        return uniform_open(self.seed, self.stream, self._next_counters(size))

    def normal(self, size=None):
        return normal_from_counter(self.seed, self.stream, self._next_counters(size))

    def exponential(self, size=None):
        return exponential_from_counter(self.seed, self.stream, self._next_counters(size))

    def spawn(self, stream):
        """Fresh stream for another particle under the same seed."""
        return RngStream(self.seed, stream)


@dataclass(frozen=True)
class BackgroundParams:
    """Homogeneous background (sigma, u, T, eps) driving all formulas.

    Collisions occur at rate sigma / eps**2; post-collisional velocities are
    Maxwellian with mean eps * u and variance temperature.
    """

    sigma: float
    u: float
    temperature: float
    eps: float

    def __post_init__(self):
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (self.temperature > 0 and np.isfinite(self.temperature)):
            raise ValueError(f"temperature must be positive and finite, got {self.temperature}")
        if not (self.eps > 0 and np.isfinite(self.eps)):
            raise ValueError(f"eps must be positive and finite, got {self.eps}")
        if not np.isfinite(self.u):
            raise ValueError(f"u must be finite, got {self.u}")

    def collisionality(self, dt):
        """Expected collisions in a step of length dt: sigma * dt / eps**2."""
        return self.sigma * dt / (self.eps * self.eps)

    def params_at(self, x):
        """Homogeneous lookup: the same parameters everywhere."""
        return self


@dataclass(frozen=True)
class ParticleState:
    """Position, velocity sample, and clock of one Monte Carlo particle."""

    x: float
    v: float
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.v) and np.isfinite(self.t)):
            raise ValueError(f"non-finite particle state ({self.x}, {self.v}, {self.t})")


@dataclass(frozen=True)
class PiecewiseConstantField:
    """Piecewise-constant background: cells separated by sorted breakpoints.

    len(breakpoints) == len(cells) - 1. Lookups outside the covered domain
    clamp to the nearest cell, so params_at is total. A single-cell field is
    observationally identical to using its BackgroundParams directly.
    """

    cells: tuple
    breakpoints: tuple = field(default=())

    def __post_init__(self):
        cells = tuple(self.cells)
        breaks = tuple(float(b) for b in self.breakpoints)
        if len(cells) == 0:
            raise ValueError("field needs at least one cell")
        if len(breaks) != len(cells) - 1:
            raise ValueError(
                f"{len(cells)} cells need {len(cells) - 1} breakpoints, got {len(breaks)}"
            )
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not np.isfinite(b) for b in breaks):
            raise ValueError("breakpoints must be finite")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "breakpoints", breaks)

    def cell_index(self, x):
        return bisect.bisect_right(self.breakpoints, x)

    def params_at(self, x):
        return self.cells[self.cell_index(x)]


def sample_maxwellian(params, rng):
    """Draw a post-collisional velocity: eps * u + sqrt(T) * z."""
    return params.eps * params.u + np.sqrt(params.temperature) * rng.normal()


def standard_exponential(rng):
    """Draw a unit-exponential flight budget; strictly finite."""
    return exponential_from_uniform(rng.uniform_open_closed())


def map_chunked(fn, n, threads=1, chunk=1 << 16):
    """Run fn(lo, hi) -> tuple of arrays over fixed chunks of range(n).

    The chunk partition depends only on n and chunk, never on the thread
    count, and results merge in chunk order, so output is deterministic at
    any thread count.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    if threads <= 1 or len(bounds) == 1:
        parts = [fn(lo, hi) for lo, hi in bounds]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: fn(*b), bounds))
    first = parts[0]
    if not isinstance(first, tuple):
        return np.concatenate(parts)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(first)))
