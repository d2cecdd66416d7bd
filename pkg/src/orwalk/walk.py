"""Simple random walk on an oriented lattice and raw Monte Carlo statistics.

Each step picks one of the three out-neighbours (up, down, horizontal) with
probability exactly 1/3, using one exact trit from the walker's stream.  Sample
``i`` of any estimator owns the stream ``(master_seed, stream_offset + i)``, so
results do not depend on how samples are split across worker processes.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy import stats

from .lattice import INT64_MAX, EnvironmentSpec, Vertex, epsilon_table, out_neighbors
from .rng import STATE_SIZE, TRITS, RngStream, init_state, next_trit

# streams of walkers in distinct environments are separated by this offset
ENV_STREAM_STRIDE = 1 << 32


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error (std / sqrt(n))."""

    value: float
    std_error: float
    n_samples: int
    ci_level: float = 0.95
    n_environments: int = 1

    @classmethod
    def from_samples(cls, samples, ci_level: float = 0.95) -> "Estimate":
        a = np.asarray(samples, dtype=float)
        if a.size < 2:
            raise ValueError("need at least two samples for a standard error")
        return cls(float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size)), int(a.size), ci_level)

    @classmethod
    def from_groups(cls, groups: np.ndarray, ci_level: float = 0.95) -> "Estimate":
        """Two-level estimate from a (n_environments, n_walkers) array.

        The error is taken from the spread of the per-environment means.
        """
        g = np.asarray(groups, dtype=float)
        if g.shape[0] < 2:
            est = cls.from_samples(g.ravel(), ci_level)
            return est
        means = g.mean(axis=1)
        se = float(means.std(ddof=1) / math.sqrt(means.size))
        return cls(float(means.mean()), se, int(g.size), ci_level, int(g.shape[0]))

    @property
    def ci(self) -> tuple[float, float]:
        z = stats.norm.ppf(0.5 + self.ci_level / 2)
        return self.value - z * self.std_error, self.value + z * self.std_error

    def z_score(self, reference: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.value == reference else math.copysign(math.inf, self.value - reference)
        return (self.value - reference) / self.std_error


@dataclass(frozen=True)
class Trajectory:
    """Walk path: ``steps[k-1]`` is the position after k steps."""

    start: Vertex
    steps: np.ndarray  # (n, 2) int64

    def __len__(self):
        return len(self.steps)

    def position(self, k: int) -> Vertex:
        if k == 0:
            return self.start
        x, y = self.steps[k - 1]
        return Vertex(int(x), int(y))

    def is_adjacent(self, env: EnvironmentSpec) -> bool:
        prev = self.start
        for x, y in self.steps:
            cur = Vertex(int(x), int(y))
            if cur not in out_neighbors(env, prev):
                return False
            prev = cur
        return True


def _check_range(start: Vertex, n: int) -> None:
    if max(abs(start[0]), abs(start[1])) + n > INT64_MAX:
        raise OverflowError("walk could leave the signed 64-bit coordinate range")


def _row_window(y0: int, n: int, env: EnvironmentSpec) -> tuple[np.ndarray, int]:
    eps = epsilon_table(env, y0 - n, y0 + n)
    return eps, n - y0  # index of row y is y + offset


def step(env: EnvironmentSpec, v, rng: RngStream) -> Vertex:
    """One step of the walk from ``v``."""
    return out_neighbors(env, v)[rng.trit()]


@njit
def _simulate_kernel(st, trits, eps, off, x, y, out):
    for k in range(out.shape[0]):
        t = next_trit(st, trits)
        if t == 0:
            y += 1
        elif t == 1:
            y -= 1
        else:
            x += eps[y + off]
        out[k, 0] = x
        out[k, 1] = y


def simulate(env: EnvironmentSpec, start, n: int, rng: RngStream) -> Trajectory:
    """Trajectory of ``n`` steps from ``start``; consumes the same draws as ``n`` calls of :func:`step`."""
    if n < 1:
        raise ValueError("n must be positive")
    start = Vertex(int(start[0]), int(start[1]))
    _check_range(start, n)
    eps, off = _row_window(start.y, n, env)
    out = np.empty((n, 2), dtype=np.int64)
    _simulate_kernel(rng.state, TRITS, eps, off, start.x, start.y, out)
    return Trajectory(start, out)


_DY = np.array([1, -1, 0], dtype=np.int64)
_HZ = np.array([0, 0, 1], dtype=np.int64)


@njit
def _walk_stats_kernel(master, stream0, n_samples, trits, eps, off, checkpoints, returns, absx):
    """Returns counted up to each checkpoint and |x| at each checkpoint, per sample."""
    st = np.zeros(STATE_SIZE, dtype=np.uint64)
    horizon = checkpoints[-1]
    n_ck = checkpoints.shape[0]
    for i in range(n_samples):
        init_state(st, master, np.uint64(stream0 + i))
        x = 0
        y = 0
        r = 0
        c = 0
        while c < n_ck and checkpoints[c] == 0:
            returns[i, c] = 0
            absx[i, c] = 0
            c += 1
        if c == n_ck:
            continue
        for s in range(1, horizon + 1):
            t = next_trit(st, trits)
            x += _HZ[t] * eps[y + off]
            y += _DY[t]
            if (x | y) == 0:
                r += 1
            if s == checkpoints[c]:
                returns[i, c] = r
                absx[i, c] = abs(x)
                c += 1
                if c == n_ck:
                    break


def _stats_chunk(args):
    env, checkpoints, master, stream0, count = args
    ck = np.asarray(checkpoints, dtype=np.int64)
    horizon = int(ck[-1]) if ck.size else 0
    eps, off = _row_window(0, max(horizon, 1), env)
    returns = np.zeros((count, ck.size), dtype=np.int64)
    absx = np.zeros((count, ck.size), dtype=np.int64)
    if count:
        _walk_stats_kernel(np.uint64(master), stream0, count, TRITS, eps, off, ck, returns, absx)
    return returns, absx


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def run_partitioned(fn: Callable, make_args: Callable[[int, int], tuple], n_samples: int,
                    workers: int = 1):
    """Split ``range(n_samples)`` into contiguous chunks and gather results in order."""
    workers = max(1, min(workers, n_samples)) if n_samples else 1
    bounds = np.linspace(0, n_samples, workers + 1).astype(int)
    jobs = [make_args(int(a), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:])]
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def walk_statistics(env: EnvironmentSpec, checkpoints: Sequence[int], n_samples: int, seed: int,
                    stream_offset: int = 0, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample (returns up to checkpoint, |x| at checkpoint) arrays of shape (n_samples, n_checkpoints).

    Walks start at the origin.
    """
    ck = [int(c) for c in checkpoints]
    if not ck or any(b <= a for a, b in zip(ck, ck[1:])) or ck[0] < 0:
        raise ValueError("checkpoints must be a nonempty increasing list of nonnegative integers")
    parts = run_partitioned(
        _stats_chunk,
        lambda a, cnt: (env, ck, seed, stream_offset + a, cnt),
        n_samples, workers)
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def count_returns(env: EnvironmentSpec, horizon: int, rng: RngStream) -> int:
    """Visits to the origin at times 1..horizon of one walk started at the origin."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    traj = simulate(env, (0, 0), horizon, rng)
    return int(np.count_nonzero((traj.steps[:, 0] == 0) & (traj.steps[:, 1] == 0)))


def estimate_return_stats(env: EnvironmentSpec, horizon: int, n_samples: int, seed: int,
                          stream_offset: int = 0, workers: int = 1) -> tuple[Estimate, Estimate]:
    """Mean number of returns by ``horizon`` and fraction of walks with at least one."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if horizon == 0:
        return Estimate(0.0, 0.0, n_samples), Estimate(0.0, 0.0, n_samples)
    returns, _ = walk_statistics(env, [horizon], n_samples, seed, stream_offset, workers)
    r = returns[:, 0]
    return Estimate.from_samples(r), Estimate.from_samples(r > 0)


def estimate_speed(env: EnvironmentSpec, checkpoints: Sequence[int], n_samples: int, seed: int,
                   stream_offset: int = 0, workers: int = 1) -> list[Estimate]:
    """Mean |x(M_n)| / n at each checkpoint, from common trajectories."""
    if any(c < 1 for c in checkpoints):
        raise ValueError("checkpoints must be positive")
    _, absx = walk_statistics(env, checkpoints, n_samples, seed, stream_offset, workers)
    ck = np.asarray(checkpoints, dtype=float)
    return [Estimate.from_samples(absx[:, j] / ck[j]) for j in range(ck.size)]


@dataclass(frozen=True)
class QuenchedStatistics:
    """Returns and speed over several environments, each with its own walkers."""

    checkpoints: tuple[int, ...]
    env_seeds: tuple[int, ...]
    n_walkers: int
    mean_returns: tuple[Estimate, ...]
    frac_returned: tuple[Estimate, ...]
    speed: tuple[Estimate, ...]


def quenched_statistics(envs: Sequence[EnvironmentSpec], checkpoints: Sequence[int], n_walkers: int,
                        seed: int, workers: int = 1) -> QuenchedStatistics:
    """Two-level averages: environment ``e`` uses walker streams starting at ``e * 2**32``."""
    ck = [int(c) for c in checkpoints]
    ret = np.empty((len(envs), n_walkers, len(ck)), dtype=np.int64)
    ax = np.empty_like(ret)
    for e, env in enumerate(envs):
        ret[e], ax[e] = walk_statistics(env, ck, n_walkers, seed, e * ENV_STREAM_STRIDE, workers)
    speed_den = np.maximum(np.asarray(ck, dtype=float), 1.0)
    return QuenchedStatistics(
        tuple(ck), tuple(env.seed for env in envs), n_walkers,
        tuple(Estimate.from_groups(ret[:, :, j]) for j in range(len(ck))),
        tuple(Estimate.from_groups(ret[:, :, j] > 0) for j in range(len(ck))),
        tuple(Estimate.from_groups(ax[:, :, j] / speed_den[j]) for j in range(len(ck))),
    )


@njit
def _endpoint_kernel(master, stream0, n_samples, trits, eps, off, n, out):
    st = np.zeros(STATE_SIZE, dtype=np.uint64)
    for i in range(n_samples):
        init_state(st, master, np.uint64(stream0 + i))
        x = 0
        y = 0
        for _ in range(n):
            t = next_trit(st, trits)
            x += _HZ[t] * eps[y + off]
            y += _DY[t]
        out[i, 0] = x
        out[i, 1] = y


def _endpoint_chunk(args):
    env, n, master, stream0, count = args
    eps, off = _row_window(0, n, env)
    out = np.zeros((count, 2), dtype=np.int64)
    if count:
        _endpoint_kernel(np.uint64(master), stream0, count, TRITS, eps, off, n, out)
    return out


def sample_endpoints(env: EnvironmentSpec, n: int, n_samples: int, seed: int,
                     stream_offset: int = 0, workers: int = 1) -> np.ndarray:
    """Positions M_n of ``n_samples`` independent walks from the origin, shape (n_samples, 2)."""
    parts = run_partitioned(_endpoint_chunk, lambda a, cnt: (env, n, seed, stream_offset + a, cnt),
                            n_samples, workers)
    return np.concatenate(parts)


def empirical_law(env: EnvironmentSpec, n: int, n_samples: int, seed: int,
                  stream_offset: int = 0, workers: int = 1) -> dict[Vertex, float]:
    """Empirical distribution of M_n as vertex -> frequency."""
    ends = sample_endpoints(env, n, n_samples, seed, stream_offset, workers)
    pts, counts = np.unique(ends, axis=0, return_counts=True)
    return {Vertex(int(x), int(y)): c / n_samples for (x, y), c in zip(pts, counts)}
