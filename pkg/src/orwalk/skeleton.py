"""Vertical skeleton / embedded horizontal walk decomposition.

The full walk is rebuilt from two independent ingredients: the vertical
skeleton ``Y`` (a simple symmetric +-1 walk driven by ``psi``) and geometric
burst lengths ``xi[(y, i)]`` with P(xi = l) = (2/3)(1/3)**l.  Before its n-th
vertical move the walk sits at level ``Y[n-1]`` for the ``i``-th time
(``i = eta_{n-1}(Y[n-1])``) and makes ``xi[(Y[n-1], i)]`` horizontal moves in
direction ``eps(Y[n-1])``.  With this indexing ``M[T_n] == (X_n, Y_n)`` holds
pathwise.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, MutableMapping, Sequence

import numpy as np
from numba import njit
from scipy.special import gammaln

from .lattice import EnvironmentSpec, Vertex, epsilon, epsilon_table
from .rng import STATE_SIZE, TRITS, RngStream, init_state, next_bit, next_trit
from .walk import Estimate, Trajectory, run_partitioned

P_VERTICAL = Fraction(2, 3)


class MissingDrawError(LookupError):
    """A geometric burst length needed by the construction was not supplied."""


class Censored:
    """Outcome of a stopping time that exceeded its computational cap."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "CENSORED"

    def __bool__(self):
        return False


CENSORED = Censored()


class GeometricDraws(MutableMapping):
    """Burst lengths keyed by (level, visit index), drawn lazily from a stream and memoized."""

    def __init__(self, rng: RngStream, preset: Mapping | None = None):
        self._rng = rng
        self._store: dict[tuple[int, int], int] = dict(preset or {})

    def __getitem__(self, key):
        if key not in self._store:
            self._store[key] = self._rng.geometric()
        return self._store[key]

    def __setitem__(self, key, value):
        self._store[key] = int(value)

    def __delitem__(self, key):
        del self._store[key]

    def __iter__(self):
        return iter(self._store)

    def __len__(self):
        return len(self._store)

    def __contains__(self, key):
        return True


def simulate_skeleton(n: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """``n`` fair +-1 increments and the partial-sum path ``Y`` (length n+1, ``Y[0] = 0``)."""
    if n < 1:
        raise ValueError("n must be positive")
    psi = 2 * rng.bits(n) - 1
    return psi, skeleton_path(psi)


def skeleton_path(psi: Sequence[int]) -> np.ndarray:
    Y = np.zeros(len(psi) + 1, dtype=np.int64)
    np.cumsum(np.asarray(psi, dtype=np.int64), out=Y[1:])
    return Y


def occupation_times(Y: Sequence[int], n: int | None = None) -> dict[int, int]:
    """Visit counts of each level among ``Y[0..n]`` (whole path by default)."""
    if len(Y) == 0 or Y[0] != 0:
        raise ValueError("skeleton path must start at 0")
    stop = len(Y) if n is None else n + 1
    if stop < 0:
        return {}
    levels, counts = np.unique(np.asarray(Y[:stop], dtype=np.int64), return_counts=True)
    return {int(y): int(c) for y, c in zip(levels, counts)}


def return_times(Y: Sequence[int]) -> list[int]:
    """Times k > 0 with ``Y[k] == 0``, in increasing order."""
    if len(Y) == 0 or Y[0] != 0:
        raise ValueError("skeleton path must start at 0")
    return [int(k) for k in np.flatnonzero(np.asarray(Y[1:]) == 0) + 1]


def _eps_lookup(env: EnvironmentSpec, Y) -> Callable[[int], int]:
    Y = np.asarray(Y)
    lo, hi = int(Y.min()), int(Y.max())
    table = epsilon_table(env, lo, hi)
    return lambda y: int(table[y - lo])


def embed_horizontal(env: EnvironmentSpec, Y: Sequence[int], xi: Mapping[tuple[int, int], int]
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Embedded horizontal position ``X``, clock ``T`` and signed occupation ``Delta``.

    All three arrays have length ``len(Y)``, with index ``n`` holding the value
    after ``n`` vertical moves (index 0 is 0).
    """
    n = len(Y) - 1
    eps = _eps_lookup(env, Y)
    X = np.zeros(n + 1, dtype=np.int64)
    T = np.zeros(n + 1, dtype=np.int64)
    D = np.zeros(n + 1, dtype=np.int64)
    visits: Counter = Counter()
    for k in range(1, n + 1):
        y = int(Y[k - 1])
        visits[y] += 1
        try:
            burst = xi[(y, visits[y])]
        except KeyError:
            raise MissingDrawError(f"no burst length for level {y}, visit {visits[y]}") from None
        e = eps(y)
        X[k] = X[k - 1] + e * burst
        T[k] = T[k - 1] + burst + 1
        D[k] = D[k - 1] + e
    return X, T, D


def reconstruct_full_walk(env: EnvironmentSpec, psi: Sequence[int], xi: Mapping[tuple[int, int], int]
                          ) -> Trajectory:
    """Full lattice walk: at each skeleton step, the burst of horizontal moves then the vertical move."""
    Y = skeleton_path(psi)
    eps = _eps_lookup(env, Y)
    visits: Counter = Counter()
    x = y = 0
    path = []
    for d in psi:
        visits[y] += 1
        try:
            burst = xi[(y, visits[y])]
        except KeyError:
            raise MissingDrawError(f"no burst length for level {y}, visit {visits[y]}") from None
        e = eps(y)
        for _ in range(burst):
            x += e
            path.append((x, y))
        y += int(d)
        path.append((x, y))
    return Trajectory(Vertex(0, 0), np.asarray(path, dtype=np.int64).reshape(-1, 2))


@dataclass
class SkeletonTrace:
    """Joint record of one skeleton realization and its derived quantities."""

    psi: np.ndarray
    Y: np.ndarray
    eta: dict[int, int]
    sigma: list[int]
    xi: dict[tuple[int, int], int]
    X: np.ndarray
    T: np.ndarray
    Delta: np.ndarray
    env: EnvironmentSpec = field(default_factory=EnvironmentSpec.alternate)

    def to_json(self) -> str:
        doc = {
            "env": self.env.to_dict(),
            "psi": [int(v) for v in self.psi],
            "xi": [[y, i, v] for (y, i), v in sorted(self.xi.items())],
            "Y": [int(v) for v in self.Y],
            "eta": {str(k): v for k, v in sorted(self.eta.items())},
            "sigma": self.sigma,
            "X": [int(v) for v in self.X],
            "T": [int(v) for v in self.T],
            "Delta": [int(v) for v in self.Delta],
        }
        return json.dumps(doc, sort_keys=True)


def build_trace(env: EnvironmentSpec, n: int, rng: RngStream) -> SkeletonTrace:
    """Skeleton of ``n`` steps, with burst lengths drawn on demand from the same stream."""
    psi, Y = simulate_skeleton(n, rng)
    xi = GeometricDraws(rng)
    X, T, D = embed_horizontal(env, Y, xi)
    return SkeletonTrace(psi, Y, occupation_times(Y, n - 1), return_times(Y), dict(xi), X, T, D, env)


def delta_at_sigma(env: EnvironmentSpec, Y: Sequence[int], n: int) -> int:
    """Signed occupation sum over ``Y[0 .. sigma_n - 1]``."""
    sigma = return_times(Y)
    if n < 1 or len(sigma) < n:
        raise ValueError(f"path has {len(sigma)} returns to 0, needed {n}")
    occ = occupation_times(Y, sigma[n - 1] - 1)
    return sum(epsilon(env, y) * c for y, c in occ.items())


@njit
def _x_at_returns_kernel(master, stream0, n_samples, trits, eps, off, k, cap, xs, n_done):
    """For each sample, X at the first ``k`` skeleton returns (stops at ``cap`` skeleton steps)."""
    st = np.zeros(STATE_SIZE, dtype=np.uint64)
    for i in range(n_samples):
        init_state(st, master, np.uint64(stream0 + i))
        x = 0
        y = 0
        m = 0
        got = 0
        while got < k and m < cap:
            t = next_trit(st, trits)
            if t == 2:
                x += eps[y + off]
            else:
                y += 1 - 2 * t
                m += 1
                if y == 0:
                    xs[i, got] = x
                    got += 1
        n_done[i] = got


def sample_X_at_sigma(env: EnvironmentSpec, k: int, rng: RngStream, cap: int):
    """X at the k-th skeleton return to 0, or ``CENSORED`` if it needs more than ``cap`` skeleton steps.

    Each trit is one step of the full walk: 2 extends the current burst, 0/1
    ends it with an up/down move.
    """
    if k < 1 or cap < 1:
        raise ValueError("k and cap must be positive")
    eps = epsilon_table(env, -cap, cap)
    xs = np.zeros((1, k), dtype=np.int64)
    done = np.zeros(1, dtype=np.int64)
    _x_at_returns_single(rng.state, TRITS, eps, cap, k, cap, xs, done)
    return int(xs[0, k - 1]) if done[0] == k else CENSORED


@njit
def _x_at_returns_single(st, trits, eps, off, k, cap, xs, n_done):
    x = 0
    y = 0
    m = 0
    got = 0
    while got < k and m < cap:
        t = next_trit(st, trits)
        if t == 2:
            x += eps[y + off]
        else:
            y += 1 - 2 * t
            m += 1
            if y == 0:
                xs[0, got] = x
                got += 1
    n_done[0] = got


def _x_returns_chunk(args):
    env, k, cap, master, stream0, count = args
    eps = epsilon_table(env, -cap, cap)
    xs = np.zeros((count, k), dtype=np.int64)
    done = np.zeros(count, dtype=np.int64)
    if count:
        _x_at_returns_kernel(np.uint64(master), stream0, count, TRITS, eps, cap, k, cap, xs, done)
    return xs, done


def x_at_returns(env: EnvironmentSpec, k: int, n_samples: int, seed: int, cap: int,
                 stream_offset: int = 0, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Batch version: ``xs[i, j]`` is X at return j+1 of sample i, valid for ``j < n_returns[i]``."""
    parts = run_partitioned(_x_returns_chunk, lambda a, cnt: (env, k, cap, seed, stream_offset + a, cnt),
                            n_samples, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


@dataclass(frozen=True)
class ZeroAtReturn:
    """Monte Carlo estimate of P(X at the n-th return = 0) with its censoring rate.

    Censored samples count as nonzero, so ``estimate`` is biased low by at most
    ``censored_fraction``.
    """

    n: int
    estimate: Estimate
    censored_fraction: float


def estimate_zero_at_returns(env: EnvironmentSpec, k: int, n_samples: int, seed: int, cap: int,
                             stream_offset: int = 0, workers: int = 1) -> list[ZeroAtReturn]:
    xs, done = x_at_returns(env, k, n_samples, seed, cap, stream_offset, workers)
    out = []
    for j in range(k):
        ok = done > j
        hits = ok & (xs[:, j] == 0)
        out.append(ZeroAtReturn(j + 1, Estimate.from_samples(hits), float(1 - ok.mean())))
    return out


@njit
def _tail_kernel(master, stream0, n_samples, trits, eps, off, n, thr1, thr2, thr3, out):
    st = np.zeros(STATE_SIZE, dtype=np.uint64)
    length = 2 * n
    occ = np.zeros(2 * length + 1, dtype=np.int64)
    for i in range(n_samples):
        init_state(st, master, np.uint64(stream0 + i))
        occ[:] = 0
        y = 0
        max_abs = 0
        x = 0
        # eta_{2n-1}: levels of Y_0..Y_{2n-1}; M moves during the 2n bursts
        for k in range(length):
            occ[y + length] += 1
            while next_trit(st, trits) == 2:
                x += eps[y + off]
            y += 1 - 2 * next_bit(st)
            if abs(y) > max_abs:
                max_abs = abs(y)
        max_eta = 0
        delta = 0
        for j in range(2 * length + 1):
            if occ[j] > max_eta:
                max_eta = occ[j]
            delta += eps[j - length + off] * occ[j]
        a1c = max_abs >= thr1
        a2c = max_eta >= thr2
        b = (not a1c) and (not a2c) and abs(delta) > thr3
        out[i, 0] = a1c
        out[i, 1] = a2c
        out[i, 2] = b
        out[i, 3] = b and x == 0 and y == 0


def _tail_chunk(args):
    env, n, thr, master, stream0, count = args
    eps = epsilon_table(env, -2 * n, 2 * n)
    out = np.zeros((count, 4), dtype=np.int64)
    if count:
        _tail_kernel(np.uint64(master), stream0, count, TRITS, eps, 2 * n, n, thr[0], thr[1], thr[2], out)
    return out


@dataclass(frozen=True)
class TailFrequencies:
    """Empirical frequencies of the large-deviation events for a skeleton of 2n steps.

    ``joint_return_on_b`` is the frequency of B_n together with M at the origin
    after the 2n-th vertical move.
    """

    n: int
    deltas: tuple[float, float, float]
    a1_complement: Estimate
    a2_complement: Estimate
    b: Estimate
    joint_return_on_b: Estimate


def tail_event_frequencies(n: int, delta1: float, delta2: float, delta3: float, n_samples: int,
                           seed: int, env: EnvironmentSpec, stream_offset: int = 0,
                           workers: int = 1) -> TailFrequencies:
    """Frequencies of max|Y| >= n^(1/2+d1), max eta >= n^(1/2+d2), and B_n (on A_n, |Delta_2n| > n^(1/2+d3))."""
    if min(delta1, delta2, delta3) <= 0:
        raise ValueError("deltas must be positive")
    thr = tuple(float(n) ** (0.5 + d) for d in (delta1, delta2, delta3))
    parts = run_partitioned(_tail_chunk, lambda a, cnt: (env, n, thr, seed, stream_offset + a, cnt),
                            n_samples, workers)
    out = np.concatenate(parts)
    ests = [Estimate.from_samples(out[:, j]) for j in range(4)]
    return TailFrequencies(n, (delta1, delta2, delta3), *ests)


def exact_Y_return_prob(n: int, exact: bool | None = None):
    """P(Y_{2n} = 0) = C(2n, n) / 4**n; a Fraction for n <= 500 unless ``exact=False``."""
    if n < 1:
        raise ValueError("n must be positive")
    if exact is None:
        exact = n <= 500
    if exact:
        return Fraction(math.comb(2 * n, n), 4 ** n)
    return math.exp(gammaln(2 * n + 1) - 2 * gammaln(n + 1) - 2 * n * math.log(2))


def first_return_prob(k: int) -> Fraction:
    """P(sigma_1 = 2k) = 2 Catalan(k-1) / 4**k."""
    if k < 1:
        raise ValueError("k must be positive")
    return Fraction(2 * math.comb(2 * k - 2, k - 1) // k, 4 ** k)
