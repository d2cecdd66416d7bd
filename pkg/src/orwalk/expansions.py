"""Random-walk expansions of lattice Green functions and resolvents, checked against direct solves.

On a finite box (Dirichlet or periodic) the mass-regularized Green function is

    ((m^2 + 2d) I - J)^-1 = sum_n J^n / (2d + m^2)^(n+1),

so each nearest-neighbour path of length n carries weight (2d + m^2)^-(n+1).
For a weighted graph with diagonal L = diag(lambda) and couplings J,

    (L - J)^-1 = sum_n (L^-1 J)^n L^-1,

which is the sum over paths of prod J_a * prod_v lambda_v^-(visits to v,
endpoints included).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve


class ExpansionError(ArithmeticError):
    pass


class DivergenceError(ExpansionError):
    """Partial sums of a path expansion are not contracting."""


@dataclass(frozen=True)
class BoxSpec:
    """Box {-half_width..half_width}^d with a mass term."""

    d: int
    half_width: int
    mass: float
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.d < 1 or self.half_width < 1:
            raise ValueError("d and half_width must be positive")
        if self.mass == 0:
            raise ValueError("mass must be nonzero")
        if self.boundary not in ("dirichlet", "torus"):
            raise ValueError("boundary must be 'dirichlet' or 'torus'")

    @property
    def side(self) -> int:
        return 2 * self.half_width + 1

    @property
    def n_sites(self) -> int:
        return self.side ** self.d

    @property
    def diagonal(self) -> float:
        return 2 * self.d + self.mass ** 2

    @property
    def ratio(self) -> float:
        """Weight ratio 2d / (2d + m^2) of one extra step."""
        return 2 * self.d / self.diagonal

    def index(self, point: Sequence[int]) -> int:
        point = tuple(int(c) for c in point)
        if len(point) != self.d or any(abs(c) > self.half_width for c in point):
            raise ValueError(f"point {point} is outside the box")
        idx = 0
        for c in point:
            idx = idx * self.side + (c + self.half_width)
        return idx

    def adjacency(self) -> sp.csr_matrix:
        side = self.side
        eye = sp.identity(side, format="csr")
        if self.boundary == "torus" and side > 2:
            ring = sp.diags([1, 1, 1, 1], [1, -1, side - 1, -(side - 1)], shape=(side, side), format="csr")
        else:
            ring = sp.diags([1, 1], [1, -1], shape=(side, side), format="csr")
        J = sp.csr_matrix((self.n_sites, self.n_sites))
        for axis in range(self.d):
            factors = [ring if k == axis else eye for k in range(self.d)]
            term = factors[0]
            for f in factors[1:]:
                term = sp.kron(term, f, format="csr")
            J = J + term
        return J.tocsr()

    def truncation_bound(self, x: Sequence[int], y: Sequence[int]) -> float:
        """Bound on |G_box(x, y) - G_Z^d(x, y)|: weight of all paths long enough to feel the boundary."""
        if self.boundary == "dirichlet":
            reach = self.half_width + 1 - max(abs(int(c)) for c in x)
        else:
            reach = self.side - max(abs(int(a) - int(b)) for a, b in zip(x, y))
        return self.ratio ** reach / self.mass ** 2


@dataclass(frozen=True)
class PathSum:
    value: float
    tail_bound: float
    max_len: int
    contracting: bool = True


def laplacian_green_direct(box: BoxSpec, x: Sequence[int], y: Sequence[int], tol: float | None = None) -> float:
    """((m^2 I - Laplacian)^-1)_{xy} on the box by a sparse direct solve.

    With ``tol`` given, refuses boxes whose boundary effect may exceed it.
    """
    if tol is not None and box.truncation_bound(x, y) >= tol:
        raise ExpansionError(f"box half-width {box.half_width} too small for tolerance {tol:g}")
    A = (box.diagonal * sp.identity(box.n_sites, format="csc") - box.adjacency()).tocsc()
    rhs = np.zeros(box.n_sites)
    rhs[box.index(y)] = 1.0
    sol = spsolve(A, rhs)
    if not np.all(np.isfinite(sol)):
        raise ExpansionError("sparse solve failed")
    return float(sol[box.index(x)])


def green_max_len(box: BoxSpec, tol: float) -> int:
    """Smallest truncation length whose geometric tail is below ``tol``."""
    # tail after length K: ratio^(K+1) / m^2
    k = math.ceil(math.log(tol * box.mass ** 2) / math.log(box.ratio)) - 1
    return max(k, 0)


def laplacian_green_path_sum(box: BoxSpec, x: Sequence[int], y: Sequence[int], max_len: int) -> PathSum:
    """Sum over box paths of length <= max_len from x to y of (2d + m^2)^-(length+1)."""
    ix, iy = box.index(x), box.index(y)
    if max_len < 0:
        raise ValueError("max_len must be nonnegative")
    J = box.adjacency()
    c = box.diagonal
    vec = np.zeros(box.n_sites)
    vec[ix] = 1.0 / c
    total = vec[iy]
    for _ in range(max_len):
        vec = (J @ vec) / c  # J symmetric: row pushes equal column pushes
        total += vec[iy]
    return PathSum(float(total), box.ratio ** (max_len + 1) / box.mass ** 2, max_len)


@dataclass
class WeightedGraph:
    """Symmetric couplings ``J`` (zero diagonal) and positive vertex weights ``lam``."""

    J: np.ndarray
    lam: np.ndarray
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        n = self.lam.size
        if self.J.shape != (n, n):
            raise ValueError("J must be square and match lambda")
        if not np.allclose(self.J, self.J.T, rtol=0, atol=0):
            raise ValueError("J must be symmetric")
        if np.any(np.diag(self.J) != 0) or np.any(self.J < 0):
            raise ValueError("J must be nonnegative with zero diagonal")
        if np.any(self.lam <= 0):
            raise ValueError("lambda must be positive")
        if not self.labels:
            self.labels = list(range(n))

    @property
    def contraction(self) -> float:
        """Row-sum norm of diag(lambda)^-1 J."""
        return float(np.max(self.J.sum(axis=1) / self.lam)) if self.lam.size else 0.0

    @property
    def valid(self) -> bool:
        return self.contraction < 1.0

    def index(self, label: Hashable) -> int:
        return self.labels.index(label)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "WeightedGraph":
        unknown = set(doc) - {"vertices", "edges", "lambda"}
        if unknown:
            raise ValueError(f"unknown graph key(s): {', '.join(sorted(unknown))}")
        labels = list(doc["vertices"])
        pos = {v: i for i, v in enumerate(labels)}
        J = np.zeros((len(labels), len(labels)))
        for u, v, w in doc["edges"]:
            if u == v:
                raise ValueError("loops are not allowed")
            J[pos[u], pos[v]] = J[pos[v], pos[u]] = float(w)
        return cls(J, np.asarray(doc["lambda"], dtype=float), labels)

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        edges = [[self.labels[i], self.labels[j], float(self.J[i, j])]
                 for i in range(self.lam.size) for j in range(i + 1, self.lam.size) if self.J[i, j] > 0]
        return {"vertices": list(self.labels), "edges": edges, "lambda": self.lam.tolist()}


def resolvent_direct_matrix(g: WeightedGraph) -> np.ndarray:
    A = np.diag(g.lam) - g.J
    if np.linalg.cond(A) > 1e12:
        raise ExpansionError("L - J is numerically singular")
    return np.linalg.inv(A)


def resolvent_direct(g: WeightedGraph, u, v) -> float:
    """((L - J)^-1)_{uv} by a dense solve; ``u``/``v`` are vertex labels."""
    A = np.diag(g.lam) - g.J
    if np.linalg.cond(A) > 1e12:
        raise ExpansionError("L - J is numerically singular")
    rhs = np.zeros(g.lam.size)
    rhs[g.index(v)] = 1.0
    return float(np.linalg.solve(A, rhs)[g.index(u)])


def _tail(g: WeightedGraph, max_len: int) -> float:
    k = g.contraction
    if k >= 1:
        return math.inf
    return k ** (max_len + 1) / (1 - k) * float(np.max(1.0 / g.lam))


def _check_contracting(increments: list[float]) -> None:
    tail = [abs(v) for v in increments[-8:]]
    if len(tail) >= 8 and tail[-1] > 0 and tail[-1] >= tail[0]:
        raise DivergenceError("path expansion partial sums are not contracting")


def resolvent_path_sum(g: WeightedGraph, u, v, max_len: int) -> PathSum:
    """Sum over paths u -> v of length <= max_len of prod J * prod lambda^-visits."""
    iu, iv = g.index(u), g.index(v)
    P = g.J / g.lam[:, None]  # diag(lambda)^-1 J
    row = np.zeros(g.lam.size)
    row[iu] = 1.0
    total = row[iv] / g.lam[iv]
    increments = []
    for _ in range(max_len):
        row = row @ P
        inc = row[iv] / g.lam[iv]
        total += inc
        increments.append(inc)
    if not g.valid:
        _check_contracting(increments)
    return PathSum(float(total), _tail(g, max_len), max_len, g.valid)


def resolvent_path_sum_matrix(g: WeightedGraph, max_len: int) -> tuple[np.ndarray, float]:
    """All entries at once: sum_{n <= max_len} (L^-1 J)^n L^-1, and the entrywise tail bound."""
    P = g.J / g.lam[:, None]
    term = np.diag(1.0 / g.lam)
    total = term.copy()
    norms = []
    for _ in range(max_len):
        term = P @ term
        total += term
        norms.append(float(np.abs(term).max()))
    if not g.valid:
        _check_contracting(norms)
    return total, _tail(g, max_len)


def path_weight(g: WeightedGraph, path: Sequence[int]) -> float:
    """prod J along the path times prod lambda_v^-(occupation of v), from raw visit counts."""
    weight = 1.0
    for a, b in zip(path, path[1:]):
        weight *= g.J[a, b]
    visits: dict[int, int] = {}
    for v in path:
        visits[v] = visits.get(v, 0) + 1
    for v, k in visits.items():
        weight *= g.lam[v] ** -k
    return weight


def path_weight_stepwise(g: WeightedGraph, path: Sequence[int]) -> float:
    """Same weight, accumulated one step at a time as (J_ab / lambda_a) ... / lambda_end."""
    weight = 1.0
    for a, b in zip(path, path[1:]):
        weight *= g.J[a, b] / g.lam[a]
    return weight / g.lam[path[-1]]


def enumerate_paths(g: WeightedGraph, u: int, v: int, length: int):
    """Explicit paths of the given length along edges of positive weight."""
    nbrs = [np.flatnonzero(g.J[i] > 0).tolist() for i in range(g.lam.size)]

    def rec(path):
        if len(path) == length + 1:
            if path[-1] == v:
                yield tuple(path)
            return
        for w in nbrs[path[-1]]:
            path.append(w)
            yield from rec(path)
            path.pop()

    yield from rec([u])


def random_graph(n: int, rng: np.random.Generator, density: float = 0.6, margin: float = 1.5) -> WeightedGraph:
    """Random symmetric couplings in (0, 1] on about ``density`` of the pairs, with
    lambda_v = margin * (row sum of J) + 0.5 so the contraction bound holds."""
    J = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < density:
            J[i, j] = J[j, i] = rng.uniform(0.05, 1.0)
    lam = margin * J.sum(axis=1) + 0.5
    return WeightedGraph(J, lam)
