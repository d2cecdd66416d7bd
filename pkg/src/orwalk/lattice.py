"""Horizontally oriented lattices on Z^2.

Vertical edges are two-way; row ``y`` carries one-way horizontal edges pointing
in direction ``eps(y)`` in {-1, +1}.  Every vertex has exactly three
out-neighbours, listed in the canonical order (up, down, horizontal).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, NamedTuple

import numpy as np

from .rng import UINT64_MASK, rademacher_sign, rademacher_table

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1


class EnvKind(str, Enum):
    ALTERNATE = "alternate"
    HALF_PLANE = "half_plane"
    RANDOM_RADEMACHER = "random_rademacher"
    PERIODIC_PATTERN = "periodic_pattern"
    EXPLICIT_TABLE = "explicit_table"


_ALIASES = {
    "alternate": EnvKind.ALTERNATE, "l": EnvKind.ALTERNATE,
    "half_plane": EnvKind.HALF_PLANE, "half-plane": EnvKind.HALF_PLANE, "h": EnvKind.HALF_PLANE,
    "random_rademacher": EnvKind.RANDOM_RADEMACHER, "random": EnvKind.RANDOM_RADEMACHER,
    "rademacher": EnvKind.RANDOM_RADEMACHER, "o": EnvKind.RANDOM_RADEMACHER,
    "periodic_pattern": EnvKind.PERIODIC_PATTERN, "periodic": EnvKind.PERIODIC_PATTERN,
    "explicit_table": EnvKind.EXPLICIT_TABLE, "table": EnvKind.EXPLICIT_TABLE,
}


def parse_kind(name: str) -> EnvKind:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown environment kind {name!r}") from None


def _check_sign(s) -> int:
    if s not in (1, -1) or isinstance(s, bool):
        raise ValueError(f"orientation must be +1 or -1, got {s!r}")
    return int(s)


@dataclass(frozen=True)
class EnvironmentSpec:
    """The sequence of horizontal orientations ``eps(y)``.

    ``ExplicitTable`` overrides finitely many rows on top of ``base`` (any other
    kind, reusing this spec's ``seed``/``pattern`` fields).
    """

    kind: EnvKind
    seed: int = 0
    pattern: tuple[int, ...] = ()
    table: Mapping[int, int] = field(default_factory=dict)
    base: EnvKind = EnvKind.ALTERNATE

    def __post_init__(self):
        object.__setattr__(self, "kind", parse_kind(self.kind) if isinstance(self.kind, str) else self.kind)
        object.__setattr__(self, "base", parse_kind(self.base) if isinstance(self.base, str) else self.base)
        if not 0 <= self.seed <= UINT64_MASK:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "pattern", tuple(_check_sign(s) for s in self.pattern))
        object.__setattr__(self, "table", {int(k): _check_sign(v) for k, v in dict(self.table).items()})
        if self.kind is EnvKind.PERIODIC_PATTERN or (
                self.kind is EnvKind.EXPLICIT_TABLE and self.base is EnvKind.PERIODIC_PATTERN):
            if not self.pattern:
                raise ValueError("periodic pattern must be nonempty")
        if self.base is EnvKind.EXPLICIT_TABLE:
            raise ValueError("explicit table cannot use itself as base")

    def __hash__(self):
        return hash((self.kind, self.seed, self.pattern, tuple(sorted(self.table.items())), self.base))

    # convenience constructors
    @classmethod
    def alternate(cls) -> "EnvironmentSpec":
        return cls(EnvKind.ALTERNATE)

    @classmethod
    def half_plane(cls) -> "EnvironmentSpec":
        return cls(EnvKind.HALF_PLANE)

    @classmethod
    def rademacher(cls, seed: int) -> "EnvironmentSpec":
        return cls(EnvKind.RANDOM_RADEMACHER, seed=seed)

    @classmethod
    def periodic(cls, pattern) -> "EnvironmentSpec":
        return cls(EnvKind.PERIODIC_PATTERN, pattern=tuple(pattern))

    @property
    def label(self) -> str:
        if self.kind is EnvKind.RANDOM_RADEMACHER:
            return f"{self.kind.value}[{self.seed}]"
        return self.kind.value

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind.value}
        if self.kind is EnvKind.RANDOM_RADEMACHER or (
                self.kind is EnvKind.EXPLICIT_TABLE and self.base is EnvKind.RANDOM_RADEMACHER):
            doc["seed"] = self.seed
        if self.pattern:
            doc["pattern"] = list(self.pattern)
        if self.kind is EnvKind.EXPLICIT_TABLE:
            doc["table"] = {str(k): v for k, v in sorted(self.table.items())}
            doc["base"] = self.base.value
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "EnvironmentSpec":
        unknown = set(doc) - {"kind", "seed", "pattern", "table", "base"}
        if unknown:
            raise ValueError(f"unknown environment key(s): {', '.join(sorted(unknown))}")
        if "kind" not in doc:
            raise ValueError("environment needs a 'kind'")
        return cls(
            kind=parse_kind(doc["kind"]),
            seed=int(doc.get("seed", 0)),
            pattern=tuple(doc.get("pattern", ())),
            table={int(k): v for k, v in doc.get("table", {}).items()},
            base=parse_kind(doc.get("base", "alternate")),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EnvironmentSpec":
        return cls.from_dict(json.loads(text))


def _rule(kind: EnvKind, spec: EnvironmentSpec, y: int) -> int:
    if kind is EnvKind.ALTERNATE:
        return 1 if y % 2 == 0 else -1
    if kind is EnvKind.HALF_PLANE:
        return 1 if y >= 0 else -1
    if kind is EnvKind.RANDOM_RADEMACHER:
        return rademacher_sign(spec.seed, y)
    if kind is EnvKind.PERIODIC_PATTERN:
        return spec.pattern[y % len(spec.pattern)]
    raise AssertionError(kind)


def epsilon(env: EnvironmentSpec, y: int) -> int:
    """Orientation of row ``y``: +1 points right, -1 points left."""
    if env.kind is EnvKind.EXPLICIT_TABLE:
        if y in env.table:
            return env.table[y]
        return _rule(env.base, env, y)
    return _rule(env.kind, env, y)


def epsilon_table(env: EnvironmentSpec, y_lo: int, y_hi: int) -> np.ndarray:
    """Orientations of rows ``y_lo..y_hi`` as an int8 array (index 0 is ``y_lo``)."""
    if y_hi < y_lo:
        raise ValueError("empty row range")
    ys = np.arange(y_lo, y_hi + 1, dtype=np.int64)
    kind = env.base if env.kind is EnvKind.EXPLICIT_TABLE else env.kind
    if kind is EnvKind.ALTERNATE:
        out = np.where(ys % 2 == 0, 1, -1).astype(np.int8)
    elif kind is EnvKind.HALF_PLANE:
        out = np.where(ys >= 0, 1, -1).astype(np.int8)
    elif kind is EnvKind.RANDOM_RADEMACHER:
        out = np.empty(ys.size, dtype=np.int8)
        rademacher_table(np.uint64(env.seed), y_lo, y_hi, out)
    else:
        out = np.asarray(env.pattern, dtype=np.int8)[ys % len(env.pattern)]
    if env.kind is EnvKind.EXPLICIT_TABLE:
        for row, sign in env.table.items():
            if y_lo <= row <= y_hi:
                out[row - y_lo] = sign
    return out


class Vertex(NamedTuple):
    x: int
    y: int


def _checked(v: int) -> int:
    if not INT64_MIN <= v <= INT64_MAX:
        raise OverflowError(f"coordinate {v} leaves the signed 64-bit range")
    return v


def _vertex(v) -> Vertex:
    x, y = v
    return Vertex(_checked(int(x)), _checked(int(y)))


def out_neighbors(env: EnvironmentSpec, v) -> tuple[Vertex, Vertex, Vertex]:
    """Up, down and horizontal successors of ``v``."""
    v = _vertex(v)
    return (
        Vertex(v.x, _checked(v.y + 1)),
        Vertex(v.x, _checked(v.y - 1)),
        Vertex(_checked(v.x + epsilon(env, v.y)), v.y),
    )


def in_neighbors(env: EnvironmentSpec, v) -> tuple[Vertex, Vertex, Vertex]:
    """Predecessors of ``v``: above, below, and the upstream vertex on its row."""
    v = _vertex(v)
    return (
        Vertex(v.x, _checked(v.y + 1)),
        Vertex(v.x, _checked(v.y - 1)),
        Vertex(_checked(v.x - epsilon(env, v.y)), v.y),
    )
