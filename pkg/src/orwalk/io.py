"""Deterministic CSV/JSON writers with provenance headers."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import __version__

RECORD_COLUMNS = ("env_kind", "seed", "horizon", "statistic", "value", "std_error", "n_samples")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def config_hash(doc: Mapping) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, default=_default).encode()).hexdigest()[:16]


def provenance(master_seed: int, env_seeds: Sequence[int], cfg_hash: str, stream_layout: str) -> dict:
    return {
        "code_version": __version__,
        "master_seed": master_seed,
        "env_seeds": list(env_seeds),
        "config_hash": cfg_hash,
        "stream_layout": stream_layout,
    }


def _fmt(v) -> str:
    if v is None:
        return ""
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return str(v)
        return repr(v)
    return str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], prov: Mapping) -> None:
    buf = io.StringIO()
    for key in sorted(prov):
        buf.write(f"# {key}: {json.dumps(prov[key], default=_default)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def read_csv(path: Path) -> tuple[dict, list[dict]]:
    prov: dict = {}
    lines = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            prov[key] = json.loads(value)
        else:
            lines.append(line)
    return prov, list(csv.DictReader(lines))


def write_json(path: Path, doc: Mapping) -> None:
    path.write_text(canonical_json(doc))
