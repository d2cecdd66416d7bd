"""Experiment runner: ``orwalk <experiment> [options]`` and ``orwalk compare RUN_A RUN_B``.

Exit codes: 0 success, 1 a checked tolerance or invariant failed, 2 bad
configuration, 3 runtime or budget error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import analysis, expansions, oracle, skeleton, walk
from .io import RECORD_COLUMNS, config_hash, provenance, read_csv, write_csv, write_json
from .lattice import EnvironmentSpec, EnvKind
from .rng import RngStream

log = logging.getLogger("orwalk")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

EXPERIMENTS = ("simulate", "returns", "speed", "skeleton-check", "delta-lemmas", "series-L", "series-H",
               "series-O", "tail-events", "dp-oracle", "green-check", "resolvent-check")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    env: dict | None = None
    seed: int | None = None
    seeds: list | None = None
    horizons: list | None = None
    checkpoints: list | None = None
    n_samples: int | None = None
    n: int | None = None
    N: int | None = None
    max_len: int | None = None
    pair_total: int | None = None
    n_random: int | None = None
    cap: int | None = None
    deltas: list | None = None
    dims: list | None = None
    masses: list | None = None
    n_graphs: int | None = None
    graph: str | None = None
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "orwalk-out"
    format: str = "csv"
    workers: int | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        if "experiment" not in doc:
            raise ConfigError("config needs an 'experiment'")
        return cls(**doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def payload_dict(self) -> dict:
        """Fields that determine the numbers (excludes output location and worker count)."""
        doc = self.to_dict()
        doc.pop("output_dir")
        doc.pop("workers")
        return doc


_DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": {"n": 12, "n_samples": 100_000, "tolerances": {"z_max": 4.0}},
    "returns": {"horizons": [1000], "n_samples": 1000},
    "speed": {"checkpoints": [100, 1000, 10_000], "n_samples": 1000},
    "skeleton-check": {"n": 200, "n_samples": 10_000},
    "delta-lemmas": {"max_len": 16, "pair_total": 12, "n_random": 100_000},
    "series-L": {"N": 4096, "tolerances": {"increment_min": 0.05, "increment_spread": 0.2,
                                            "quad_tol": analysis.DEFAULT_TOL}},
    "series-H": {"N": 8192, "tolerances": {"cauchy": 1e-4, "cauchy_start": 256,
                                            "quad_tol": analysis.DEFAULT_TOL}},
    "series-O": {"N": 8, "n_samples": 1000, "cap": 100_000, "seeds": list(range(30)),
                 "env": {"kind": "random_rademacher"}, "tolerances": {"max_censored": 0.5}},
    "tail-events": {"n": 1000, "deltas": [0.2, 0.2, 0.2], "n_samples": 10_000,
                    "tolerances": {"freq_max": 0.05}},
    "dp-oracle": {"n": 12},
    "green-check": {"dims": [1, 2], "masses": [0.5, 1.0], "tolerances": {"agreement": 1e-8}},
    "resolvent-check": {"n_graphs": 20, "max_len": None, "tolerances": {"agreement": 1e-8}},
}


def materialize(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill experiment defaults and validate; the result is what gets persisted."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    defaults = _DEFAULTS[cfg.experiment]
    doc = cfg.to_dict()
    for key, value in defaults.items():
        if key == "tolerances":
            merged = dict(value)
            unknown = sorted(set(doc["tolerances"]) - set(value))
            if unknown:
                raise ConfigError(f"unknown tolerance key(s): {', '.join(unknown)}")
            merged.update(doc["tolerances"])
            doc["tolerances"] = merged
        elif doc.get(key) is None:
            doc[key] = value
    if doc["env"] is None:
        doc["env"] = {"kind": "alternate"}
    if doc["seed"] is None:
        doc["seed"] = int(os.environ.get("ORWALK_SEED", "0"))
    if doc["workers"] is None:
        doc["workers"] = walk.default_workers()
    try:
        EnvironmentSpec.from_dict(doc["env"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"env: {exc}") from None
    for key in ("n_samples", "n", "N", "max_len", "cap", "n_graphs", "workers"):
        if doc.get(key) is not None and (not isinstance(doc[key], int) or doc[key] < 1):
            raise ConfigError(f"{key} must be a positive integer")
    if not isinstance(doc["seed"], int) or doc["seed"] < 0:
        raise ConfigError("seed must be a nonnegative integer")
    return ExperimentConfig(**doc)


@dataclass
class Result:
    columns: tuple
    rows: list
    summary: dict
    env_seeds: list = field(default_factory=list)
    stream_layout: str = "sample i uses Philox key (master_seed, i)"


def _env(cfg: ExperimentConfig) -> EnvironmentSpec:
    return EnvironmentSpec.from_dict(cfg.env)


def _envs(cfg: ExperimentConfig) -> list[EnvironmentSpec]:
    """Random-environment configs expand ``seeds`` into one environment per seed."""
    env = _env(cfg)
    if env.kind is EnvKind.RANDOM_RADEMACHER and cfg.seeds:
        return [EnvironmentSpec.rademacher(int(s)) for s in cfg.seeds]
    return [env]


def _env_seed(env: EnvironmentSpec):
    return env.seed if env.kind is EnvKind.RANDOM_RADEMACHER else ""


def _check(name: str, passed: bool, **detail) -> dict:
    return {"name": name, "passed": bool(passed), **detail}


def _summary(checks: list[dict], **extra) -> dict:
    return {"passed": all(c["passed"] for c in checks), "checks": checks, **extra}


def run_simulate(cfg):
    env = _env(cfg)
    n, N = cfg.n, cfg.n_samples
    law = walk.empirical_law(env, n, N, cfg.seed, workers=cfg.workers)
    rows = []
    for v in sorted(law):
        p = law[v]
        rows.append((env.label, _env_seed(env), n, f"mass[{v.x},{v.y}]", p, math.sqrt(p * (1 - p) / N), N))
    checks = []
    if n <= oracle.MAX_DP_STEPS:
        exact = oracle.exact_distribution(env, (0, 0), n).float_mass()
        zmax = 0.0
        for v in set(exact) | set(law):
            p = exact.get(v, 0.0)
            if p == 0.0:
                z = math.inf if law.get(v, 0.0) > 0 else 0.0
            else:
                z = abs(law.get(v, 0.0) - p) / math.sqrt(p * (1 - p) / N)
            zmax = max(zmax, z)
        checks.append(_check("empirical law within z_max of exact law", zmax <= cfg.tolerances["z_max"],
                             max_abs_z=zmax, support=len(exact)))
    return Result(RECORD_COLUMNS, rows, _summary(checks), [_env_seed(env)] if _env_seed(env) != "" else [])


def run_returns(cfg):
    envs = _envs(cfg)
    hz = sorted(int(h) for h in cfg.horizons)
    rows = []
    if len(envs) > 1:
        q = walk.quenched_statistics(envs, hz, cfg.n_samples, cfg.seed, cfg.workers)
        for j, h in enumerate(hz):
            for stat, est in (("mean_returns", q.mean_returns[j]), ("frac_returned", q.frac_returned[j])):
                rows.append((envs[0].kind.value, "pooled", h, stat, est.value, est.std_error, est.n_samples))
    else:
        env = envs[0]
        returns, _ = walk.walk_statistics(env, hz, cfg.n_samples, cfg.seed, workers=cfg.workers)
        for j, h in enumerate(hz):
            for stat, vals in (("mean_returns", returns[:, j]), ("frac_returned", returns[:, j] > 0)):
                est = walk.Estimate.from_samples(vals)
                rows.append((env.label, _env_seed(env), h, stat, est.value, est.std_error, est.n_samples))
    layout = "environment e, walker i use Philox key (master_seed, e*2**32 + i)"
    return Result(RECORD_COLUMNS, rows, _summary([]), [e.seed for e in envs if e.kind is EnvKind.RANDOM_RADEMACHER],
                  layout)


def run_speed(cfg):
    envs = _envs(cfg)
    ck = sorted(int(c) for c in cfg.checkpoints)
    rows = []
    if len(envs) > 1:
        q = walk.quenched_statistics(envs, ck, cfg.n_samples, cfg.seed, cfg.workers)
        for j, c in enumerate(ck):
            est = q.speed[j]
            rows.append((envs[0].kind.value, "pooled", c, "abs_x_over_n", est.value, est.std_error, est.n_samples))
    else:
        env = envs[0]
        for c, est in zip(ck, walk.estimate_speed(env, ck, cfg.n_samples, cfg.seed, workers=cfg.workers)):
            rows.append((env.label, _env_seed(env), c, "abs_x_over_n", est.value, est.std_error, est.n_samples))
    layout = "environment e, walker i use Philox key (master_seed, e*2**32 + i)"
    return Result(RECORD_COLUMNS, rows, _summary([]), [e.seed for e in envs if e.kind is EnvKind.RANDOM_RADEMACHER],
                  layout)


def coupling_check(env: EnvironmentSpec, n: int, n_samples: int, seed: int) -> tuple[int, int]:
    """Rebuild ``n_samples`` walks and count (walks, checkpoints) satisfying M[T_k] = (X_k, Y_k)."""
    checked = 0
    for i in range(n_samples):
        rng = RngStream(seed, i)
        psi, Y = skeleton.simulate_skeleton(n, rng)
        xi = skeleton.GeometricDraws(rng)
        X, T, D = skeleton.embed_horizontal(env, Y, xi)
        traj = skeleton.reconstruct_full_walk(env, psi, xi)
        if len(traj) != T[-1]:
            raise AssertionError(f"sample {i}: walk length {len(traj)} != T_n {T[-1]}")
        pos = traj.steps[T[1:] - 1]
        if not (np.array_equal(pos[:, 0], X[1:]) and np.array_equal(pos[:, 1], Y[1:])):
            raise AssertionError(f"sample {i}: coupling identity fails")
        checked += n
    return n_samples, checked


def run_skeleton_check(cfg):
    env = _env(cfg)
    try:
        walks, points = coupling_check(env, cfg.n, cfg.n_samples, cfg.seed)
        check = _check("M[T_k] == (X_k, Y_k) for every k", True, walks=walks, identities=points)
    except AssertionError as exc:
        check = _check("M[T_k] == (X_k, Y_k) for every k", False, error=str(exc))
    rows = [(env.label, _env_seed(env), cfg.n, "coupling_walks_checked", check.get("walks", 0), 0.0, cfg.n_samples)]
    return Result(RECORD_COLUMNS, rows, _summary([check]))


def run_delta_lemmas(cfg):
    checks, rows = [], []
    for name, fn in (("alternate", oracle.verify_delta_lemma_L), ("half_plane", oracle.verify_delta_lemma_H)):
        try:
            rep = fn(cfg.max_len, cfg.pair_total, cfg.n_random, seed=cfg.seed)
            checks.append(_check(f"{name}: all excursions pass", True, **dataclasses.asdict(rep)))
            rows += [(name, "", cfg.max_len, "excursions_checked", rep.single_checked, 0.0, rep.single_checked),
                     (name, "", cfg.pair_total, "pairs_checked", rep.pairs_checked, 0.0, rep.pairs_checked),
                     (name, "", 200, "random_checked", rep.random_checked, 0.0, rep.random_checked)]
        except oracle.LemmaCounterexample as exc:
            checks.append(_check(f"{name}: all excursions pass", False, counterexample=list(exc.path)))
    summary = _summary(checks)
    summary["message"] = "all excursions pass" if summary["passed"] else "counterexample found"
    return Result(RECORD_COLUMNS, rows, summary)


SERIES_COLUMNS = ("n", "term", "partial_sum", "quadrature_error")


def run_series_L(cfg):
    tol = cfg.tolerances
    diag = analysis.partial_sum_L(cfg.N, tol["quad_tol"])
    verdict = diag.divergence_verdict(tol["increment_min"], tol["increment_spread"], 32, cfg.N // 2)
    check = _check("increments S_2N - S_N bounded below and stable", verdict["passed"])
    return Result(SERIES_COLUMNS, list(diag.rows()), _summary([check], verdict=verdict,
                                                                 increments=diag.increments))


def run_series_H(cfg):
    tol = cfg.tolerances
    diag = analysis.partial_sum_H(cfg.N, tol["quad_tol"])
    verdict = diag.cauchy_verdict(tol["cauchy"], int(tol["cauchy_start"]))
    check = _check("increments below Cauchy tolerance from cauchy_start on", verdict["passed"], n0=verdict["n0"])
    return Result(SERIES_COLUMNS, list(diag.rows()), _summary([check], verdict=verdict,
                                                                 increments=diag.increments))


def run_series_O(cfg):
    envs = _envs(cfg)
    diag = analysis.mc_series_O(envs, cfg.N, cfg.n_samples, cfg.cap, cfg.seed, cfg.workers,
                                cfg.tolerances["max_censored"])
    rows = [(int(n), float(t), float(s), float(e)) for n, t, s, e in diag.rows()]
    cens = diag.extra["censored_fraction"]
    verdict = {"kind": "monte_carlo", "censored_fraction": cens, "increments": diag.increments}
    check = _check("terms in [0, 1]", bool(np.all((diag.terms >= 0) & (diag.terms <= 1))))
    return Result(SERIES_COLUMNS, rows, _summary([check], verdict=verdict),
                  [e.seed for e in envs if e.kind is EnvKind.RANDOM_RADEMACHER],
                  "environment e, sample i use Philox key (master_seed, e*2**32 + i)")


def run_tail_events(cfg):
    envs = _envs(cfg)
    fmax = cfg.tolerances["freq_max"]
    rows, checks = [], []
    for e, env in enumerate(envs):
        tf = skeleton.tail_event_frequencies(cfg.n, *cfg.deltas, cfg.n_samples, cfg.seed, env,
                                             stream_offset=e * walk.ENV_STREAM_STRIDE, workers=cfg.workers)
        for stat, est in (("A1_complement", tf.a1_complement), ("A2_complement", tf.a2_complement),
                          ("B", tf.b), ("B_and_return", tf.joint_return_on_b)):
            rows.append((env.label, _env_seed(env), cfg.n, stat, est.value, est.std_error, est.n_samples))
            if stat != "B_and_return":
                checks.append(_check(f"{env.label}: P({stat}) < {fmax}", est.value < fmax, value=est.value))
    return Result(RECORD_COLUMNS, rows, _summary(checks),
                  [e.seed for e in envs if e.kind is EnvKind.RANDOM_RADEMACHER])


def run_dp_oracle(cfg):
    env = _env(cfg)
    dist = oracle.exact_distribution(env, (0, 0), cfg.n)
    rows = []
    for x, y, mass in oracle.oracle_rows(dist):
        rows.append((env.label, _env_seed(env), cfg.n, f"mass[{x},{y}]", mass, 0, ""))
    masses, cumulative = oracle.exact_return_mass(env, cfg.n)
    for (k, m), c in zip(masses, cumulative):
        rows.append((env.label, _env_seed(env), k, "return_mass", f"{m.numerator}/{m.denominator}", 0, ""))
        rows.append((env.label, _env_seed(env), k, "mean_returns", f"{c.numerator}/{c.denominator}", 0, ""))
    check = _check("total mass is exactly 1", dist.total() == 1)
    return Result(RECORD_COLUMNS, rows, _summary([check], origin_mass=str(dist.prob((0, 0)))))


EXPANSION_COLUMNS = ("instance", "method", "value", "tail_bound", "error_vs_direct")


def run_green_check(cfg):
    agree = cfg.tolerances["agreement"]
    rows, checks = [], []
    for d in cfg.dims:
        for m in cfg.masses:
            probe = expansions.BoxSpec(int(d), 1, float(m))
            max_len = expansions.green_max_len(probe, agree / 10)
            # box wide enough that the boundary is invisible at the agreement level
            width = 1
            while expansions.BoxSpec(int(d), width, float(m)).truncation_bound((0,) * d, (0,) * d) >= agree / 10:
                width += 1
            width = min(width, 60 if d == 1 else 30)
            box = expansions.BoxSpec(int(d), width, float(m))
            origin = (0,) * int(d)
            for label, target in (("diag", origin), ("e1", (1,) + (0,) * (int(d) - 1))):
                inst = f"d={d},m={m},{label}"
                direct = expansions.laplacian_green_direct(box, origin, target)
                ps = expansions.laplacian_green_path_sum(box, origin, target, max_len)
                err = abs(ps.value - direct)
                rows.append((inst, "direct", direct, 0.0, 0.0))
                rows.append((inst, "path_sum", ps.value, ps.tail_bound, err))
                checks.append(_check(f"{inst}: path sum within {agree:g} of direct", err <= agree, error=err))
            if int(d) == 1 and float(m) == 1.0:
                direct = expansions.laplacian_green_direct(box, origin, origin)
                closed = 1 / math.sqrt(5)
                rows.append(("d=1,m=1,diag", "closed_form", closed, 0.0, abs(direct - closed)))
                checks.append(_check("d=1, m=1 diagonal equals 1/sqrt(5)", abs(direct - closed) <= 1e-6,
                                     error=abs(direct - closed)))
    return Result(EXPANSION_COLUMNS, rows, _summary(checks))


def run_resolvent_check(cfg):
    agree = cfg.tolerances["agreement"]
    if cfg.graph:
        graphs = [expansions.WeightedGraph.from_json(Path(cfg.graph).read_text())]
    else:
        rng = np.random.default_rng(cfg.seed)
        graphs = [expansions.random_graph(int(rng.integers(2, 9)), rng) for _ in range(cfg.n_graphs)]
    rows, checks = [], []
    for k, g in enumerate(graphs):
        if not g.valid:
            checks.append(_check(f"graph {k}: contraction bound", False, contraction=g.contraction))
            continue
        max_len = cfg.max_len or max(1, math.ceil(math.log(agree / 10 * (1 - g.contraction) * g.lam.min())
                                                 / math.log(g.contraction)) if g.contraction > 0 else 1)
        direct = expansions.resolvent_direct_matrix(g)
        series, tail = expansions.resolvent_path_sum_matrix(g, max_len)
        err = float(np.abs(series - direct).max())
        rows.append((f"graph{k}", "direct", float(direct[0, -1]), 0.0, 0.0))
        rows.append((f"graph{k}", "path_sum", float(series[0, -1]), tail, err))
        checks.append(_check(f"graph {k}: entrywise agreement", err <= agree, error=err, tail_bound=tail))
    return Result(EXPANSION_COLUMNS, rows, _summary(checks))


RUNNERS: dict[str, Callable] = {
    "simulate": run_simulate, "returns": run_returns, "speed": run_speed,
    "skeleton-check": run_skeleton_check, "delta-lemmas": run_delta_lemmas,
    "series-L": run_series_L, "series-H": run_series_H, "series-O": run_series_O,
    "tail-events": run_tail_events, "dp-oracle": run_dp_oracle,
    "green-check": run_green_check, "resolvent-check": run_resolvent_check,
}


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment and write its data file, effective config and summary."""
    try:
        cfg = materialize(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s -> %s", cfg.experiment, out)
    try:
        result = RUNNERS[cfg.experiment](cfg)
    except (oracle.BudgetExceeded, analysis.QuadratureError, analysis.CensoringError, OverflowError,
            expansions.ExpansionError, MemoryError) as exc:
        log.error("runtime error: %s", exc)
        return EXIT_RUNTIME
    prov = provenance(cfg.seed, result.env_seeds, config_hash(cfg.payload_dict()), result.stream_layout)
    stem = out / cfg.experiment
    if cfg.format == "csv":
        write_csv(stem.with_suffix(".csv"), result.columns, result.rows, prov)
    else:
        write_json(stem.with_suffix(".json"), {"provenance": prov, "columns": list(result.columns),
                                               "rows": [list(r) for r in result.rows]})
    write_json(out / "effective_config.json", {"provenance": prov, "config": cfg.to_dict()})
    write_json(out / "summary.json", {"provenance": prov, "experiment": cfg.experiment, **result.summary})
    status = "PASS" if result.summary["passed"] else "FAIL"
    log.info("%s: %s", cfg.experiment, status)
    if cfg.experiment == "delta-lemmas":
        print(result.summary["message"])
    return EXIT_OK if result.summary["passed"] else EXIT_FAIL


# comparison of two runs ------------------------------------------------------

def _num(v) -> float:
    if v in ("", None):
        return 0.0
    return float(Fraction(str(v))) if "/" in str(v) else float(v)


def load_records(run_dir: Path) -> tuple[dict, dict]:
    """Records keyed by (entity, index, statistic) -> (value, std_error), plus the summary."""
    run_dir = Path(run_dir)
    summary = json.loads((run_dir / "summary.json").read_text()) if (run_dir / "summary.json").exists() else {}
    data = [p for p in sorted(run_dir.iterdir()) if p.suffix in (".csv", ".json")
            and p.name not in ("summary.json", "effective_config.json")]
    if len(data) != 1:
        raise ValueError(f"{run_dir}: expected one data file, found {len(data)}")
    path = data[0]
    if path.suffix == ".csv":
        _, rows = read_csv(path)
        columns = tuple(rows[0].keys()) if rows else ()
    else:
        doc = json.loads(path.read_text())
        columns = tuple(doc["columns"])
        rows = [dict(zip(columns, r)) for r in doc["rows"]]
    records = {}
    if columns == RECORD_COLUMNS:
        for r in rows:
            key = (f"{r['env_kind']}|{r['seed']}", int(r["horizon"]), r["statistic"])
            records[key] = (_num(r["value"]), _num(r["std_error"]))
    elif columns == SERIES_COLUMNS:
        for r in rows:
            n = int(r["n"])
            records[("series", n, "term")] = (_num(r["term"]), _num(r["quadrature_error"]))
            records[("series", n, "partial_sum")] = (_num(r["partial_sum"]), 0.0)
    elif columns == EXPANSION_COLUMNS:
        for r in rows:
            records[(r["instance"], 0, r["method"])] = (_num(r["value"]), _num(r["tail_bound"]))
    else:
        raise ValueError(f"{path}: unrecognized schema {columns}")
    return records, summary


def compare(run_a: Path, run_b: Path) -> dict:
    """Per-statistic deltas and sigma-distances between two runs."""
    rec_a, sum_a = load_records(run_a)
    rec_b, sum_b = load_records(run_b)
    common = sorted(set(rec_a) & set(rec_b), key=str)
    if not common:
        raise ValueError("runs share no statistics (schema mismatch)")
    rows = []
    for key in common:
        (va, sa), (vb, sb) = rec_a[key], rec_b[key]
        delta = va - vb
        sigma = math.hypot(sa, sb)
        z = 0.0 if delta == 0 else (delta / sigma if sigma > 0 else math.copysign(math.inf, delta))
        rows.append({"key": list(key), "a": va, "b": vb, "delta": delta, "sigma": sigma, "z": z})
    return {
        "n_common": len(common),
        "only_in_a": len(set(rec_a) - set(rec_b)),
        "only_in_b": len(set(rec_b) - set(rec_a)),
        "max_abs_delta": max(abs(r["delta"]) for r in rows),
        "max_abs_z": max(abs(r["z"]) for r in rows),
        "verdict_a": sum_a.get("verdict"),
        "verdict_b": sum_b.get("verdict"),
        "rows": rows,
    }


# command line -----------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orwalk", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=EXPERIMENTS + ("compare",))
    p.add_argument("runs", nargs="*", help="two run directories (compare only)")
    p.add_argument("--config", type=Path, help="JSON config; flags override its values")
    p.add_argument("--env", help="alternate | half-plane | random | periodic (with --pattern)")
    p.add_argument("--pattern", type=_int_list)
    p.add_argument("--seed", type=int, help="master seed (default $ORWALK_SEED or 0)")
    p.add_argument("--env-seeds", type=_int_list, dest="seeds", help="environment seeds, comma separated")
    p.add_argument("--samples", type=int, dest="n_samples")
    p.add_argument("--horizon", type=int)
    p.add_argument("--horizons", type=_int_list)
    p.add_argument("--checkpoints", type=_int_list)
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--max-len", type=int, dest="max_len")
    p.add_argument("--pair-total", type=int, dest="pair_total")
    p.add_argument("--n-random", type=int, dest="n_random")
    p.add_argument("--cap", type=int)
    p.add_argument("--deltas", type=_float_list)
    p.add_argument("--dims", type=_int_list)
    p.add_argument("--masses", type=_float_list)
    p.add_argument("--graphs", type=int, dest="n_graphs")
    p.add_argument("--graph", help="graph JSON file for resolvent-check")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        doc.pop("provenance", None)
        doc = doc.get("config", doc)
    doc["experiment"] = args.experiment
    for key in ("seed", "seeds", "n_samples", "horizons", "checkpoints", "n", "N", "max_len", "pair_total",
                "n_random", "cap", "deltas", "dims", "masses", "n_graphs", "graph", "workers", "output_dir",
                "format"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    if args.horizon is not None:
        doc["horizons"] = [args.horizon]
    if args.env is not None:
        env = {"kind": args.env}
        if args.pattern:
            env["pattern"] = args.pattern
        doc["env"] = env
    return ExperimentConfig.from_dict(doc)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["run"]:
        argv = argv[1:]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    if args.experiment == "compare":
        if len(args.runs) != 2:
            log.error("compare needs exactly two run directories")
            return EXIT_CONFIG
        try:
            report = compare(Path(args.runs[0]), Path(args.runs[1]))
        except (OSError, ValueError, KeyError) as exc:
            log.error("compare failed: %s", exc)
            return EXIT_RUNTIME
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    if args.runs:
        log.error("unexpected positional arguments: %s", " ".join(args.runs))
        return EXIT_CONFIG
    try:
        cfg = config_from_args(args)
    except (ConfigError, TypeError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
