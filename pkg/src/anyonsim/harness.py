"""Experiment orchestration: run configs, sweeps, statistics, persistence,
and the three-qubit ring warmup.

Results are stored as an append-only CSV of per-run rows plus a JSON
manifest (config echo, code version, timestamps); sweeps are resumable
keyed by (cell, run_index).  Per-run seeds are base_seed + run_index, so
a resumed or parallelized sweep reproduces byte-identical rows.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time as _time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, shadow as shadow_mod
from .engine import OPEN, TORUS, Geometry
from .engine.simulate import RunResult, run_single
from .potential import OPEN_EMBEDDED, LatticeParams, build_potential
from .shadow import (
    RepairSpec,
    edge_primary_set,
    lowest_secondary_energy,
    parse_spec_file,
    repair_rate,
    scale_primary,
    table_one_preset,
    with_edge_group,
)

CSV_FIELDS = [
    "geometry",
    "L",
    "mu_over_j",
    "gamma_p",
    "spec_id",
    "scale",
    "integrator",
    "seed",
    "run_index",
    "tau",
    "censored",
]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


@dataclass(frozen=True)
class RunConfig:
    """Full parameterization of one lifetime experiment (n_runs runs)."""

    L: int
    mu_over_j: float
    gamma_p: float
    geometry_kind: str = TORUS
    j_over_g: float = 3.0
    v_eff: float = 30.0
    spec_id: str = "table1"
    primary_scale: float = 1.0
    integrator: str = "kmc"
    dt: float | None = None
    update_radius: int | str | None = None
    n_runs: int = 1
    base_seed: int = 0
    max_time: float = 1.0e9
    embed_grid: int = 100

    def __post_init__(self):
        if self.geometry_kind not in (TORUS, OPEN):
            raise ValueError(f"geometry_kind must be torus|open (got {self.geometry_kind!r})")
        if self.integrator not in ("kmc", "fixed_dt"):
            raise ValueError(f"integrator must be kmc|fixed_dt (got {self.integrator!r})")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.gamma_p < 0:
            raise ValueError("gamma_p must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    @property
    def cell_key(self) -> tuple:
        return (
            self.geometry_kind,
            self.L,
            self.mu_over_j,
            self.gamma_p,
            self.spec_id,
            self.primary_scale,
            self.integrator,
        )


@dataclass
class RunRecord:
    """Aggregate of n_runs lifetime runs for one config cell."""

    config: RunConfig
    runs: list[RunResult] = field(default_factory=list)

    @property
    def taus(self) -> np.ndarray:
        return np.array([r.tau for r in self.runs if not r.censored])

    @property
    def n_censored(self) -> int:
        return sum(1 for r in self.runs if r.censored)

    @property
    def mean_tau(self) -> float:
        taus = self.taus
        if self.n_censored:
            warnings.warn(
                f"{self.n_censored}/{len(self.runs)} runs censored at "
                f"max_time={self.config.max_time:g}; mean excludes them"
            )
        return float(taus.mean()) if len(taus) else math.nan

    @property
    def stderr_tau(self) -> float:
        taus = self.taus
        if len(taus) < 2:
            return math.nan
        return float(taus.std(ddof=1) / math.sqrt(len(taus)))


def resolve_inputs(config: RunConfig):
    """(geometry, potential table, repair spec) for a config."""
    j = config.j_over_g
    mu = config.mu_over_j * j
    if config.spec_id == "table1":
        spec = table_one_preset(config.mu_over_j)
    elif os.path.exists(config.spec_id):
        spec = parse_spec_file(config.spec_id)
    else:
        raise ValueError(f"spec_id {config.spec_id!r} is neither 'table1' nor a spec file")
    if config.primary_scale != 1.0:
        spec = scale_primary(spec, config.primary_scale)

    if config.geometry_kind == TORUS:
        params = LatticeParams(j=j, mu=mu, grid=(config.L, config.L))
        geom = Geometry.torus(config.L)
    else:
        params = LatticeParams(
            j=j, mu=mu, grid=(config.embed_grid, config.embed_grid), geometry=OPEN_EMBEDDED
        )
        omega9 = lowest_secondary_energy(spec)
        geom = Geometry.open_patch(config.L, omega9)
        spec = with_edge_group(spec, edge_primary_set(config.L, omega9, config.v_eff))
    table = build_potential(params)
    table.set_v_eff(config.v_eff)
    return geom, table, spec


def _run_batch(config_dict: dict, run_indices: list[int]) -> list[tuple[int, float, bool, int]]:
    """Worker entry: rebuilds immutable inputs, runs a chunk of seeds."""
    config = RunConfig.from_dict(config_dict)
    geom, table, spec = resolve_inputs(config)
    out = []
    for idx in run_indices:
        r = run_single(
            geom,
            table,
            spec,
            config.gamma_p,
            integrator=config.integrator,
            dt=config.dt,
            update_radius=config.update_radius,
            seed=config.base_seed + idx,
            max_time=config.max_time,
        )
        out.append((idx, r.tau, r.censored, r.n_events))
    return out


def run_experiment(
    config: RunConfig,
    out_dir: str | None = None,
    workers: int = 1,
    resume: bool = False,
    done_indices: set[int] | None = None,
) -> RunRecord:
    """Execute n_runs independent lifetime runs and aggregate them.

    Workers share only the (immutable) config; each run has its own state
    seeded by base_seed + run_index, so results are order- and
    parallelism-independent.
    """
    record = RunRecord(config=config)
    writer = _RowWriter(out_dir) if out_dir else None
    done = set(done_indices or ())
    if resume and out_dir and os.path.exists(os.path.join(out_dir, "runs.csv")):
        for row in read_rows(out_dir):
            if _row_cell_key(row) == config.cell_key:
                done.add(row["run_index"])
    pending = [i for i in range(config.n_runs) if i not in done]

    if workers <= 1:
        geom, table, spec = resolve_inputs(config)
        for idx in pending:
            r = run_single(
                geom,
                table,
                spec,
                config.gamma_p,
                integrator=config.integrator,
                dt=config.dt,
                update_radius=config.update_radius,
                seed=config.base_seed + idx,
                max_time=config.max_time,
            )
            record.runs.append(
                RunResult(seed=config.base_seed + idx, tau=r.tau, censored=r.censored,
                          n_events=r.n_events, event_counts=r.event_counts)
            )
            if writer:
                writer.write(config, idx, r.tau, r.censored)
    else:
        chunk = max(1, math.ceil(len(pending) / (4 * workers)))
        batches = [pending[i : i + chunk] for i in range(0, len(pending), chunk)]
        cfg = asdict(config)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rows in pool.map(_run_batch, [cfg] * len(batches), batches):
                for idx, tau, censored, n_events in rows:
                    record.runs.append(
                        RunResult(seed=config.base_seed + idx, tau=tau, censored=censored,
                                  n_events=n_events)
                    )
                    if writer:
                        writer.write(config, idx, tau, censored)
    record.runs.sort(key=lambda r: r.seed)
    if writer:
        writer.close()
    return record


def _row_cell_key(row: dict) -> tuple:
    return (
        row["geometry"],
        row["L"],
        row["mu_over_j"],
        row["gamma_p"],
        row["spec_id"],
        row["scale"],
        row["integrator"],
    )


class _RowWriter:
    """Single-writer append-only CSV + manifest for a results directory."""

    def __init__(self, out_dir: str):
        os.makedirs(out_dir, exist_ok=True)
        self.csv_path = os.path.join(out_dir, "runs.csv")
        self.manifest_path = os.path.join(out_dir, "manifest.json")
        fresh = not os.path.exists(self.csv_path)
        self.fh = open(self.csv_path, "a", newline="")
        self.writer = csv.writer(self.fh)
        if fresh:
            self.writer.writerow(CSV_FIELDS)
            self.fh.flush()

    def write(self, config: RunConfig, run_index: int, tau: float, censored: bool):
        self.writer.writerow(
            [
                config.geometry_kind,
                config.L,
                repr(config.mu_over_j),
                repr(config.gamma_p),
                config.spec_id,
                repr(config.primary_scale),
                config.integrator,
                config.base_seed + run_index,
                run_index,
                repr(float(tau)),
                int(censored),
            ]
        )
        self.fh.flush()

    def write_manifest(self, configs: list[RunConfig]):
        payload = {
            "version": __version__,
            "written_at": _time.strftime("%Y-%m-%dT%H:%M:%S"),
            "cells": [
                {"hash": c.config_hash, "config": json.loads(c.to_json())} for c in configs
            ],
        }
        with open(self.manifest_path, "w") as fh:
            json.dump(payload, fh, indent=2)

    def close(self):
        self.fh.close()


def read_rows(out_dir: str) -> list[dict]:
    path = os.path.join(out_dir, "runs.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["L"] = int(r["L"])
        r["mu_over_j"] = float(r["mu_over_j"])
        r["gamma_p"] = float(r["gamma_p"])
        r["scale"] = float(r["scale"])
        r["seed"] = int(r["seed"])
        r["run_index"] = int(r["run_index"])
        r["tau"] = float(r["tau"])
        r["censored"] = bool(int(r["censored"]))
    return rows


def expand_grid(base: RunConfig, axes: dict[str, list]) -> list[RunConfig]:
    """Cross product of config axes over a base config."""
    configs = [base]
    for key, values in axes.items():
        configs = [replace(c, **{key: v}) for c in configs for v in values]
    return configs


def sweep(
    configs: list[RunConfig],
    out_dir: str,
    workers: int = 1,
    resume: bool = False,
) -> list[RunRecord]:
    """Run every cell, streaming rows to the results store.

    With ``resume``, (cell, run_index) pairs already present in the store
    are skipped; per-cell failures are recorded and the sweep continues.
    """
    if not configs:
        raise ValueError("empty sweep grid")
    done: dict[tuple, set[int]] = {}
    if resume and os.path.exists(os.path.join(out_dir, "runs.csv")):
        for row in read_rows(out_dir):
            done.setdefault(_row_cell_key(row), set()).add(row["run_index"])

    writer = _RowWriter(out_dir)
    writer.write_manifest(configs)
    writer.close()

    records = []
    failures = []
    for config in configs:
        try:
            rec = run_experiment(
                config,
                out_dir=out_dir,
                workers=workers,
                done_indices=done.get(config.cell_key, set()),
            )
            records.append(rec)
        except Exception as exc:  # cell failure: record, continue
            failures.append((config, exc))
    if failures:
        detail = "; ".join(f"{c.cell_key}: {e}" for c, e in failures)
        raise SweepPartialFailure(f"{len(failures)} sweep cells failed: {detail}", records)
    return records


class SweepPartialFailure(RuntimeError):
    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


def aggregate_stats(records_or_rows) -> list[dict]:
    """Per-cell mean tau, stderr, and censored fraction.

    Accepts RunRecords or raw CSV row dicts; returns one summary dict per
    cell, grouped by (mu_over_j, gamma_p) and ordered by L inside each
    group (the tau-vs-L data layout).
    """
    if not records_or_rows:
        raise ValueError("no records to aggregate")
    cells: dict[tuple, list[tuple[float, bool]]] = {}
    meta: dict[tuple, dict] = {}
    for item in records_or_rows:
        if isinstance(item, RunRecord):
            key = item.config.cell_key
            for r in item.runs:
                cells.setdefault(key, []).append((r.tau, r.censored))
            meta[key] = {
                "geometry": item.config.geometry_kind,
                "L": item.config.L,
                "mu_over_j": item.config.mu_over_j,
                "gamma_p": item.config.gamma_p,
                "spec_id": item.config.spec_id,
                "scale": item.config.primary_scale,
                "integrator": item.config.integrator,
            }
        else:
            key = _row_cell_key(item)
            cells.setdefault(key, []).append((item["tau"], item["censored"]))
            meta[key] = {
                "geometry": item["geometry"],
                "L": item["L"],
                "mu_over_j": item["mu_over_j"],
                "gamma_p": item["gamma_p"],
                "spec_id": item["spec_id"],
                "scale": item["scale"],
                "integrator": item["integrator"],
            }
    out = []
    for key in sorted(cells, key=lambda k: (k[2], k[3], k[1])):
        taus = np.array([t for t, c in cells[key] if not c])
        n = len(cells[key])
        row = dict(meta[key])
        row["n_runs"] = n
        row["n_censored"] = n - len(taus)
        row["mean_tau"] = float(taus.mean()) if len(taus) else math.nan
        row["stderr_tau"] = (
            float(taus.std(ddof=1) / math.sqrt(len(taus))) if len(taus) > 1 else math.nan
        )
        out.append(row)
    return out


def format_stats(stats: list[dict]) -> str:
    header = f"{'geom':6s} {'L':>3s} {'mu/J':>6s} {'gamma_p':>9s} {'scale':>6s} {'runs':>5s} {'cens':>4s} {'mean_tau':>12s} {'stderr':>10s}"
    lines = [header, "-" * len(header)]
    for s in stats:
        lines.append(
            f"{s['geometry']:6s} {s['L']:>3d} {s['mu_over_j']:>6.2f} {s['gamma_p']:>9.2e} "
            f"{s['scale']:>6.2f} {s['n_runs']:>5d} {s['n_censored']:>4d} "
            f"{s['mean_tau']:>12.5g} {s['stderr_tau']:>10.3g}"
        )
    return "\n".join(lines)


# --- the three-qubit ring warmup --------------------------------------------


def ring_demo(
    j: float,
    gamma_p: float,
    omega_s: float,
    omega_coupling: float,
    gamma_s: float,
    n_runs: int,
    seed: int = 0,
    max_time: float = 1.0e9,
) -> RunRecord:
    """Classical reduction of the three-qubit ferromagnetic ring.

    Three bits coupled pairwise with strength j; flipping bit i costs
    dE = 2 j s_i (s_j + s_k), so leaving the uniform state costs 4j and
    completing a majority flip releases it.  Each bit flips at
    gamma_p + Gamma_R(dE) with a single shadow qubit at omega_s; failure
    is majority inversion.  For Gamma_R >> gamma_p the lifetime scales as
    Gamma_R / gamma_p^2.
    """
    if min(j, omega_s, omega_coupling, gamma_s) < 0 or gamma_p < 0:
        raise ValueError("ring-demo parameters must be nonnegative")
    spec = RepairSpec(
        groups=(shadow_mod.ShadowGroup(gamma_s, ((omega_s, omega_coupling),)),),
        label="ring",
    )
    config = RunConfig(
        L=2,  # placeholder; the ring is not a lattice run
        mu_over_j=-0.1,
        gamma_p=gamma_p,
        spec_id="ring",
        n_runs=n_runs,
        base_seed=seed,
        max_time=max_time,
    )
    record = RunRecord(config=config)
    # dE only takes the values {-4j, 0, +4j}; cache the repair rates
    rate_of = {de: gamma_p + repair_rate(spec, de) for de in (-4.0 * j, 0.0, 4.0 * j)}
    for idx in range(n_runs):
        rng = np.random.default_rng(seed + idx)
        s = [1, 1, 1]
        t = 0.0
        censored = False
        n_events = 0
        while True:
            des = [2.0 * j * s[i] * (s[(i + 1) % 3] + s[(i + 2) % 3]) for i in range(3)]
            rates = [rate_of[de] for de in des]
            total = sum(rates)
            if total <= 0:
                t = max_time
                censored = True
                break
            u1, u2 = rng.random(2)
            if u1 <= 0:
                t = max_time
                censored = True
                break
            t += -math.log(u1) / total
            if t > max_time:
                t = max_time
                censored = True
                break
            target = u2 * total
            acc = 0.0
            pick = 2
            for i in range(3):
                acc += rates[i]
                if target < acc:
                    pick = i
                    break
            s[pick] = -s[pick]
            n_events += 1
            if s[0] + s[1] + s[2] < 0:  # majority inverted
                break
        record.runs.append(
            RunResult(seed=seed + idx, tau=t, censored=censored, n_events=n_events,
                      event_counts={"flip": n_events})
        )
    return record
