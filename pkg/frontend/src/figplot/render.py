"""CSV-to-figure rendering with schema validation up front.

Expected column contracts (headers must match exactly):

- repair:    spec_id, delta_e, gamma_r          (one curve per spec_id)
- lifetime:  the sweep store schema             (one curve per gamma_p,
             L on x, mean tau on log y, censored runs excluded)
- gadget:    index, eigenvalue, stabilizer_expectation
- potential: dx, dy, U                          (filled contour map)

Leading '#' comment lines are tolerated (the potential CSV carries a
parameter echo).  Rendering is read-only over inputs; identical inputs
produce structurally identical figures.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMAS = {
    "repair": ["spec_id", "delta_e", "gamma_r"],
    "lifetime": [
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
    ],
    "gadget": ["index", "eigenvalue", "stabilizer_expectation"],
    "potential": ["dx", "dy", "U"],
}


class SchemaError(ValueError):
    """Input header does not match the kind's column contract."""


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple[str, ...]
    output: str
    logy: bool = False

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValueError(f"unknown plot kind {self.kind!r}; choose from {sorted(SCHEMAS)}")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


@dataclass
class RenderInfo:
    """Structural summary of a rendered figure (stable across reruns)."""

    output: str
    n_series: int
    n_points: int
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    logy: bool = False
    labels: list[str] = field(default_factory=list)


def read_validated(path: str, kind: str) -> list[dict]:
    expected = SCHEMAS[kind]
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines or not lines[0].strip():
        raise SchemaError(f"{path}: empty input; expected columns {expected}")
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    if list(header) != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        raise SchemaError(
            f"{path}: header {list(header)} does not match the {kind} contract "
            f"{expected} (missing {missing}, unexpected {extra})"
        )
    return list(reader)


def _finish(fig, ax, job: PlotJob, n_series: int, n_points: int, labels) -> RenderInfo:
    if n_series > 1 or labels:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(job.output)
    info = RenderInfo(
        output=job.output,
        n_series=n_series,
        n_points=n_points,
        xlim=tuple(ax.get_xlim()),
        ylim=tuple(ax.get_ylim()),
        logy=job.logy,
        labels=list(labels),
    )
    plt.close(fig)
    return info


def _render_repair(job: PlotJob, rows: list[dict]) -> RenderInfo:
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = []
    n_points = 0
    by_spec: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        by_spec.setdefault(r["spec_id"], []).append((float(r["delta_e"]), float(r["gamma_r"])))
    for spec_id, pts in by_spec.items():
        pts.sort()
        xs, ys = zip(*pts)
        ax.plot(xs, ys, lw=1.2, label=spec_id)
        labels.append(spec_id)
        n_points += len(pts)
    ax.set_xlabel(r"$\delta E$  (units of $g$)")
    ax.set_ylabel(r"$\Gamma_R(\delta E)$  (units of $g$)")
    if job.logy:
        ax.set_yscale("log")
    return _finish(fig, ax, job, len(by_spec), n_points, labels)


def _render_lifetime(job: PlotJob, rows: list[dict]) -> RenderInfo:
    cells: dict[tuple, dict[int, list[float]]] = {}
    for r in rows:
        if int(r["censored"]):
            continue
        key = (float(r["gamma_p"]), float(r["mu_over_j"]), r["geometry"])
        cells.setdefault(key, {}).setdefault(int(r["L"]), []).append(float(r["tau"]))
    if not cells:
        raise SchemaError("no uncensored rows to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = []
    n_points = 0
    many_mu = len({k[1] for k in cells}) > 1
    for (gamma_p, mu, geom), by_l in sorted(cells.items()):
        ls = sorted(by_l)
        taus = [float(np.mean(by_l[L])) for L in ls]
        errs = [
            float(np.std(by_l[L], ddof=1) / math.sqrt(len(by_l[L]))) if len(by_l[L]) > 1 else 0.0
            for L in ls
        ]
        label = f"$\\Gamma_P$={gamma_p:g}" + (f", $\\mu/J$={mu:g}" if many_mu else "")
        ax.errorbar(ls, taus, yerr=errs, marker="o", ms=4, lw=1.2, capsize=2, label=label)
        labels.append(label)
        n_points += len(ls)
    ax.set_xlabel("L")
    ax.set_ylabel(r"$\tau$  (units of $g^{-1}$)")
    ax.set_yscale("log")  # lifetimes span decades
    return _finish(fig, ax, job, len(cells), n_points, labels)


def _render_gadget(job: PlotJob, rows: list[dict]) -> RenderInfo:
    idx = np.array([int(r["index"]) for r in rows])
    evals = np.array([float(r["eigenvalue"]) for r in rows])
    stab = np.array([float(r["stabilizer_expectation"]) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(idx, evals, "s", ms=5, color="purple", label="energy")
    ax2 = ax.twinx()
    ax2.plot(idx, stab, "o", ms=5, mfc="none", color="tab:blue", label="stabilizer product")
    ax2.set_ylabel("stabilizer-product expectation")
    ax2.set_ylim(-1.3, 1.3)
    ax.set_xlabel("eigenstate index")
    ax.set_ylabel(r"energy  (units of $\kappa$)")
    if job.logy:
        ax.set_yscale("log")
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, fontsize=8)
    fig.tight_layout()
    fig.savefig(job.output)
    info = RenderInfo(
        output=job.output,
        n_series=2,
        n_points=2 * len(idx),
        xlim=tuple(ax.get_xlim()),
        ylim=tuple(ax.get_ylim()),
        logy=job.logy,
        labels=["energy", "stabilizer product"],
    )
    plt.close(fig)
    return info


def _render_potential(job: PlotJob, rows: list[dict]) -> RenderInfo:
    dx = sorted({int(r["dx"]) for r in rows})
    dy = sorted({int(r["dy"]) for r in rows})
    grid = np.full((len(dy), len(dx)), np.nan)
    xi = {v: i for i, v in enumerate(dx)}
    yi = {v: i for i, v in enumerate(dy)}
    for r in rows:
        grid[yi[int(r["dy"])], xi[int(r["dx"])]] = float(r["U"])
    fig, ax = plt.subplots(figsize=(5.4, 4.5))
    data = np.log10(grid) if job.logy else grid
    art = ax.contourf(dx, dy, data, levels=24)
    fig.colorbar(art, ax=ax, label=(r"$\log_{10} U$" if job.logy else r"$U$  (units of $g$)"))
    ax.set_xlabel("dx")
    ax.set_ylabel("dy")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(job.output)
    info = RenderInfo(
        output=job.output,
        n_series=1,
        n_points=int(np.isfinite(grid).sum()),
        xlim=tuple(ax.get_xlim()),
        ylim=tuple(ax.get_ylim()),
        logy=job.logy,
    )
    plt.close(fig)
    return info


_RENDERERS = {
    "repair": _render_repair,
    "lifetime": _render_lifetime,
    "gadget": _render_gadget,
    "potential": _render_potential,
}


def render(job: PlotJob) -> RenderInfo:
    """Validate every input against the kind's schema, then draw.

    Raises SchemaError (no output written) on contract violations and
    FileNotFoundError for missing inputs.
    """
    rows: list[dict] = []
    for path in job.inputs:
        rows.extend(read_validated(path, job.kind))
    if not rows:
        raise SchemaError(f"{job.inputs}: no data rows")
    return _RENDERERS[job.kind](job, rows)
