"""Stochastic evolution drivers: rate caching, fixed-dt and continuous-time
stepping, and single-run lifetime measurement.

The fixed-dt integrator is the reference formulation (per-spin Bernoulli
trials each timestep); the continuous-time (KMC) integrator samples
waiting times and spins exactly from the current rate table and is the
production default, with an update-radius truncation for the long-range
rate refresh (exact mode available for audits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import shadow as shadow_mod
from ..shadow import RepairSpec, peak_rate
from . import backend as backend_mod
from ._kernel_py import MODE_FIXED_DT, MODE_KMC, STATUS_CENSORED
from .geometry import OPEN, Geometry
from .state import KIND_NAMES, FabricState, FlipOutcome

DT_SAFETY = 0.05  # max per-spin flip probability per step


class _Caches:
    def __init__(self, n_spins: int):
        self.rates = np.zeros(n_spins)
        self.de = np.zeros(n_spins)
        self.synced_version = -1


class Plan:
    """Immutable-per-run compilation of (geometry, potential, spec, rates)."""

    def __init__(self, state: FabricState, spec: RepairSpec, gamma_p: float, update_radius=None):
        tab = state.tables
        self.tables = tab
        self.spec = spec
        self.gamma_p = float(gamma_p)

        # flatten shadow groups; roles: shifted = primary or edge (their
        # resonances track local pair/absorption energies in open geometry),
        # edge groups couple only to boundary spins
        omegas, osqs, g_gamma, g_shift, g_edge, g_start, g_end = [], [], [], [], [], [], []
        for g in spec.groups:
            g_gamma.append(g.gamma_s)
            g_shift.append(1 if g.role in (shadow_mod.ROLE_PRIMARY, shadow_mod.ROLE_EDGE) else 0)
            g_edge.append(1 if g.role == shadow_mod.ROLE_EDGE else 0)
            g_start.append(len(omegas))
            for w, o in g.qubits:
                omegas.append(w)
                osqs.append(o * o)
            g_end.append(len(omegas))
        self.n_groups = len(spec.groups)
        self.g_gamma = np.asarray(g_gamma, dtype=np.float64)
        self.g_shifted = np.asarray(g_shift, dtype=np.uint8)
        self.g_edge = np.asarray(g_edge, dtype=np.uint8)
        self.g_start = np.asarray(g_start, dtype=np.int32)
        self.g_end = np.asarray(g_end, dtype=np.int32)
        self.qb_omega = np.asarray(omegas, dtype=np.float64)
        self.qb_osq = np.asarray(osqs, dtype=np.float64)

        # local resonance shifts (zero on the torus)
        shift = np.zeros(tab.n_spins)
        if not tab.torus:
            p, q = tab.spin_p, tab.spin_q
            interior = q >= 0
            qs = np.where(interior, q, p)
            shift = np.where(interior, tab.dv[p] + tab.dv[qs], 0.0)
            edge_omegas = [g.qubits[0][0] for g in spec.groups if g.role == shadow_mod.ROLE_EDGE]
            edge_nom = edge_omegas[0] if edge_omegas else tab.v_eff
            shift = np.where(interior, shift, (tab.v_eff + tab.dv[p]) - edge_nom)
        self.shift = np.ascontiguousarray(shift)

        # rate-refresh neighborhoods
        if update_radius in ("exact", "inf"):
            rc = -1
        elif update_radius is None:
            rc = math.ceil(5.0 * state.table.decay_length)
        else:
            rc = int(update_radius)
        self.update_radius = rc
        self.all_spins = np.arange(tab.n_spins, dtype=np.int64)
        self.update_all = rc < 0 or rc >= tab.L  # radius covers every distance
        if not self.update_all:
            self.upd_start, self.upd_idx = _build_update_lists(tab, rc)
        else:
            self.upd_start = np.zeros(1, dtype=np.int64)
            self.upd_idx = np.zeros(0, dtype=np.int64)

        self.caches = _Caches(tab.n_spins)


def _build_update_lists(tab, rc: int):
    """CSR lists: for each plaquette, the spins within Euclidean distance rc."""
    L = tab.L
    px, py = tab.px.astype(np.int64), tab.py.astype(np.int64)
    sx_p, sy_p = px[tab.spin_p], py[tab.spin_p]
    qs = np.where(tab.spin_q < 0, tab.spin_p, tab.spin_q)
    sx_q, sy_q = px[qs], py[qs]
    rc2 = rc * rc
    starts = np.zeros(tab.n_plaq + 1, dtype=np.int64)
    chunks = []

    def d2(ax, ay, bx, by):
        dx = np.abs(ax - bx)
        dy = np.abs(ay - by)
        if tab.torus:
            dx = np.minimum(dx, L - dx)
            dy = np.minimum(dy, L - dy)
        return dx * dx + dy * dy

    for t in range(tab.n_plaq):
        near = (d2(sx_p, sy_p, px[t], py[t]) <= rc2) | (d2(sx_q, sy_q, px[t], py[t]) <= rc2)
        idx = np.nonzero(near)[0].astype(np.int64)
        chunks.append(idx)
        starts[t + 1] = starts[t] + len(idx)
    return starts, np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)


@dataclass
class RunResult:
    """Outcome of one lifetime run."""

    seed: int
    tau: float
    censored: bool
    n_events: int
    event_counts: dict[str, int] = field(default_factory=dict)


class Simulator:
    """Owns the rate cache for one (state, spec, gamma_p) combination."""

    def __init__(
        self,
        state: FabricState,
        spec: RepairSpec,
        gamma_p: float,
        *,
        integrator: str = "kmc",
        dt: float | None = None,
        update_radius=None,
        backend: str | None = None,
    ):
        if integrator not in ("kmc", "fixed_dt"):
            raise ValueError(f"unknown integrator {integrator!r}")
        self.mode = integrator
        self.state = state
        self.plan = Plan(state, spec, gamma_p, update_radius=update_radius)
        self.kernel = backend_mod.get_kernel(backend)
        self.backend = backend_mod.kernel_name(self.kernel)
        self.max_rate = gamma_p + peak_rate(spec)
        if dt is None:
            dt = DT_SAFETY / self.max_rate if self.max_rate > 0 else 1.0
        if dt * self.max_rate > DT_SAFETY * (1 + 1e-9):
            raise ValueError(
                f"dt={dt:g} violates dt*max_rate <= {DT_SAFETY} (max_rate={self.max_rate:.4g})"
            )
        self.dt = dt
        self._sync()

    def _sync(self):
        if self.plan.caches.synced_version != self.state.version:
            self.kernel.recompute_all(self.plan, self.state)

    def _run(self, mode, max_events, max_steps, max_time, collect):
        self._sync()
        status, counts, rows = self.kernel.run(
            self.plan, self.state, mode, self.dt, max_events, max_steps, max_time, collect
        )
        return status, counts, rows

    def step_kmc(self, n: int = 1, max_time: float = math.inf) -> list[FlipOutcome]:
        status, _, rows = self._run(MODE_KMC, n, -1, max_time, True)
        return [_row_to_outcome(r) for r in rows]

    def step_fixed_dt(self, n: int = 1, max_time: float = math.inf) -> list[FlipOutcome]:
        status, _, rows = self._run(MODE_FIXED_DT, -1, n, max_time, True)
        return [_row_to_outcome(r) for r in rows]

    def run_until_failure(self, max_time: float = 1.0e9, collect_log: bool = False):
        mode = MODE_KMC if self.mode == "kmc" else MODE_FIXED_DT
        status, counts, rows = self._run(mode, -1, -1, max_time, collect_log)
        result = RunResult(
            seed=self.state.seed,
            tau=float(self.state.time),
            censored=status == STATUS_CENSORED,
            n_events=int(sum(counts)),
            event_counts={KIND_NAMES[i]: int(c) for i, c in enumerate(counts)},
        )
        return (result, rows) if collect_log else result


def _row_to_outcome(row) -> FlipOutcome:
    t, spin, kind, de, la, lb, logical = row
    labels = (la,) if lb == 0 or lb == la else (la, lb)
    return FlipOutcome(
        kind=KIND_NAMES[kind],
        delta_e=float(de),
        logical_error=bool(logical),
        labels_touched=labels,
        spin=int(spin),
        time=float(t),
    )


def _cached_simulator(state, spec, gamma_p, dt=None, update_radius=None) -> Simulator:
    key = (id(spec), float(gamma_p), dt, update_radius)
    sim = getattr(state, "_sim_cache", None)
    if sim is None or sim._cache_key != key:
        sim = Simulator(state, spec, gamma_p, dt=dt, update_radius=update_radius)
        sim._cache_key = key
        state._sim_cache = sim
    return sim


def _check_table(state: FabricState, table) -> None:
    if table is not None and table is not state.table:
        raise ValueError(
            "state was built against a different potential table; "
            "construct a FabricState from this table instead"
        )


def step_kmc(state: FabricState, table, spec: RepairSpec, gamma_p: float) -> FlipOutcome | None:
    """Sample and apply the next event; advances the clock by the waiting time.

    Returns None when the total rate is zero (nothing can ever flip).
    """
    _check_table(state, table)
    out = _cached_simulator(state, spec, gamma_p).step_kmc(1)
    return out[0] if out else None


def step_fixed_dt(state: FabricState, table, spec: RepairSpec, gamma_p: float, dt: float) -> list[FlipOutcome]:
    """One reference-integrator step: per-spin Bernoulli trials against the
    pre-step configuration, flips applied in ascending spin order."""
    _check_table(state, table)
    return _cached_simulator(state, spec, gamma_p, dt=dt).step_fixed_dt(1)


def run_single(
    geom: Geometry,
    table,
    spec: RepairSpec,
    gamma_p: float,
    *,
    integrator: str = "kmc",
    dt: float | None = None,
    update_radius=None,
    seed: int = 0,
    max_time: float = 1.0e9,
    backend: str | None = None,
    collect_log: bool = False,
):
    """One lifetime run from the ground state."""
    state = FabricState.ground(geom, table, seed=seed)
    sim = Simulator(
        state,
        spec,
        gamma_p,
        integrator=integrator,
        dt=dt,
        update_radius=update_radius,
        backend=backend,
    )
    return sim.run_until_failure(max_time=max_time, collect_log=collect_log)


def run_until_failure(config, table, spec: RepairSpec, run_index: int = 0):
    """Lifetime run driven by a RunConfig-shaped object (see harness)."""
    if config.geometry_kind == OPEN:
        geom = Geometry.open_patch(config.L, shadow_mod.lowest_secondary_energy(spec))
    else:
        geom = Geometry.torus(config.L)
    return run_single(
        geom,
        table,
        spec,
        config.gamma_p,
        integrator=config.integrator,
        dt=config.dt,
        update_radius=config.update_radius,
        seed=config.base_seed + run_index,
        max_time=config.max_time,
    )
