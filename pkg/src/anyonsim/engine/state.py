"""Anyon configuration state, flip energetics, and the defect-tracking rules.

The classical energy of a configuration is

    H_c = V * n_anyons + sum_a dV(r_a) - 8 * sum_{a<b} U(r_a - r_b),

and each spin flip falls into one of five event kinds (pair create /
annihilate, move, boundary single create / annihilate) whose energy change
follows from H_c restricted to the one or two plaquettes the spin adjoins.

Labels implement the fusion bookkeeping: pairs are born sharing a fresh
label, moves carry it, fusions of distinct labels relabel globally
(including the edge lists), and logical errors are declared from cut
parity (torus) or top+bottom membership (open patch) at annihilation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import PCG64, Generator

from ..potential import PotentialTable
from .geometry import TORUS, Geometry, build_spin_tables

KIND_CREATE = 0
KIND_ANNIHILATE = 1
KIND_MOVE = 2
KIND_BOUNDARY_CREATE = 3
KIND_BOUNDARY_ANNIHILATE = 4

KIND_NAMES = ("create", "annihilate", "move", "boundary_create", "boundary_annihilate")


@dataclass(frozen=True)
class FlipOutcome:
    kind: str
    delta_e: float
    logical_error: bool
    labels_touched: tuple[int, ...]
    spin: int
    time: float


class Tables:
    """Geometry + potential lookups in kernel-ready array form."""

    def __init__(self, geom: Geometry, table: PotentialTable, v_eff: float | None = None):
        if v_eff is None:
            v_eff = table.v_eff
        if v_eff is None:
            raise ValueError("table.v_eff is unset; call effective_gap or set_v_eff first")
        L = geom.L
        self.geom = geom
        self.table = table
        self.L = L
        self.n_plaq = L * L
        self.torus = geom.kind == TORUS
        self.spin_p, self.spin_q, self.spin_cut, self.px, self.py = build_spin_tables(geom)
        self.n_spins = len(self.spin_p)
        self.u_abs = np.ascontiguousarray(table.displacement_table(L))
        self.dv = np.ascontiguousarray(geom.delta_v)
        self.v_eff = float(v_eff)
        # U(d) between each spin's own plaquette pair (0 for boundary spins)
        c = L - 1
        q_safe = np.where(self.spin_q < 0, self.spin_p, self.spin_q)
        dx = self.px[self.spin_p] - self.px[q_safe] + c
        dy = self.py[self.spin_p] - self.py[q_safe] + c
        self.pair_u = np.where(self.spin_q < 0, 0.0, self.u_abs[dx, dy])
        self.pair_u = np.ascontiguousarray(self.pair_u)

    def u_at(self, a: int, b: int) -> float:
        c = self.L - 1
        return self.u_abs[self.px[a] - self.px[b] + c, self.py[a] - self.py[b] + c]

    def pair_spin(self, a: tuple[int, int], b: tuple[int, int]) -> int:
        """Spin index between plaquettes a=(x,y) and b (for scripted paths)."""
        if not hasattr(self, "_pair_lookup"):
            lookup = {}
            for s in range(self.n_spins):
                q = int(self.spin_q[s])
                if q >= 0:
                    p = int(self.spin_p[s])
                    lookup[(p, q)] = s
                    lookup[(q, p)] = s
            self._pair_lookup = lookup
        fa = a[1] * self.L + a[0]
        fb = b[1] * self.L + b[0]
        return self._pair_lookup[(fa, fb)]

    def boundary_spin(self, x: int, side: str) -> int:
        """Open-geometry single-plaquette spin at column x, side 'top'|'bottom'."""
        want_cut = 1 if side == "top" else 2
        row = self.L - 1 if side == "top" else 0
        flat = row * self.L + x
        for s in range(self.n_spins):
            if self.spin_q[s] < 0 and self.spin_p[s] == flat and self.spin_cut[s] == want_cut:
                return s
        raise KeyError((x, side))


class FabricState:
    """Mutable simulation state: occupations, labeled anyon registry, edge
    lists, incremental energy, clock and RNG.

    Single-threaded by design; parallelism happens across independent
    states.  The potential table is captured at construction because the
    incremental energy cannot be maintained without it.
    """

    def __init__(self, geom: Geometry, table: PotentialTable, seed: int = 0, v_eff: float | None = None):
        self.geometry = geom
        self.table = table
        self.tables = Tables(geom, table, v_eff)
        n_plaq = self.tables.n_plaq
        self.occ = np.zeros(n_plaq, dtype=np.uint8)
        self.label_of = np.zeros(n_plaq, dtype=np.int64)
        self.reg_pos = np.zeros(n_plaq, dtype=np.int32)
        self.reg_label = np.zeros(n_plaq, dtype=np.int64)
        self.reg_idx = np.full(n_plaq, -1, dtype=np.int32)
        self.n_anyons = 0
        # torus: cut_counts / cut_list; open: index 1=top, 2=bottom
        self.cut_counts: dict[int, int] = {}
        self.top_counts: dict[int, int] = {}
        self.bottom_counts: dict[int, int] = {}
        self.cut_list: list[int] = []
        self.top_list: list[int] = []
        self.bottom_list: list[int] = []
        self.energy = 0.0
        self.time = 0.0
        self.next_label = 1
        self.version = 0
        self.seed = seed
        self.bitgen = PCG64(seed)
        self.rng = Generator(self.bitgen)

    @classmethod
    def ground(cls, geom: Geometry, table: PotentialTable, seed: int = 0, v_eff: float | None = None):
        return cls(geom, table, seed=seed, v_eff=v_eff)

    @property
    def occupations(self) -> np.ndarray:
        return self.occ.reshape(self.geometry.L, self.geometry.L).copy()

    @property
    def anyons(self) -> dict[int, list[tuple[int, int]]]:
        L = self.geometry.L
        out: dict[int, list[tuple[int, int]]] = {}
        for t in range(self.n_anyons):
            flat = int(self.reg_pos[t])
            out.setdefault(int(self.reg_label[t]), []).append((flat % L, flat // L))
        return out

    @property
    def edge_lists(self):
        if self.tables.torus:
            return list(self.cut_list)
        return list(self.top_list), list(self.bottom_list)

    def anyon_positions(self) -> list[tuple[int, int]]:
        L = self.geometry.L
        return [(int(p) % L, int(p) // L) for p in self.reg_pos[: self.n_anyons]]

    def consistent(self) -> bool:
        """occupations <-> registry agreement; live labels cover 1-2 plaquettes."""
        if int(self.occ.sum()) != self.n_anyons:
            return False
        for t in range(self.n_anyons):
            p = self.reg_pos[t]
            if not self.occ[p] or self.reg_idx[p] != t:
                return False
            if self.label_of[p] != self.reg_label[t]:
                return False
        counts: dict[int, int] = {}
        for t in range(self.n_anyons):
            lab = int(self.reg_label[t])
            counts[lab] = counts.get(lab, 0) + 1
        limit = 2
        if any(n > limit for n in counts.values()):
            return False
        if self.tables.torus and any(n != 2 for n in counts.values()):
            return False
        return True


def total_energy(state: FabricState, table: PotentialTable | None = None) -> float:
    """Direct O(n^2) evaluation of H_c; the oracle for incremental bookkeeping."""
    tab = state.tables if table is None or table is state.table else Tables(state.geometry, table, state.tables.v_eff)
    n = state.n_anyons
    total = tab.v_eff * n
    for t in range(n):
        total += tab.dv[state.reg_pos[t]]
    for i in range(n):
        for j in range(i + 1, n):
            total -= 8.0 * tab.u_at(state.reg_pos[i], state.reg_pos[j])
    return float(total)


def _event_energy(tab: Tables, state: FabricState, spin: int):
    """Event kind and exact energy change for flipping ``spin`` now.

    Accumulates interaction sums in registry order; the compiled kernel
    follows the identical expression structure so trajectories agree
    bit-for-bit across backends.
    """
    p = int(tab.spin_p[spin])
    q = int(tab.spin_q[spin])
    occ = state.occ
    reg = state.reg_pos
    n = state.n_anyons
    if q < 0:
        sp = 0.0
        for t in range(n):
            a = int(reg[t])
            if a == p:
                continue
            sp += tab.u_at(a, p)
        base = tab.v_eff + tab.dv[p] - 8.0 * sp
        if occ[p]:
            return KIND_BOUNDARY_ANNIHILATE, -base
        return KIND_BOUNDARY_CREATE, base
    if occ[p] != occ[q]:
        src, dst = (p, q) if occ[p] else (q, p)
        dsum = 0.0
        for t in range(n):
            a = int(reg[t])
            if a == src:
                continue
            dsum += tab.u_at(a, dst) - tab.u_at(a, src)
        return KIND_MOVE, tab.dv[dst] - tab.dv[src] - 8.0 * dsum
    sp = 0.0
    sq = 0.0
    for t in range(n):
        a = int(reg[t])
        if a == p or a == q:
            continue
        sp += tab.u_at(a, p)
        sq += tab.u_at(a, q)
    base = 2.0 * tab.v_eff + tab.dv[p] + tab.dv[q] - 8.0 * tab.pair_u[spin] - 8.0 * (sp + sq)
    if occ[p]:
        return KIND_ANNIHILATE, -base
    return KIND_CREATE, base


def flip_energy(state: FabricState, spin: int, table: PotentialTable | None = None) -> float:
    """Energy change dE of flipping ``spin`` against the current configuration."""
    tab = state.tables if table is None or table is state.table else Tables(state.geometry, table, state.tables.v_eff)
    return float(_event_energy(tab, state, spin)[1])


def classify_flip(state: FabricState, spin: int) -> str:
    return KIND_NAMES[_event_energy(state.tables, state, spin)[0]]


# --- registry mutation helpers (shared by apply_flip and the pure kernel) ---


def _add_anyon(state: FabricState, plaq: int, label: int) -> None:
    t = state.n_anyons
    state.reg_pos[t] = plaq
    state.reg_label[t] = label
    state.reg_idx[plaq] = t
    state.occ[plaq] = 1
    state.label_of[plaq] = label
    state.n_anyons = t + 1


def _remove_anyon(state: FabricState, plaq: int) -> None:
    t = int(state.reg_idx[plaq])
    last = state.n_anyons - 1
    if t != last:
        moved = state.reg_pos[last]
        state.reg_pos[t] = moved
        state.reg_label[t] = state.reg_label[last]
        state.reg_idx[moved] = t
    state.reg_idx[plaq] = -1
    state.occ[plaq] = 0
    state.label_of[plaq] = 0
    state.n_anyons = last


def _move_anyon(state: FabricState, src: int, dst: int) -> None:
    t = int(state.reg_idx[src])
    state.reg_pos[t] = dst
    state.reg_idx[dst] = t
    state.reg_idx[src] = -1
    state.occ[src] = 0
    state.occ[dst] = 1
    state.label_of[dst] = state.label_of[src]
    state.label_of[src] = 0


def _relabel(state: FabricState, old: int, new: int) -> None:
    """Global label merge old -> new: registry, plaquettes, and edge lists."""
    for t in range(state.n_anyons):
        if state.reg_label[t] == old:
            state.reg_label[t] = new
            state.label_of[state.reg_pos[t]] = new
    for counts in (state.cut_counts, state.top_counts, state.bottom_counts):
        c = counts.pop(old, 0)
        if c:
            counts[new] = counts.get(new, 0) + c
    for lst in (state.cut_list, state.top_list, state.bottom_list):
        for i, v in enumerate(lst):
            if v == old:
                lst[i] = new


def _bump_edge(state: FabricState, side: int, label: int) -> None:
    if state.tables.torus:
        state.cut_counts[label] = state.cut_counts.get(label, 0) + 1
        state.cut_list.append(label)
    elif side == 1:
        state.top_counts[label] = state.top_counts.get(label, 0) + 1
        state.top_list.append(label)
    else:
        state.bottom_counts[label] = state.bottom_counts.get(label, 0) + 1
        state.bottom_list.append(label)


def _apply_event(tab: Tables, state: FabricState, spin: int, time: float):
    """Mutate the state by flipping ``spin``; returns a raw outcome tuple
    (kind, delta_e, label_a, label_b, logical_error)."""
    kind, de = _event_energy(tab, state, spin)
    p = int(tab.spin_p[spin])
    q = int(tab.spin_q[spin])
    cut = int(tab.spin_cut[spin])
    logical = False
    if kind == KIND_CREATE:
        k = state.next_label
        state.next_label = k + 1
        _add_anyon(state, p, k)
        _add_anyon(state, q, k)
        la, lb = k, k
        if cut:
            _bump_edge(state, cut, k)
    elif kind == KIND_MOVE:
        src, dst = (p, q) if state.occ[p] else (q, p)
        lab = int(state.label_of[src])
        _move_anyon(state, src, dst)
        la, lb = lab, 0
        if cut:
            _bump_edge(state, cut, lab)
    elif kind == KIND_ANNIHILATE:
        lp = int(state.label_of[p])
        lq = int(state.label_of[q])
        _remove_anyon(state, p)
        _remove_anyon(state, q)
        la, lb = lp, lq
        if lp != lq:
            _relabel(state, lq, lp)
        if cut:
            _bump_edge(state, cut, lp)
        if tab.torus:
            if lp == lq:
                logical = state.cut_counts.get(lp, 0) % 2 == 1
        else:
            logical = state.top_counts.get(lp, 0) > 0 and state.bottom_counts.get(lp, 0) > 0
    elif kind == KIND_BOUNDARY_CREATE:
        k = state.next_label
        state.next_label = k + 1
        _add_anyon(state, p, k)
        la, lb = k, 0
        _bump_edge(state, cut, k)
    else:  # KIND_BOUNDARY_ANNIHILATE
        lab = int(state.label_of[p])
        _remove_anyon(state, p)
        la, lb = lab, 0
        _bump_edge(state, cut, lab)
        logical = state.top_counts.get(lab, 0) > 0 and state.bottom_counts.get(lab, 0) > 0
    state.energy += de
    state.time = time
    state.version += 1
    return kind, de, la, lb, logical


def apply_flip(state: FabricState, spin: int) -> FlipOutcome:
    """Flip one spin, maintaining occupations, labels, edge lists, and the
    incremental energy exactly as the defect-tracking rules prescribe."""
    kind, de, la, lb, logical = _apply_event(state.tables, state, spin, state.time)
    labels = (la,) if lb == 0 or lb == la else (la, lb)
    return FlipOutcome(
        kind=KIND_NAMES[kind],
        delta_e=float(de),
        logical_error=bool(logical),
        labels_touched=labels,
        spin=int(spin),
        time=float(state.time),
    )
