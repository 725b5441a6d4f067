"""Pure-Python stepping kernel.

This is the fallback selected when the compiled extension is unavailable,
and the semantic reference for it: rate recomputation accumulates
interaction terms in registry order and group terms in spec order, the
RNG draw protocol is fixed (two uniforms per continuous-time event, one
uniform per spin per fixed-dt step), and spin selection uses bisect-right
on the running cumulative sum.  The compiled kernel reproduces the exact
same floating-point operation order, so trajectories match bit-for-bit.

Rates are cached per spin; after an event only spins within the plan's
update radius of a touched plaquette are recomputed (the applied event's
energy is always evaluated exactly, so the energy ledger never drifts).
"""

from __future__ import annotations

import math

import numpy as np

from .state import _apply_event

MODE_KMC = 0
MODE_FIXED_DT = 1

STATUS_LIMIT = 0
STATUS_FAILED = 1
STATUS_CENSORED = 2


def recompute_rates(plan, state, spins) -> None:
    """Refresh cached dE and rates for the given spin indices."""
    tab = plan.tables
    caches = plan.caches
    c = tab.L - 1
    p = tab.spin_p[spins]
    q = tab.spin_q[spins]
    bnd = q < 0
    qs = np.where(bnd, p, q)
    op = state.occ[p] != 0
    oq = (state.occ[qs] != 0) & ~bnd
    pairm = ~bnd
    movem = pairm & (op ^ oq)
    src = np.where(op, p, qs)
    dst = np.where(op, qs, p)

    pxp = tab.px[p]
    pyp = tab.py[p]
    pxq = tab.px[qs]
    pyq = tab.py[qs]
    u_abs = tab.u_abs
    sp = np.zeros(len(spins))
    sq = np.zeros(len(spins))
    dm = np.zeros(len(spins))
    for t in range(state.n_anyons):
        a = int(state.reg_pos[t])
        ax = int(tab.px[a])
        ay = int(tab.py[a])
        up = u_abs[ax - pxp + c, ay - pyp + c]
        uq = u_abs[ax - pxq + c, ay - pyq + c]
        excl = (a == p) | ((a == qs) & pairm)
        sp = sp + np.where(excl, 0.0, up)
        sq = sq + np.where(excl, 0.0, uq)
        us = np.where(op, up, uq)
        ud = np.where(op, uq, up)
        dm = dm + np.where(a == src, 0.0, ud - us)

    dv = tab.dv
    base_pair = 2.0 * tab.v_eff + dv[p] + dv[qs] - 8.0 * tab.pair_u[spins] - 8.0 * (sp + sq)
    base_bnd = tab.v_eff + dv[p] - 8.0 * sp
    de_move = dv[dst] - dv[src] - 8.0 * dm
    de = np.where(
        bnd,
        np.where(op, -base_bnd, base_bnd),
        np.where(movem, de_move, np.where(op, -base_pair, base_pair)),
    )

    shift = plan.shift[spins]
    gr = np.zeros(len(spins))
    for m in range(plan.n_groups):
        gs = plan.g_gamma[m]
        gs24 = gs * gs / 4.0
        gps = np.zeros(len(spins))
        for n in range(plan.g_start[m], plan.g_end[m]):
            d = de + plan.qb_omega[n]
            if plan.g_shifted[m]:
                d = d + shift
            gps = gps + plan.qb_osq[n] * gs / (d * d + gs24)
        term = gps * gs / (gps + gs)
        if plan.g_edge[m]:
            gr = gr + np.where(bnd, term, 0.0)
        else:
            gr = gr + term

    caches.de[spins] = de
    caches.rates[spins] = plan.gamma_p + gr


def recompute_all(plan, state) -> None:
    recompute_rates(plan, state, plan.all_spins)
    plan.caches.synced_version = state.version


def _update_after(plan, state, touched) -> None:
    if plan.update_all:
        spins = plan.all_spins
    else:
        parts = [
            plan.upd_idx[plan.upd_start[t] : plan.upd_start[t + 1]] for t in touched
        ]
        spins = np.unique(np.concatenate(parts))
    recompute_rates(plan, state, spins)


def run(plan, state, mode, dt, max_events, max_steps, max_time, collect):
    """Advance the simulation; returns (status, counts-by-kind, log rows).

    Log rows are (time, spin, kind, delta_e, label_a, label_b, logical).
    """
    tab = plan.tables
    caches = plan.caches
    rates = caches.rates
    rows = [] if collect else None
    counts = [0, 0, 0, 0, 0]
    events = 0
    steps = 0
    status = STATUS_LIMIT

    while True:
        if max_events >= 0 and events >= max_events:
            break
        if max_steps >= 0 and steps >= max_steps:
            break
        if mode == MODE_KMC:
            cum = np.cumsum(rates)
            total = float(cum[-1])
            if total <= 0.0:
                state.time = max_time
                status = STATUS_CENSORED
                break
            r2 = state.rng.random(2)
            u1 = float(r2[0])
            u2 = float(r2[1])
            if u1 <= 0.0:
                state.time = max_time
                status = STATUS_CENSORED
                break
            tnew = state.time + (-math.log(u1)) / total
            if tnew > max_time:
                state.time = max_time
                status = STATUS_CENSORED
                break
            spin = int(np.searchsorted(cum, u2 * total, side="right"))
            if spin >= tab.n_spins:
                spin = tab.n_spins - 1
            kind, de, la, lb, logical = _apply_event(tab, state, spin, tnew)
            counts[kind] += 1
            events += 1
            steps += 1
            if rows is not None:
                rows.append((tnew, spin, kind, de, la, lb, logical))
            q = tab.spin_q[spin]
            touched = (tab.spin_p[spin],) if q < 0 else (tab.spin_p[spin], q)
            _update_after(plan, state, touched)
            if logical:
                status = STATUS_FAILED
                break
        else:
            if state.time + dt > max_time:
                state.time = max_time
                status = STATUS_CENSORED
                break
            u = state.rng.random(tab.n_spins)
            hits = np.nonzero(u < dt * rates)[0]
            tnew = state.time + dt
            steps += 1
            if hits.size == 0:
                state.time = tnew
                continue
            failed = False
            touched = []
            for spin in hits:
                spin = int(spin)
                kind, de, la, lb, logical = _apply_event(tab, state, spin, tnew)
                counts[kind] += 1
                events += 1
                if rows is not None:
                    rows.append((tnew, spin, kind, de, la, lb, logical))
                touched.append(int(tab.spin_p[spin]))
                if tab.spin_q[spin] >= 0:
                    touched.append(int(tab.spin_q[spin]))
                if logical:
                    failed = True
                    break
            state.time = tnew
            _update_after(plan, state, touched)
            if failed:
                status = STATUS_FAILED
                break

    caches.synced_version = state.version
    return status, counts, rows
