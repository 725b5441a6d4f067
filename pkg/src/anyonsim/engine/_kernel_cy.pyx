# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernel.

Mirrors _kernel_py operation-for-operation: the same RNG draw protocol
(two uniforms per continuous-time event, one per spin per fixed-dt step,
drawn from the state's PCG64 bit generator), the same accumulation orders
(registry order for interaction sums, spec order for group terms), and
bisect-right spin selection on a sequentially accumulated cumulative sum.
A given seed therefore produces bit-identical trajectories on either
backend; only the throughput differs.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log

import numpy as np

cimport numpy as cnp
from numpy.random cimport bitgen_t

MODE_KMC = 0
MODE_FIXED_DT = 1

STATUS_LIMIT = 0
STATUS_FAILED = 1
STATUS_CENSORED = 2

cdef enum:
    K_CREATE = 0
    K_ANNIH = 1
    K_MOVE = 2
    K_BCREATE = 3
    K_BANNIH = 4


cdef class _CyEngine:
    # geometry / potential
    cdef cnp.int32_t[::1] spin_p, spin_q
    cdef cnp.uint8_t[::1] spin_cut
    cdef cnp.int32_t[::1] px, py
    cdef double[:, ::1] u_abs
    cdef double[::1] dv, pair_u
    cdef double v_eff
    cdef int L, n_spins, n_plaq, c
    cdef bint torus
    # spec / rates
    cdef double[::1] g_gamma, qb_omega, qb_osq, shift
    cdef cnp.uint8_t[::1] g_shifted, g_edge
    cdef cnp.int32_t[::1] g_start, g_end
    cdef int n_groups
    cdef double gamma_p
    cdef bint update_all
    cdef cnp.int64_t[::1] upd_start, upd_idx
    # caches
    cdef double[::1] rates, cde
    cdef cnp.int64_t[::1] stamp
    cdef long long stamp_n
    cdef double[::1] cum
    cdef cnp.int64_t[::1] scratch
    cdef double[::1] ubuf
    # mutable state
    cdef cnp.uint8_t[::1] occ
    cdef cnp.int64_t[::1] label_of, reg_label
    cdef cnp.int32_t[::1] reg_pos, reg_idx
    cdef long long n_anyons, next_label, version
    cdef double energy, time
    cdef object state, plan
    cdef object cut_counts, top_counts, bottom_counts
    cdef object cut_list, top_list, bottom_list
    cdef bitgen_t *rng

    def __init__(self, plan, state):
        tab = plan.tables
        self.plan = plan
        self.state = state
        self.spin_p = tab.spin_p
        self.spin_q = tab.spin_q
        self.spin_cut = tab.spin_cut
        self.px = tab.px
        self.py = tab.py
        self.u_abs = tab.u_abs
        self.dv = tab.dv
        self.pair_u = tab.pair_u
        self.v_eff = tab.v_eff
        self.L = tab.L
        self.c = tab.L - 1
        self.n_spins = tab.n_spins
        self.n_plaq = tab.n_plaq
        self.torus = tab.torus

        self.g_gamma = plan.g_gamma
        self.g_shifted = plan.g_shifted
        self.g_edge = plan.g_edge
        self.g_start = plan.g_start
        self.g_end = plan.g_end
        self.qb_omega = plan.qb_omega
        self.qb_osq = plan.qb_osq
        self.shift = plan.shift
        self.n_groups = plan.n_groups
        self.gamma_p = plan.gamma_p
        self.update_all = plan.update_all
        self.upd_start = plan.upd_start
        self.upd_idx = plan.upd_idx

        caches = plan.caches
        self.rates = caches.rates
        self.cde = caches.de
        if not hasattr(caches, "stamp"):
            caches.stamp = np.zeros(tab.n_spins, dtype=np.int64)
            caches.stamp_n = 0
        self.stamp = caches.stamp
        self.stamp_n = caches.stamp_n
        self.cum = np.empty(tab.n_spins)
        self.scratch = np.empty(tab.n_spins, dtype=np.int64)
        self.ubuf = np.empty(tab.n_spins)

        self.occ = state.occ
        self.label_of = state.label_of
        self.reg_pos = state.reg_pos
        self.reg_label = state.reg_label
        self.reg_idx = state.reg_idx
        self.n_anyons = state.n_anyons
        self.next_label = state.next_label
        self.version = state.version
        self.energy = state.energy
        self.time = state.time
        self.cut_counts = state.cut_counts
        self.top_counts = state.top_counts
        self.bottom_counts = state.bottom_counts
        self.cut_list = state.cut_list
        self.top_list = state.top_list
        self.bottom_list = state.bottom_list
        capsule = state.bitgen.capsule
        self.rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef void _sync_back(self):
        st = self.state
        st.n_anyons = self.n_anyons
        st.next_label = self.next_label
        st.version = self.version
        st.energy = self.energy
        st.time = self.time
        self.plan.caches.stamp_n = self.stamp_n
        self.plan.caches.synced_version = self.version

    cdef inline double u_at(self, int a, int b):
        return self.u_abs[self.px[a] - self.px[b] + self.c, self.py[a] - self.py[b] + self.c]

    cdef int event_kind(self, int spin):
        cdef int p = self.spin_p[spin]
        cdef int q = self.spin_q[spin]
        if q < 0:
            return K_BANNIH if self.occ[p] else K_BCREATE
        if self.occ[p] != self.occ[q]:
            return K_MOVE
        return K_ANNIH if self.occ[p] else K_CREATE

    cdef double event_energy(self, int spin, int *kind_out):
        cdef int p = self.spin_p[spin]
        cdef int q = self.spin_q[spin]
        cdef int a, t, src, dst
        cdef double sp, sq, dm, base
        if q < 0:
            sp = 0.0
            for t in range(self.n_anyons):
                a = self.reg_pos[t]
                if a == p:
                    continue
                sp = sp + self.u_at(a, p)
            base = self.v_eff + self.dv[p] - 8.0 * sp
            if self.occ[p]:
                kind_out[0] = K_BANNIH
                return -base
            kind_out[0] = K_BCREATE
            return base
        if self.occ[p] != self.occ[q]:
            if self.occ[p]:
                src = p
                dst = q
            else:
                src = q
                dst = p
            dm = 0.0
            for t in range(self.n_anyons):
                a = self.reg_pos[t]
                if a == src:
                    continue
                dm = dm + (self.u_at(a, dst) - self.u_at(a, src))
            kind_out[0] = K_MOVE
            return self.dv[dst] - self.dv[src] - 8.0 * dm
        sp = 0.0
        sq = 0.0
        for t in range(self.n_anyons):
            a = self.reg_pos[t]
            if a == p or a == q:
                continue
            sp = sp + self.u_at(a, p)
            sq = sq + self.u_at(a, q)
        base = 2.0 * self.v_eff + self.dv[p] + self.dv[q] - 8.0 * self.pair_u[spin] - 8.0 * (sp + sq)
        if self.occ[p]:
            kind_out[0] = K_ANNIH
            return -base
        kind_out[0] = K_CREATE
        return base

    cdef double repair(self, double de, double shift_i, bint is_boundary):
        cdef int m, n
        cdef double gr = 0.0
        cdef double gs, gs24, gps, d
        for m in range(self.n_groups):
            if self.g_edge[m] and not is_boundary:
                continue
            gs = self.g_gamma[m]
            gs24 = gs * gs / 4.0
            gps = 0.0
            for n in range(self.g_start[m], self.g_end[m]):
                d = de + self.qb_omega[n]
                if self.g_shifted[m]:
                    d = d + shift_i
                gps = gps + self.qb_osq[n] * gs / (d * d + gs24)
            gr = gr + gps * gs / (gps + gs)
        return gr

    cdef void rate_one(self, int spin):
        cdef int kind = 0
        cdef double de = self.event_energy(spin, &kind)
        self.cde[spin] = de
        self.rates[spin] = self.gamma_p + self.repair(de, self.shift[spin], self.spin_q[spin] < 0)

    cdef void recompute_spins(self, cnp.int64_t[::1] spins, long long n):
        cdef long long i
        for i in range(n):
            self.rate_one(<int> spins[i])

    cdef void recompute_all_spins(self):
        cdef int i
        for i in range(self.n_spins):
            self.rate_one(i)

    # --- registry mutation (mirrors state._add/_remove/_move/_relabel) ---

    cdef void add_anyon(self, int plaq, long long label):
        cdef long long t = self.n_anyons
        self.reg_pos[t] = plaq
        self.reg_label[t] = label
        self.reg_idx[plaq] = <cnp.int32_t> t
        self.occ[plaq] = 1
        self.label_of[plaq] = label
        self.n_anyons = t + 1

    cdef void remove_anyon(self, int plaq):
        cdef long long t = self.reg_idx[plaq]
        cdef long long last = self.n_anyons - 1
        cdef int moved
        if t != last:
            moved = self.reg_pos[last]
            self.reg_pos[t] = moved
            self.reg_label[t] = self.reg_label[last]
            self.reg_idx[moved] = <cnp.int32_t> t
        self.reg_idx[plaq] = -1
        self.occ[plaq] = 0
        self.label_of[plaq] = 0
        self.n_anyons = last

    cdef void move_anyon(self, int src, int dst):
        cdef long long t = self.reg_idx[src]
        self.reg_pos[t] = dst
        self.reg_idx[dst] = <cnp.int32_t> t
        self.reg_idx[src] = -1
        self.occ[src] = 0
        self.occ[dst] = 1
        self.label_of[dst] = self.label_of[src]
        self.label_of[src] = 0

    cdef void relabel(self, long long old, long long new):
        cdef long long t
        cdef object counts, lst
        cdef long long i, c
        for t in range(self.n_anyons):
            if self.reg_label[t] == old:
                self.reg_label[t] = new
                self.label_of[self.reg_pos[t]] = new
        for counts in (self.cut_counts, self.top_counts, self.bottom_counts):
            c = counts.pop(old, 0)
            if c:
                counts[new] = counts.get(new, 0) + c
        for lst in (self.cut_list, self.top_list, self.bottom_list):
            for i in range(len(lst)):
                if lst[i] == old:
                    lst[i] = new

    cdef void bump_edge(self, int side, long long label):
        if self.torus:
            self.cut_counts[label] = self.cut_counts.get(label, 0) + 1
            self.cut_list.append(label)
        elif side == 1:
            self.top_counts[label] = self.top_counts.get(label, 0) + 1
            self.top_list.append(label)
        else:
            self.bottom_counts[label] = self.bottom_counts.get(label, 0) + 1
            self.bottom_list.append(label)

    cdef bint apply_event(self, int spin, double tnew, int *kind_out,
                          double *de_out, long long *la_out, long long *lb_out):
        cdef int kind = 0
        cdef double de = self.event_energy(spin, &kind)
        cdef int p = self.spin_p[spin]
        cdef int q = self.spin_q[spin]
        cdef int cut = self.spin_cut[spin]
        cdef bint logical = False
        cdef long long k, lab, lp, lq
        cdef int src, dst
        if kind == K_CREATE:
            k = self.next_label
            self.next_label = k + 1
            self.add_anyon(p, k)
            self.add_anyon(q, k)
            la_out[0] = k
            lb_out[0] = k
            if cut:
                self.bump_edge(cut, k)
        elif kind == K_MOVE:
            if self.occ[p]:
                src = p
                dst = q
            else:
                src = q
                dst = p
            lab = self.label_of[src]
            self.move_anyon(src, dst)
            la_out[0] = lab
            lb_out[0] = 0
            if cut:
                self.bump_edge(cut, lab)
        elif kind == K_ANNIH:
            lp = self.label_of[p]
            lq = self.label_of[q]
            self.remove_anyon(p)
            self.remove_anyon(q)
            la_out[0] = lp
            lb_out[0] = lq
            if lp != lq:
                self.relabel(lq, lp)
            if cut:
                self.bump_edge(cut, lp)
            if self.torus:
                if lp == lq:
                    logical = self.cut_counts.get(lp, 0) % 2 == 1
            else:
                logical = self.top_counts.get(lp, 0) > 0 and self.bottom_counts.get(lp, 0) > 0
        elif kind == K_BCREATE:
            k = self.next_label
            self.next_label = k + 1
            self.add_anyon(p, k)
            la_out[0] = k
            lb_out[0] = 0
            self.bump_edge(cut, k)
        else:
            lab = self.label_of[p]
            self.remove_anyon(p)
            la_out[0] = lab
            lb_out[0] = 0
            self.bump_edge(cut, lab)
            logical = self.top_counts.get(lab, 0) > 0 and self.bottom_counts.get(lab, 0) > 0
        self.energy = self.energy + de
        self.time = tnew
        self.version = self.version + 1
        kind_out[0] = kind
        de_out[0] = de
        return logical

    cdef void update_after(self, int p, int q):
        cdef long long n = 0
        cdef long long j
        cdef cnp.int64_t s
        if self.update_all:
            self.recompute_all_spins()
            return
        self.stamp_n += 1
        for j in range(self.upd_start[p], self.upd_start[p + 1]):
            s = self.upd_idx[j]
            if self.stamp[s] != self.stamp_n:
                self.stamp[s] = self.stamp_n
                self.scratch[n] = s
                n += 1
        if q >= 0:
            for j in range(self.upd_start[q], self.upd_start[q + 1]):
                s = self.upd_idx[j]
                if self.stamp[s] != self.stamp_n:
                    self.stamp[s] = self.stamp_n
                    self.scratch[n] = s
                    n += 1
        self.recompute_spins(self.scratch, n)

    cdef void update_after_multi(self, list touched):
        cdef long long n = 0
        cdef long long j
        cdef cnp.int64_t s
        cdef int t
        if self.update_all:
            self.recompute_all_spins()
            return
        self.stamp_n += 1
        for t in touched:
            for j in range(self.upd_start[t], self.upd_start[t + 1]):
                s = self.upd_idx[j]
                if self.stamp[s] != self.stamp_n:
                    self.stamp[s] = self.stamp_n
                    self.scratch[n] = s
                    n += 1
        self.recompute_spins(self.scratch, n)

    def run(self, int mode, double dt, long long max_events, long long max_steps,
            double max_time, bint collect):
        cdef list rows = [] if collect else None
        cdef long long counts0 = 0, counts1 = 0, counts2 = 0, counts3 = 0, counts4 = 0
        cdef long long events = 0, steps = 0
        cdef int status = STATUS_LIMIT
        cdef int i, spin, kind, p, q
        cdef int lo, hi, mid
        cdef double total, u1, u2, tnew, target, de
        cdef long long la, lb
        cdef bint logical, failed
        cdef list touched
        cdef long long nhits, h

        while True:
            if max_events >= 0 and events >= max_events:
                break
            if max_steps >= 0 and steps >= max_steps:
                break
            if mode == MODE_KMC:
                total = 0.0
                for i in range(self.n_spins):
                    total = total + self.rates[i]
                    self.cum[i] = total
                if total <= 0.0:
                    self.time = max_time
                    status = STATUS_CENSORED
                    break
                u1 = self.rng.next_double(self.rng.state)
                u2 = self.rng.next_double(self.rng.state)
                if u1 <= 0.0:
                    self.time = max_time
                    status = STATUS_CENSORED
                    break
                tnew = self.time + (-log(u1)) / total
                if tnew > max_time:
                    self.time = max_time
                    status = STATUS_CENSORED
                    break
                target = u2 * total
                lo = 0
                hi = self.n_spins
                while lo < hi:
                    mid = (lo + hi) // 2
                    if self.cum[mid] <= target:
                        lo = mid + 1
                    else:
                        hi = mid
                spin = lo
                if spin >= self.n_spins:
                    spin = self.n_spins - 1
                logical = self.apply_event(spin, tnew, &kind, &de, &la, &lb)
                if kind == 0:
                    counts0 += 1
                elif kind == 1:
                    counts1 += 1
                elif kind == 2:
                    counts2 += 1
                elif kind == 3:
                    counts3 += 1
                else:
                    counts4 += 1
                events += 1
                steps += 1
                if rows is not None:
                    rows.append((tnew, spin, kind, de, la, lb, bool(logical)))
                p = self.spin_p[spin]
                q = self.spin_q[spin]
                self.update_after(p, q)
                if logical:
                    status = STATUS_FAILED
                    break
            else:
                if self.time + dt > max_time:
                    self.time = max_time
                    status = STATUS_CENSORED
                    break
                for i in range(self.n_spins):
                    self.ubuf[i] = self.rng.next_double(self.rng.state)
                tnew = self.time + dt
                steps += 1
                nhits = 0
                for i in range(self.n_spins):
                    if self.ubuf[i] < dt * self.rates[i]:
                        self.scratch[nhits] = i
                        nhits += 1
                if nhits == 0:
                    self.time = tnew
                    continue
                failed = False
                touched = []
                for h in range(nhits):
                    spin = <int> self.scratch[h]
                    logical = self.apply_event(spin, tnew, &kind, &de, &la, &lb)
                    if kind == 0:
                        counts0 += 1
                    elif kind == 1:
                        counts1 += 1
                    elif kind == 2:
                        counts2 += 1
                    elif kind == 3:
                        counts3 += 1
                    else:
                        counts4 += 1
                    events += 1
                    if rows is not None:
                        rows.append((tnew, spin, kind, de, la, lb, bool(logical)))
                    touched.append(self.spin_p[spin])
                    if self.spin_q[spin] >= 0:
                        touched.append(self.spin_q[spin])
                    if logical:
                        failed = True
                        break
                self.time = tnew
                self.update_after_multi(touched)
                if failed:
                    status = STATUS_FAILED
                    break

        self._sync_back()
        return status, [counts0, counts1, counts2, counts3, counts4], rows


def recompute_rates(plan, state, spins) -> None:
    eng = _CyEngine(plan, state)
    spins64 = np.ascontiguousarray(spins, dtype=np.int64)
    eng.recompute_spins(spins64, len(spins64))
    eng._sync_back()


def recompute_all(plan, state) -> None:
    eng = _CyEngine(plan, state)
    eng.recompute_all_spins()
    eng._sync_back()


def run(plan, state, mode, dt, max_events, max_steps, max_time, collect):
    eng = _CyEngine(plan, state)
    return eng.run(mode, dt if dt is not None else 0.0, max_events, max_steps, max_time, collect)
