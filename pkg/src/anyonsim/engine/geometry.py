"""Plaquette-lattice geometry and spin adjacency tables.

Plaquettes are indexed flat = y*L + x.  Spins sit on shared plaquette
edges; on the torus every spin adjoins two plaquettes, while an open patch
also carries 2L boundary spins (top/bottom rows) that adjoin exactly one
plaquette and create/annihilate single anyons.  Left/right columns of an
open patch are truncated plaquettes with no outer spin.

The torus tracks one fiducial cut: the horizontal seam of vertical bonds
between row L-1 and row 0.  Only vertical windings are detected (the
horizontal channel is identical physics and is deliberately not tracked).

Open patches carry the recapture potential dV(row y) = -omega9*|y+0.5-L/2|
(plaquette centers at half-integer heights, so the maximum sits astride
y = L/2 for even L and on the center row for odd L).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TORUS = "torus"
OPEN = "open"

# spin_cut codes
CUT_NONE = 0
CUT_SEAM = 1  # torus fiducial cut
CUT_TOP = 1  # open geometry reuses 1 for the top edge
CUT_BOTTOM = 2


@dataclass(frozen=True)
class Geometry:
    kind: str
    L: int
    delta_v: np.ndarray = field(repr=False)  # per plaquette, flat y*L+x
    omega9: float = 0.0

    def __post_init__(self):
        if self.kind not in (TORUS, OPEN):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.L < 2:
            raise ValueError("L must be >= 2")
        dv = np.asarray(self.delta_v, dtype=np.float64).reshape(self.L * self.L)
        object.__setattr__(self, "delta_v", dv)
        if self.kind == TORUS and np.any(dv != 0):
            raise ValueError("torus geometry requires delta_v == 0")
        if np.any(dv > 0):
            raise ValueError("delta_v must be <= 0")

    @classmethod
    def torus(cls, L: int) -> "Geometry":
        return cls(kind=TORUS, L=L, delta_v=np.zeros(L * L))

    @classmethod
    def open_patch(cls, L: int, omega9: float) -> "Geometry":
        y = np.arange(L)
        rows = -omega9 * np.abs(y + 0.5 - L / 2.0)
        dv = np.repeat(rows, L)  # flat = y*L + x
        return cls(kind=OPEN, L=L, delta_v=dv, omega9=omega9)

    @property
    def n_plaquettes(self) -> int:
        return self.L * self.L

    @property
    def n_spins(self) -> int:
        return 2 * self.L * self.L


def build_spin_tables(geom: Geometry):
    """Adjacency arrays (spin_p, spin_q, spin_cut) plus plaquette coordinates.

    spin_q is -1 for single-plaquette boundary spins.  Returns int32/uint8
    arrays sized for the kernel.
    """
    L = geom.L
    n_plaq = L * L
    px = np.tile(np.arange(L, dtype=np.int32), L)
    py = np.repeat(np.arange(L, dtype=np.int32), L)

    if geom.kind == TORUS:
        n_spins = 2 * n_plaq
        spin_p = np.empty(n_spins, dtype=np.int32)
        spin_q = np.empty(n_spins, dtype=np.int32)
        spin_cut = np.zeros(n_spins, dtype=np.uint8)
        s = 0
        for y in range(L):  # x-bonds: (x,y)-((x+1)%L,y)
            for x in range(L):
                spin_p[s] = y * L + x
                spin_q[s] = y * L + (x + 1) % L
                s += 1
        for y in range(L):  # y-bonds: (x,y)-(x,(y+1)%L); y = L-1 crosses the seam
            for x in range(L):
                spin_p[s] = y * L + x
                spin_q[s] = ((y + 1) % L) * L + x
                if y == L - 1:
                    spin_cut[s] = CUT_SEAM
                s += 1
        return spin_p, spin_q, spin_cut, px, py

    spins_p, spins_q, cuts = [], [], []
    for y in range(L):  # interior x-bonds
        for x in range(L - 1):
            spins_p.append(y * L + x)
            spins_q.append(y * L + x + 1)
            cuts.append(CUT_NONE)
    for y in range(L - 1):  # interior y-bonds
        for x in range(L):
            spins_p.append(y * L + x)
            spins_q.append((y + 1) * L + x)
            cuts.append(CUT_NONE)
    for x in range(L):  # bottom boundary spins
        spins_p.append(x)
        spins_q.append(-1)
        cuts.append(CUT_BOTTOM)
    for x in range(L):  # top boundary spins
        spins_p.append((L - 1) * L + x)
        spins_q.append(-1)
        cuts.append(CUT_TOP)
    return (
        np.asarray(spins_p, dtype=np.int32),
        np.asarray(spins_q, dtype=np.int32),
        np.asarray(cuts, dtype=np.uint8),
        px,
        py,
    )
