"""Boson dispersion and the induced anyon-anyon interaction.

The resonator array has the tight-binding dispersion

    w(k) = 4J - mu - 2J cos(kx) - 2J cos(ky),

strictly positive for mu < 0, and the plaquette defects acquire the
interaction

    U(r) = (g^2 / N) sum_k exp(i k.r) / w(k)

over the discrete grid k = 2*pi*(nx/Lx, ny/Ly).  U is positive definite,
roughly log(1/r) at short range and exp(-r/l) at long range with decay
length l = sqrt(-J/mu).  All energies are in units of g.

The effective single-anyon cost is V = 2*V0 + 4 * sum_{r != 0} U(r); the
simulations usually pin V directly instead of V0, so the inverse map is
provided as well.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

TORUS = "torus"
OPEN_EMBEDDED = "open-embedded"


@dataclass(frozen=True)
class LatticeParams:
    """Resonator-lattice parameters, all energies in units of g.

    ``grid`` is the array used for the k-sum: the plaquette lattice itself
    for torus runs, or the larger embedding array (e.g. 100x100) when an
    open patch is embedded in its center.
    """

    j: float
    mu: float
    grid: tuple[int, int]
    g_coupling: float = 1.0
    geometry: str = TORUS

    def __post_init__(self):
        if self.mu >= 0:
            raise ValueError(f"mu must be negative (got {self.mu})")
        if len(self.grid) != 2 or min(self.grid) < 2:
            raise ValueError(f"grid dimensions must be >= 2 (got {self.grid})")
        if self.geometry not in (TORUS, OPEN_EMBEDDED):
            raise ValueError(f"unknown geometry {self.geometry!r}")

    @property
    def decay_length(self) -> float:
        return math.sqrt(-self.j / self.mu)


def dispersion(k, params: LatticeParams):
    """w(k) = 4J - mu - 2J cos(kx) - 2J cos(ky); k in radians."""
    kx, ky = k[0], k[1]
    return 4 * params.j - params.mu - 2 * params.j * np.cos(kx) - 2 * params.j * np.cos(ky)


def _k_grids(params: LatticeParams):
    lx, ly = params.grid
    kx = 2 * np.pi * np.arange(lx)[:, None] / lx
    ky = 2 * np.pi * np.arange(ly)[None, :] / ly
    return kx, ky


@dataclass
class PotentialTable:
    """Precomputed U(r) on the lattice displacement grid.

    ``u[dx % Lx, dy % Ly]`` holds U(dx, dy).  Torus tables are meant to be
    indexed modulo the grid (the k-sum produces the periodized potential);
    open-embedded tables are indexed by absolute displacement, valid up to
    half the embedding array.  ``v_eff`` stays unset until
    :func:`effective_gap` is applied or a target V is supplied directly;
    after that the table should be treated as immutable and is safe to
    share across workers.
    """

    u: np.ndarray
    params: LatticeParams
    decay_length: float
    v_eff: float | None = field(default=None)

    def at(self, dx: int, dy: int) -> float:
        lx, ly = self.params.grid
        if self.params.geometry == OPEN_EMBEDDED:
            if abs(dx) > lx // 2 or abs(dy) > ly // 2:
                raise ValueError(
                    f"displacement ({dx},{dy}) exceeds half the embedding grid {self.params.grid}"
                )
        return float(self.u[dx % lx, dy % ly])

    def sum_offsite(self) -> float:
        """sum_{r != 0} U(r) over the table grid."""
        return float(self.u.sum() - self.u[0, 0])

    def displacement_table(self, span: int) -> np.ndarray:
        """Dense (2*span-1)^2 table of U over absolute displacements.

        Entry [dx + span - 1, dy + span - 1] = U(dx, dy) for
        |dx|, |dy| <= span - 1.  This is the access pattern the simulation
        kernels use; for open-embedded tables the span must fit in half the
        embedding array so periodic images cannot alias.
        """
        if self.params.geometry == OPEN_EMBEDDED and span - 1 > min(self.params.grid) // 2:
            raise ValueError(
                f"span {span} too large for embedding grid {self.params.grid}"
            )
        d = np.arange(-(span - 1), span)
        lx, ly = self.params.grid
        return self.u[np.ix_(d % lx, d % ly)].astype(np.float64)

    def set_v_eff(self, value: float) -> "PotentialTable":
        """Pin the effective anyon cost V directly (simulations fix V = 30g)."""
        self.v_eff = float(value)
        return self


def build_potential(params: LatticeParams, method: str = "fft") -> PotentialTable:
    """Compute U(r) = (g^2/N) sum_k exp(i k.r)/w(k) on the full grid.

    ``method="fft"`` evaluates the sum with an inverse FFT (exact up to
    rounding: the sum *is* an inverse DFT); ``method="direct"`` performs
    the explicit double sum over k.  Both must agree to 1e-10 relative.
    """
    if params.mu >= 0:  # guarded again here: callers may bypass the dataclass
        raise ValueError("mu must be negative")
    kx, ky = _k_grids(params)
    omega = 4 * params.j - params.mu - 2 * params.j * np.cos(kx) - 2 * params.j * np.cos(ky)
    g2 = params.g_coupling**2
    if method == "fft":
        u = np.fft.ifft2(1.0 / omega).real * g2
    elif method == "direct":
        lx, ly = params.grid
        u = np.empty((lx, ly))
        inv = 1.0 / omega
        for dx in range(lx):
            for dy in range(ly):
                u[dx, dy] = g2 / (lx * ly) * np.sum(np.cos(kx * dx + ky * dy) * inv)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PotentialTable(u=u, params=params, decay_length=params.decay_length)


def effective_gap(v0: float, table: PotentialTable) -> float:
    """V = 2*v0 + 4*sum_{r != 0} U(r); stores the result into table.v_eff."""
    v = 2.0 * v0 + 4.0 * table.sum_offsite()
    table.v_eff = v
    return v


def v0_for_gap(v_target: float, table: PotentialTable) -> float:
    """Inverse of :func:`effective_gap`: the bare drive v0 yielding V = v_target."""
    return (v_target - 4.0 * table.sum_offsite()) / 2.0


LambdaFactor = namedtuple("LambdaFactor", ["lam", "weight"])


def lambda_factor(params: LatticeParams, kind: str) -> LambdaFactor:
    """Boson-vacuum renormalization of flip matrix elements.

    lam = (1/N) sum_k (4 g^2 / w(k)^2) (1 +- cos k.d), + for creating or
    annihilating an anyon pair, - for moving one; d is the unit vector
    between neighboring plaquette centers.  Returns (lam, exp(-2 lam)),
    the squared matrix-element suppression.  The sum is normalized per
    mode so the factor stays finite as the grid grows.
    """
    if kind not in ("create", "move"):
        raise ValueError(f"kind must be 'create' or 'move' (got {kind!r})")
    kx, ky = _k_grids(params)
    omega = 4 * params.j - params.mu - 2 * params.j * np.cos(kx) - 2 * params.j * np.cos(ky)
    sign = 1.0 if kind == "create" else -1.0
    lam = float(np.mean(4 * params.g_coupling**2 / omega**2 * (1 + sign * np.cos(kx))))
    return LambdaFactor(lam, math.exp(-2 * lam))


def write_potential_csv(table: PotentialTable, path) -> None:
    """CSV over signed displacements with a parameter echo comment line."""
    p = table.params
    lx, ly = p.grid
    with open(path, "w") as fh:
        fh.write(
            f"# J={p.j} mu={p.mu} g={p.g_coupling} grid={lx}x{ly} "
            f"geometry={p.geometry} decay_length={table.decay_length:.6g}\n"
        )
        fh.write("dx,dy,U\n")
        for dx in range(-(lx // 2), lx // 2 + 1):
            for dy in range(-(ly // 2), ly // 2 + 1):
                fh.write(f"{dx},{dy},{table.u[dx % lx, dy % ly]:.12g}\n")
