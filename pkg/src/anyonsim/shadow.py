"""Shadow-lattice parameter sets and the energy-dependent repair function.

Each group of shadow qubits shares a relaxation rate Gamma_S; integrating
the group out gives a flip rate for a primary-lattice spin whose flip
changes the system energy by dE:

    Gamma_PS,m(dE) = sum_n  Omega_mn^2 Gamma_Sm / ((dE + omega_mn)^2 + Gamma_Sm^2/4)
    Gamma_R(dE)    = sum_m  Gamma_PS,m * Gamma_Sm / (Gamma_PS,m + Gamma_Sm)

defined for every real dE; the positive-dE side is the (small) error rate
the shadow lattice itself induces.  The tabulated couplings already include
the boson-vacuum factors e^{-lambda}, so they are never re-applied here.

Group roles:

- ``primary``: the two pair-annihilation groups (their resonances are
  locally shifted in open geometry to track the position-dependent pair
  energies),
- ``secondary``: the anyon-recapture ladder (never shifted),
- ``edge``: the single-anyon absorber used only at open top/bottom rows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

ROLE_PRIMARY = "primary"
ROLE_SECONDARY = "secondary"
ROLE_EDGE = "edge"
_ROLES = (ROLE_PRIMARY, ROLE_SECONDARY, ROLE_EDGE)


@dataclass(frozen=True)
class ShadowGroup:
    """Shadow qubits sharing one relaxation rate.

    ``qubits`` holds (omega, coupling) pairs: transition energy and
    exchange coupling, both in units of g.
    """

    gamma_s: float
    qubits: tuple[tuple[float, float], ...]
    role: str = ROLE_SECONDARY

    def __post_init__(self):
        if self.gamma_s <= 0:
            raise ValueError(f"gamma_s must be positive (got {self.gamma_s})")
        object.__setattr__(self, "qubits", tuple((float(w), float(o)) for w, o in self.qubits))
        for w, o in self.qubits:
            if w <= 0:
                raise ValueError(f"qubit energy must be positive (got {w})")
            if o < 0:
                raise ValueError(f"coupling must be nonnegative (got {o})")
        if self.role not in _ROLES:
            raise ValueError(f"unknown group role {self.role!r}")


@dataclass(frozen=True)
class RepairSpec:
    groups: tuple[ShadowGroup, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        _warn_if_groups_overlap(self.groups)

    @property
    def primary_groups(self) -> tuple[ShadowGroup, ...]:
        return tuple(g for g in self.groups if g.role == ROLE_PRIMARY)

    @property
    def secondary_groups(self) -> tuple[ShadowGroup, ...]:
        return tuple(g for g in self.groups if g.role == ROLE_SECONDARY)


def _warn_if_groups_overlap(groups) -> None:
    # Eq.-13 additivity assumes the energy ranges of distinct groups are
    # well separated relative to Gamma_S; closely spaced qubits are fine
    # inside one group, so only inter-group gaps are checked.
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            gi, gj = groups[i], groups[j]
            if not gi.qubits or not gj.qubits:
                continue
            gap = min(abs(wi - wj) for wi, _ in gi.qubits for wj, _ in gj.qubits)
            scale = max(gi.gamma_s, gj.gamma_s)
            if gap < scale:
                warnings.warn(
                    f"shadow groups {i} and {j} have qubit energies within "
                    f"{gap:.4g} < max(Gamma_S)={scale:.4g}; the additive "
                    "repair-rate formula may be inaccurate",
                    stacklevel=3,
                )


def group_transfer_rate(group: ShadowGroup, delta_e):
    """Gamma_PS for one group: sum of Lorentzians over its qubits."""
    delta_e = np.asarray(delta_e, dtype=float)
    gs = group.gamma_s
    total = np.zeros_like(delta_e)
    for omega, coupling in group.qubits:
        d = delta_e + omega
        total += coupling * coupling * gs / (d * d + gs * gs / 4.0)
    return total if total.ndim else float(total)


def repair_rate(spec: RepairSpec, delta_e):
    """Gamma_R(dE): total shadow-induced flip rate for an energy change dE.

    Accepts scalars or arrays.  Every group term is bounded by its
    Gamma_S, so 0 <= Gamma_R < sum_m Gamma_Sm.
    """
    delta_e = np.asarray(delta_e, dtype=float)
    total = np.zeros_like(delta_e)
    for group in spec.groups:
        gps = group_transfer_rate(group, delta_e)
        total += gps * group.gamma_s / (gps + group.gamma_s)
    return total if total.ndim else float(total)


# Table of shadow-lattice presets, keyed by mu/J.  Column layout per qubit:
# (omega, coupling); group structure: {q1} G=0.33, {q2} G=0.2,
# {q3,q4} G=0.02, {q5..q9} G=0.0045.  Couplings include e^{-lambda}.
_PRESETS = {
    -0.1: {
        "omega": (59.33, 58.13, 0.252, 0.145, 0.1, 0.085, 0.07, 0.055, 0.04),
        "coupling": (0.33, 0.267, 0.0075, 0.0085, 0.005, 0.005, 0.0045, 0.0045, 0.004),
    },
    -0.2: {
        "omega": (59.55, 58.6, 0.225, 0.14, 0.1, 0.085, 0.07, 0.055, 0.04),
        "coupling": (0.33, 0.267, 0.0075, 0.011, 0.005, 0.005, 0.0045, 0.0045, 0.004),
    },
    -0.4: {
        "omega": (59.67, 59.07, 0.189, 0.13, 0.1, 0.085, 0.07, 0.055, 0.04),
        "coupling": (0.33, 0.267, 0.0075, 0.0085, 0.005, 0.005, 0.0045, 0.0045, 0.004),
    },
}
_GAMMA_S = (0.33, 0.2, 0.02, 0.0045)


def table_one_preset(mu_over_j: float) -> RepairSpec:
    """The tabulated nine-qubit shadow lattice for mu/J in {-0.1, -0.2, -0.4}."""
    key = None
    for k in _PRESETS:
        if math.isclose(mu_over_j, k, rel_tol=0, abs_tol=1e-9):
            key = k
            break
    if key is None:
        raise ValueError(
            f"no tabulated preset for mu/J={mu_over_j}; available: {sorted(_PRESETS)}"
        )
    om = _PRESETS[key]["omega"]
    cp = _PRESETS[key]["coupling"]
    pairs = list(zip(om, cp))
    groups = (
        ShadowGroup(_GAMMA_S[0], (pairs[0],), role=ROLE_PRIMARY),
        ShadowGroup(_GAMMA_S[1], (pairs[1],), role=ROLE_PRIMARY),
        ShadowGroup(_GAMMA_S[2], tuple(pairs[2:4]), role=ROLE_SECONDARY),
        ShadowGroup(_GAMMA_S[3], tuple(pairs[4:9]), role=ROLE_SECONDARY),
    )
    return RepairSpec(groups=groups, label=f"table1(mu/J={key})")


def scale_primary(spec: RepairSpec, factor: float) -> RepairSpec:
    """Scale couplings and Gamma_S of the primary-repair groups by ``factor``."""
    if factor <= 0:
        raise ValueError("factor must be positive")
    groups = []
    for g in spec.groups:
        if g.role == ROLE_PRIMARY:
            groups.append(
                ShadowGroup(
                    gamma_s=g.gamma_s * factor,
                    qubits=tuple((w, o * factor) for w, o in g.qubits),
                    role=g.role,
                )
            )
        else:
            groups.append(g)
    label = spec.label if factor == 1 else f"{spec.label}*p{factor:g}"
    return RepairSpec(groups=tuple(groups), label=label)


def edge_primary_set(L: int, omega9: float, v_eff: float = 30.0) -> ShadowGroup:
    """Third primary-repair set for open geometry: single-anyon absorption
    at the top/bottom rows, at omega = V - L*omega9/2."""
    if L < 2:
        raise ValueError("L must be >= 2")
    return ShadowGroup(
        gamma_s=0.3,
        qubits=((v_eff - L * omega9 / 2.0, 0.25),),
        role=ROLE_EDGE,
    )


def lowest_secondary_energy(spec: RepairSpec) -> float:
    """omega_9 of a preset: the smallest secondary-group qubit energy."""
    energies = [w for g in spec.secondary_groups for w, _ in g.qubits]
    if not energies:
        raise ValueError("spec has no secondary groups")
    return min(energies)


def peak_rate(spec: RepairSpec) -> float:
    """max_dE Gamma_R(dE), by dense scans around every qubit resonance."""
    best = 0.0
    for g in spec.groups:
        for omega, _ in g.qubits:
            de = -omega + np.linspace(-10 * g.gamma_s, 10 * g.gamma_s, 801)
            best = max(best, float(np.max(repair_rate(spec, de))))
    return best


def with_edge_group(spec: RepairSpec, edge_group: ShadowGroup) -> RepairSpec:
    return RepairSpec(groups=spec.groups + (edge_group,), label=spec.label)


# --- spec-file round trip --------------------------------------------------
#
# One group per block, blank-line separated:
#
#     label my-spec
#
#     [primary]
#     gamma_s = 0.33
#     qubit = 59.33, 0.33
#
#     [secondary]
#     gamma_s = 0.0045
#     qubit = 0.1, 0.005
#     qubit = 0.085, 0.005


def write_spec_file(spec: RepairSpec, path) -> None:
    with open(path, "w") as fh:
        if spec.label:
            fh.write(f"label {spec.label}\n\n")
        for g in spec.groups:
            fh.write(f"[{g.role}]\n")
            fh.write(f"gamma_s = {g.gamma_s!r}\n")
            for w, o in g.qubits:
                fh.write(f"qubit = {w!r}, {o!r}\n")
            fh.write("\n")


def parse_spec_file(path) -> RepairSpec:
    label = ""
    groups: list[ShadowGroup] = []
    role = None
    gamma_s = None
    qubits: list[tuple[float, float]] = []

    def flush():
        nonlocal role, gamma_s, qubits
        if role is None:
            return
        if gamma_s is None:
            raise ValueError(f"group [{role}] missing gamma_s in {path}")
        groups.append(ShadowGroup(gamma_s=gamma_s, qubits=tuple(qubits), role=role))
        role, gamma_s, qubits = None, None, []

    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("label"):
                label = line.split(None, 1)[1] if " " in line else ""
            elif line.startswith("["):
                flush()
                role = line.strip("[]").strip()
            elif "=" in line:
                key, value = (s.strip() for s in line.split("=", 1))
                if key == "gamma_s":
                    gamma_s = float(value)
                elif key == "qubit":
                    w, o = (float(s) for s in value.split(","))
                    qubits.append((w, o))
                else:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            else:
                raise ValueError(f"{path}:{lineno}: cannot parse {raw!r}")
    flush()
    if not groups:
        raise ValueError(f"no shadow groups found in {path}")
    return RepairSpec(groups=tuple(groups), label=label)


def write_repair_csv(specs, delta_e, path) -> None:
    """CSV (spec_id, delta_e, gamma_r) for one or more specs."""
    delta_e = np.asarray(delta_e, dtype=float)
    with open(path, "w") as fh:
        fh.write("spec_id,delta_e,gamma_r\n")
        for spec in specs:
            rates = repair_rate(spec, delta_e)
            for e, r in zip(delta_e, rates):
                fh.write(f"{spec.label},{e:.10g},{r:.10g}\n")
