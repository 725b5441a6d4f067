"""Anyon-configuration engine: state, flip energetics, stochastic stepping."""

from .backend import HAVE_COMPILED, active_backend, get_kernel
from .geometry import OPEN, TORUS, Geometry
from .simulate import (
    Plan,
    RunResult,
    Simulator,
    run_single,
    run_until_failure,
    step_fixed_dt,
    step_kmc,
)
from .state import (
    FabricState,
    FlipOutcome,
    KIND_NAMES,
    apply_flip,
    classify_flip,
    flip_energy,
    total_energy,
)

__all__ = [
    "OPEN",
    "TORUS",
    "Geometry",
    "FabricState",
    "FlipOutcome",
    "KIND_NAMES",
    "Plan",
    "RunResult",
    "Simulator",
    "HAVE_COMPILED",
    "active_backend",
    "get_kernel",
    "apply_flip",
    "classify_flip",
    "flip_energy",
    "total_energy",
    "run_single",
    "run_until_failure",
    "step_fixed_dt",
    "step_kmc",
]


def write_event_log(path, outcomes) -> None:
    """Debug event log: one line per event (time, spin, kind, dE, labels, error)."""
    with open(path, "w") as fh:
        fh.write("time,spin,kind,delta_e,labels,logical_error\n")
        for o in outcomes:
            labels = ";".join(str(l) for l in o.labels_touched)
            fh.write(f"{o.time:.10g},{o.spin},{o.kind},{o.delta_e:.12g},{labels},{int(o.logical_error)}\n")
