"""Lifetime simulator for a driven toric-code fabric with engineered dissipation.

Subpackages / modules:

- ``potential``: boson dispersion, the anyon-anyon interaction U(r) and the
  effective anyon charge V.
- ``shadow``: shadow-lattice parameter sets and the repair function Gamma_R(dE).
- ``engine``: classical anyon configuration, flip energetics, stochastic
  evolution (fixed-dt and continuous-time) and topological error detection.
- ``harness``: experiment orchestration, sweeps, statistics, persistence,
  the three-qubit ring demo, and the command line interface.
- ``gadget``: exact diagonalization of the 3-/4-body perturbative gadgets.
"""

__version__ = "0.1.0"
