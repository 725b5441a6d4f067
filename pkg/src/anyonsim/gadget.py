"""Exact diagonalization of the 3-/4-body coupler gadgets.

The three-body circuit (two qubits exchange-coupled to a driven resonator,
a third qubit coupled to the squeezing quadrature) has the rotating-frame
Hamiltonian

    H3 = D a+a - k (a + a+)(s1x + s2x) + kc s1x s2x + c3 s3x
         - k3 s3x (aa + a+a+),

with D the resonator detuning.  With counterterms (kc, c3) tuned to cancel
the second- and third-order byproducts, the eight low-lying states form two
exactly degenerate quadruplets split by 2*J3 with J3 ~ 4 k^2 k3 / D^2, i.e.
an effective -J3 s1x s2x s3x coupling.  Chaining two such gadgets through a
fifth qubit yields the four-body variant with J4 ~ 2 J3^2 / dq5.

All sx operators of qubits 1..4 commute with the Hamiltonians, so the
spectra are computed block-by-block in their joint eigenbasis; the full
product-basis matrix is also exposed for direct inspection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize
import scipy.sparse as sp
import scipy.sparse.linalg as spla

THREE_BODY = "three_body"
FOUR_BODY = "four_body"


@dataclass(frozen=True)
class GadgetModel:
    """Gadget parameterization; kappa is the 2-body coupling and the unit
    of energy here.

    For four_body, ``kappa3`` plays the role of the chained squeezing
    coupling (k5) and ``c3`` the role of its counterterm (c5);
    ``qubit5_detuning`` is the central-qubit detuning.
    """

    kind: str
    kappa: float
    kappa3: float
    delta: float
    kappa_c: float = 0.0
    c3: float = 0.0
    qubit5_detuning: float = 0.0
    n_max: int = 30

    def __post_init__(self):
        if self.kind not in (THREE_BODY, FOUR_BODY):
            raise ValueError(f"kind must be three_body|four_body (got {self.kind!r})")
        if self.n_max < 20:
            raise ValueError(f"n_max must be >= 20 (convergence guard; got {self.n_max})")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @property
    def hilbert_dim(self) -> int:
        d = self.n_max + 1
        return 8 * d if self.kind == THREE_BODY else 32 * d * d


@dataclass
class GadgetSpectrum:
    eigenvalues: np.ndarray  # ascending
    stabilizer: np.ndarray  # product sx expectation per state
    j_extracted: float
    lower_splitting: float
    upper_splitting: float
    lower_sector: float  # stabilizer value of the lower multiplet
    gap_above: float  # first eigenvalue above the low multiplets minus their top


def _boson_dense(n_max: int):
    dim = n_max + 1
    a = np.zeros((dim, dim))
    for i in range(n_max):
        a[i, i + 1] = math.sqrt(i + 1)
    num = np.diag(np.arange(dim, dtype=float))
    x = a + a.T
    sq = a @ a + (a @ a).T
    return num, x, sq


def _boson_sparse(n_max: int):
    num, x, sq = _boson_dense(n_max)
    return sp.csr_matrix(num), sp.csr_matrix(x), sp.csr_matrix(sq)


_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_I2 = np.eye(2)


def _kron(*ops):
    out = sp.csr_matrix(np.atleast_2d(ops[0])) if not sp.issparse(ops[0]) else ops[0]
    for op in ops[1:]:
        if not sp.issparse(op):
            op = sp.csr_matrix(np.atleast_2d(op))
        out = sp.kron(out, op, format="csr")
    return out


def build_hamiltonian(model: GadgetModel):
    """Full product-basis matrix (qubit sz basis x Fock basis).

    three_body returns a dense symmetric ndarray of dimension 8*(n_max+1);
    four_body returns a sparse CSR matrix of dimension 32*(n_max+1)^2 (a
    dense build would need several GB at the default truncation).
    Hermiticity is exact by construction.
    """
    d = model.delta
    k = model.kappa
    if model.kind == THREE_BODY:
        num, x, sq = _boson_sparse(model.n_max)
        idf = sp.identity(model.n_max + 1, format="csr")
        h = (
            d * _kron(_I2, _I2, _I2, num)
            - k * _kron(_SX, _I2, _I2, x)
            - k * _kron(_I2, _SX, _I2, x)
            + model.kappa_c * _kron(_SX, _SX, _I2, idf)
            + model.c3 * _kron(_I2, _I2, _SX, idf)
            - model.kappa3 * _kron(_I2, _I2, _SX, sq)
        )
        return np.asarray(h.todense())
    num, x, sq = _boson_sparse(model.n_max)
    idf = sp.identity(model.n_max + 1, format="csr")
    i16 = [_I2, _I2, _I2, _I2]

    def q5term(op5, f1, f2):
        return _kron(*i16, op5, f1, f2)

    def qterm(i, f1, f2):
        qs = [_SX if j == i else _I2 for j in range(4)]
        return _kron(*qs, _I2, f1, f2)

    def qq(i, j):
        qs = [_SX if m in (i, j) else _I2 for m in range(4)]
        return _kron(*qs, _I2, idf, idf)

    h = (
        d * (q5term(_I2, num, idf) + q5term(_I2, idf, num))
        - model.c3 * q5term(_SX, idf, idf)
        + 0.5 * model.qubit5_detuning * q5term(_SZ, idf, idf)
        - k * (qterm(0, x, idf) + qterm(1, x, idf))
        - k * (qterm(2, idf, x) + qterm(3, idf, x))
        + model.kappa_c * (qq(0, 1) + qq(2, 3))
        - model.kappa3 * (q5term(_SX, sq, idf) + q5term(_SX, idf, sq))
    )
    return h.tocsr()


# --- block diagonalization in the joint sx eigenbasis of qubits 1..4 --------


def _block3_matrix(model: GadgetModel, s1: int, s2: int, s3: int) -> np.ndarray:
    num, x, sq = _boson_dense(model.n_max)
    dim = model.n_max + 1
    return (
        model.delta * num
        - model.kappa * (s1 + s2) * x
        + (model.kappa_c * s1 * s2 + model.c3 * s3) * np.eye(dim)
        - model.kappa3 * s3 * sq
    )


def _block3_energies(model: GadgetModel, s1: int, s2: int, s3: int) -> np.ndarray:
    return np.linalg.eigvalsh(_block3_matrix(model, s1, s2, s3))


def _block4_matrix(model: GadgetModel, s1: int, s2: int, s3: int, s4: int):
    num, x, sq = _boson_sparse(model.n_max)
    idf = sp.identity(model.n_max + 1, format="csr")
    h = (
        model.delta * (_kron(_I2, num, idf) + _kron(_I2, idf, num))
        - model.c3 * _kron(_SX, idf, idf)
        + 0.5 * model.qubit5_detuning * _kron(_SZ, idf, idf)
        - model.kappa * (s1 + s2) * _kron(_I2, x, idf)
        - model.kappa * (s3 + s4) * _kron(_I2, idf, x)
        + model.kappa_c * (s1 * s2 + s3 * s4) * _kron(_I2, idf, idf)
        - model.kappa3 * (_kron(_SX, sq, idf) + _kron(_SX, idf, sq))
    )
    return h.tocsr()


def _block4_energies(model: GadgetModel, s1, s2, s3, s4, k: int) -> np.ndarray:
    h = _block4_matrix(model, s1, s2, s3, s4)
    vals = spla.eigsh(h, k=k, which="SA", return_eigenvectors=False)
    return np.sort(vals)


def _signs():
    return (1, -1)


def _block_table(model: GadgetModel, k_per_block: int):
    """(energies, stabilizer) per qubit-sx block, with symmetry folding:
    blocks related by boson parity (s1+s2 -> -(s1+s2)) or by exchanging the
    two sub-gadgets are exactly degenerate and share one diagonalization."""
    out = []
    if model.kind == THREE_BODY:
        cache: dict[tuple, np.ndarray] = {}
        for s1 in _signs():
            for s2 in _signs():
                for s3 in _signs():
                    key = (abs(s1 + s2), s1 * s2, s3)
                    if key not in cache:
                        cache[key] = _block3_energies(model, s1, s2, s3)
                    out.append((cache[key], float(s1 * s2 * s3)))
        return out
    cache4: dict[tuple, np.ndarray] = {}
    for s1 in _signs():
        for s2 in _signs():
            for s3 in _signs():
                for s4 in _signs():
                    half_a = (abs(s1 + s2), s1 * s2)
                    half_b = (abs(s3 + s4), s3 * s4)
                    key = tuple(sorted((half_a, half_b)))
                    if key not in cache4:
                        cache4[key] = _block4_energies(model, s1, s2, s3, s4, k_per_block)
                    out.append((cache4[key], float(s1 * s2 * s3 * s4)))
    return out


def spectrum(model: GadgetModel, n_states: int = 32) -> GadgetSpectrum:
    """Lowest eigenvalues with per-state stabilizer-product expectations.

    The extracted coupling J is half the gap between the mean energies of
    the lower and upper low multiplets (4+4 states for three_body, 8+8 for
    four_body), which is insensitive to residual micro-splitting.
    """
    k_per_block = max(4, math.ceil(n_states / 16) + 2)
    table = _block_table(model, k_per_block)
    merged = []
    for energies, stab in table:
        for e in energies:
            merged.append((float(e), stab))
    merged.sort(key=lambda t: t[0])
    merged = merged[:n_states]
    evals = np.array([e for e, _ in merged])
    stabs = np.array([s for _, s in merged])

    m = 4 if model.kind == THREE_BODY else 8
    low = evals[: 2 * m]
    lower, upper = low[:m], low[m : 2 * m]
    j = float(upper.mean() - lower.mean()) / 2.0
    gap = float(evals[2 * m] - low[-1]) if len(evals) > 2 * m else math.nan
    return GadgetSpectrum(
        eigenvalues=evals,
        stabilizer=stabs,
        j_extracted=j,
        lower_splitting=float(lower.max() - lower.min()),
        upper_splitting=float(upper.max() - upper.min()),
        lower_sector=float(np.sign(stabs[:m].sum())) if m else 0.0,
        gap_above=gap,
    )


def perturbative_counterterms(model: GadgetModel) -> tuple[float, float]:
    """Leading-order warm starts: kc ~ 2 k^2/D, c3 ~ 8 k^2 k3/D^2.

    The four-body central bias to cancel is 8 k^2 k5/D^2 (both resonators
    squeeze the central qubit: twice the tuned three-body c3 at leading
    order), with the opposite sign because the term enters H4 as -c5 s5x
    where the three-body one enters as +c3 s3x."""
    kc = 2.0 * model.kappa**2 / model.delta
    c3 = 8.0 * model.kappa**2 * model.kappa3 / model.delta**2
    if model.kind == FOUR_BODY:
        c3 = -c3
    return kc, c3


def perturbative_j3(model: GadgetModel) -> float:
    return 4.0 * model.kappa**2 * model.kappa3 / model.delta**2


def perturbative_j4(j3: float, qubit5_detuning: float) -> float:
    return 2.0 * j3 * j3 / qubit5_detuning


def with_counterterms(model: GadgetModel, kappa_c: float, c3: float) -> GadgetModel:
    return replace(model, kappa_c=kappa_c, c3=c3)


def tune_counterterms(model: GadgetModel, tolerance: float = 1e-8) -> tuple[float, float]:
    """Counterterms restoring exact degeneracy of the low multiplets.

    three_body: derivative-free 2-D search over (kc, c3) zeroing the
    intra-quadruplet splittings of both low quadruplets, seeded at the
    perturbative estimates and polished by a finite-difference root solve.

    four_body: kc is inherited from the model (matched to the tuned
    three-body sub-gadgets) and only the central counterterm is searched;
    the second multiplet is degenerate automatically by the sub-gadget
    exchange symmetry, so the problem is one-dimensional.

    Returns (kappa_c, c3-or-c5); warns instead of raising if the residual
    splitting at the optimum exceeds ``tolerance``.
    """
    if model.kind == THREE_BODY:

        def residuals(v):
            m = replace(model, kappa_c=v[0], c3=v[1])
            r1 = _block3_energies(m, 1, 1, 1)[0] - _block3_energies(m, 1, -1, -1)[0]
            r2 = _block3_energies(m, 1, 1, -1)[0] - _block3_energies(m, 1, -1, 1)[0]
            return np.array([r1, r2])

        x0 = np.array(perturbative_counterterms(model))
        if np.max(np.abs(residuals(x0))) > tolerance:
            nm = scipy.optimize.minimize(
                lambda v: float(np.sum(residuals(v) ** 2)),
                x0,
                method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-20, "maxiter": 400},
            )
            sol = scipy.optimize.root(residuals, nm.x, method="hybr", tol=1e-13)
            best = sol.x if np.sum(residuals(sol.x) ** 2) <= np.sum(residuals(nm.x) ** 2) else nm.x
        else:
            best = x0
        resid = float(np.max(np.abs(residuals(best))))
        if resid > tolerance:
            warnings.warn(f"counterterm tuning stalled at residual splitting {resid:.3g}")
        return float(best[0]), float(best[1])

    def residual(c5):
        m = replace(model, c3=float(c5))
        ea = _block4_energies(m, 1, 1, 1, 1, 1)[0]
        eb = _block4_energies(m, 1, -1, 1, -1, 1)[0]
        return ea - eb

    seed = perturbative_counterterms(model)[1]
    lo, hi = seed - max(0.5 * abs(seed), 0.1), seed + max(0.5 * abs(seed), 0.1)
    rlo, rhi = residual(lo), residual(hi)
    tries = 0
    while rlo * rhi > 0 and tries < 6:
        lo -= 0.5 * abs(seed) + 0.1
        hi += 0.5 * abs(seed) + 0.1
        rlo, rhi = residual(lo), residual(hi)
        tries += 1
    if rlo * rhi > 0:
        warnings.warn("no sign change bracketing the central counterterm; returning seed")
        return float(model.kappa_c), float(seed)
    c5 = scipy.optimize.brentq(residual, lo, hi, xtol=1e-12)
    resid = abs(residual(c5))
    if resid > tolerance:
        warnings.warn(f"central counterterm tuning stalled at residual {resid:.3g}")
    return float(model.kappa_c), float(c5)


def extract_j4(model: GadgetModel) -> float:
    """Half the splitting between the sixteen low states' two multiplets."""
    if model.kind != FOUR_BODY:
        raise ValueError("extract_j4 requires a four_body model")
    return spectrum(model).j_extracted


def write_spectrum_csv(spec: GadgetSpectrum, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,eigenvalue,stabilizer_expectation\n")
        for i, (e, s) in enumerate(zip(spec.eigenvalues, spec.stabilizer)):
            fh.write(f"{i},{e:.12g},{s:g}\n")
