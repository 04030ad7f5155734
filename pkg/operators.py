import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

import config
from errors import DegreeMismatch, MatrixFormatError, NotEquivariant, NotTransitive
from measures import SignedMeasure
from permgroup import Permutation, PermutationGroup, is_transitive, orbit

logger = logging.getLogger(__name__)


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("entries must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """Fonction φ : X → R, values[j] = φ(x_j)"""
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen_array(self.values, 1))

    @property
    def degree(self) -> int:
        return self.values.shape[0]

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.degree else 0.0


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Matrice dense n×n, convention par colonnes : F(1_{x_j}) = Σ_i entries[i][j] · 1_{x_i}"""
    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.entries, 2)
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {arr.shape}")
        object.__setattr__(self, 'entries', arr)

    @property
    def degree(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, phi: Signal) -> Signal:
        if phi.degree != self.degree:
            raise DegreeMismatch(self.degree, phi.degree)
        return Signal(self.entries @ phi.values)

    def scaled(self, factor: float) -> 'OperatorMatrix':
        return OperatorMatrix(self.entries * factor)


def basis_signal(j: int, n: int) -> Signal:
    values = np.zeros(n)
    values[j] = 1.0
    return Signal(values)


def sup_norm(phi: Signal) -> float:
    return phi.sup_norm


def right_translate(phi: Signal, h: Permutation) -> Signal:
    """φ∘h : result[j] = φ(h(x_j))"""
    if phi.degree != h.degree:
        raise DegreeMismatch(phi.degree, h.degree)
    return Signal(phi.values[np.asarray(h.images)])


def permutation_matrix(h: Permutation) -> OperatorMatrix:
    """P(h) avec P(h) e_j = e_{σ_h(j)}"""
    n = h.degree
    P = np.zeros((n, n))
    P[np.asarray(h.images, dtype=int), np.arange(n)] = 1.0
    return OperatorMatrix(P)


def apply_measure_operator(m: SignedMeasure, phi: Signal) -> Signal:
    """F_μ(φ) = Σ_h μ(h) · φ h⁻¹"""
    if m.degree != phi.degree:
        raise DegreeMismatch(m.degree, phi.degree)
    out = np.zeros(phi.degree)
    for h, w in m.items():
        out += w * phi.values[np.asarray(h.inverse().images)]
    return Signal(out)


def matrix_of_measure(m: SignedMeasure) -> OperatorMatrix:
    n = m.degree
    B = np.zeros((n, n))
    cols = np.arange(n)
    for h, w in m.items():
        B[np.asarray(h.images, dtype=int), cols] += w
    return OperatorMatrix(B)


@dataclass(frozen=True)
class EquivarianceReport:
    equivariant: bool
    witness: Optional[Permutation] = None
    row: Optional[int] = None
    col: Optional[int] = None
    deviation: float = 0.0

    def __bool__(self):
        return self.equivariant

    def to_error(self) -> NotEquivariant:
        return NotEquivariant(self.witness, self.row, self.col, self.deviation)


def is_equivariant(B: OperatorMatrix, G: PermutationGroup, tol: Optional[float] = None,
                   exhaustive: bool = False) -> EquivarianceReport:
    """B·P(g) = P(g)·B pour chaque générateur (ou chaque élément en mode exhaustif)"""
    if B.degree != G.degree:
        raise DegreeMismatch(B.degree, G.degree)
    tol = config.CERTIFY_TOL if tol is None else tol
    candidates = G.elements if exhaustive else G.generators
    for g in candidates:
        P = permutation_matrix(g).entries
        diff = np.abs(B.entries @ P - P @ B.entries)
        row, col = np.unravel_index(int(np.argmax(diff)), diff.shape)
        worst = float(diff[row, col])
        if worst > tol:
            logger.debug(f"Non équivariant: g = {g.cycle_string()}, écart {worst:.3e} en ({row}, {col})")
            return EquivarianceReport(False, g, int(row), int(col), worst)
    return EquivarianceReport(True)


def operator_inf_norm(B: OperatorMatrix) -> float:
    """Norme L∞→L∞ : max des sommes absolues des lignes"""
    if B.degree == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(B.entries), axis=1)))


def norm_witness(B: OperatorMatrix) -> Signal:
    """Vecteur des signes de la ligne maximale : atteint la norme d'opérateur"""
    row = int(np.argmax(np.sum(np.abs(B.entries), axis=1)))
    signs = np.sign(B.entries[row])
    signs[signs == 0] = 1.0
    return Signal(signs)


def is_nonexpansive(B: OperatorMatrix, tol: Optional[float] = None) -> bool:
    tol = config.CERTIFY_TOL if tol is None else tol
    return operator_inf_norm(B) <= 1.0 + tol


def check_row_column_structure(B: OperatorMatrix, G: PermutationGroup, tol: Optional[float] = None) -> bool:
    """Chaque ligne et chaque colonne est une permutation de la ligne 0"""
    tol = config.CERTIFY_TOL if tol is None else tol
    if not is_transitive(G):
        raise NotTransitive(len(orbit(G, 0)), G.degree)
    report = is_equivariant(B, G, tol)
    if not report:
        raise report.to_error()

    reference = np.sort(B.entries[0])
    for line in list(B.entries) + list(B.entries.T):
        if np.max(np.abs(np.sort(line) - reference)) > tol:
            return False
    return True


# Fichiers CSV

def load_matrix(path: str) -> OperatorMatrix:
    try:
        data = np.loadtxt(path, delimiter=',', ndmin=2)
    except ValueError as e:
        raise MatrixFormatError(f"cannot parse matrix file {path}: {e}")
    matrix = OperatorMatrix(data)
    logger.info(f"Matrice {matrix.degree}×{matrix.degree} chargée depuis {path}")
    return matrix


def save_matrix(B: OperatorMatrix, path: str) -> None:
    np.savetxt(path, B.entries, delimiter=',', fmt='%.17g')


def load_signal(path: str) -> Signal:
    try:
        data = np.loadtxt(path, delimiter=',', ndmin=1)
    except ValueError as e:
        raise MatrixFormatError(f"cannot parse signal file {path}: {e}")
    return Signal(np.atleast_1d(data))


def save_signal(phi: Signal, path: str) -> None:
    np.savetxt(path, phi.values[np.newaxis, :], delimiter=',', fmt='%.17g')
