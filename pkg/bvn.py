import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

import config
from errors import CertificationFailed, LineSumViolation, NegativeEntry, NoPerfectMatching
from measures import SignedMeasure
from operators import OperatorMatrix
from permgroup import Permutation

logger = logging.getLogger(__name__)

MatrixLike = Union[OperatorMatrix, np.ndarray]


def _as_array(M: MatrixLike) -> np.ndarray:
    arr = np.array(M.entries if isinstance(M, OperatorMatrix) else M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"matrix must be square, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class BvnDecomposition:
    terms: tuple[tuple[float, Permutation], ...]
    residual_norm: float
    line_sum: float

    def __len__(self):
        return len(self.terms)

    @property
    def weight_sum(self) -> float:
        return float(sum(w for w, _ in self.terms))

    def reconstruct(self, n: int) -> np.ndarray:
        M = np.zeros((n, n))
        cols = np.arange(n)
        for w, h in self.terms:
            M[np.asarray(h.images), cols] += w
        return M

    def as_measure(self, n: int) -> SignedMeasure:
        """Fonction de coefficients c : Aut(X) → R≥0 vue comme mesure"""
        return SignedMeasure.from_pairs(n, [(h, w) for w, h in self.terms])


def validate_line_sums(M: MatrixLike, tol: Optional[float] = None) -> float:
    """Renvoie la somme commune c̄ des lignes et des colonnes"""
    tol = config.BVN_TOL if tol is None else tol
    A = _as_array(M)
    n = A.shape[0]
    if n == 0:
        return 0.0
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    negative = np.argwhere(A < -tol)
    if len(negative):
        i, j = negative[0]
        raise NegativeEntry(int(i), int(j), float(A[i, j]))
    A = np.clip(A, 0.0, None)

    rows = A.sum(axis=1)
    cols = A.sum(axis=0)
    cbar = float(rows[0])
    slack = tol * max(1.0, abs(cbar))
    for kind, sums in (('row', rows), ('column', cols)):
        for idx, value in enumerate(sums):
            if abs(value - cbar) > slack:
                raise LineSumViolation(kind, idx, float(value), cbar)
    return cbar


def _perfect_matching(support: np.ndarray) -> tuple[list[int], Optional[list[int]]]:
    """Couplage maximum par chemins augmentants (lignes puis colonnes par indice croissant).

    Renvoie (match_row, hall_rows) : hall_rows est None si le couplage est parfait,
    sinon l'ensemble de lignes qui viole la condition de Hall.
    """
    n = support.shape[0]
    adjacency = [np.flatnonzero(support[i]).tolist() for i in range(n)]
    match_col: list[Optional[int]] = [None] * n
    match_row: list[Optional[int]] = [None] * n

    # amorçage glouton
    for i in range(n):
        for j in adjacency[i]:
            if match_col[j] is None:
                match_col[j] = i
                match_row[i] = j
                break

    def augment(i: int, seen: list[bool]) -> bool:
        for j in adjacency[i]:
            if not seen[j]:
                seen[j] = True
                if match_col[j] is None or augment(match_col[j], seen):
                    match_col[j] = i
                    match_row[i] = j
                    return True
        return False

    for i in range(n):
        if match_row[i] is not None:
            continue
        seen = [False] * n
        if not augment(i, seen):
            rows = {i} | {match_col[j] for j in range(n) if seen[j] and match_col[j] is not None}
            return match_row, sorted(rows)
    return match_row, None


def decompose(M: MatrixLike, tol: Optional[float] = None) -> BvnDecomposition:
    """M = Σ c(h) P(h) par épluchage glouton de couplages parfaits"""
    tol = config.BVN_TOL if tol is None else tol
    cbar = validate_line_sums(M, tol)
    original = np.clip(_as_array(M), 0.0, None)
    n = original.shape[0]
    W = original.copy()
    terms: list[tuple[float, Permutation]] = []

    if cbar > n * tol:
        remaining = cbar
        while remaining > n * tol and W.max() > tol:
            match_row, hall_rows = _perfect_matching(W > tol)
            if hall_rows is not None:
                raise NoPerfectMatching(hall_rows)
            cols = np.asarray(match_row, dtype=int)
            rows = np.arange(n)
            w = float(W[rows, cols].min())
            W[rows, cols] -= w
            W[W <= tol] = 0.0
            remaining -= w
            # matching row i → column σ(i) : P(h) e_j = e_{h(j)} avec h(σ(i)) = i
            images = [0] * n
            for i, j in enumerate(match_row):
                images[j] = i
            terms.append((w, Permutation(tuple(images))))
            logger.debug(f"Terme BvN {len(terms)}: poids {w:.6g}, reste {remaining:.3e}")

    result = BvnDecomposition(terms=tuple(terms), residual_norm=0.0, line_sum=cbar)
    residual = float(np.max(np.abs(original - result.reconstruct(n)))) if n else 0.0
    logger.debug(f"Décomposition BvN: {len(terms)} termes, résidu {residual:.3e}")
    # même échelle que la tolérance sur les sommes de lignes
    bound = (n + 1) * tol * max(1.0, abs(cbar))
    if residual > bound:
        raise CertificationFailed(f"BvN residual {residual:.3e} exceeds {bound:.1e}")
    return BvnDecomposition(terms=tuple(terms), residual_norm=residual, line_sum=cbar)


def split_positive_negative(B: OperatorMatrix) -> tuple[OperatorMatrix, OperatorMatrix]:
    """B⁺ = max(B, 0), B⁻ = max(-B, 0)"""
    return OperatorMatrix(np.maximum(B.entries, 0.0)), OperatorMatrix(np.maximum(-B.entries, 0.0))
