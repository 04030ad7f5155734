import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

import config
from bvn import BvnDecomposition, decompose, split_positive_negative, validate_line_sums
from errors import CertificationFailed, NotTransitive
from measures import SignedMeasure, is_permutant_measure
from operators import (
    OperatorMatrix,
    is_equivariant,
    is_nonexpansive,
    matrix_of_measure,
    operator_inf_norm,
)
from permgroup import PermutationGroup, conjugation_orbits, is_transitive, orbit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RepresentationResult:
    """Mesure permutante certifiée représentant un GEO linéaire"""
    measure: SignedMeasure
    norm_identity_gap: float
    reconstruction_gap: float
    orbit_count_used: int
    inf_norm: float
    positive_decomposition: BvnDecomposition
    negative_decomposition: BvnDecomposition

    @property
    def total_variation(self) -> float:
        return self.measure.total_variation

    def positive_coefficients(self) -> SignedMeasure:
        return self.positive_decomposition.as_measure(self.measure.degree)

    def negative_coefficients(self) -> SignedMeasure:
        return self.negative_decomposition.as_measure(self.measure.degree)


@dataclass(frozen=True)
class GeneoCertificate:
    is_geneo: bool
    measure: Optional[SignedMeasure]
    representation: RepresentationResult

    def to_dict(self) -> dict:
        rep = self.representation
        return {
            "reconstruction_gap": rep.reconstruction_gap,
            "norm_identity_gap": rep.norm_identity_gap,
            "total_variation": rep.total_variation,
            "inf_norm": rep.inf_norm,
            "orbit_count_used": rep.orbit_count_used,
            "is_geneo": self.is_geneo,
        }


def symmetrize(c: SignedMeasure, G: PermutationGroup) -> SignedMeasure:
    """Moyenne de c le long de chaque orbite de conjugaison qui rencontre son support"""
    if not c.is_nonnegative():
        raise ValueError("symmetrize expects a non-negative coefficient function")
    pairs = []
    for o in conjugation_orbits(G, c.support()):
        mass = sum(c[h] for h in o.members)
        share = mass / o.size
        pairs.extend((h, share) for h in o.members)
    return SignedMeasure.from_pairs(c.degree, pairs, c.zero_tol)


def geo_to_permutant_measure(B: OperatorMatrix, G: PermutationGroup, tol: Optional[float] = None,
                             reconstruction_tol: Optional[float] = None,
                             norm_tol: Optional[float] = None) -> RepresentationResult:
    """Retrouve une mesure permutante μ avec F = F_μ et Σ|μ| = ‖F‖ (G transitif)"""
    tol = config.CERTIFY_TOL if tol is None else tol
    reconstruction_tol = config.RECONSTRUCTION_TOL if reconstruction_tol is None else reconstruction_tol
    norm_tol = config.NORM_IDENTITY_TOL if norm_tol is None else norm_tol

    if not is_transitive(G):
        raise NotTransitive(len(orbit(G, 0)), G.degree)
    report = is_equivariant(B, G, tol)
    if not report:
        raise report.to_error()

    positive, negative = split_positive_negative(B)
    # lignes et colonnes de B⁺, B⁻ : permutations d'un même uplet
    validate_line_sums(positive, tol)
    validate_line_sums(negative, tol)

    bvn_tol = min(tol, config.BVN_TOL)
    c_pos = decompose(positive, bvn_tol)
    c_neg = decompose(negative, bvn_tol)
    n = B.degree
    mu_pos = symmetrize(c_pos.as_measure(n), G)
    mu_neg = symmetrize(c_neg.as_measure(n), G)
    mu = mu_pos - mu_neg

    if not is_permutant_measure(mu, G):
        raise CertificationFailed("symmetrized measure is not conjugation-invariant")

    inf_norm = operator_inf_norm(B)
    reconstruction_gap = float(np.max(np.abs(B.entries - matrix_of_measure(mu).entries))) if n else 0.0
    norm_gap = abs(mu.total_variation - inf_norm)
    if reconstruction_gap > reconstruction_tol:
        raise CertificationFailed(f"reconstruction gap {reconstruction_gap:.3e} exceeds {reconstruction_tol:.1e}")
    if norm_gap > norm_tol:
        raise CertificationFailed(f"norm identity gap {norm_gap:.3e} exceeds {norm_tol:.1e}")

    orbits_used = len(conjugation_orbits(G, mu.support()))
    logger.info(
        f"Mesure permutante certifiée: {len(mu)} permutations, {orbits_used} orbites, "
        f"variation totale {mu.total_variation:.6g}, écarts {reconstruction_gap:.1e}/{norm_gap:.1e}"
    )
    return RepresentationResult(
        measure=mu,
        norm_identity_gap=norm_gap,
        reconstruction_gap=reconstruction_gap,
        orbit_count_used=orbits_used,
        inf_norm=inf_norm,
        positive_decomposition=c_pos,
        negative_decomposition=c_neg,
    )


def certify_geneo(B: OperatorMatrix, G: PermutationGroup, tol: Optional[float] = None) -> GeneoCertificate:
    """GENEO ⇔ Σ|μ| ≤ 1 pour la mesure permutante représentante"""
    tol = config.CERTIFY_TOL if tol is None else tol
    rep = geo_to_permutant_measure(B, G, tol)
    is_geneo = rep.total_variation <= 1.0 + tol
    if is_geneo != is_nonexpansive(B, tol):
        logger.warning("Désaccord entre Σ|μ| et la norme d'opérateur au seuil de tolérance")
    return GeneoCertificate(is_geneo=is_geneo, measure=rep.measure if is_geneo else None, representation=rep)


def measure_to_geo_roundtrip(m: SignedMeasure, G: PermutationGroup, tol: Optional[float] = None) -> bool:
    """Aller-retour au niveau des opérateurs : μ → B → μ' avec B(μ') = B"""
    tol = config.RECONSTRUCTION_TOL if tol is None else tol
    if not is_permutant_measure(m, G):
        raise ValueError("measure_to_geo_roundtrip expects a permutant measure")
    B = matrix_of_measure(m)
    rep = geo_to_permutant_measure(B, G)
    gap = float(np.max(np.abs(matrix_of_measure(rep.measure).entries - B.entries))) if m.degree else 0.0
    return gap <= tol
