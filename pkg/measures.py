import json
import logging
import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

import config
from errors import DegreeMismatch, DegreeTooLarge
from permgroup import (
    Permutation,
    PermutationGroup,
    centralizer_size_in_symmetric_group,
    compose,
    conjugation_orbits,
)

logger = logging.getLogger(__name__)

PermKey = tuple[int, ...]


def _key(h: Union[Permutation, Sequence[int]]) -> PermKey:
    return h.images if isinstance(h, Permutation) else tuple(int(i) for i in h)


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    """Mesure signée à support fini sur Aut(X).

    Les poids sont indexés par le tableau d'images de la permutation ;
    les entrées de module ≤ zero_tol sont élaguées à la construction.
    """
    degree: int
    weights: Mapping[PermKey, float]
    zero_tol: float = config.ZERO_TOL

    def __post_init__(self):
        pruned = {}
        for key, weight in self.weights.items():
            key = _key(key)
            if len(key) != self.degree:
                raise DegreeMismatch(self.degree, len(key))
            Permutation(key)
            weight = float(weight)
            if abs(weight) > self.zero_tol:
                pruned[key] = weight
        object.__setattr__(self, 'weights', MappingProxyType(dict(sorted(pruned.items()))))

    @classmethod
    def zero(cls, n: int, zero_tol: Optional[float] = None) -> 'SignedMeasure':
        return cls(n, {}, config.ZERO_TOL if zero_tol is None else zero_tol)

    @classmethod
    def dirac(cls, h: Permutation, weight: float = 1.0) -> 'SignedMeasure':
        return cls(h.degree, {h.images: weight})

    @classmethod
    def from_pairs(cls, degree: int, pairs: Iterable[tuple[Permutation, float]],
                   zero_tol: Optional[float] = None) -> 'SignedMeasure':
        """Accumule des couples (permutation, poids) ; les doublons s'additionnent"""
        acc: dict[PermKey, float] = {}
        for h, w in pairs:
            key = _key(h)
            acc[key] = acc.get(key, 0.0) + float(w)
        return cls(degree, acc, config.ZERO_TOL if zero_tol is None else zero_tol)

    def __getitem__(self, h) -> float:
        return self.weights.get(_key(h), 0.0)

    def __len__(self):
        return len(self.weights)

    def items(self) -> list[tuple[Permutation, float]]:
        return [(Permutation._trusted(k), w) for k, w in self.weights.items()]

    def support(self) -> list[Permutation]:
        return [Permutation._trusted(k) for k in self.weights]

    @property
    def total_variation(self) -> float:
        return float(sum(abs(w) for w in self.weights.values()))

    def total_mass(self) -> float:
        return float(sum(self.weights.values()))

    def is_nonnegative(self) -> bool:
        return all(w >= 0 for w in self.weights.values())

    def __add__(self, other: 'SignedMeasure') -> 'SignedMeasure':
        return linear_combination([1.0, 1.0], [self, other])

    def __sub__(self, other: 'SignedMeasure') -> 'SignedMeasure':
        return linear_combination([1.0, -1.0], [self, other])

    def __neg__(self) -> 'SignedMeasure':
        return linear_combination([-1.0], [self])

    def __mul__(self, scalar: float) -> 'SignedMeasure':
        return linear_combination([scalar], [self])

    __rmul__ = __mul__

    def equals(self, other: 'SignedMeasure', tol: Optional[float] = None) -> bool:
        """Égalité support par support à tol près"""
        if self.degree != other.degree:
            return False
        tol = max(self.zero_tol, other.zero_tol) if tol is None else tol
        keys = set(self.weights) | set(other.weights)
        return all(abs(self.weights.get(k, 0.0) - other.weights.get(k, 0.0)) <= tol for k in keys)

    def to_list(self) -> list[dict]:
        return [{"perm": list(k), "weight": w} for k, w in self.weights.items()]


def _pointwise(measures: Sequence[SignedMeasure], fn) -> SignedMeasure:
    n = measures[0].degree
    for m in measures[1:]:
        if m.degree != n:
            raise DegreeMismatch(n, m.degree)
    tol = min(m.zero_tol for m in measures)
    keys = set().union(*(m.weights for m in measures))
    return SignedMeasure(n, {k: fn([m.weights.get(k, 0.0) for m in measures]) for k in keys}, tol)


def lattice_min(a: SignedMeasure, b: SignedMeasure) -> SignedMeasure:
    return _pointwise([a, b], min)


def lattice_max(a: SignedMeasure, b: SignedMeasure) -> SignedMeasure:
    return _pointwise([a, b], max)


def abs_measure(a: SignedMeasure) -> SignedMeasure:
    return _pointwise([a], lambda v: abs(v[0]))


def positive_part(a: SignedMeasure) -> SignedMeasure:
    return _pointwise([a], lambda v: max(v[0], 0.0))


def negative_part(a: SignedMeasure) -> SignedMeasure:
    return _pointwise([a], lambda v: max(-v[0], 0.0))


def linear_combination(coeffs: Sequence[float], measures: Sequence[SignedMeasure]) -> SignedMeasure:
    if len(coeffs) != len(measures) or not measures:
        raise ValueError("linear_combination needs as many coefficients as measures (at least one)")
    coeffs = [float(c) for c in coeffs]
    return _pointwise(list(measures), lambda v: sum(c * x for c, x in zip(coeffs, v)))


def uniform_measure(H: Iterable[Permutation], total: float = 1.0) -> SignedMeasure:
    """Mesure uniforme total/|H| sur un ensemble de permutations"""
    members = sorted(set(H))
    if not members:
        raise ValueError("uniform_measure needs a non-empty set")
    w = total / len(members)
    return SignedMeasure.from_pairs(members[0].degree, [(h, w) for h in members])


def is_permutant_measure(m: SignedMeasure, G: PermutationGroup) -> bool:
    """Vrai si m est constante sur chaque orbite de conjugaison qui rencontre son support"""
    if m.degree != G.degree:
        raise DegreeMismatch(m.degree, G.degree)
    gens = [(g, g.inverse()) for g in G.generators]
    for h, w in m.items():
        for g, g_inv in gens:
            other = m[compose(compose(g, h), g_inv)]
            if abs(other - w) > m.zero_tol * max(1.0, abs(w)):
                return False
    return True


def dim_pm(G: PermutationGroup) -> int:
    """dim PM(G) par Burnside : moyenne des |Aut(X)^g| = |C(g)| sur G"""
    total = sum(centralizer_size_in_symmetric_group(g) for g in G.elements)
    dim, rest = divmod(total, G.order)
    if rest:
        raise RuntimeError(f"Burnside sum {total} not divisible by |G| = {G.order}")
    return dim


class PermutantCount(NamedTuple):
    base: int
    exponent: int

    def __str__(self):
        return f"{self.base}^{self.exponent}"

    def value(self) -> int:
        return self.base ** self.exponent


def count_permutants(G: PermutationGroup) -> PermutantCount:
    """|Perm(G)| = 2^dim PM(G), jamais matérialisé"""
    return PermutantCount(2, dim_pm(G))


def orbit_count_bruteforce(G: PermutationGroup) -> int:
    n = G.degree
    if n > config.MAX_ENUMERATION_DEGREE:
        raise DegreeTooLarge(n, config.MAX_ENUMERATION_DEGREE)
    everything = (Permutation._trusted(p) for p in itertools.permutations(range(n)))
    return len(conjugation_orbits(G, everything))


# Fichiers de mesure

def measure_from_list(data: list, degree: Optional[int] = None) -> SignedMeasure:
    seen = set()
    pairs = []
    for entry in data:
        key = tuple(int(i) for i in entry['perm'])
        if key in seen:
            raise ValueError(f"duplicate permutation in measure file: {list(key)}")
        seen.add(key)
        pairs.append((Permutation(key), float(entry['weight'])))
    if degree is None:
        if not pairs:
            raise ValueError("empty measure file: degree unknown")
        degree = pairs[0][0].degree
    return SignedMeasure.from_pairs(degree, pairs)


def load_measure(path: str, degree: Optional[int] = None) -> SignedMeasure:
    with open(path, 'r') as f:
        data = json.load(f)
    measure = measure_from_list(data, degree)
    logger.info(f"Mesure chargée depuis {path}: {len(measure)} permutations dans le support")
    return measure


def save_measure(m: SignedMeasure, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(m.to_list(), f, indent=2)
