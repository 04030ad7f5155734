import re
import json
import math
import logging
import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import config
from errors import DegreeMismatch, DegreeTooLarge, GroupTooLarge, InvalidPermutation

logger = logging.getLogger(__name__)

_CYCLE_RE = re.compile(r'\(([^()]*)\)')
_NAMED_GROUP_RE = re.compile(r'^(S|A|C|D|F|I|V)(\d+)$')


@dataclass(frozen=True, order=True)
class Permutation:
    """Bijection de {0..n-1} stockée comme tableau d'images.

    images[j] = i signifie h(x_j) = x_i. L'ordre naturel (lexicographique
    sur les images) sert d'ordre canonique partout.
    """
    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise InvalidPermutation(f"not a bijection of {{0..{len(images) - 1}}}: {list(images)}")
        object.__setattr__(self, 'images', images)

    @classmethod
    def _trusted(cls, images: tuple[int, ...]) -> 'Permutation':
        perm = object.__new__(cls)
        object.__setattr__(perm, 'images', images)
        return perm

    @classmethod
    def identity(cls, n: int) -> 'Permutation':
        return cls._trusted(tuple(range(n)))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, j: int) -> int:
        return self.images[j]

    def __mul__(self, other: 'Permutation') -> 'Permutation':
        return compose(self, other)

    def __repr__(self):
        return f"Permutation({self.cycle_string()}, n={self.degree})"

    def inverse(self) -> 'Permutation':
        inv = [0] * self.degree
        for j, i in enumerate(self.images):
            inv[i] = j
        return Permutation._trusted(tuple(inv))

    def is_identity(self) -> bool:
        return all(i == j for j, i in enumerate(self.images))

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycles non triviaux (indices 0-based), chacun commençant par son plus petit point"""
        seen = [False] * self.degree
        result = []
        for start in range(self.degree):
            if seen[start]:
                continue
            cycle = [start]
            seen[start] = True
            j = self.images[start]
            while j != start:
                cycle.append(j)
                seen[j] = True
                j = self.images[j]
            if len(cycle) > 1:
                result.append(tuple(cycle))
        return result

    def cycle_type(self) -> Counter:
        """Nombre de cycles de chaque longueur, points fixes compris"""
        moved = self.cycles()
        counts = Counter(len(c) for c in moved)
        fixed = self.degree - sum(len(c) for c in moved)
        if fixed:
            counts[1] = fixed
        return counts

    def order(self) -> int:
        return math.lcm(*[len(c) for c in self.cycles()]) if not self.is_identity() else 1

    def cycle_string(self) -> str:
        """Notation en cycles 1-based, '()' pour l'identité"""
        moved = self.cycles()
        if not moved:
            return '()'
        return ''.join('(' + ' '.join(str(j + 1) for j in c) + ')' for c in moved)


def _check_degree(a: Permutation, b: Permutation) -> None:
    if a.degree != b.degree:
        raise DegreeMismatch(a.degree, b.degree)


def compose(a: Permutation, b: Permutation) -> Permutation:
    """a∘b : applique b d'abord, puis a"""
    _check_degree(a, b)
    ai = a.images
    return Permutation._trusted(tuple(ai[j] for j in b.images))


def inverse(h: Permutation) -> Permutation:
    return h.inverse()


def identity(n: int) -> Permutation:
    return Permutation.identity(n)


def conjugate(g: Permutation, h: Permutation) -> Permutation:
    """g h g⁻¹"""
    return compose(compose(g, h), g.inverse())


def power(h: Permutation, k: int) -> Permutation:
    if k < 0:
        return power(h.inverse(), -k)
    result = Permutation.identity(h.degree)
    base = h
    while k:
        if k & 1:
            result = compose(result, base)
        base = compose(base, base)
        k >>= 1
    return result


def parse_cycles(text: str, degree: int) -> Permutation:
    """Convertit une notation en cycles 1-based, ex. '(1 2)(3 4)', en Permutation.

    Les cycles non disjoints sont composés de droite à gauche, comme dans
    la notation multiplicative usuelle.
    """
    stripped = text.strip()
    if stripped in ('', '()', 'id', 'e'):
        return Permutation.identity(degree)
    if _CYCLE_RE.sub('', stripped).strip():
        raise InvalidPermutation(f"malformed cycle notation: {text!r}")

    result = Permutation.identity(degree)
    for body in reversed(_CYCLE_RE.findall(stripped)):
        tokens = [t for t in re.split(r'[\s,]+', body.strip()) if t]
        try:
            points = [int(t) - 1 for t in tokens]
        except ValueError:
            raise InvalidPermutation(f"malformed cycle notation: {text!r}")
        if any(p < 0 or p >= degree for p in points):
            raise InvalidPermutation(f"cycle {body!r} leaves {{1..{degree}}}")
        if len(set(points)) != len(points):
            raise InvalidPermutation(f"cycle {body!r} repeats a point")
        images = list(range(degree))
        for idx, p in enumerate(points):
            images[p] = points[(idx + 1) % len(points)]
        result = compose(Permutation._trusted(tuple(images)), result)
    return result


@dataclass(frozen=True)
class PermutationGroup:
    """Groupe fini de permutations stocké par liste exhaustive de ses éléments"""
    degree: int
    elements: tuple[Permutation, ...]
    generators: tuple[Permutation, ...]
    _members: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_members', frozenset(self.elements))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, h: Permutation) -> bool:
        return h in self._members

    @property
    def order(self) -> int:
        return len(self.elements)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "generators": [list(g.images) for g in self.generators]
        }


def close(generators: Iterable[Permutation], cap: Optional[int] = None) -> PermutationGroup:
    """Clôture par multiplication en largeur, ordre canonique des éléments"""
    gens = list(generators)
    if not gens:
        raise ValueError("close() requires at least one generator")
    n = gens[0].degree
    for g in gens[1:]:
        if g.degree != n:
            raise DegreeMismatch(n, g.degree)
    cap = config.GROUP_ELEMENT_CAP if cap is None else cap

    start = Permutation.identity(n)
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = compose(g, x)
            if y not in seen:
                seen.add(y)
                if len(seen) > cap:
                    raise GroupTooLarge(cap)
                queue.append(y)

    elements = tuple(sorted(seen))
    if n <= 8 and math.factorial(n) % len(elements) != 0:
        raise RuntimeError(f"Lagrange violated: |G| = {len(elements)} does not divide {n}!")
    logger.debug(f"Groupe clos: degré {n}, ordre {len(elements)}, {len(gens)} générateurs")
    return PermutationGroup(degree=n, elements=elements, generators=tuple(gens))


def orbit(G: PermutationGroup, point: int) -> list[int]:
    """Orbite d'un point sous G (parcours en largeur sur les générateurs)"""
    seen = {point}
    queue = deque([point])
    while queue:
        x = queue.popleft()
        for g in G.generators:
            y = g(x)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return sorted(seen)


def is_transitive(G: PermutationGroup) -> bool:
    return len(orbit(G, 0)) == G.degree


def stabilizer(G: PermutationGroup, point: int) -> list[Permutation]:
    return [g for g in G.elements if g(point) == point]


@dataclass(frozen=True)
class ConjugationOrbit:
    members: frozenset

    @property
    def size(self) -> int:
        return len(self.members)

    def __contains__(self, h: Permutation) -> bool:
        return h in self.members


@dataclass(frozen=True)
class Permutant:
    members: frozenset = frozenset()

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))


def conjugation_orbit(h: Permutation, G: PermutationGroup) -> ConjugationOrbit:
    """Orbite de h sous l'action par conjugaison de G"""
    if h.degree != G.degree:
        raise DegreeMismatch(h.degree, G.degree)
    gens = [(g, g.inverse()) for g in G.generators]
    seen = {h}
    queue = deque([h])
    while queue:
        x = queue.popleft()
        for g, g_inv in gens:
            y = compose(compose(g, x), g_inv)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return ConjugationOrbit(members=frozenset(seen))


def conjugation_stabilizer_size(h: Permutation, G: PermutationGroup) -> int:
    """|G_h| : nombre d'éléments de G qui fixent h par conjugaison"""
    return sum(1 for g in G.elements if compose(g, h) == compose(h, g))


def conjugation_orbits(G: PermutationGroup, elements: Iterable[Permutation]) -> list[ConjugationOrbit]:
    """Orbites (par conjugaison) rencontrées par un ensemble de permutations, ordre canonique"""
    orbits = []
    covered: set = set()
    for h in sorted(set(elements)):
        if h in covered:
            continue
        o = conjugation_orbit(h, G)
        covered |= o.members
        orbits.append(o)
    return orbits


def centralizer_size_in_symmetric_group(h: Permutation) -> int:
    """Π k^{m_k} · m_k! sur le type cyclique de h"""
    size = 1
    for k, m in h.cycle_type().items():
        size *= k ** m * math.factorial(m)
    return size


def is_permutant(H: Iterable[Permutation], G: PermutationGroup) -> bool:
    members = set(H.members if isinstance(H, Permutant) else H)
    if not members:
        return True
    for h in members:
        if h.degree != G.degree:
            raise DegreeMismatch(h.degree, G.degree)
    # stabilité sous les générateurs suffit (groupe fini)
    for g in G.generators:
        g_inv = g.inverse()
        for h in members:
            if compose(compose(g, h), g_inv) not in members:
                return False
    return True


def is_k_weakly_versatile(G: PermutationGroup, k: int) -> bool:
    """Critère par les orbites des stabilisateurs : |orbite de z sous G_x| > k pour tout x ≠ z"""
    if k < 1:
        raise ValueError(f"k must be a positive integer (got {k})")
    n = G.degree
    for x in range(n):
        stab = stabilizer(G, x)
        remaining = set(range(n)) - {x}
        while remaining:
            z = remaining.pop()
            z_orbit = {g(z) for g in stab}
            if len(z_orbit) <= k:
                return False
            remaining -= z_orbit
    return True


def is_k_weakly_versatile_bruteforce(G: PermutationGroup, k: int) -> bool:
    """Définition littérale (exponentielle en k), réservée aux petits degrés"""
    n = G.degree
    points = range(n)
    for x in points:
        stab = stabilizer(G, x)
        for z in points:
            if z == x:
                continue
            for size in range(0, min(k, n) + 1):
                for S in itertools.combinations(points, size):
                    if not any(g(z) not in S for g in stab):
                        return False
    return True


def min_nontrivial_permutant_size(G: PermutationGroup) -> Optional[int]:
    """Plus petite taille d'un permutant différent de ∅ et {id}, None s'il n'y en a pas"""
    n = G.degree
    if n > config.MAX_ENUMERATION_DEGREE:
        raise DegreeTooLarge(n, config.MAX_ENUMERATION_DEGREE)
    ident = Permutation.identity(n)
    everything = (Permutation._trusted(p) for p in itertools.permutations(range(n)))
    sizes = [o.size for o in conjugation_orbits(G, everything) if ident not in o]
    return min(sizes) if sizes else None


# Groupes nommés

def trivial_group(n: int) -> PermutationGroup:
    return close([Permutation.identity(n)])


def _cycle_perm(n: int, points: list[int]) -> Permutation:
    images = list(range(n))
    for idx, p in enumerate(points):
        images[p] = points[(idx + 1) % len(points)]
    return Permutation._trusted(tuple(images))


def cyclic_group(n: int) -> PermutationGroup:
    return close([_cycle_perm(n, list(range(n)))])


def symmetric_group(n: int) -> PermutationGroup:
    if n < 2:
        return trivial_group(n)
    return close([_cycle_perm(n, [0, 1]), _cycle_perm(n, list(range(n)))])


def alternating_group(n: int) -> PermutationGroup:
    if n < 3:
        return trivial_group(n)
    return close([_cycle_perm(n, [i, i + 1, i + 2]) for i in range(n - 2)])


def dihedral_group(n: int) -> PermutationGroup:
    if n < 3:
        return symmetric_group(n)
    reflection = Permutation._trusted(tuple((-j) % n for j in range(n)))
    return close([_cycle_perm(n, list(range(n))), reflection])


def klein_group() -> PermutationGroup:
    return close([parse_cycles('(1 2)(3 4)', 4), parse_cycles('(1 3)(2 4)', 4)])


def affine_group(p: int) -> PermutationGroup:
    """AGL(1, p) : x ↦ a·x + b sur Z/p (groupe de Frobenius d'ordre p(p-1))"""
    if p < 2 or any(p % d == 0 for d in range(2, int(math.isqrt(p)) + 1)):
        raise ValueError(f"affine_group requires a prime (got {p})")
    root = next(a for a in range(1, p) if len({pow(a, e, p) for e in range(1, p)}) == p - 1)
    translation = _cycle_perm(p, list(range(p)))
    scaling = Permutation._trusted(tuple((root * j) % p for j in range(p)))
    return close([translation, scaling])


def named_group(name: str) -> PermutationGroup:
    """Groupes nommés : S4, A4, C4, D4, V4, F5 (AGL(1,5)), I3 (groupe trivial)"""
    match = _NAMED_GROUP_RE.match(name.strip())
    if not match:
        raise ValueError(f"unknown group name {name!r}")
    kind, n = match.group(1), int(match.group(2))
    if kind == 'V':
        if n != 4:
            raise ValueError("the Klein group is only defined on 4 points (V4)")
        return klein_group()
    builders = {
        'S': symmetric_group,
        'A': alternating_group,
        'C': cyclic_group,
        'D': dihedral_group,
        'F': affine_group,
        'I': trivial_group,
    }
    return builders[kind](n)


def transitive_groups(n: int) -> list[PermutationGroup]:
    """Groupes transitifs classiques de degré n (représentants, petits degrés)"""
    groups = [symmetric_group(n)]
    if n >= 3:
        groups += [alternating_group(n), cyclic_group(n)]
    if n >= 4:
        groups.append(dihedral_group(n))
    if n == 4:
        groups.append(klein_group())
    if n in (5, 7):
        groups.append(affine_group(n))
    return [G for G in groups if is_transitive(G)]


# Fichiers de groupe

def group_from_dict(data: dict) -> PermutationGroup:
    if 'degree' not in data or 'generators' not in data:
        raise ValueError("group file needs 'degree' and 'generators'")
    n = int(data['degree'])
    gens = []
    for raw in data['generators']:
        if isinstance(raw, str):
            gens.append(parse_cycles(raw, n))
        else:
            perm = Permutation(tuple(raw))
            if perm.degree != n:
                raise DegreeMismatch(n, perm.degree)
            gens.append(perm)
    if not gens:
        gens = [Permutation.identity(n)]
    return close(gens)


def load_group(path: str) -> PermutationGroup:
    """Charge un groupe depuis un fichier JSON, ou un groupe nommé (ex. 'S4')"""
    if _NAMED_GROUP_RE.match(path.strip()):
        return named_group(path)
    with open(path, 'r') as f:
        data = json.load(f)
    group = group_from_dict(data)
    logger.info(f"Groupe chargé depuis {path}: degré {group.degree}, ordre {group.order}")
    return group


def save_group(G: PermutationGroup, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(G.to_dict(), f, indent=2)
