import logging
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

import config
from errors import DatasetFormatError, InvalidWeights
from measures import SignedMeasure, linear_combination, uniform_measure
from permgroup import Permutant, Permutation, PermutationGroup, close, is_permutant

logger = logging.getLogger(__name__)

MAGIC = b'GDIE'
FORMAT_VERSION = 1

# faces dans l'ordre (axe, côté) : x-, x+, y-, y+, z-, z+
FACES = tuple((axis, side) for axis in range(3) for side in range(2))
OPPOSITE_PAIRS = ((0, 1), (2, 3), (4, 5))
STANDARD_PAIRS = ((1, 6), (2, 5), (3, 4))

_OFFSETS = np.arange(-3, 4)
DOT_STENCIL = np.exp(-(_OFFSETS[:, None] ** 2 + _OFFSETS[None, :] ** 2) / 2.0)
SINGLE_DOT_MASS = float(DOT_STENCIL.sum())


@dataclass(frozen=True, eq=False)
class CubeLattice:
    """Grille {0..n-1}³, indices plats i·n² + j·n + k ; seule la surface est stockée"""
    n: int
    surface_index: np.ndarray = field(init=False, repr=False)
    position: np.ndarray = field(init=False, repr=False)
    face_positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n
        if n < 2:
            raise ValueError(f"lattice side must be at least 2 (got {n})")
        I, J, K = np.indices((n, n, n)).reshape(3, -1)
        on_surface = (np.minimum(np.minimum(I, J), K) == 0) | (np.maximum(np.maximum(I, J), K) == n - 1)
        surface_index = np.flatnonzero(on_surface)
        position = np.full(n ** 3, -1, dtype=np.int64)
        position[surface_index] = np.arange(len(surface_index))

        a, b = np.indices((n, n))
        fixed = {0: 0, 1: n - 1}
        faces = []
        for axis, side in FACES:
            c = np.full_like(a, fixed[side])
            coords = {0: (c, a, b), 1: (a, c, b), 2: (a, b, c)}[axis]
            faces.append(position[self.flat(*coords)])
        for arr in (surface_index, position):
            arr.flags.writeable = False
        face_positions = np.stack(faces)
        face_positions.flags.writeable = False
        object.__setattr__(self, 'surface_index', surface_index)
        object.__setattr__(self, 'position', position)
        object.__setattr__(self, 'face_positions', face_positions)

    @property
    def size(self) -> int:
        return self.n ** 3

    @property
    def surface_len(self) -> int:
        return len(self.surface_index)

    def flat(self, i, j, k):
        return (np.asarray(i) * self.n + np.asarray(j)) * self.n + np.asarray(k)

    def lattice_permutation(self, fn: Callable) -> Permutation:
        """Permutation de la grille induite par une application de coordonnées (i, j, k) ↦ fn(i, j, k)"""
        I, J, K = np.indices((self.n,) * 3).reshape(3, -1)
        images = self.flat(*fn(I, J, K))
        return Permutation(tuple(images.tolist()))

    def surface_map(self, h: Permutation) -> np.ndarray:
        """m tel que (φ∘h) restreinte à la surface vaut φ_surface[m]"""
        if h.degree != self.size:
            raise ValueError(f"permutation of degree {h.degree} does not act on a lattice of {self.size} points")
        images = np.asarray(h.images, dtype=np.int64)
        m = self.position[images[self.surface_index]]
        if np.any(m < 0):
            raise ValueError("permutation does not preserve the surface of the cube")
        return m

    def embed(self, surface_values: np.ndarray) -> np.ndarray:
        """Vecteur sur toute la grille, nul à l'intérieur"""
        full = np.zeros(self.size)
        full[self.surface_index] = surface_values
        return full


@functools.lru_cache(maxsize=8)
def cube_lattice(n: int) -> CubeLattice:
    return CubeLattice(n)


def _quarter_turns(n: int) -> tuple[Callable, Callable, Callable]:
    r = lambda t: n - 1 - t
    return (
        lambda i, j, k: (i, r(k), j),   # axe x
        lambda i, j, k: (r(k), j, i),   # axe y
        lambda i, j, k: (r(j), i, k),   # axe z
    )


def build_cube_group_and_permutants(n: int) -> tuple[PermutationGroup, Permutant, Permutant, Permutant]:
    """Groupe des 24 rotations de la grille et les permutants H₁, H₂, H₃"""
    lattice = cube_lattice(n)
    r = lambda t: n - 1 - t
    turn_x, turn_y, _ = _quarter_turns(n)
    G = close([lattice.lattice_permutation(turn_x), lattice.lattice_permutation(turn_y)])

    face_planes = [
        lambda i, j, k: (r(i), j, k),
        lambda i, j, k: (i, r(j), k),
        lambda i, j, k: (i, j, r(k)),
    ]
    edge_planes = [
        lambda i, j, k: (j, i, k),
        lambda i, j, k: (r(j), r(i), k),
        lambda i, j, k: (k, j, i),
        lambda i, j, k: (r(k), j, r(i)),
        lambda i, j, k: (i, k, j),
        lambda i, j, k: (i, r(k), r(j)),
    ]
    central = [lambda i, j, k: (r(i), r(j), r(k))]

    H1, H2, H3 = (
        Permutant(frozenset(lattice.lattice_permutation(fn) for fn in maps))
        for maps in (face_planes, edge_planes, central)
    )
    logger.info(f"Groupe du cube sur la grille n={n}: ordre {G.order}, |H1|={len(H1)}, |H2|={len(H2)}, |H3|={len(H3)}")
    return G, H1, H2, H3


@dataclass(frozen=True, eq=False)
class CubeGeometry:
    lattice: CubeLattice
    group: PermutationGroup
    permutants: tuple[Permutant, Permutant, Permutant]
    quarter_turns: tuple[Permutation, Permutation, Permutation]
    turn_maps: tuple[np.ndarray, np.ndarray, np.ndarray]


@functools.lru_cache(maxsize=4)
def cube_geometry(n: int) -> CubeGeometry:
    lattice = cube_lattice(n)
    G, H1, H2, H3 = build_cube_group_and_permutants(n)
    turns = tuple(lattice.lattice_permutation(fn) for fn in _quarter_turns(n))
    # rotation d'une fonction : φ ↦ φ g⁻¹
    turn_maps = tuple(lattice.surface_map(g.inverse()) for g in turns)
    return CubeGeometry(lattice, G, (H1, H2, H3), turns, turn_maps)


def dot_centers(dot_count: int, n: int = config.DICE_SIDE) -> list[tuple[int, int]]:
    """Centres des points (indices 0-based) pour une face à dot_count points"""
    n1, n2, n3 = 6 - 1, (n + 1) // 2 - 1, n - 5 - 1
    corners = [(n1, n1), (n1, n3), (n3, n1), (n3, n3)]
    layouts = {
        1: [(n2, n2)],
        2: [(n1, n1), (n3, n3)],
        3: [(n1, n1), (n2, n2), (n3, n3)],
        4: corners,
        5: corners + [(n2, n2)],
        6: [(n1, n1), (n1, n2), (n1, n3), (n3, n1), (n3, n2), (n3, n3)],
    }
    if dot_count not in layouts:
        raise ValueError(f"invalid dot count {dot_count} (expected 1..6)")
    return layouts[dot_count]


def render_face(dot_count: int, k: Sequence[float], n: int = config.DICE_SIDE) -> np.ndarray:
    """Somme de taches gaussiennes tronquées (rayon de Tchebychev 3) pondérées par k"""
    centers = dot_centers(dot_count, n)
    if n < 21:
        raise ValueError(f"faces need n >= 21 so that dots fit (got {n})")
    if len(k) != dot_count:
        raise ValueError(f"expected {dot_count} coefficients, got {len(k)}")
    grid = np.zeros((n, n))
    for (a, b), coeff in zip(centers, k):
        grid[a - 3:a + 4, b - 3:b + 4] += coeff * DOT_STENCIL
    return grid


@dataclass(frozen=True, eq=False)
class DieSample:
    label: int
    surface_values: np.ndarray
    seed: int
    attempts: int = 1


def die_rng(seed: int) -> np.random.Generator:
    """Générateur PCG64 64 bits, un par dé"""
    return np.random.Generator(np.random.PCG64(seed))


def _standard_faces(rng: np.random.Generator) -> list[int]:
    faces = [0] * 6
    for pair, axis in zip(STANDARD_PAIRS, rng.permutation(3)):
        first, second = pair if rng.integers(2) == 0 else pair[::-1]
        faces[2 * axis], faces[2 * axis + 1] = first, second
    return faces


def _fake_faces(rng: np.random.Generator) -> tuple[list[int], int]:
    attempts = 0
    while True:
        attempts += 1
        faces = (rng.permutation(6) + 1).tolist()
        if all(faces[a] + faces[b] != 7 for a, b in OPPOSITE_PAIRS):
            return faces, attempts


def generate_die(label: int, seed: int, n: int = config.DICE_SIDE,
                 coeff_range: tuple[float, float] = config.DICE_COEFF_RANGE,
                 turns: Optional[int] = None, max_turns: int = config.DICE_MAX_TURNS) -> DieSample:
    """Génère un dé de la classe donnée (1 : faces opposées de somme 7, 2 : jamais 7)"""
    if label not in (1, 2):
        raise ValueError(f"label must be 1 or 2 (got {label})")
    lo, hi = coeff_range
    geometry = cube_geometry(n)
    lattice = geometry.lattice
    rng = die_rng(seed)

    if label == 1:
        faces, attempts = _standard_faces(rng), 1
    else:
        faces, attempts = _fake_faces(rng)

    values = np.zeros(lattice.surface_len)
    for f, dots in enumerate(faces):
        grid = render_face(dots, rng.uniform(lo, hi, size=dots), n)
        values[lattice.face_positions[f]] += grid

    p = int(rng.integers(1, max_turns + 1)) if turns is None else turns
    for _ in range(p):
        axis = int(rng.integers(3))
        values = values[geometry.turn_maps[axis]]

    values.flags.writeable = False
    return DieSample(label=label, surface_values=values, seed=seed, attempts=attempts)


def generate_dataset(count: int, seed: int, n: int = config.DICE_SIDE,
                     coeff_range: tuple[float, float] = config.DICE_COEFF_RANGE,
                     workers: Optional[int] = None) -> list[DieSample]:
    """Jeu de données alterné (indice pair : classe 1), graine du dé = seed XOR indice"""
    if count <= 0 or count % 2:
        raise ValueError(f"count must be a positive even number (got {count})")
    workers = config.THREADS if workers is None else max(1, workers)
    cube_geometry(n)

    def make(index: int) -> DieSample:
        return generate_die(1 if index % 2 == 0 else 2, (seed ^ index) & 0xFFFFFFFFFFFFFFFF, n, coeff_range)

    logger.info(f"Génération de {count} dés (n={n}, k ~ U({coeff_range}), {workers} workers)")
    if workers == 1:
        samples = [make(i) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(make, range(count)))

    fakes = [s.attempts for s in samples if s.label == 2]
    rate = len(fakes) / sum(fakes)
    logger.info(f"Taux d'acceptation du tirage des dés truqués: {rate:.3f}")
    if rate < 0.4:
        logger.warning(f"Taux d'acceptation anormalement bas: {rate:.3f}")
    return samples


def dataset_arrays(samples: Sequence[DieSample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([s.surface_values for s in samples]).astype(float)
    y = np.array([s.label for s in samples], dtype=int)
    return X, y


# Lecture des faces

def face_grids(surface_values: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(surface_values)[cube_lattice(n).face_positions]


def face_dot_counts(surface_values: np.ndarray, n: int = config.DICE_SIDE) -> tuple[int, ...]:
    """Nombre de points par face, compté comme maxima locaux stricts"""
    counts = []
    for grid in face_grids(surface_values, n):
        padded = np.pad(grid, 1, constant_values=-np.inf)
        peak = grid > 0
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                if da or db:
                    peak &= grid > padded[1 + da:1 + da + n, 1 + db:1 + db + n]
        counts.append(int(peak.sum()))
    return tuple(counts)


def opposite_sums(counts: Sequence[int]) -> tuple[int, int, int]:
    return tuple(counts[a] + counts[b] for a, b in OPPOSITE_PAIRS)


def is_standard_die(surface_values: np.ndarray, n: int = config.DICE_SIDE) -> bool:
    return all(s == 7 for s in opposite_sums(face_dot_counts(surface_values, n)))


def apply_rotation(surface_values: np.ndarray, g: Permutation, n: int = config.DICE_SIDE) -> np.ndarray:
    """φ∘g restreinte à la surface"""
    return np.asarray(surface_values)[cube_lattice(n).surface_map(g)]


# Opérateur GENEO sur la surface

@dataclass(frozen=True, eq=False)
class SurfaceOperator:
    """φ ↦ Σᵢ αᵢ/|Hᵢ| Σ_{h ∈ Hᵢ} φ h⁻¹ réalisé par des tables d'indices sur la surface"""
    permutant_maps: tuple[tuple[np.ndarray, ...], ...]
    alphas: tuple[float, ...]
    measure: SignedMeasure
    n: int

    @property
    def index_maps(self) -> tuple[np.ndarray, ...]:
        return tuple(m for maps in self.permutant_maps for m in maps)

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        out = np.zeros_like(values)
        for maps, alpha in zip(self.permutant_maps, self.alphas):
            # termes triés avant sommation : le résultat ne dépend pas de l'ordre des h dans Hᵢ,
            # donc F(φ∘g) = F(φ)∘g au bit près
            gathered = np.sort(np.stack([values[..., m] for m in maps]), axis=0)
            out += (alpha / len(maps)) * gathered.sum(axis=0)
        return out

    def apply_batch(self, data: np.ndarray, workers: Optional[int] = None) -> np.ndarray:
        """Application ligne par ligne, découpée en blocs pour les workers"""
        workers = config.THREADS if workers is None else max(1, workers)
        if workers == 1 or len(data) < 2 * workers:
            return self.apply(data)
        chunks = np.array_split(np.asarray(data, dtype=float), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.concatenate(list(pool.map(self.apply, chunks)))


def check_weights(weights: Sequence[float]) -> list[float]:
    alphas = [float(a) for a in weights]
    if len(alphas) != 3:
        raise InvalidWeights(f"expected three weights, got {len(alphas)}")
    if any(a < 0 for a in alphas):
        raise InvalidWeights(f"weights must be non-negative: {alphas}")
    if abs(sum(alphas) - 1.0) > 1e-9:
        raise InvalidWeights(f"weights must sum to 1 (sum = {sum(alphas)!r})")
    return alphas


def build_geneo(weights: Sequence[float] = config.GENEO_WEIGHTS, n: int = config.DICE_SIDE) -> SurfaceOperator:
    """Combinaison convexe α₁F₁ + α₂F₂ + α₃F₃ des opérateurs des trois permutants"""
    alphas = check_weights(weights)
    geometry = cube_geometry(n)
    lattice = geometry.lattice
    permutant_maps = tuple(
        tuple(lattice.surface_map(h.inverse()) for h in H)
        for H in geometry.permutants
    )
    measure = linear_combination(alphas, [uniform_measure(H.members) for H in geometry.permutants])
    return SurfaceOperator(permutant_maps=permutant_maps, alphas=tuple(alphas), measure=measure, n=n)


def check_permutants(n: int) -> bool:
    geometry = cube_geometry(n)
    return all(is_permutant(H, geometry.group) for H in geometry.permutants)


# Fichier binaire des jeux de données

def _record_dtype(surface_len: int) -> np.dtype:
    return np.dtype([('label', 'u1'), ('seed', '<u8'), ('values', '<f4', (surface_len,))])


def save_dataset(samples: Sequence[DieSample], path: str, n: int) -> None:
    surface_len = cube_lattice(n).surface_len
    records = np.zeros(len(samples), dtype=_record_dtype(surface_len))
    for idx, s in enumerate(samples):
        if len(s.surface_values) != surface_len:
            raise DatasetFormatError(f"sample {idx} has {len(s.surface_values)} values, expected {surface_len}")
        records[idx] = (s.label, s.seed, s.surface_values)
    header = np.array([FORMAT_VERSION, n, len(samples), surface_len], dtype='<u4')
    with open(path, 'wb') as f:
        f.write(MAGIC)
        f.write(header.tobytes())
        f.write(records.tobytes())
    logger.info(f"{len(samples)} dés écrits dans {path}")


def load_dataset(path: str) -> tuple[int, list[DieSample]]:
    with open(path, 'rb') as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 20:
        raise DatasetFormatError(f"{path}: truncated header")
    version, n, count, surface_len = np.frombuffer(blob, dtype='<u4', count=4, offset=4).tolist()
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    if surface_len != cube_lattice(n).surface_len:
        raise DatasetFormatError(f"{path}: surface length {surface_len} does not match n={n}")
    dtype = _record_dtype(surface_len)
    if len(blob) != 20 + count * dtype.itemsize:
        raise DatasetFormatError(f"{path}: expected {count} records")
    records = np.frombuffer(blob, dtype=dtype, count=count, offset=20)
    samples = []
    for rec in records:
        values = rec['values'].astype(float)
        values.flags.writeable = False
        samples.append(DieSample(label=int(rec['label']), surface_values=values, seed=int(rec['seed'])))
    logger.info(f"{count} dés chargés depuis {path} (n={n})")
    return n, samples
