import json
import logging
import itertools
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

import config
from dice import DieSample, build_geneo, dataset_arrays, generate_dataset, load_dataset
from errors import DegenerateTrainingSet, PcaConvergenceError

logger = logging.getLogger(__name__)

LABELS = (1, 2)
MAX_COMPONENTS = 4


# ACP

@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray           # k × d, lignes orthonormées
    explained_variance: np.ndarray
    iterations: int

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def project(self, data: np.ndarray, k: Optional[int] = None) -> np.ndarray:
        k = self.k if k is None else k
        return (np.asarray(data, dtype=float) - self.mean) @ self.components[:k].T


def _covariance(data: np.ndarray, mean: np.ndarray) -> np.ndarray:
    centered = data - mean
    return (centered.T @ centered) / max(data.shape[0] - 1, 1)


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Orientation fixe : la plus grande coordonnée (en module) est positive"""
    pivots = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(len(vectors)), pivots])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def pca_fit(data: np.ndarray, k: int, tol: Optional[float] = None,
            max_iter: Optional[int] = None) -> PcaModel:
    """k premières composantes par itération orthogonale par blocs sur la covariance,
    avec extraction de Rayleigh-Ritz à chaque pas (pas de déflation).

    Le bloc itéré compte quelques vecteurs de plus que k ; à chaque pas les
    vecteurs de Ritz du bloc sont comparés à ceux du pas précédent, au signe près.
    """
    tol = config.PCA_TOL if tol is None else tol
    max_iter = config.PCA_MAX_ITER if max_iter is None else max_iter
    data = np.asarray(data, dtype=float)
    samples, d = data.shape
    if not 1 <= k <= MAX_COMPONENTS:
        raise ValueError(f"number of components must be in 1..{MAX_COMPONENTS} (got {k})")
    if samples < k or d < k:
        raise ValueError(f"need at least {k} samples and features, got {data.shape}")

    mean = data.mean(axis=0)
    C = _covariance(data, mean)
    block = min(k + 4, d)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((d, block)))
    previous = None

    for iteration in range(1, max_iter + 1):
        Q, _ = np.linalg.qr(C @ Q)
        ritz_values, ritz_vectors = np.linalg.eigh(Q.T @ C @ Q)
        order = np.argsort(ritz_values)[::-1]
        Q = Q @ ritz_vectors[:, order]
        current = _canonical_signs(Q[:, :k].T)
        if previous is not None and np.max(np.linalg.norm(current - previous, axis=1)) < tol:
            variances = np.clip(ritz_values[order][:k], 0.0, None)
            logger.info(f"ACP: {k} composantes en {iteration} itérations, variances {np.round(variances, 6).tolist()}")
            current.flags.writeable = False
            return PcaModel(mean=mean, components=current, explained_variance=variances, iterations=iteration)
        previous = current

    if previous is None:
        raise PcaConvergenceError(1, max_iter)
    changes = np.linalg.norm(_canonical_signs(Q[:, :k].T) - previous, axis=1)
    raise PcaConvergenceError(int(np.argmax(changes)) + 1, max_iter)


# Classifieur quadratique

def quadratic_features(Z: np.ndarray) -> np.ndarray:
    """Tous les monômes de degré 1 et 2 des composantes"""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    pairs = list(itertools.combinations_with_replacement(range(Z.shape[1]), 2))
    squares = [Z[:, i] * Z[:, j] for i, j in pairs]
    return np.column_stack([Z] + squares)


@dataclass(frozen=True, eq=False)
class QuadraticClassifier:
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    weights: np.ndarray               # dernier coefficient : biais

    def _design(self, Z: np.ndarray) -> np.ndarray:
        F = (quadratic_features(Z) - self.feature_mean) / self.feature_scale
        return np.column_stack([F, np.ones(len(F))])

    def decision_function(self, Z: np.ndarray) -> np.ndarray:
        return self._design(Z) @ self.weights

    def predict(self, Z: np.ndarray) -> np.ndarray:
        return np.where(self.decision_function(Z) >= 0, LABELS[0], LABELS[1])


def train_classifier(features: np.ndarray, labels: np.ndarray, lam: Optional[float] = None,
                     epochs: Optional[int] = None, seed: int = config.SVM_SHUFFLE_SEED) -> QuadraticClassifier:
    """Perte charnière régularisée L2, sous-gradient stochastique par époques (Pegasos).

    Le modèle renvoyé est la moyenne des itérés de la dernière époque.
    """
    lam = config.SVM_LAMBDA if lam is None else lam
    epochs = config.SVM_EPOCHS if epochs is None else epochs
    Z = np.asarray(features, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    labels = np.asarray(labels)
    if Z.shape[1] > MAX_COMPONENTS:
        raise ValueError(f"at most {MAX_COMPONENTS} features are supported (got {Z.shape[1]})")
    present = set(np.unique(labels).tolist())
    if not present <= set(LABELS):
        raise ValueError(f"labels must be in {LABELS} (got {sorted(present)})")
    if len(present) < 2:
        raise DegenerateTrainingSet(f"training set contains a single class: {sorted(present)}")

    raw = quadratic_features(Z)
    mean = raw.mean(axis=0)
    scale = raw.std(axis=0)
    scale[scale == 0] = 1.0
    X = np.column_stack([(raw - mean) / scale, np.ones(len(raw))])
    y = np.where(labels == LABELS[0], 1.0, -1.0)

    rng = np.random.default_rng(seed)
    radius = 1.0 / np.sqrt(lam)
    w = np.zeros(X.shape[1])
    t = 0
    for epoch in range(epochs):
        average = np.zeros_like(w)
        for i in rng.permutation(len(X)):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (X[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y[i] * X[i]
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            average += w
        logger.debug(f"Époque {epoch + 1}/{epochs}: ‖w‖ = {np.linalg.norm(w):.4g}")
    weights = average / len(X)
    return QuadraticClassifier(feature_mean=mean, feature_scale=scale, weights=weights)


def predict(classifier: QuadraticClassifier, features: np.ndarray) -> np.ndarray:
    return classifier.predict(features)


# Évaluation

def stratified_split(labels: np.ndarray, train_fraction: float = config.TRAIN_FRACTION,
                     seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Découpage train/test qui conserve la proportion de chaque classe"""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must be in (0, 1) (got {train_fraction})")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == label))
        cut = int(round(train_fraction * len(idx)))
        train.append(idx[:cut])
        test.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, labels: Sequence[int] = LABELS) -> np.ndarray:
    """Lignes : classe réelle, colonnes : classe prédite"""
    index = {label: i for i, label in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=int)
    for t, p in zip(np.asarray(y_true).tolist(), np.asarray(y_pred).tolist()):
        cm[index[t], index[p]] += 1
    return cm


def accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true)
    if len(y_true) == 0:
        raise ValueError("accuracy of an empty prediction set")
    return float(np.mean(y_true == np.asarray(y_pred)))


# Expérience des dés

@dataclass
class ExperimentConfig:
    n: int = config.DICE_SIDE
    count: int = config.DICE_COUNT
    seed: int = 0
    pcs: int = 2
    use_geneo: bool = True
    weights: tuple[float, float, float] = config.GENEO_WEIGHTS
    coeff_range: tuple[float, float] = config.DICE_COEFF_RANGE
    train_fraction: float = config.TRAIN_FRACTION
    dataset_path: Optional[str] = None
    projections_path: Optional[str] = None
    workers: Optional[int] = None

    def echo(self) -> dict:
        data = asdict(self)
        data.pop('workers')
        data.pop('projections_path')
        data['weights'] = list(self.weights)
        data['coeff_range'] = list(self.coeff_range)
        return data


@dataclass
class PreparedData:
    features: np.ndarray
    labels: np.ndarray
    n: int


def load_or_generate(cfg: ExperimentConfig) -> tuple[int, list[DieSample]]:
    if cfg.dataset_path:
        n, samples = load_dataset(cfg.dataset_path)
        return n, samples
    return cfg.n, generate_dataset(cfg.count, cfg.seed, cfg.n, cfg.coeff_range, cfg.workers)


def prepare_features(samples: Sequence[DieSample], n: int, use_geneo: bool,
                     weights: Sequence[float] = config.GENEO_WEIGHTS,
                     workers: Optional[int] = None) -> PreparedData:
    X, y = dataset_arrays(samples)
    if use_geneo:
        operator = build_geneo(weights, n)
        X = operator.apply_batch(X, workers)
        logger.info(f"GENEO appliqué à {len(X)} dés (poids {tuple(weights)})")
    return PreparedData(features=X, labels=y, n=n)


def evaluate(projected: np.ndarray, labels: np.ndarray, train_idx: np.ndarray,
             test_idx: np.ndarray) -> dict:
    classifier = train_classifier(projected[train_idx], labels[train_idx])
    result = {}
    for name, idx in (('train', train_idx), ('test', test_idx)):
        predicted = classifier.predict(projected[idx])
        result[name] = {
            "confusion_matrix": confusion_matrix(labels[idx], predicted).tolist(),
            "accuracy": accuracy(labels[idx], predicted),
        }
    return result


def run_experiment(cfg: ExperimentConfig, samples: Optional[Sequence[DieSample]] = None) -> dict:
    """Génération (ou lecture), GENEO optionnel, ACP sur tout le jeu, découpage 70/30, classification"""
    if samples is None:
        n, samples = load_or_generate(cfg)
    else:
        n = cfg.n
    prepared = prepare_features(samples, n, cfg.use_geneo, cfg.weights, cfg.workers)
    model = pca_fit(prepared.features, cfg.pcs)
    projected = model.project(prepared.features)
    train_idx, test_idx = stratified_split(prepared.labels, cfg.train_fraction, cfg.seed)
    scores = evaluate(projected, prepared.labels, train_idx, test_idx)

    if cfg.projections_path:
        write_projections(projected, prepared.labels, cfg.projections_path)

    report = {
        "config": cfg.echo(),
        "explained_variance": model.explained_variance.tolist(),
        "train_size": int(len(train_idx)),
        "test_size": int(len(test_idx)),
        **scores,
    }
    logger.info(
        f"Expérience ({'avec' if cfg.use_geneo else 'sans'} GENEO, {cfg.pcs} CP): "
        f"précision train {scores['train']['accuracy']:.3f}, test {scores['test']['accuracy']:.3f}"
    )
    return report


def run_table(cfg: ExperimentConfig, pcs_values: Sequence[int] = (1, 2, 3, 4),
              samples: Optional[Sequence[DieSample]] = None) -> list[dict]:
    """Lignes « quadratique » du tableau de résultats : nombre de CP × avec/sans GENEO"""
    if samples is None:
        n, samples = load_or_generate(cfg)
    else:
        n = cfg.n
    k_max = max(pcs_values)
    rows = []
    for use_geneo in (True, False):
        prepared = prepare_features(samples, n, use_geneo, cfg.weights, cfg.workers)
        model = pca_fit(prepared.features, k_max)
        train_idx, test_idx = stratified_split(prepared.labels, cfg.train_fraction, cfg.seed)
        for k in pcs_values:
            scores = evaluate(model.project(prepared.features, k), prepared.labels, train_idx, test_idx)
            rows.append({
                "coeff_range": list(cfg.coeff_range),
                "pcs": k,
                "geneo": use_geneo,
                "train_accuracy": scores['train']['accuracy'],
                "test_accuracy": scores['test']['accuracy'],
            })
            logger.info(f"Tableau: {k} CP, GENEO={use_geneo}, test {scores['test']['accuracy']:.3f}")
    return rows


def search_weights(cfg: ExperimentConfig, trials: int = 20, seed: int = 0,
                   samples: Optional[Sequence[DieSample]] = None) -> dict:
    """Tirages Dirichlet(1, 1, 1) des poids convexes ; la meilleure précision de test l'emporte"""
    if trials < 1:
        raise ValueError(f"trials must be positive (got {trials})")
    if samples is None:
        n, samples = load_or_generate(cfg)
    else:
        n = cfg.n
    rng = np.random.default_rng(seed)
    results = []
    for trial in range(trials):
        alphas = rng.dirichlet((1.0, 1.0, 1.0))
        alphas[-1] = 1.0 - alphas[:-1].sum()
        prepared = prepare_features(samples, n, True, alphas, cfg.workers)
        model = pca_fit(prepared.features, cfg.pcs)
        train_idx, test_idx = stratified_split(prepared.labels, cfg.train_fraction, cfg.seed)
        scores = evaluate(model.project(prepared.features), prepared.labels, train_idx, test_idx)
        results.append({"weights": alphas.tolist(), "test_accuracy": scores['test']['accuracy']})
        logger.debug(f"Essai {trial + 1}/{trials}: poids {np.round(alphas, 3).tolist()}, test {scores['test']['accuracy']:.3f}")
    best = max(results, key=lambda r: r['test_accuracy'])
    logger.info(f"Meilleurs poids {np.round(best['weights'], 3).tolist()}: test {best['test_accuracy']:.3f}")
    return {"best": best, "trials": results}


# Sorties

def write_report(report, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write('\n')


def write_projections(projected: np.ndarray, labels: np.ndarray, path: str) -> None:
    """CSV « pc1,...,pck,label » pour le tracé externe"""
    projected = np.asarray(projected, dtype=float)
    if projected.ndim == 1:
        projected = projected[:, None]
    header = ','.join([f"pc{i + 1}" for i in range(projected.shape[1])] + ['label'])
    table = np.column_stack([projected, np.asarray(labels, dtype=float)])
    fmt = ['%.17g'] * projected.shape[1] + ['%d']
    np.savetxt(path, table, delimiter=',', header=header, comments='', fmt=fmt)
