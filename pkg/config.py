import os
import sys
import logging
from dotenv import load_dotenv
import psutil

# Chargement des variables d'environnement
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _env_float(name: str, default: float) -> float:
    """Lit un réel positif ou nul depuis l'environnement"""
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{name} doit être un nombre réel (reçu: {raw!r})")
    if value < 0:
        raise ValueError(f"{name} doit être positif ou nul (reçu: {value})")
    return value


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    """Lit un entier borné inférieurement depuis l'environnement"""
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} doit être un entier (reçu: {raw!r})")
    if value < minimum:
        raise ValueError(f"{name} doit être supérieur ou égal à {minimum} (reçu: {value})")
    return value


def _default_threads() -> int:
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, int(cores))


# Journalisation
LOG_LEVEL = os.getenv('GENEO_LOG_LEVEL', 'WARNING').upper()
LOG_FILE = os.getenv('GENEO_LOG_FILE')

# Parallélisme (génération des dés, application des opérateurs)
THREADS = _env_int('GENEO_THREADS', _default_threads())

# Groupes de permutations
GROUP_ELEMENT_CAP = _env_int('GENEO_GROUP_CAP', 10**6)
MAX_ENUMERATION_DEGREE = 7

# Tolérances numériques
ZERO_TOL = _env_float('GENEO_ZERO_TOL', 1e-12)
CERTIFY_TOL = _env_float('GENEO_TOL', 1e-9)
BVN_TOL = _env_float('GENEO_BVN_TOL', 1e-9)
RECONSTRUCTION_TOL = _env_float('GENEO_RECON_TOL', 1e-8)
NORM_IDENTITY_TOL = _env_float('GENEO_NORM_TOL', 1e-8)

# Expérience des dés
DICE_SIDE = 25
DICE_COUNT = 10000
DICE_COEFF_RANGE = (0.6, 1.0)
DICE_MAX_TURNS = 5
GENEO_WEIGHTS = (0.318, 0.551, 0.131)
TRAIN_FRACTION = 0.7
PCA_TOL = _env_float('GENEO_PCA_TOL', 1e-7)
PCA_MAX_ITER = _env_int('GENEO_PCA_MAX_ITER', 1000)
SVM_LAMBDA = _env_float('GENEO_SVM_LAMBDA', 1e-4)
SVM_EPOCHS = _env_int('GENEO_SVM_EPOCHS', 50)
SVM_SHUFFLE_SEED = 0


class ConsoleFilter(logging.Filter):
    """Écarte de la console les enregistrements marqués file_only (la ligne d'erreur JSON y suffit)"""

    def filter(self, record: logging.LogRecord) -> bool:
        return not getattr(record, 'file_only', False)


def setup_logging(level: str | None = None, stream=None) -> None:
    """Configure le logging (console + fichier optionnel)"""
    console = logging.StreamHandler(stream or sys.stderr)
    console.addFilter(ConsoleFilter())
    handlers: list[logging.Handler] = [console]
    if LOG_FILE:
        handlers.append(logging.FileHandler(LOG_FILE))

    logging.basicConfig(
        format=LOG_FORMAT,
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.WARNING),
        handlers=handlers,
        force=True
    )
