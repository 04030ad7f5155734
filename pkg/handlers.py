import json
import logging
import os
import sys
from argparse import Namespace

import numpy as np

import config
from dice import check_weights, cube_lattice, generate_dataset, save_dataset
from errors import (
    DatasetFormatError,
    DegreeMismatch,
    DegreeTooLarge,
    GeneoError,
    GroupTooLarge,
    InvalidPermutation,
    InvalidWeights,
    MatrixFormatError,
)
from experiment import ExperimentConfig, run_experiment, run_table, search_weights, write_report
from measures import dim_pm, load_measure, save_measure
from operators import is_equivariant, is_nonexpansive, load_matrix, matrix_of_measure, operator_inf_norm
from permgroup import (
    is_k_weakly_versatile,
    is_transitive,
    load_group,
    min_nontrivial_permutant_size,
)
from representation import certify_geneo

logger = logging.getLogger(__name__)

COMMANDS = {
    'check': 'Vérifier équivariance et non-expansivité d\'une matrice (--matrix ou --measure, --group)',
    'decompose': 'Retrouver la mesure permutante d\'un GEO et son certificat (--out pour la mesure)',
    'dim-pm': 'Dimension de l\'espace des mesures permutantes d\'un groupe',
    'dice-generate': 'Générer un jeu de dés synthétiques au format binaire',
    'dice-run': 'Expérience de classification des dés (ACP + classifieur quadratique)',
    'dice-table': 'Précisions pour 1 à 4 composantes principales, avec et sans GENEO',
    'versatility': 'Faible versatilité d\'un groupe et plus petit permutant non trivial',
}

# erreurs d'entrée : code 2 ; échecs mathématiques : code 1
INPUT_ERRORS = (
    ValueError,
    OSError,
    DegreeMismatch,
    InvalidPermutation,
    InvalidWeights,
    MatrixFormatError,
    DatasetFormatError,
    GroupTooLarge,
    DegreeTooLarge,
)


def emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True))


def report_error(command: str, error: Exception) -> int:
    """Une seule ligne JSON sur stderr (le détail va au fichier de log), code de sortie selon le type d'erreur"""
    logger.error(f"Erreur dans {command}: {error}", extra={"file_only": True})
    if isinstance(error, GeneoError):
        payload = error.to_dict()
    else:
        payload = {"error": type(error).__name__, "message": str(error)}
    print(json.dumps(payload), file=sys.stderr)
    return 2 if isinstance(error, INPUT_ERRORS) else 1


def _tol(args: Namespace) -> float:
    tol = config.CERTIFY_TOL if args.tol is None else args.tol
    if tol < 0:
        raise ValueError(f"--tol must be non-negative (got {tol})")
    return tol


def _load_operator(args: Namespace, degree: int):
    if bool(args.matrix) == bool(args.measure):
        raise ValueError("exactly one of --matrix and --measure is required")
    if args.matrix:
        B = load_matrix(args.matrix)
    else:
        B = matrix_of_measure(load_measure(args.measure, degree))
    if B.degree != degree:
        raise DegreeMismatch(B.degree, degree)
    return B


def _check_paths(args: Namespace) -> None:
    """Chemins vérifiés avant tout calcul"""
    if args.dataset and not os.path.isfile(args.dataset):
        raise FileNotFoundError(f"dataset file not found: {args.dataset}")
    for flag, path in (('--out', args.out), ('--emit-pca', args.emit_pca)):
        if path and not os.path.isdir(os.path.dirname(os.path.abspath(path))):
            raise FileNotFoundError(f"{flag}: directory does not exist for {path}")


def _experiment_config(args: Namespace) -> ExperimentConfig:
    _check_paths(args)
    if args.n < 21:
        raise ValueError(f"--n must be at least 21 so that dots fit on a face (got {args.n})")
    if args.count <= 0 or args.count % 2:
        raise ValueError(f"--count must be a positive even number (got {args.count})")
    if not 1 <= args.pcs <= 4:
        raise ValueError(f"--pcs must be in 1..4 (got {args.pcs})")
    lo, hi = args.coeff_range
    if not 0.0 <= lo <= hi:
        raise ValueError(f"--coeff-range needs 0 <= lo <= hi (got {lo}, {hi})")
    return ExperimentConfig(
        n=args.n,
        count=args.count,
        seed=args.seed,
        pcs=args.pcs,
        use_geneo=not args.no_geneo,
        weights=tuple(check_weights(args.weights)),
        coeff_range=(lo, hi),
        dataset_path=args.dataset,
        projections_path=args.emit_pca,
        workers=args.threads,
    )


def check_command(args: Namespace) -> int:
    """Sortie : { equivariant, witness?, nonexpansive, inf_norm, transitive } ; code 0 ssi équivariant"""
    try:
        tol = _tol(args)
        G = load_group(args.group)
        B = _load_operator(args, G.degree)
        logger.info(f"Commande check: matrice {B.degree}×{B.degree}, groupe d'ordre {G.order}")

        report = is_equivariant(B, G, tol)
        result = {
            "equivariant": report.equivariant,
            "nonexpansive": is_nonexpansive(B, tol),
            "inf_norm": operator_inf_norm(B),
            "transitive": is_transitive(G),
        }
        if not report:
            result["witness"] = report.witness.cycle_string()
            result["entry"] = [report.row, report.col]
            result["deviation"] = report.deviation
        emit(result)
        return 0 if report.equivariant else 1
    except Exception as e:
        return report_error('check_command', e)


def decompose_command(args: Namespace) -> int:
    try:
        tol = _tol(args)
        G = load_group(args.group)
        B = _load_operator(args, G.degree)
        certificate = certify_geneo(B, G, tol)
        if args.out:
            save_measure(certificate.representation.measure, args.out)
            logger.info(f"Mesure écrite dans {args.out}")
        payload = certificate.to_dict()
        if not args.out:
            payload["measure"] = certificate.representation.measure.to_list()
        emit(payload)
        return 0
    except Exception as e:
        return report_error('decompose_command', e)


def dim_pm_command(args: Namespace) -> int:
    try:
        G = load_group(args.group)
        print(dim_pm(G))
        return 0
    except Exception as e:
        return report_error('dim_pm_command', e)


def versatility_command(args: Namespace) -> int:
    try:
        G = load_group(args.group)
        n = G.degree
        table = {str(k): is_k_weakly_versatile(G, k) for k in range(1, max(n, 2))}
        result = {
            "degree": n,
            "order": G.order,
            "transitive": is_transitive(G),
            "weakly_versatile": table,
        }
        if n <= config.MAX_ENUMERATION_DEGREE:
            result["min_nontrivial_permutant_size"] = min_nontrivial_permutant_size(G)
        emit(result)
        return 0
    except Exception as e:
        return report_error('versatility_command', e)


def dice_generate_command(args: Namespace) -> int:
    try:
        cfg = _experiment_config(args)
        if not args.out:
            raise ValueError("--out is required for dice-generate")
        samples = generate_dataset(cfg.count, cfg.seed, cfg.n, cfg.coeff_range, cfg.workers)
        save_dataset(samples, args.out, cfg.n)
        emit({
            "path": args.out,
            "n": cfg.n,
            "count": len(samples),
            "surface_len": cube_lattice(cfg.n).surface_len,
            "per_class": {str(label): sum(1 for s in samples if s.label == label) for label in (1, 2)},
        })
        return 0
    except Exception as e:
        return report_error('dice_generate_command', e)


def _write_or_emit(payload, out) -> None:
    if out:
        write_report(payload, out)
        logger.info(f"Rapport écrit dans {out}")
    emit(payload)


def dice_run_command(args: Namespace) -> int:
    try:
        cfg = _experiment_config(args)
        if args.search_weights:
            payload = search_weights(cfg, trials=args.search_weights, seed=cfg.seed)
        else:
            payload = run_experiment(cfg)
        _write_or_emit(payload, args.out)
        return 0
    except Exception as e:
        return report_error('dice_run_command', e)


def dice_table_command(args: Namespace) -> int:
    try:
        cfg = _experiment_config(args)
        rows = run_table(cfg)
        _write_or_emit({"config": cfg.echo(), "rows": rows}, args.out)
        return 0
    except Exception as e:
        return report_error('dice_table_command', e)


def parse_floats(text: str, count: int) -> list[float]:
    """« a,b,c » → [a, b, c]"""
    parts = [p for p in text.split(',') if p.strip()]
    if len(parts) != count:
        raise ValueError(f"expected {count} comma-separated numbers, got {text!r}")
    values = [float(p) for p in parts]
    if not all(np.isfinite(values)):
        raise ValueError(f"values must be finite: {text!r}")
    return values
