import argparse
import json
import logging
import sys
from typing import Optional, Sequence

import config
from handlers import (
    COMMANDS,
    check_command,
    decompose_command,
    dice_generate_command,
    dice_run_command,
    dice_table_command,
    dim_pm_command,
    parse_floats,
    versatility_command,
)

logger = logging.getLogger(__name__)


class JsonArgumentParser(argparse.ArgumentParser):
    """Les erreurs d'usage sortent en une ligne JSON sur stderr (code 2)"""

    def error(self, message):
        print(json.dumps({"error": "UsageError", "message": f"{self.prog}: {message}"}), file=sys.stderr)
        self.exit(2)


def _weights(text: str) -> list[float]:
    try:
        return parse_floats(text, 3)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _coeff_range(text: str) -> list[float]:
    try:
        return parse_floats(text, 2)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_group(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--group', required=True,
                        help="fichier JSON du groupe ou groupe nommé (S4, A4, C4, D4, V4, F5, I3)")


def _add_operator(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--matrix', help="matrice n×n en CSV")
    parser.add_argument('--measure', help="mesure signée en JSON, à la place de --matrix")
    parser.add_argument('--tol', type=float, default=None, help=f"tolérance (défaut {config.CERTIFY_TOL})")


def _add_dice(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--n', type=int, default=config.DICE_SIDE, help="côté de la grille")
    parser.add_argument('--count', type=int, default=config.DICE_COUNT, help="nombre de dés (pair)")
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--pcs', type=int, default=2, help="nombre de composantes principales (1..4)")
    parser.add_argument('--weights', type=_weights, default=list(config.GENEO_WEIGHTS),
                        help="poids convexes a,b,c des trois permutants")
    parser.add_argument('--coeff-range', type=_coeff_range, default=list(config.DICE_COEFF_RANGE),
                        help="intervalle lo,hi des coefficients des points")
    parser.add_argument('--no-geneo', action='store_true', help="classer les données brutes")
    parser.add_argument('--dataset', help="jeu de dés existant (format binaire) au lieu d'une génération")
    parser.add_argument('--emit-pca', help="CSV des projections pc1,...,label")
    parser.add_argument('--threads', type=int, default=None, help="workers (défaut GENEO_THREADS)")
    parser.add_argument('--out', help="fichier de sortie")


def setup_handlers(subparsers) -> None:
    """Enregistre les sous-commandes et leurs handlers"""
    handlers = [
        ('check', check_command, [_add_group, _add_operator]),
        ('decompose', decompose_command, [_add_group, _add_operator]),
        ('dim-pm', dim_pm_command, [_add_group]),
        ('versatility', versatility_command, [_add_group]),
        ('dice-generate', dice_generate_command, [_add_dice]),
        ('dice-run', dice_run_command, [_add_dice]),
        ('dice-table', dice_table_command, [_add_dice]),
    ]

    for command, handler, options in handlers:
        parser = subparsers.add_parser(command, help=COMMANDS[command], description=COMMANDS[command])
        for add in options:
            add(parser)
        if command == 'decompose':
            parser.add_argument('--out', help="fichier JSON de la mesure")
        if command == 'dice-run':
            parser.add_argument('--search-weights', type=int, default=0, metavar='TRIALS',
                                help="tirages Dirichlet des poids, la meilleure précision l'emporte")
        parser.set_defaults(handler=handler)
        logger.debug(f"Handler ajouté pour la commande {command}")


def build_parser() -> argparse.ArgumentParser:
    parser = JsonArgumentParser(prog='geneo', description="Opérateurs équivariants et mesures permutantes")
    parser.add_argument('--log-level', default=None, help=f"niveau de journalisation (défaut {config.LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest='command', required=True)
    setup_handlers(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config.setup_logging(args.log_level)
    logger.info(f"Commande {args.command}")
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
