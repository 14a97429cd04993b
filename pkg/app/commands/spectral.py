# app/commands/spectral.py
"""spectral subcommand."""
import logging

from app.commands.common import build_config
from app.models.dyadic import Command, DyadicParams
from app.services.image_service import ImageService
from app.services.spectral import spectral_report

logger = logging.getLogger("dyadic-fht.spectral")


def get_command(subparsers):
    """Factory function to create the spectral subcommand."""
    parser = subparsers.add_parser("spectral", help="Eigenvalues of A and the hypercube minimum")
    parser.add_argument("--p", type=int, required=True)
    parser.add_argument("--output", required=True)
    image_service = ImageService()

    def handle(args) -> int:
        config = build_config(command=Command.SPECTRAL, p=args.p, output_path=args.output)
        report = spectral_report(DyadicParams.of(config.p))
        image_service.write_spectral_csv(config.output_path, report)
        logger.info(f"Spectral p={config.p}: min symmetrized eigenvalue {report.min_sym_eig:.6f}, sharp={report.sharp}")
        return 0

    parser.set_defaults(handler=handle)
    return parser
