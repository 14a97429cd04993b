# app/commands/golden.py
"""golden subcommand: regenerate the stored oracle values."""
import json
import logging
from pathlib import Path

from app.commands.common import build_config
from app.core.config import settings
from app.models.dyadic import Command
from app.services.verify_service import compute_golden

logger = logging.getLogger("dyadic-fht.golden")


def get_command(subparsers):
    """Factory function to create the golden subcommand."""
    parser = subparsers.add_parser("golden", help="Compute the oracle values compared by verify --level full")
    parser.add_argument("--output", help="JSON path (defaults to DYADIC_GOLDEN_PATH)")

    def handle(args) -> int:
        config = build_config(command=Command.GOLDEN, output_path=args.output or settings.DYADIC_GOLDEN_PATH)
        values = compute_golden()
        path = Path(config.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(values, indent=2, sort_keys=True) + "\n")
        logger.info(f"Golden values written to {path}")
        return 0

    parser.set_defaults(handler=handle)
    return parser
