# app/commands/verify.py
"""verify subcommand: the acceptance suite."""
import logging

from app.commands.common import build_config
from app.models.dyadic import Command
from app.services.verify_service import VerificationService

logger = logging.getLogger("dyadic-fht.verify")


def get_command(subparsers):
    """Factory function to create the verify subcommand."""
    parser = subparsers.add_parser("verify", help="Run every numerical check")
    parser.add_argument("--level", default="quick", choices=["quick", "full"])
    parser.add_argument("--json", action="store_true", help="Print the JSON summary only")

    def handle(args) -> int:
        config = build_config(command=Command.VERIFY, level=args.level, json_output=args.json)
        service = VerificationService(config.level)
        summary = service.run()
        if config.json_output:
            print(service.render_json(summary))
        else:
            print(service.render_table(summary))
        return 0 if summary.passed else 1

    parser.set_defaults(handler=handle)
    return parser
