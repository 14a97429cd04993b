# app/commands/line.py
"""line subcommand: dyadic line values and deviations."""
import logging

from app.commands.common import build_config
from app.models.dyadic import Command, DyadicParams
from app.services.dyadic_core import deviation_num, dyadic_line
from app.services.image_service import ImageService

logger = logging.getLogger("dyadic-fht.line")


def get_command(subparsers):
    """Factory function to create the line subcommand."""
    parser = subparsers.add_parser("line", help="Print D(x, t) and E(x, t) for one slope")
    parser.add_argument("--p", type=int, required=True, help="Image exponent, n = 2^p")
    parser.add_argument("--t", type=int, required=True, help="Slope index in [0, n-1]")
    parser.add_argument("--x", type=int, help="Single column; all columns when omitted")
    image_service = ImageService()

    def handle(args) -> int:
        config = build_config(command=Command.LINE, p=args.p, t=args.t, x=args.x)
        params = DyadicParams.of(config.p)
        xs = [config.x] if config.x is not None else range(params.n)
        lines = [(dyadic_line(x, config.t, params), deviation_num(x, config.t, params)) for x in xs]
        image_service.write_line_csv("-", lines)
        return 0

    parser.set_defaults(handler=handle)
    return parser
