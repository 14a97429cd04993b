# app/commands/clt.py
"""clt subcommand: characteristic functions against the Gaussian limit."""
import logging

from app.commands.common import build_config, parse_p_list
from app.models.dyadic import Command
from app.services.ergodic import clt_report, sup_errors_non_increasing
from app.services.image_service import ImageService

logger = logging.getLogger("dyadic-fht.clt")


def get_command(subparsers):
    """Factory function to create the clt subcommand."""
    parser = subparsers.add_parser("clt", help="psi_p(xi) against exp(-xi^2/96)")
    parser.add_argument("--p", type=parse_p_list, required=True, help="Comma-separated exponents")
    parser.add_argument("--xi-max", type=float, required=True)
    parser.add_argument("--xi-steps", type=int, required=True)
    parser.add_argument("--grid", type=int, help="Grid size for the transfer-operator column")
    parser.add_argument("--output", required=True)
    parser.add_argument("--strict", action="store_true",
                        help="Exit 1 when the sup error does not shrink as p grows")
    image_service = ImageService()

    def handle(args) -> int:
        config = build_config(command=Command.CLT, p_list=args.p, xi_max=args.xi_max, xi_steps=args.xi_steps,
                              grid=args.grid, output_path=args.output)
        xis = [config.xi_max * k / config.xi_steps for k in range(config.xi_steps + 1)]
        reports = clt_report(config.p_list, xi_grid=xis, grid=config.grid)
        image_service.write_charfn_csv(config.output_path, reports)
        for r in reports:
            print(f"p={r.p} sup|psi - gauss|={r.sup_error_exact_vs_gauss:.6e}")
        if args.strict and not sup_errors_non_increasing(reports):
            logger.error("sup error grows with p")
            return 1
        return 0

    parser.set_defaults(handler=handle)
    return parser
