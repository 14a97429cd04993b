# app/commands/bench.py
"""bench subcommand."""
from app.commands.common import build_config
from app.models.dyadic import Command
from app.services.bench_service import BenchService


def get_command(subparsers):
    """Factory function to create the bench subcommand."""
    parser = subparsers.add_parser("bench", help="Time the quadrant transform at n/2 and n")
    parser.add_argument("--n", type=int, required=True)

    def handle(args) -> int:
        config = build_config(command=Command.BENCH, n=args.n)
        service = BenchService()
        print(service.render(service.run(config.n)))
        return 0

    parser.set_defaults(handler=handle)
    return parser
