# app/main.py
import argparse
import logging
import sys
from typing import List, Optional

from app.core.config import settings
from app.core.errors import DyadicError

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    stream=sys.stderr,
)
logger = logging.getLogger("dyadic-fht")

# Import commands after logging is configured
from app.commands import bench, clt, dev, fht, golden, line, spectral, verify


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadic-fht",
        description="Fast Hough transform on dyadic lines and the statistics of their deviation",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (fht, line, dev, spectral, clt, verify, bench, golden):
        command.get_command(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad flags, matching ArgumentError
        return int(e.code or 0)
    try:
        return args.handler(args)
    except DyadicError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
