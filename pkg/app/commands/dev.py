# app/commands/dev.py
"""dev subcommands: statistics of the deviation E(x, t)."""
import logging
from fractions import Fraction

from app.commands.common import build_config, parse_p_list
from app.core.config import settings
from app.models.dyadic import Command, DyadicParams, SamplingMode
from app.services import deviation_stats
from app.services.image_service import ImageService

logger = logging.getLogger("dyadic-fht.dev")


def _mode(params: DyadicParams, samples, seed) -> SamplingMode:
    if samples is None:
        return deviation_stats.default_mode(params)
    return SamplingMode.sampled(samples, settings.DYADIC_SEED if seed is None else seed)


def get_command(subparsers):
    """Factory function to create the dev command group."""
    parser = subparsers.add_parser("dev", help="Deviation statistics")
    dev = parser.add_subparsers(dest="dev_command", required=True)
    image_service = ImageService()

    stats = dev.add_parser("stats", help="Extrema, moments and tail of E")
    stats.add_argument("--p", type=int, required=True)
    stats.add_argument("--samples", type=int, help="Sample count; exhaustive when omitted and p <= 12")
    stats.add_argument("--seed", type=int, help="Seed for sampled mode")
    stats.add_argument("--output", default="-", help="CSV path, - for standard output")

    def handle_stats(args) -> int:
        config = build_config(command=Command.DEV_STATS, p=args.p, sample_count=args.samples, seed=args.seed,
                              output_path=args.output)
        params = DyadicParams.of(config.p)
        mode = _mode(params, config.sample_count, config.seed)
        extrema = None
        if params.p <= deviation_stats.EXTREMA_MAX_P:
            extrema = deviation_stats.exhaustive_extrema(params)
        else:
            logger.info(f"p={params.p}: extrema skipped above p={deviation_stats.EXTREMA_MAX_P}")
        report = deviation_stats.moments(params)
        tail = deviation_stats.tail_fraction(params, Fraction(1), mode)
        image_service.write_stats_csv(config.output_path, extrema, report, tail)
        return 0

    stats.set_defaults(handler=handle_stats)

    hist = dev.add_parser("hist", help="Histogram of E over [-p/6, p/6]")
    hist.add_argument("--p", type=int, required=True)
    hist.add_argument("--bins", type=int, required=True)
    hist.add_argument("--output", required=True)

    def handle_hist(args) -> int:
        config = build_config(command=Command.DEV_HIST, p=args.p, bins=args.bins, output_path=args.output)
        params = DyadicParams.of(config.p)
        bins = deviation_stats.histogram(params, config.bins)
        image_service.write_histogram_csv(config.output_path, bins)
        logger.info(f"Histogram p={params.p} with {config.bins} bins written to {config.output_path}")
        return 0

    hist.set_defaults(handler=handle_hist)

    ks = dev.add_parser("ks", help="Kolmogorov-Smirnov distance to the normal law")
    ks.add_argument("--p", type=parse_p_list, required=True, help="Comma-separated exponents")
    ks.add_argument("--output", default="-")

    def handle_ks(args) -> int:
        config = build_config(command=Command.DEV_KS, p_list=args.p, output_path=args.output)
        reports = [deviation_stats.ks_distance(DyadicParams.of(p)) for p in config.p_list]
        image_service.write_ks_csv(config.output_path, reports)
        return 0

    ks.set_defaults(handler=handle_ks)
    return parser
