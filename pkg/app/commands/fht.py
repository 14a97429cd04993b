# app/commands/fht.py
"""fht subcommand: line sums of a PGM image."""
import json
import logging
from pathlib import Path

from app.commands.common import build_config
from app.models.dyadic import Command, Quadrant
from app.services.fht_service import FLIP_CONVENTIONS, fht_full, fht_quadrant, orient
from app.services.image_service import ImageService

logger = logging.getLogger("dyadic-fht.fht")


def get_command(subparsers):
    """Factory function to create the fht subcommand."""
    parser = subparsers.add_parser("fht", help="Fast Hough transform of a PGM image")
    parser.add_argument("--input", required=True, help="P2 or P5 image")
    parser.add_argument("--quadrant", default="all", choices=["all", "0", "1", "2", "3"], help="Slope quadrant")
    parser.add_argument("--pad", action="store_true", help="Zero-pad to the next power-of-two square")
    parser.add_argument("--output", required=True, help="Accumulator CSV (quadrant,t,h,sum)")
    image_service = ImageService()

    def handle(args) -> int:
        config = build_config(command=Command.FHT, input_path=args.input, output_path=args.output,
                              quadrant=args.quadrant, pad=args.pad)
        img = image_service.read_pgm(config.input_path, pad=config.pad)
        if config.quadrant == "all":
            accumulators = list(fht_full(img).values())
        else:
            quadrant = Quadrant(config.quadrant)
            acc = fht_quadrant(orient(img, quadrant))
            accumulators = [acc.model_copy(update={"quadrant": quadrant, "flip": FLIP_CONVENTIONS[quadrant]})]
        image_service.write_accumulator_csv(accumulators, config.output_path)

        # Flip conventions travel next to the CSV.
        meta = {
            "n": img.n,
            "pixel_index": "pixels[y, x]; sums[t][h] = sum_x pixel(x, D(x, t) + h)",
            "quadrants": {a.quadrant.value: {"flip": a.flip, "additions": a.additions} for a in accumulators},
        }
        Path(f"{config.output_path}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        logger.info(f"FHT of {config.input_path} (n={img.n}) written to {config.output_path}")
        return 0

    parser.set_defaults(handler=handle)
    return parser
