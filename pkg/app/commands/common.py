# app/commands/common.py
"""Helpers shared by the subcommand factories."""
from typing import List

from pydantic import ValidationError

from app.core.errors import ArgumentError
from app.models.dyadic import RunConfig


def parse_p_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ArgumentError(f"expected comma-separated integers, got {text!r}") from e


def build_config(**fields) -> RunConfig:
    """Validate parsed arguments; pydantic errors surface as ArgumentError."""
    try:
        return RunConfig(**{k: v for k, v in fields.items() if v is not None})
    except ValidationError as e:
        raise ArgumentError(f"invalid arguments: {e.errors()[0]['loc']}: {e.errors()[0]['msg']}") from e
