"""Compact neural text-to-speech inference engine."""

from ._core import (
    footprint,
    init_random,
    mu_law_decode,
    mu_law_encode,
    synth,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "footprint",
    "init_random",
    "mu_law_decode",
    "mu_law_encode",
    "synth",
    "tokenize",
]
