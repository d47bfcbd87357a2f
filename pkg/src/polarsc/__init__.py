"""Polar-code toolkit: construction, shortcut SC decoding, adaptive LLR
quantization, link-level simulation, and a hardware cost model."""

__version__ = "0.1.0"

from .construction import (PolarCode, build_shortcut_tree, census,
                           construct_frozen_set)
from .fixedpoint import AqProfile, QLlr, optimize_aq, quantize
from .codec import (polar_transform, sc_decode_reference, sc_decode_shortcut,
                    systematic_encode, wagner_decode)

__all__ = [
    "PolarCode", "build_shortcut_tree", "census", "construct_frozen_set",
    "AqProfile", "QLlr", "optimize_aq", "quantize",
    "polar_transform", "sc_decode_reference", "sc_decode_shortcut",
    "systematic_encode", "wagner_decode",
]
