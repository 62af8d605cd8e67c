"""Shrinking targets for Veech group actions on square-tiled surfaces."""

from .origami import Origami, l_origami, parse_origami, torus, validate
from .sl2 import GeneratorSet, GroupElement, sl2z

__all__ = ["Origami", "GeneratorSet", "GroupElement", "l_origami", "parse_origami", "sl2z", "torus", "validate"]
