"""Norms of real interpolation spaces with slowly varying weights, and checks of their equivalences."""

from .errors import InterpNormError
from .kcalc import KProfile, default_corpus, k_functional, parse_function
from .norms import RISpaceSpec
from .spaces import SpaceSpec, grand_small_norms, norm, parse_space_string
from .svfun import make_broken_log, parse_weight

__version__ = "0.1.0"

__all__ = ["InterpNormError", "KProfile", "RISpaceSpec", "SpaceSpec", "default_corpus",
           "grand_small_norms", "k_functional", "make_broken_log", "norm", "parse_function",
           "parse_space_string", "parse_weight"]
