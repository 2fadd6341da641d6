"""Response-matching pseudo-PES: train on synthetic noise targets, generate
structures by random search with FIRE relaxation, and analyze the results."""

from ._pesgen import *  # noqa: F401,F403
from ._pesgen import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
