"""Finite-blocklength converse bounds for singular discrete memoryless channels.

Channels are row-stochastic matrices ``W[x, y]``; every quantity is in nats.
"""
__version__ = "0.1.0"

from .channel import (Channel, Classification, asym_example, bec, bsc, builtin, classify,
                      identity, is_singular, is_singular_wrt, load_channel, parse_builtin,
                      ternary_erasure, validate)
from .errors import (BudgetExceeded, NotApplicable, SingdmcError, ValidationError)
from .measures import capacity, dispersion, moment_profile, mutual_info

__all__ = [
    "__version__", "Channel", "Classification", "validate", "classify", "is_singular",
    "is_singular_wrt", "bec", "bsc", "identity", "asym_example", "ternary_erasure",
    "builtin", "parse_builtin", "load_channel", "capacity", "dispersion", "mutual_info",
    "moment_profile", "SingdmcError", "ValidationError", "NotApplicable", "BudgetExceeded",
]
