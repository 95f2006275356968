"""Finite-blocklength converse toolkit for the Gaussian multiple-access channel.

Submodules: :mod:`~strongmac.regions`, :mod:`~strongmac.quantizer`,
:mod:`~strongmac.bht`, :mod:`~strongmac.expurgation`,
:mod:`~strongmac.wringing`, :mod:`~strongmac.bounds`,
:mod:`~strongmac.macsim` and the :mod:`~strongmac.cli` entry point.
"""

__version__ = "0.1.0"

from .exceptions import CapExceededError, DomainError, InvariantViolation, StrongInterferenceError

__all__ = [
    "CapExceededError",
    "DomainError",
    "InvariantViolation",
    "StrongInterferenceError",
    "__version__",
]
