"""Truncating scalar quantizer on a symmetric uniform grid.

The grid with ``L`` levels and precision ``d`` is ``{-L*d, ..., -d, 0, d, ..., L*d}``
(``2L+1`` points). Quantization rounds toward zero: non-negative inputs go to
the largest grid point not above them and negative inputs to the smallest
grid point not below them, so ``|q(x)| <= |x|`` and ``|x - q(x)| < d``.

Grid points are identified by an integer index ``k`` in ``-L..L``; the real
value is always produced as ``k * d`` so repeated quantization is exact.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_positive_int, check_powers
from .exceptions import DomainError

DOMAIN_RTOL = 1e-15


@dataclass(frozen=True)
class QuantizerSpec:
    levels: int
    precision: float

    def __post_init__(self):
        check_positive_int(self.levels, "levels")
        if not (math.isfinite(self.precision) and self.precision > 0):
            raise DomainError(f"precision must be positive and finite, got {self.precision}")

    @property
    def bound(self):
        return self.levels * self.precision

    @property
    def size(self):
        return 2 * self.levels + 1

    def grid(self):
        return np.arange(-self.levels, self.levels + 1) * self.precision

    def value(self, index):
        return np.asarray(index) * self.precision


def quantize_index(spec, x):
    """Grid indices of ``x`` (any shape) under ``spec``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("quantizer input must be finite")
    a = np.abs(x)
    limit = spec.bound * (1 + DOMAIN_RTOL)
    if np.any(a > limit):
        worst = float(a.max())
        raise DomainError(
            f"input magnitude {worst} outside quantizer domain [-{spec.bound}, {spec.bound}]"
        )
    d = spec.precision
    k = np.floor(a / d)
    # Division rounding can land one step off in either direction.
    k = np.where(k * d > a, k - 1, k)
    k = np.where((k + 1) * d <= a, k + 1, k)
    k = np.minimum(k, spec.levels).astype(np.int64)
    return np.where(x < 0, -k, k)


def quantize(spec, x):
    """Quantize a scalar. Returns a Python float on the grid."""
    if np.ndim(x) != 0:
        raise DomainError("quantize expects a scalar; use quantize_vec for sequences")
    return float(spec.value(quantize_index(spec, x)))


def quantize_vec(spec, x):
    """Componentwise quantization of a real vector."""
    return spec.value(quantize_index(spec, np.asarray(x, dtype=float)))


def code_quantizer_spec(n, power):
    """Quantizer for blocklength ``n`` and peak power ``power``.

    ``levels = ceil(n * sqrt(n * power))`` and ``precision = 1/n``, so every
    symbol of a codeword with squared norm at most ``n * power`` is in range.
    """
    n = check_positive_int(n, "n")
    power = float(check_powers([power], name="power")[0])
    target = Fraction(power) * n**3
    levels = math.isqrt(math.floor(target))
    while levels * levels < target:
        levels += 1
    return QuantizerSpec(levels=max(levels, 1), precision=1.0 / n)


def alphabet_size_bound(n, powers):
    """Polynomial bound ``n**(3|T|/2) * prod(2*sqrt(P_i) + 3)`` on the tuple alphabet."""
    p = check_powers(powers)
    return float(n ** (1.5 * p.size) * np.prod(2 * np.sqrt(p) + 3))


def tuple_alphabet_size(n, powers):
    """Exact size of the product of per-source quantizer grids."""
    return math.prod(code_quantizer_spec(n, p).size for p in check_powers(powers))


class ScalarQuantizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper around the truncating grid quantizer.

    Either give ``levels`` and ``precision`` directly, or give ``blocklength``
    and ``power`` to use the code-specific grid from :func:`code_quantizer_spec`.

    Attributes
    ----------
    spec_ : QuantizerSpec
        Grid used by :meth:`transform`.
    """

    def __init__(self, levels=None, precision=None, *, blocklength=None, power=None):
        self.levels = levels
        self.precision = precision
        self.blocklength = blocklength
        self.power = power

    def fit(self, X=None, y=None):
        if self.blocklength is not None or self.power is not None:
            if self.blocklength is None or self.power is None:
                raise DomainError("blocklength and power must be given together")
            self.spec_ = code_quantizer_spec(self.blocklength, self.power)
        elif self.levels is not None and self.precision is not None:
            self.spec_ = QuantizerSpec(int(self.levels), float(self.precision))
        else:
            raise DomainError("give either (levels, precision) or (blocklength, power)")
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X, ensure_2d=False, allow_nd=True, dtype=float)
        return quantize_vec(self.spec_, X)

    def transform_indices(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X, ensure_2d=False, allow_nd=True, dtype=float)
        return quantize_index(self.spec_, X)

    def inverse_transform(self, X):
        # Grid values are their own reconstruction.
        check_is_fitted(self, "spec_")
        return check_array(X, ensure_2d=False, allow_nd=True, dtype=float)
