"""Expurgation of message tuples: from an average-error code to a max-error subcode.

Message tuples are 0-based index tuples ``(w_1, ..., w_N)``; the per-tuple
error array has shape ``message_sizes`` (row-major when flattened). Sources in
the subset ``T`` are labelled ``1..N``.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import check_positive_int, check_probability, check_subset
from .exceptions import DomainError, InvariantViolation

AVG_TOL = 1e-12


@dataclass(frozen=True)
class CodeErrorProfile:
    """Conditional decoding error ``e[w]`` for every message tuple ``w``."""

    message_sizes: tuple
    errors: np.ndarray = field(repr=False)

    def __post_init__(self):
        sizes = tuple(check_positive_int(m, "message size") for m in self.message_sizes)
        e = np.asarray(self.errors, dtype=float)
        if e.size != math.prod(sizes):
            raise DomainError(
                f"expected {math.prod(sizes)} per-tuple errors for sizes {list(sizes)}, got {e.size}"
            )
        e = e.reshape(sizes)
        if not np.all(np.isfinite(e)) or np.any(e < 0) or np.any(e > 1):
            raise DomainError("per-tuple errors must lie in [0, 1]")
        e.setflags(write=False)
        object.__setattr__(self, "message_sizes", sizes)
        object.__setattr__(self, "errors", e)

    @property
    def average_error(self):
        return float(self.errors.mean())

    def error_of(self, w):
        return float(self.errors[tuple(w)])


@dataclass(frozen=True)
class ExpurgationResult:
    epsilon: float
    subset: tuple
    support: tuple
    support_t: tuple
    tail: tuple
    max_error: float
    kept: int

    @property
    def size(self):
        return len(self.support)

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "subset": list(self.subset),
            "tail": list(self.tail),
            "support": [list(w) for w in self.support],
            "support_t": [list(w) for w in self.support_t],
            "size": self.size,
            "kept_before_tail_selection": self.kept,
            "max_error": self.max_error,
        }


def _frac(eps):
    return Fraction(eps)


def kept_count(epsilon, sizes):
    """``floor((1-eps)/(1+eps) * prod(sizes))`` in exact arithmetic."""
    e = _frac(epsilon)
    return math.floor((1 - e) / (1 + e) * math.prod(sizes))


def precondition_holds(epsilon, sizes_t):
    e = _frac(epsilon)
    prod = math.prod(sizes_t)
    return math.floor((1 - e) / (1 + e) * prod) >= (1 - e) / (2 * (1 + e)) * prod


def size_lower_bound(epsilon, sizes_t):
    e = _frac(epsilon)
    return (1 - e) / (2 * (1 + e)) * math.prod(sizes_t)


def mass_upper_bound(epsilon, sizes_t):
    e = _frac(epsilon)
    return 2 * (1 + e) / ((1 - e) * math.prod(sizes_t))


def expurgate(profile, epsilon, subset):
    """Select a large subcode with bounded maximal error and a fixed tail.

    Keeps the ``floor((1-eps)/(1+eps) * prod M)`` tuples of smallest error
    (ties in lexicographic tuple order), then restricts to the messages of the
    sources outside ``subset`` that occur most often among the kept tuples
    (ties to the smallest tail).

    Returns
    -------
    ExpurgationResult
        Every tuple in ``support`` has error at most ``(1+eps)/2`` and the
        same tail; ``len(support) >= (1-eps)/(2(1+eps)) * prod_{i in T} M_i``.
    """
    eps = check_probability(epsilon, "epsilon", closed_right=False)
    sizes = profile.message_sizes
    t = check_subset(subset, len(sizes))
    tc = tuple(i for i in range(1, len(sizes) + 1) if i not in t)
    if profile.average_error > eps + AVG_TOL:
        raise DomainError(
            f"average error {profile.average_error} exceeds declared epsilon {eps}"
        )
    sizes_t = [sizes[i - 1] for i in t]
    if not precondition_holds(eps, sizes_t):
        raise DomainError(
            "expurgation precondition fails: floor((1-eps)/(1+eps) * prod M_T) "
            "< (1-eps)/(2(1+eps)) * prod M_T"
        )

    k = kept_count(eps, sizes)
    flat = profile.errors.ravel()
    # Stable sort on the row-major index is lexicographic tie-breaking.
    order = np.argsort(flat, kind="stable")[:k]
    kept = [tuple(int(v) for v in np.unravel_index(i, sizes)) for i in np.sort(order)]

    groups = {}
    for w in kept:
        groups.setdefault(tuple(w[i - 1] for i in tc), []).append(w)
    tail = min(groups, key=lambda key: (-len(groups[key]), key))
    support = tuple(groups[tail])
    support_t = tuple(tuple(w[i - 1] for i in t) for w in support)
    max_error = max(profile.error_of(w) for w in support)
    result = ExpurgationResult(
        epsilon=eps,
        subset=t,
        support=support,
        support_t=support_t,
        tail=tail,
        max_error=max_error,
        kept=k,
    )
    check_expurgation(profile, result)
    return result


def check_expurgation(profile, result):
    """Re-verify the guarantees of :func:`expurgate` from scratch."""
    eps = result.epsilon
    sizes_t = [profile.message_sizes[i - 1] for i in result.subset]
    tc = [i for i in range(1, len(profile.message_sizes) + 1) if i not in result.subset]
    failures = []
    if any(tuple(w[i - 1] for i in tc) != result.tail for w in result.support):
        failures.append("support tuples do not share the selected tail")
    if len(set(result.support_t)) != len(result.support):
        failures.append("projection onto T is not injective")
    if result.max_error > (1 + eps) / 2 + AVG_TOL:
        failures.append(f"max error {result.max_error} exceeds (1+eps)/2")
    if len(result.support) < size_lower_bound(eps, sizes_t):
        failures.append("support smaller than (1-eps)/(2(1+eps)) prod M_T")
    if len(result.support) < math.floor((1 - _frac(eps)) / (1 + _frac(eps)) * math.prod(sizes_t)):
        failures.append("pigeonhole bound violated")
    if Fraction(1, len(result.support)) > mass_upper_bound(eps, sizes_t):
        failures.append("uniform mass exceeds 2(1+eps)/((1-eps) prod M_T)")
    if failures:
        raise InvariantViolation("; ".join(failures))
    return True


def all_tuples(sizes):
    return itertools.product(*(range(m) for m in sizes))
