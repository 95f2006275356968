"""Input validation helpers shared across modules."""

import numbers

import numpy as np

from .exceptions import DomainError

MAX_SOURCES = 20


def check_powers(powers, name="powers"):
    """Return ``powers`` as a 1-d float array of strictly positive entries."""
    p = np.atleast_1d(np.asarray(powers, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise DomainError(f"{name} must be finite and strictly positive, got {p.tolist()}")
    return p


def check_rates(rates, n_sources, name="rates"):
    r = np.atleast_1d(np.asarray(rates, dtype=float))
    if r.ndim != 1 or r.size != n_sources:
        raise DomainError(
            f"{name} has {r.size} entries but {n_sources} sources were given"
        )
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise DomainError(f"{name} must be finite and non-negative, got {r.tolist()}")
    return r


def check_subset(members, n_sources, *, allow_empty=False):
    """Validate a 1-based source subset and return it as a sorted tuple."""
    try:
        t = tuple(sorted({int(i) for i in members}))
    except (TypeError, ValueError) as exc:
        raise DomainError(f"subset must contain integers, got {members!r}") from exc
    if not t and not allow_empty:
        raise DomainError("subset must be non-empty")
    if t and (t[0] < 1 or t[-1] > n_sources):
        raise DomainError(f"subset {list(t)} is not contained in 1..{n_sources}")
    return t


def check_probability(x, name, *, closed_right=True):
    if not isinstance(x, numbers.Real) or not np.isfinite(x):
        raise DomainError(f"{name} must be a finite real, got {x!r}")
    if x < 0 or x > 1 or (not closed_right and x == 1):
        rng = "[0, 1]" if closed_right else "[0, 1)"
        raise DomainError(f"{name} must lie in {rng}, got {x}")
    return float(x)


def check_positive_int(x, name, minimum=1):
    if isinstance(x, bool) or not isinstance(x, numbers.Integral):
        if isinstance(x, float) and x.is_integer():
            x = int(x)
        else:
            raise DomainError(f"{name} must be an integer, got {x!r}")
    if x < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {x}")
    return int(x)
