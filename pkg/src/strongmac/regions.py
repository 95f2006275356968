"""Capacity-region geometry for the Gaussian MAC and the strong-interference IC.

Sources are labelled ``1..N``. A subset ``T`` is reported both as a tuple of
labels and as a bitmask in which bit ``i-1`` marks source ``i``; enumeration
runs over bitmasks ``1..2**N - 1`` in increasing order.
"""

import math
from dataclasses import dataclass

from ._validation import MAX_SOURCES, check_powers, check_rates
from .exceptions import DomainError, StrongInterferenceError

DEFAULT_SLACK = 1e-12


def gaussian_capacity(snr):
    """Return ``0.5 * log2(1 + snr)`` in bits per channel use."""
    return 0.5 * math.log1p(snr) / math.log(2.0)


def subset_from_mask(mask):
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def mask_from_subset(subset):
    mask = 0
    for i in subset:
        mask |= 1 << (i - 1)
    return mask


def cover_wyner_constraints(powers):
    """Sum-rate constraints of the Cover-Wyner region.

    Parameters
    ----------
    powers : array-like of shape (N,)
        Per-source powers in linear SNR units.

    Returns
    -------
    list of (tuple, float)
        One ``(subset, bound_bits)`` pair for every non-empty subset, in
        bitmask order. ``bound_bits = 0.5 * log2(1 + sum(P_i for i in subset))``.
    """
    p = check_powers(powers)
    if p.size > MAX_SOURCES:
        raise DomainError(f"at most {MAX_SOURCES} sources are supported, got {p.size}")
    values = [float(v) for v in p]
    out = []
    for mask in range(1, 1 << len(values)):
        subset = subset_from_mask(mask)
        out.append((subset, gaussian_capacity(math.fsum(values[i - 1] for i in subset))))
    return out


@dataclass(frozen=True)
class Membership:
    inside: bool
    violated_subset: tuple | None = None

    def __bool__(self):
        return self.inside

    def to_dict(self):
        return {
            "inside": self.inside,
            "violated_subset": None if self.violated_subset is None else list(self.violated_subset),
        }


def contains(powers, rates, slack=DEFAULT_SLACK):
    """Test whether ``rates`` lies in the Cover-Wyner region of ``powers``.

    The first violated subset in bitmask order is reported. A constraint is
    considered satisfied when ``sum(R_T) <= bound + slack``.
    """
    constraints = cover_wyner_constraints(powers)
    r = check_rates(rates, len(constraints[-1][0]))
    values = [float(v) for v in r]
    for subset, bound in constraints:
        if math.fsum(values[i - 1] for i in subset) > bound + slack:
            return Membership(False, subset)
    return Membership(True, None)


@dataclass(frozen=True)
class IcParams:
    """Two-user Gaussian interference channel with cross gains ``g12``, ``g21``.

    ``g12`` scales source 2 at destination 1 and ``g21`` scales source 1 at
    destination 2.
    """

    p1: float
    p2: float
    g12: float
    g21: float

    def __post_init__(self):
        check_powers([self.p1, self.p2], name="IC powers")
        for name in ("g12", "g21"):
            g = getattr(self, name)
            if not math.isfinite(g):
                raise DomainError(f"{name} must be finite")

    @property
    def i1(self):
        return self.g12**2 * self.p2

    @property
    def i2(self):
        return self.g21**2 * self.p1

    @property
    def strong_interference(self):
        return self.g12**2 >= 1 and self.g21**2 >= 1


@dataclass(frozen=True)
class HanKobayashiRegion:
    params: IcParams
    r1_bound: float
    r2_bound: float
    sum_bound: float

    def constraints(self):
        return [((1,), self.r1_bound), ((2,), self.r2_bound), ((1, 2), self.sum_bound)]

    def contains(self, rates, slack=DEFAULT_SLACK):
        r = check_rates(rates, 2)
        r1, r2 = float(r[0]), float(r[1])
        for subset, bound, total in (
            ((1,), self.r1_bound, r1),
            ((2,), self.r2_bound, r2),
            ((1, 2), self.sum_bound, math.fsum((r1, r2))),
        ):
            if total > bound + slack:
                return Membership(False, subset)
        return Membership(True, None)


def hk_strong_interference_region(ic):
    """Capacity region of the two-user Gaussian IC under strong interference."""
    if not ic.strong_interference:
        raise StrongInterferenceError(
            f"strong interference requires g12**2 >= 1 and g21**2 >= 1, "
            f"got g12={ic.g12}, g21={ic.g21}"
        )
    sum_bound = min(
        gaussian_capacity(math.fsum((ic.p1, ic.i1))),
        gaussian_capacity(math.fsum((ic.p2, ic.i2))),
    )
    return HanKobayashiRegion(
        params=ic,
        r1_bound=gaussian_capacity(math.fsum((ic.p1,))),
        r2_bound=gaussian_capacity(math.fsum((ic.p2,))),
        sum_bound=sum_bound,
    )
