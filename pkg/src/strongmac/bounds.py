"""Closed-form finite-blocklength sum-rate converse for the Gaussian MAC.

All outputs are in bits. ``gamma`` is the asymptotic average error of the code
family; the bound itself is evaluated at ``gamma_bar = (1 + gamma) / 2``, the
maximal error left after expurgation.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_powers, check_probability, check_subset
from .exceptions import DomainError

LOG2E = 1.0 / math.log(2.0)

TERM_NAMES = (
    "capacity",
    "mean_correction",
    "deviation",
    "chebyshev_confidence",
    "wringing_loss",
    "expurgation_loss",
)


@dataclass(frozen=True)
class BoundInputs:
    n: int
    gamma: float
    powers: tuple
    t: tuple

    def __post_init__(self):
        n = check_positive_int(self.n, "n")
        gamma = check_probability(self.gamma, "gamma", closed_right=False)
        p = check_powers(self.powers)
        t = check_subset(self.t, p.size)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "powers", tuple(float(v) for v in p))
        object.__setattr__(self, "t", t)

    @property
    def gamma_bar(self):
        return (1.0 + self.gamma) / 2.0

    @property
    def one_minus_gamma_bar(self):
        # (1 - gamma)/2 keeps precision when gamma is close to 1.
        return (1.0 - self.gamma) / 2.0

    @property
    def total_power(self):
        return math.fsum(self.powers[i - 1] for i in self.t)


def kappa_constants(powers, t):
    """``(kappa1, kappa2)`` for the sources in ``t``.

    ``kappa1 = 4|T| sum sqrt(P_i)`` and
    ``kappa2 = 4|T|^2 |P_T| prod(2 sqrt(P_i) + 3)``.
    """
    p = check_powers(powers)
    t = check_subset(t, p.size)
    pt = p[[i - 1 for i in t]]
    size = len(t)
    kappa1 = 4 * size * math.fsum(np.sqrt(pt))
    kappa2 = 4 * size**2 * math.fsum(pt) * math.prod(2 * math.sqrt(v) + 3 for v in pt)
    return kappa1, kappa2


def _total_power(powers, t):
    p = check_powers(powers)
    t = check_subset(t, p.size)
    return math.fsum(p[i - 1] for i in t), t


def llr_moments(x, means, powers, t):
    """Mean and variance (bits) of the per-letter log-likelihood ratio.

    The ratio compares the channel ``Normal(sum x_i, 1)`` against the auxiliary
    output ``Normal(sum_{T^c} x_i + sum_T means_i, 1 + |P_T|)`` with ``Y`` drawn
    from the channel. ``x`` and ``means`` are indexed by source ``1..N``;
    only entries in ``t`` are used.
    """
    pt, t = _total_power(powers, t)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    means = np.atleast_1d(np.asarray(means, dtype=float))
    idx = [i - 1 for i in t]
    b = math.fsum(x[idx] - means[idx])
    mean = 0.5 * math.log2(1 + pt) + LOG2E / (2 * (1 + pt)) * (b * b - pt)
    var = (pt * pt + 2 * b * b) * LOG2E**2 / (2 * (1 + pt) ** 2)
    return mean, var


def log_xi(letters, gamma_bar, powers, t):
    """Chebyshev threshold ``sum mean_k + sqrt(2/(1-gamma_bar) * sum var_k)``.

    ``letters`` is a sequence of ``(x, means)`` pairs, one per channel use.
    """
    if not gamma_bar < 1:
        raise DomainError(f"gamma_bar must be < 1, got {gamma_bar}")
    means, variances = [], []
    for x, m in letters:
        mu, var = llr_moments(x, m, powers, t)
        means.append(mu)
        variances.append(var)
    return math.fsum(means) + math.sqrt(2 / (1 - gamma_bar) * math.fsum(variances))


@dataclass(frozen=True)
class BoundReport:
    inputs: BoundInputs
    kappa1: float
    kappa2: float
    terms: dict
    sum_log_m_upper: float
    per_symbol_rate_upper: float
    second_order_gap: float
    second_order_limit: float

    def to_dict(self):
        return {
            "n": self.inputs.n,
            "gamma": self.inputs.gamma,
            "gamma_bar": self.inputs.gamma_bar,
            "powers": list(self.inputs.powers),
            "subset": list(self.inputs.t),
            "total_power": self.inputs.total_power,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "terms": dict(self.terms),
            "sum_log_m_upper": self.sum_log_m_upper,
            "per_symbol_rate_upper": self.per_symbol_rate_upper,
            "capacity": 0.5 * math.log2(1 + self.inputs.total_power),
            "second_order_gap": self.second_order_gap,
            "second_order_limit": self.second_order_limit,
        }


def _safe_div(num, den):
    return math.inf if den == 0 else num / den


def bound_terms(inp):
    """The six additive terms of the sum-rate bound, keyed by :data:`TERM_NAMES`."""
    if inp.n < 2:
        raise DomainError("the bound needs n >= 2")
    n = float(inp.n)
    pt = inp.total_power
    size = len(inp.t)
    k1, k2 = kappa_constants(inp.powers, inp.t)
    one_m = inp.one_minus_gamma_bar
    gb = inp.gamma_bar
    snl = math.sqrt(n * math.log2(n))
    sn = math.sqrt(n)
    inner = size**2 / n
    dev_sq = n * pt * (pt + 2) + 2 * snl * pt + 2 * sn * k1 + 2 * k2 + 2 * inner
    return {
        "capacity": n / 2 * math.log2(1 + pt),
        "mean_correction": (snl * pt + sn * k1 + k2 + inner) * LOG2E / (2 * (1 + pt)),
        "deviation": _safe_div(math.sqrt(dev_sq) * LOG2E, (1 + pt) * math.sqrt(one_m)),
        "chebyshev_confidence": math.inf if one_m == 0 else math.log2(2 / one_m),
        "wringing_loss": _safe_div(4 * size * (1 + 3 * gb), one_m) * snl,
        "expurgation_loss": math.inf if one_m == 0 else -math.log2(one_m / (2 * (1 + gb))),
    }


def second_order_limit(gamma, powers, t):
    """Large-``n`` limit of :func:`second_order_gap`.

    Only the terms growing like ``sqrt(n log n)`` survive the normalization:
    ``|P_T| log2(e) / (2(1 + |P_T|)) + 4|T|(1 + 3 gamma_bar)/(1 - gamma_bar)``.
    """
    gamma = check_probability(gamma, "gamma", closed_right=False)
    pt, t = _total_power(powers, t)
    one_m = (1 - gamma) / 2
    gb = (1 + gamma) / 2
    return pt * LOG2E / (2 * (1 + pt)) + _safe_div(4 * len(t) * (1 + 3 * gb), one_m)


def sum_rate_upper_bound(inp):
    """Upper bound on ``sum_{i in T} log2 M_i`` with every additive term itemized."""
    terms = bound_terms(inp)
    k1, k2 = kappa_constants(inp.powers, inp.t)
    total = math.fsum(terms.values()) if all(map(math.isfinite, terms.values())) else math.inf
    n = inp.n
    gap = (total - terms["capacity"]) / math.sqrt(n * math.log2(n))
    return BoundReport(
        inputs=inp,
        kappa1=k1,
        kappa2=k2,
        terms=terms,
        sum_log_m_upper=total,
        per_symbol_rate_upper=total / n,
        second_order_gap=gap,
        second_order_limit=second_order_limit(inp.gamma, inp.powers, inp.t),
    )


def second_order_gap(inp):
    """``(sum log2 M upper bound - (n/2) log2(1 + |P_T|)) / sqrt(n log2 n)``."""
    terms = bound_terms(inp)
    extra = [v for k, v in terms.items() if k != "capacity"]
    if not all(map(math.isfinite, extra)):
        return math.inf
    return math.fsum(extra) / math.sqrt(inp.n * math.log2(inp.n))


def bound_scan(gamma, powers, t, n_values):
    """Rows ``(n, per_symbol_bound, second_order_gap)`` for each ``n``."""
    rows = []
    for n in n_values:
        report = sum_rate_upper_bound(BoundInputs(int(n), gamma, tuple(powers), tuple(t)))
        rows.append((report.inputs.n, report.per_symbol_rate_upper, report.second_order_gap))
    return rows
