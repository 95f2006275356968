"""Two-user Gaussian interference channel: base codes and multicast decoders.

Channel: ``Y1 = X1 + g12 X2 + Z1`` and ``Y2 = g21 X1 + X2 + Z2`` with unit
noise variances and correlation ``noise_corr`` between ``Z1`` and ``Z2``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .._validation import check_positive_int, check_powers
from ..exceptions import DomainError, StrongInterferenceError
from . import _streams
from .codebook import DEFAULT_TUPLE_CAP, Codebook, GaussianMacConfig
from .decoder import MLDecoder
from .stats import SimResult


@dataclass(frozen=True)
class IcConfig:
    n: int
    p1: float
    p2: float
    g12: float
    g21: float
    message_sizes: tuple
    noise_corr: float = 0.0
    tuple_cap: int = DEFAULT_TUPLE_CAP

    def __post_init__(self):
        check_positive_int(self.n, "n")
        check_powers([self.p1, self.p2], name="IC powers")
        for name in ("g12", "g21", "noise_corr"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not -1 <= self.noise_corr <= 1:
            raise DomainError(f"noise_corr must lie in [-1, 1], got {self.noise_corr}")
        if len(self.message_sizes) != 2:
            raise DomainError("the interference channel has exactly two message sizes")
        object.__setattr__(self, "message_sizes", tuple(int(m) for m in self.message_sizes))
        self.mac_config()

    def mac_config(self):
        return GaussianMacConfig(self.n, (self.p1, self.p2), self.message_sizes, self.tuple_cap)

    @property
    def strong_interference(self):
        return abs(self.g12) >= 1 and abs(self.g21) >= 1

    def require_strong(self):
        if not self.strong_interference:
            raise StrongInterferenceError(
                f"need |g12| >= 1 and |g21| >= 1, got g12={self.g12}, g21={self.g21}"
            )


def draw_ic_trials(ic, seed, trial_ids, messages=None):
    """Messages, both noise vectors and two tie-break uniforms per trial."""
    count = len(trial_ids)
    n = ic.n
    w = np.empty((count, 2), dtype=np.int64) if messages is None else messages
    z1, z2 = np.empty((count, n)), np.empty((count, n))
    u = np.empty((count, 2))
    rho = ic.noise_corr
    c = math.sqrt(max(0.0, 1 - rho * rho))
    high = np.asarray(ic.message_sizes, dtype=np.int64)
    streams = _streams.TrialStreams(seed, _streams.IC_TRIAL)
    for r, t in enumerate(trial_ids):
        rng = streams.at(int(t))
        if messages is None:
            w[r] = rng.integers(0, high)
        a = rng.standard_normal(n)
        b = rng.standard_normal(n)
        z1[r] = a
        z2[r] = rho * a + c * b
        u[r] = rng.random(2)
    return w, z1, z2, u


def ic_outputs(ic, books, w, z1, z2):
    x1, x2 = books[0][w[:, 0]], books[1][w[:, 1]]
    return x1 + ic.g12 * x2 + z1, ic.g21 * x1 + x2 + z2


class IcBaseDecoder:
    """Joint ML over both messages at one destination, returning its own message."""

    def __init__(self, ic, books, destination):
        if destination not in (1, 2):
            raise DomainError("destination must be 1 or 2")
        gains = (1.0, ic.g12) if destination == 1 else (ic.g21, 1.0)
        self.destination = destination
        self.ml = MLDecoder(ic.tuple_cap).fit(books.scaled(gains))

    def __call__(self, y, tie_u=None):
        return self.ml.predict(y, tie_u=tie_u)[:, self.destination - 1]


def base_decoders(ic, books):
    return IcBaseDecoder(ic, books, 1), IcBaseDecoder(ic, books, 2)


def _aux_draws(seed, destination, trial_ids, n):
    z = np.empty((len(trial_ids), n))
    u = np.empty(len(trial_ids))
    streams = _streams.TrialStreams(seed, _streams.IC_AUX, destination)
    for r, t in enumerate(trial_ids):
        rng = streams.at(int(t))
        z[r] = rng.standard_normal(n)
        u[r] = rng.random()
    return z, u


class MulticastDecoders:
    """Each destination decodes its own message, then simulates the other
    destination's output and reuses that destination's decoder.

    At destination 1 the simulated output is
    ``g21 x1(w1*) + (Y1 - x1(phi1(Y1))) / g12 + sqrt(1 - 1/g12**2) Z``; when
    ``phi1`` is right this has the law of ``Y2`` given ``W1 = w1*``.
    Destination 2 is symmetric. The auxiliary noise ``Z`` of trial ``t`` comes
    from a stream keyed by ``(seed, destination, t)``.
    """

    def __init__(self, ic, books, phi1, phi2, anchors, seed):
        ic.require_strong()
        w1s, w2s = (int(a) for a in anchors)
        if not (0 <= w1s < books.sizes[0] and 0 <= w2s < books.sizes[1]):
            raise DomainError(f"anchors {anchors} out of range for sizes {books.sizes}")
        self.ic, self.books = ic, books
        self.phi1, self.phi2 = phi1, phi2
        self.anchors = (w1s, w2s)
        self.seed = int(seed)
        self.aux_scale = (
            math.sqrt(max(0.0, 1 - 1 / ic.g12**2)),
            math.sqrt(max(0.0, 1 - 1 / ic.g21**2)),
        )

    def simulated_output_1(self, y1, w1_hat, trial_ids):
        z, u = _aux_draws(self.seed, 1, trial_ids, self.ic.n)
        x1 = self.books[0]
        v = (
            self.ic.g21 * x1[self.anchors[0]]
            + (y1 - x1[w1_hat]) / self.ic.g12
            + self.aux_scale[0] * z
        )
        return v, u

    def simulated_output_2(self, y2, w2_hat, trial_ids):
        z, u = _aux_draws(self.seed, 2, trial_ids, self.ic.n)
        x2 = self.books[1]
        v = (
            (y2 - x2[w2_hat]) / self.ic.g21
            + self.ic.g12 * x2[self.anchors[1]]
            + self.aux_scale[1] * z
        )
        return v, u

    def decode_1(self, y1, trial_ids, tie_u=None):
        """``(phi1(Y1), phi1'(Y1))`` for each row."""
        w1 = self.phi1(y1, tie_u)
        v, u = self.simulated_output_1(y1, w1, trial_ids)
        return np.stack([w1, self.phi2(v, u)], axis=1)

    def decode_2(self, y2, trial_ids, tie_u=None):
        """``(phi2'(Y2), phi2(Y2))`` for each row."""
        w2 = self.phi2(y2, tie_u)
        v, u = self.simulated_output_2(y2, w2, trial_ids)
        return np.stack([self.phi1(v, u), w2], axis=1)


def ic_multicast_decoders(ic, books, phi1, phi2, anchors, seed):
    """Pair ``((phi1, phi1'), (phi2, phi2'))`` as a :class:`MulticastDecoders`."""
    return MulticastDecoders(ic, books, phi1, phi2, anchors, seed)


def anchor_errors(ic, books, phi1, phi2, trials_per_anchor, seed):
    """Measured error of ``phi2`` given each ``W1 = w1`` and of ``phi1`` given each ``W2 = w2``."""
    tpa = check_positive_int(trials_per_anchor, "trials_per_anchor")
    out = []
    for dest, fixed_idx in ((2, 0), (1, 1)):
        m_fixed = ic.message_sizes[fixed_idx]
        errs = np.empty(m_fixed)
        for a in range(m_fixed):
            key = 1_000_000 * dest + a
            ids = range(key * tpa, (key + 1) * tpa)
            w, z1, z2, u = draw_ic_trials(ic, _streams.derived_seed(seed, _streams.IC_ANCHOR), ids)
            w[:, fixed_idx] = a
            y1, y2 = ic_outputs(ic, books, w, z1, z2)
            if dest == 2:
                errs[a] = np.mean(phi2(y2, u[:, 1]) != w[:, 1])
            else:
                errs[a] = np.mean(phi1(y1, u[:, 0]) != w[:, 0])
        out.append(errs)
    return out[0], out[1]


def choose_anchors(ic, books, phi1, phi2, trials_per_anchor, seed):
    """Anchors minimizing the measured conditional error; ties to the smallest index."""
    e1, e2 = anchor_errors(ic, books, phi1, phi2, trials_per_anchor, seed)
    return int(np.argmin(e1)), int(np.argmin(e2))


@dataclass(frozen=True)
class IcSimResult:
    plain: tuple
    multicast: tuple
    anchors: tuple

    def union_slack(self, destination):
        """Combined 95% half-width of the multicast error and both plain errors."""
        parts = (self.multicast[destination - 1], *self.plain)
        return math.sqrt(sum(r.half_width**2 for r in parts))

    def union_bound_holds(self, destination, widths=3.0):
        mc = self.multicast[destination - 1].error_prob
        budget = self.plain[0].error_prob + self.plain[1].error_prob
        return mc <= budget + widths * self.union_slack(destination)

    def to_dict(self):
        return {
            "anchors": list(self.anchors),
            "plain": [r.to_dict() for r in self.plain],
            "multicast": [r.to_dict() for r in self.multicast],
            "union_bound_holds": [self.union_bound_holds(1), self.union_bound_holds(2)],
        }


def simulate_ic(ic, books, trials, seed, *, anchors=None, anchor_trials=200):
    """Paired estimates of the plain and the multicast code errors.

    ``plain[d]`` is ``Pr{phi_d(Y_d) != W_d}``; ``multicast[d]`` is the
    probability that destination ``d`` gets either message wrong. All four
    use the same trials.
    """
    ic.require_strong()
    if not isinstance(books, Codebook):
        books = Codebook(tuple(books))
    books.check_against(ic.mac_config())
    trials = check_positive_int(trials, "trials")
    phi1, phi2 = base_decoders(ic, books)
    if anchors is None:
        anchors = choose_anchors(ic, books, phi1, phi2, anchor_trials, seed)
    mc = ic_multicast_decoders(ic, books, phi1, phi2, anchors, _streams.derived_seed(seed, _streams.IC_AUX))
    ids = np.arange(trials)
    w, z1, z2, u = draw_ic_trials(ic, seed, ids)
    y1, y2 = ic_outputs(ic, books, w, z1, z2)
    d1 = mc.decode_1(y1, ids, u[:, 0])
    d2 = mc.decode_2(y2, ids, u[:, 1])
    seed = int(seed)
    plain = (
        SimResult(trials, int(np.sum(d1[:, 0] != w[:, 0])), seed),
        SimResult(trials, int(np.sum(d2[:, 1] != w[:, 1])), seed),
    )
    multicast = (
        SimResult(trials, int(np.sum(np.any(d1 != w, axis=1))), seed),
        SimResult(trials, int(np.sum(np.any(d2 != w, axis=1))), seed),
    )
    return IcSimResult(plain, multicast, tuple(anchors))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    samples: int

    def rejects(self, level=0.01):
        return self.pvalue < level


def ks_identity_test(ic, books, anchors, samples, seed, *, destination=1, coordinate=0):
    """KS test that the simulated output has the law of the other destination's output.

    The simulated output is built from the true own message, which is what it
    equals whenever the own decoder is right. Coordinate ``coordinate`` is
    compared against the mixture CDF of ``g21 x1(w1*) + x2(W2) + Z``
    (destination 1) or ``x1(W1) + g12 x2(w2*) + Z`` (destination 2) over
    uniform messages.
    """
    ic.require_strong()
    phi1, phi2 = base_decoders(ic, books)
    mc = ic_multicast_decoders(ic, books, phi1, phi2, anchors, _streams.derived_seed(seed, _streams.IC_AUX))
    ids = np.arange(check_positive_int(samples, "samples"))
    w, z1, z2, _ = draw_ic_trials(ic, seed, ids)
    y1, y2 = ic_outputs(ic, books, w, z1, z2)
    k = coordinate
    if destination == 1:
        v, _ = mc.simulated_output_1(y1, w[:, 0], ids)
        centres = ic.g21 * books[0][mc.anchors[0], k] + books[1][:, k]
    else:
        v, _ = mc.simulated_output_2(y2, w[:, 1], ids)
        centres = books[0][:, k] + ic.g12 * books[1][mc.anchors[1], k]

    def cdf(x):
        return ndtr(np.subtract.outer(np.asarray(x), centres)).mean(axis=-1)

    res = stats.kstest(v[:, k], cdf)
    return KsResult(float(res.statistic), float(res.pvalue), int(v.shape[0]))
