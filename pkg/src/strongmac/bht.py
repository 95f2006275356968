"""Neyman-Pearson binary hypothesis testing on finite alphabets.

``beta(delta, p, q)`` is the smallest type-II error ``sum_x r(x) q(x)`` over
randomized tests ``r: X -> [0, 1]`` that accept ``p`` with probability at
least ``delta``.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_probability
from .exceptions import DomainError, InvariantViolation

SUM_TOL = 1e-12
RATIO_RTOL = 1e-12


@dataclass(frozen=True)
class FiniteDistribution:
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise DomainError("a distribution needs a non-empty 1-d mass vector")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise DomainError("masses must be finite and non-negative")
        if abs(m.sum() - 1.0) > SUM_TOL:
            raise DomainError(f"masses sum to {m.sum()!r}, expected 1")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return self.masses.size

    def pushforward(self, mapping, size=None):
        """Distribution of ``g(X)`` for a symbol map ``g`` given as an int array."""
        g = np.asarray(mapping, dtype=np.int64)
        if g.shape != self.masses.shape:
            raise DomainError("mapping must assign an image to every symbol")
        if np.any(g < 0):
            raise DomainError("mapping images must be non-negative symbol ids")
        size = int(g.max()) + 1 if size is None else size
        out = np.bincount(g, weights=self.masses, minlength=size)
        return FiniteDistribution(out / out.sum())


def as_distribution(x):
    return x if isinstance(x, FiniteDistribution) else FiniteDistribution(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class BinaryTest:
    """Randomized test; ``accept_prob[x]`` is the probability of deciding ``p``."""

    accept_prob: np.ndarray

    def power(self, p):
        return float(np.dot(self.accept_prob, as_distribution(p).masses))

    def type2(self, q):
        return float(np.dot(self.accept_prob, as_distribution(q).masses))


def _np_order(p, q, reverse_ties=False):
    # Rank by likelihood ratio p/q, largest first; q == 0 < p counts as +inf
    # and symbols outside both supports go last.
    safe_q = np.where(q > 0, q, 1.0)
    ratio = np.where(q > 0, p / safe_q, np.where(p > 0, np.inf, -1.0))
    ids = np.arange(p.size)
    secondary = -ids if reverse_ties else ids
    return np.lexsort((secondary, -ratio))


def beta(delta, p, q, *, reverse_ties=False):
    """Minimum type-II error subject to ``P_p[accept] >= delta``.

    Returns
    -------
    value : float
    test : BinaryTest
        An optimal test that accepts ``p`` with probability exactly ``delta``;
        at most one symbol is randomized.
    """
    delta = check_probability(delta, "delta")
    p, q = as_distribution(p), as_distribution(q)
    if len(p) != len(q):
        raise DomainError(f"alphabet sizes differ: {len(p)} vs {len(q)}")
    pm, qm = p.masses, q.masses
    r = np.zeros(pm.size)
    acc = 0.0
    if delta > 0:
        for x in _np_order(pm, qm, reverse_ties):
            if pm[x] <= 0:
                # Remaining symbols carry no p-mass; rounding left a sliver.
                break
            need = delta - acc
            if pm[x] >= need:
                r[x] = min(1.0, need / pm[x])
                acc = delta
                break
            r[x] = 1.0
            acc += pm[x]
    test = BinaryTest(r)
    return float(np.dot(r, qm)), test


def verify_dpi(p, q, mapping, delta):
    """Check ``beta(p||q) <= beta(p o g^-1 || q o g^-1)`` for a symbol map ``g``.

    Returns ``(holds, beta_original, beta_mapped)``. A ``False`` first entry
    would mean the optimizer is wrong, since the inequality is a theorem.
    """
    p, q = as_distribution(p), as_distribution(q)
    g = np.asarray(mapping, dtype=np.int64)
    size = int(g.max()) + 1
    b0, _ = beta(delta, p, q)
    b1, _ = beta(delta, p.pushforward(g, size), q.pushforward(g, size))
    return b0 <= b1 + 1e-12, b0, b1


def beta_lower_bound(delta, p, q, xi):
    """``(delta - P_p[p/q >= xi]) / xi``, a lower bound on ``beta(delta, p, q)``."""
    if not xi > 0:
        raise DomainError(f"xi must be positive, got {xi}")
    delta = check_probability(delta, "delta")
    p, q = as_distribution(p), as_distribution(q)
    pm, qm = p.masses, q.masses
    # p >= xi * q treats q == 0 < p as ratio inf. The relative slack only ever
    # adds boundary symbols, which lowers the bound and keeps it valid.
    heavy = (pm > 0) & (pm >= xi * qm * (1 - RATIO_RTOL))
    return (delta - float(pm[heavy].sum())) / xi


@dataclass(frozen=True)
class DecodingBoundRow:
    u: int
    beta: float
    q_u: float

    @property
    def holds(self):
        return self.beta <= self.q_u + 1e-12


@dataclass(frozen=True)
class DecodingBoundReport:
    alpha: float
    rows: tuple

    @property
    def holds(self):
        return all(r.holds for r in self.rows)


def verify_decoding_bound(joint, qv):
    """Check ``beta_{1-alpha}(p_{V|U=u} || q_V) <= q_V(u)`` for every ``u``.

    ``joint[u, v]`` is the probability that the message is ``u`` and the
    estimate is ``v``; ``alpha`` is the worst conditional error over ``u``
    with positive probability.
    """
    j = np.asarray(joint, dtype=float)
    if j.ndim == 1:
        m = int(round(np.sqrt(j.size)))
        if m * m != j.size:
            raise DomainError("flattened joint must have a square number of entries")
        j = j.reshape(m, m)
    if j.ndim != 2 or j.shape[0] != j.shape[1]:
        raise DomainError("joint must be a square matrix over W x W")
    as_distribution(j.ravel())
    qv = as_distribution(qv)
    if len(qv) != j.shape[0]:
        raise DomainError("q_V must live on the same alphabet as the joint")
    marg = j.sum(axis=1)
    live = np.flatnonzero(marg > 0)
    cond = j[live] / marg[live, None]
    errors = 1.0 - cond[np.arange(live.size), live]
    alpha = float(np.clip(errors.max(), 0.0, 1.0))
    if alpha >= 1.0 - 1e-15:
        bad = int(live[np.argmax(errors)])
        raise DomainError(f"alpha = 1: message {bad} is never decoded correctly")
    rows = []
    for idx, u in enumerate(live):
        row = cond[idx] / cond[idx].sum()
        b, _ = beta(1.0 - alpha, row, qv)
        rows.append(DecodingBoundRow(int(u), b, float(qv.masses[u])))
    report = DecodingBoundReport(alpha, tuple(rows))
    if not report.holds:
        raise InvariantViolation(f"decoding bound failed: {report}")
    return report
