"""Wringing: condition a few coordinates so that every remaining per-letter
marginal of ``p`` is dominated by the matching marginal of a reference ``u``.

Distributions over ``X**n`` are stored sparsely as an ``(K, n)`` integer array
of sequences plus a length-``K`` mass vector. Symbols are integer ids into an
alphabet list; coordinates are reported 1-based.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_powers, check_probability, check_subset
from .exceptions import DomainError, InvariantViolation
from .expurgation import mass_upper_bound
from .quantizer import alphabet_size_bound, code_quantizer_spec, quantize_index

# Shared by the search and by the verifier so both use one predicate.
RTOL = 1e-12
SUM_TOL = 1e-9


def _sparse(entries, n, n_symbols, name):
    """Collapse ``[(sequence, mass), ...]`` into unique sequences and masses."""
    if isinstance(entries, dict):
        entries = list(entries.items())
    if not entries:
        raise DomainError(f"{name} has no atoms")
    seqs = np.array([tuple(int(s) for s in seq) for seq, _ in entries], dtype=np.int64)
    mass = np.array([float(m) for _, m in entries])
    if seqs.ndim != 2 or seqs.shape[1] != n:
        raise DomainError(f"every sequence in {name} must have length n={n}")
    if np.any(seqs < 0) or np.any(seqs >= n_symbols):
        raise DomainError(f"{name} uses symbols outside the alphabet")
    if not np.all(np.isfinite(mass)) or np.any(mass < 0):
        raise DomainError(f"{name} masses must be non-negative")
    if abs(mass.sum() - 1.0) > SUM_TOL:
        raise DomainError(f"{name} masses sum to {mass.sum()!r}, expected 1")
    uniq, inv = np.unique(seqs, axis=0, return_inverse=True)
    total = np.bincount(inv.ravel(), weights=mass, minlength=len(uniq))
    keep = total > 0
    return uniq[keep], total[keep]


def _lookup(table_seqs, table_mass, seqs):
    """Mass of each row of ``seqs`` in a sparse table (0 when absent)."""
    index = {tuple(s): m for s, m in zip(table_seqs.tolist(), table_mass.tolist())}
    return np.array([index.get(tuple(s), 0.0) for s in seqs.tolist()])


@dataclass(frozen=True)
class ProductApproxInstance:
    """``p`` and ``u`` on ``X**n`` with ``p <= (1 + c) u`` pointwise."""

    n: int
    alphabet: tuple
    p: tuple
    u: tuple
    c: float
    delta: float
    lam: float
    p_seqs: np.ndarray = field(init=False, repr=False)
    p_mass: np.ndarray = field(init=False, repr=False)
    u_seqs: np.ndarray = field(init=False, repr=False)
    u_mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = check_positive_int(self.n, "n")
        alphabet = tuple(self.alphabet)
        if not alphabet:
            raise DomainError("alphabet must be non-empty")
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"c must be positive, got {self.c}")
        if not 0 < self.delta < self.c:
            raise DomainError(f"delta must lie in (0, c) = (0, {self.c}), got {self.delta}")
        if not 0 < self.lam < 1:
            raise DomainError(f"lambda must lie in (0, 1), got {self.lam}")
        ps, pm = _sparse(self.p, n, len(alphabet), "p")
        us, um = _sparse(self.u, n, len(alphabet), "u")
        u_at_p = _lookup(us, um, ps)
        bad = pm > (1 + self.c) * u_at_p * (1 + RTOL)
        if np.any(bad):
            seq = tuple(ps[np.argmax(bad)].tolist())
            raise DomainError(f"domination p <= (1+c) u fails at sequence {seq}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "alphabet", alphabet)
        for name, value in (("p_seqs", ps), ("p_mass", pm), ("u_seqs", us), ("u_mass", um)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_arrays(cls, n, alphabet, p_seqs, p_mass, u_seqs, u_mass, c, delta, lam):
        p = list(zip(map(tuple, np.asarray(p_seqs).tolist()), np.asarray(p_mass).tolist()))
        u = list(zip(map(tuple, np.asarray(u_seqs).tolist()), np.asarray(u_mass).tolist()))
        return cls(n, tuple(alphabet), tuple(p), tuple(u), float(c), float(delta), float(lam))

    @property
    def max_steps(self):
        return math.ceil(self.c / self.delta)


@dataclass(frozen=True)
class WringingStep:
    coordinate: int
    symbol: int
    p_event: float
    u_event: float


@dataclass(frozen=True)
class WringingResult:
    coordinates: tuple
    values: tuple
    event_prob: float
    u_event_prob: float
    conditioned: dict = field(repr=False)
    steps: tuple = ()

    @property
    def ell(self):
        return len(self.coordinates)

    def to_dict(self, alphabet=None):
        label = (lambda s: alphabet[s]) if alphabet is not None else (lambda s: s)
        return {
            "ell": self.ell,
            "coordinates": list(self.coordinates),
            "values": [label(v) for v in self.values],
            "event_prob": self.event_prob,
            "conditioned": [
                {"seq": [label(s) for s in seq], "mass": m} for seq, m in self.conditioned.items()
            ],
        }


def _violation(p_marg, u_marg, delta, lam):
    return p_marg > np.maximum((1 + delta) * u_marg, lam) * (1 + RTOL)


def _first_violation(inst, pmask, umask, fixed_coords):
    pm, um = inst.p_mass[pmask], inst.u_mass[umask]
    ps, us = inst.p_seqs[pmask], inst.u_seqs[umask]
    p_total, u_total = pm.sum(), um.sum()
    for k in range(inst.n):
        if k in fixed_coords:
            continue
        syms, inv = np.unique(ps[:, k], return_inverse=True)
        p_marg = np.bincount(inv.ravel(), weights=pm) / p_total
        u_syms, u_inv = np.unique(us[:, k], return_inverse=True)
        u_by_sym = np.bincount(u_inv.ravel(), weights=um) / u_total
        pos = np.searchsorted(u_syms, syms)
        found = (pos < u_syms.size) & (u_syms[np.minimum(pos, u_syms.size - 1)] == syms)
        u_marg = np.where(found, u_by_sym[np.minimum(pos, u_syms.size - 1)], 0.0)
        hits = np.flatnonzero(_violation(p_marg, u_marg, inst.delta, inst.lam))
        if hits.size:
            j = hits[0]
            return k, int(syms[j]), float(u_marg[j])
    return None


def wring(inst):
    """Run the conditioning search and return a verified :class:`WringingResult`.

    While some free coordinate ``k`` and symbol ``x`` have
    ``p(x_k | F) > max((1 + delta) u(x_k | F), lam)``, fix ``X_k = x`` (smallest
    ``k`` first, then smallest symbol id). Each such step multiplies
    ``p(F)/u(F)`` by more than ``1 + delta`` and ``p(F)/u(F) <= 1 + c`` always,
    which bounds the number of steps.
    """
    pmask = np.ones(len(inst.p_mass), dtype=bool)
    umask = np.ones(len(inst.u_mass), dtype=bool)
    fixed = {}
    steps = []
    while True:
        hit = _first_violation(inst, pmask, umask, fixed)
        if hit is None:
            break
        if len(fixed) >= inst.max_steps:
            raise InvariantViolation(
                f"wringing exceeded ceil(c/delta) = {inst.max_steps} steps"
            )
        k, x, u_cond = hit
        if u_cond <= 0:
            raise DomainError(
                f"reference has zero mass on X_{k + 1} = {x} under the current event"
            )
        fixed[k] = x
        pmask &= inst.p_seqs[:, k] == x
        umask &= inst.u_seqs[:, k] == x
        steps.append(
            WringingStep(k + 1, x, float(inst.p_mass[pmask].sum()), float(inst.u_mass[umask].sum()))
        )

    p_event = float(inst.p_mass[pmask].sum())
    u_event = float(inst.u_mass[umask].sum())
    conditioned = {
        tuple(s): float(m / p_event)
        for s, m in zip(inst.p_seqs[pmask].tolist(), inst.p_mass[pmask].tolist())
    }
    result = WringingResult(
        coordinates=tuple(k + 1 for k in fixed),
        values=tuple(fixed.values()),
        event_prob=p_event,
        u_event_prob=u_event,
        conditioned=conditioned,
        steps=tuple(steps),
    )
    cert = verify_wringing(inst, result)
    if not cert.passed:
        raise InvariantViolation(f"wringing certificate failed: {cert.failures}")
    return result


@dataclass(frozen=True)
class WringingCertificate:
    ell_bound: float
    event_prob_bound: float
    worst_margin: float
    failures: tuple

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {
            "passed": self.passed,
            "ell_le_c_over_delta": self.ell_bound,
            "event_prob_lower_bound": self.event_prob_bound,
            "worst_pointwise_margin": self.worst_margin,
            "failures": list(self.failures),
        }


def verify_wringing(inst, result):
    """Exhaustively re-check the three wringing guarantees.

    Works from the raw atoms with dictionaries, independently of the search:
    (I) ``ell <= c/delta``; (II) ``P_p(F) >= lam**ell``; (III) for every free
    coordinate and every alphabet symbol,
    ``p(x_k | F) <= max((1 + delta) u(x_k | F), lam)``.
    """
    failures = []
    fixed = dict(zip((k - 1 for k in result.coordinates), result.values))
    ell = len(fixed)
    if ell > inst.c / inst.delta:
        failures.append(f"(I) ell={ell} > c/delta={inst.c / inst.delta}")

    def in_event(seq):
        return all(seq[k] == x for k, x in fixed.items())

    p_atoms = [(s, m) for s, m in zip(inst.p_seqs.tolist(), inst.p_mass.tolist()) if in_event(s)]
    u_atoms = [(s, m) for s, m in zip(inst.u_seqs.tolist(), inst.u_mass.tolist()) if in_event(s)]
    p_event = math.fsum(m for _, m in p_atoms)
    u_event = math.fsum(m for _, m in u_atoms)
    if p_event < inst.lam**ell * (1 - RTOL):
        failures.append(f"(II) P(F)={p_event} < lam**ell={inst.lam ** ell}")
    worst = -math.inf
    if p_event > 0 and u_event > 0:
        for k in range(inst.n):
            if k in fixed:
                continue
            p_marg = [0.0] * len(inst.alphabet)
            u_marg = [0.0] * len(inst.alphabet)
            for s, m in p_atoms:
                p_marg[s[k]] += m / p_event
            for s, m in u_atoms:
                u_marg[s[k]] += m / u_event
            for x in range(len(inst.alphabet)):
                rhs = max((1 + inst.delta) * u_marg[x], inst.lam)
                worst = max(worst, p_marg[x] - rhs)
                if p_marg[x] > rhs * (1 + RTOL):
                    failures.append(f"(III) k={k + 1} x={x}: {p_marg[x]} > {rhs}")
    else:
        failures.append("conditioning event has zero probability")
    return WringingCertificate(
        ell_bound=inst.c / inst.delta,
        event_prob_bound=inst.lam**ell,
        worst_margin=worst,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Quantized codebook pipeline


@dataclass(frozen=True)
class CertificateCheck:
    name: str
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "passed": self.passed}


@dataclass(frozen=True)
class QuantizedWringingResult:
    support: tuple
    support_t: tuple
    subset: tuple
    wringing: WringingResult
    symbol_alphabet: tuple = field(repr=False)
    reference: dict = field(repr=False)
    checks: tuple = ()
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "subset": list(self.subset),
            "parameters": self.parameters,
            "support": [list(w) for w in self.support],
            "ell": self.wringing.ell,
            "coordinates": list(self.wringing.coordinates),
            "values": [list(self.symbol_alphabet[v]) for v in self.wringing.values],
            "event_prob": self.wringing.event_prob,
            "reference": {
                str(i): [{str(v): m for v, m in letter.items()} for letter in letters]
                for i, letters in self.reference.items()
            },
            "certificate": {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]},
        }


def _check_codebooks(codebooks, powers, rtol=1e-12):
    books = [np.atleast_2d(np.asarray(b, dtype=float)) for b in codebooks]
    p = check_powers(powers)
    if len(books) != p.size:
        raise DomainError(f"{len(books)} codebooks but {p.size} powers")
    n = books[0].shape[1]
    for i, (b, pi) in enumerate(zip(books, p), start=1):
        if b.ndim != 2 or b.shape[1] != n:
            raise DomainError("all codebooks must be matrices with n columns")
        norms = np.einsum("ij,ij->i", b, b)
        if np.any(norms > n * pi * (1 + rtol)):
            raise DomainError(f"codebook {i} violates the peak power constraint n*P={n * pi}")
    return books, p, n


def quantized_code_wringing(codebooks, support, subset, epsilon, powers):
    """Wring the quantized per-letter input distribution of a max-error subcode.

    Parameters
    ----------
    codebooks : list of array-like, shape (M_i, n)
    support : iterable of message tuples
        Subcode support; every tuple must share the same messages outside
        ``subset`` and the uniform mass on its projection must not exceed
        ``2(1+eps)/((1-eps) prod_{i in T} M_i)``.
    subset : iterable of int
        1-based source labels ``T``.
    epsilon : float in [0, 1)
    powers : array-like
        Peak powers ``P_i`` of all sources.

    Returns
    -------
    QuantizedWringingResult
        The wrung subcode support, the per-letter reference marginals
        ``u[i][k]`` over quantized values, and the certificate checks.
    """
    books, p, n = _check_codebooks(codebooks, powers)
    eps = check_probability(epsilon, "epsilon", closed_right=False)
    t = check_subset(subset, len(books))
    if n < 2:
        raise DomainError("n >= 2 is needed so that delta = sqrt(log2(n)/n) is positive")
    sizes = [b.shape[0] for b in books]
    support = tuple(sorted({tuple(int(v) for v in w) for w in support}))
    if not support:
        raise DomainError("support is empty")
    for w in support:
        if len(w) != len(books) or any(not 0 <= wi < m for wi, m in zip(w, sizes)):
            raise DomainError(f"message tuple {w} is out of range for sizes {sizes}")
    tc = [i for i in range(1, len(books) + 1) if i not in t]
    if len({tuple(w[i - 1] for i in tc) for w in support}) != 1:
        raise DomainError("support tuples must share one tail outside the subset")
    support_t = [tuple(w[i - 1] for i in t) for w in support]
    sizes_t = [sizes[i - 1] for i in t]
    if 1 / len(support_t) > float(mass_upper_bound(eps, sizes_t)) * (1 + RTOL):
        raise DomainError("uniform support mass exceeds 2(1+eps)/((1-eps) prod M_T)")

    specs = {i: code_quantizer_spec(n, p[i - 1]) for i in t}
    q_idx = {i: quantize_index(specs[i], books[i - 1]) + specs[i].levels for i in t}
    radix = [specs[i].size for i in t]

    def encode(rows):
        # rows[j] has shape (..., n) of shifted grid indices for source t[j].
        code = np.zeros_like(rows[0])
        for r, base in zip(rows, radix):
            code = code * base + r
        return code

    def decode(sym):
        out = []
        for i, base in zip(reversed(t), reversed(radix)):
            sym, r = divmod(sym, base)
            out.append(float((r - specs[i].levels) * specs[i].precision))
        return tuple(reversed(out))

    wt = np.array(support_t, dtype=np.int64)
    p_seqs = encode([q_idx[i][wt[:, j]] for j, i in enumerate(t)])
    p_mass = np.full(len(support_t), 1.0 / len(support_t))
    grids = np.meshgrid(*(np.arange(m) for m in sizes_t), indexing="ij")
    combos = [g.ravel() for g in grids]
    u_seqs = encode([q_idx[i][combos[j]] for j, i in enumerate(t)])
    u_mass = np.full(len(combos[0]), 1.0 / math.prod(sizes_t))

    symbols = np.unique(np.concatenate([p_seqs.ravel(), u_seqs.ravel()]))
    relabel = {int(s): j for j, s in enumerate(symbols.tolist())}
    to_local = np.vectorize(relabel.__getitem__, otypes=[np.int64])
    alphabet = tuple(decode(int(s)) for s in symbols)

    c = (1 + 3 * eps) / (1 - eps)
    lam = float(n) ** (-4 * len(t))
    delta = math.sqrt(math.log2(n) / n)
    inst = ProductApproxInstance.from_arrays(
        n, alphabet, to_local(p_seqs), p_mass, to_local(u_seqs), u_mass, c, delta, lam
    )
    wr = wring(inst)

    fixed = {k - 1: symbols[v] for k, v in zip(wr.coordinates, wr.values)}
    in_event = np.ones(len(support_t), dtype=bool)
    for k, sym in fixed.items():
        in_event &= p_seqs[:, k] == sym
    new_support = tuple(w for w, keep in zip(support, in_event) if keep)
    new_support_t = tuple(w for w, keep in zip(support_t, in_event) if keep)
    if not new_support:
        raise InvariantViolation("wrung subcode is empty")

    # Per-source reference: uniform codeword of source i, conditioned on its
    # own coordinates of the fixed symbols, read off letter by letter.
    reference = {}
    for j, i in enumerate(t):
        digits = {}
        for k, sym in fixed.items():
            parts = []
            s = int(sym)
            for base in reversed(radix):
                s, r = divmod(s, base)
                parts.append(r)
            digits[k] = list(reversed(parts))[j]
        rows = np.ones(sizes[i - 1], dtype=bool)
        for k, d in digits.items():
            rows &= q_idx[i][:, k] == d
        if not rows.any():
            raise InvariantViolation(f"reference for source {i} has an empty event")
        vals = specs[i].value(q_idx[i][rows] - specs[i].levels)
        letters = []
        for k in range(n):
            v, cnt = np.unique(vals[:, k], return_counts=True)
            letters.append(dict(zip(v.tolist(), (cnt / cnt.sum()).tolist())))
        reference[i] = letters

    checks = _lemma_checks(
        n, t, p, sizes_t, eps, delta, lam, c, wr, new_support_t, books, specs, reference, inst
    )
    result = QuantizedWringingResult(
        support=new_support,
        support_t=new_support_t,
        subset=t,
        wringing=wr,
        symbol_alphabet=alphabet,
        reference=reference,
        checks=checks,
        parameters={"n": n, "epsilon": eps, "c": c, "delta": delta, "lambda": lam},
    )
    if not result.passed:
        failed = [c.name for c in checks if not c.passed]
        raise InvariantViolation(f"quantized wringing certificate failed: {failed}")
    return result


def _lemma_checks(n, t, p, sizes_t, eps, delta, lam, c, wr, support_t, books, specs, reference, inst):
    checks = []
    log2n = math.log2(n)
    base = math.log2((1 - eps) / (2 * (1 + eps))) + sum(math.log2(m) for m in sizes_t)
    size_exponent = -4 * len(t) * c / delta * log2n
    checks.append(
        CertificateCheck(
            "subcode_size_vs_n_power",
            math.log2(len(support_t)),
            size_exponent + base,
            math.log2(len(support_t)) >= size_exponent + base - RTOL,
        )
    )
    checks.append(
        CertificateCheck(
            "subcode_size_vs_lambda_power",
            math.log2(len(support_t)),
            -4 * len(t) * wr.ell * log2n + base,
            math.log2(len(support_t)) >= -4 * len(t) * wr.ell * log2n + base - RTOL,
        )
    )
    cert = verify_wringing(inst, wr)
    checks.append(CertificateCheck("wringing_steps", wr.ell, cert.ell_bound, wr.ell <= cert.ell_bound))
    checks.append(
        CertificateCheck(
            "wringing_event_prob",
            wr.event_prob,
            cert.event_prob_bound,
            wr.event_prob >= cert.event_prob_bound * (1 - RTOL),
        )
    )

    # Per-letter domination of the subcode's quantized symbols by the product
    # reference. Tuples outside the support have p = 0 < lam, so only support
    # symbols can fail.
    worst = -math.inf
    ok = True
    wt = np.array(support_t, dtype=np.int64)
    for k in range(n):
        vals = np.stack(
            [specs[i].value(quantize_index(specs[i], books[i - 1][wt[:, j], k])) for j, i in enumerate(t)],
            axis=1,
        )
        uniq, cnt = np.unique(vals, axis=0, return_counts=True)
        for sym, count in zip(uniq.tolist(), cnt.tolist()):
            pk = count / len(support_t)
            prod_u = math.prod(reference[i][k].get(v, 0.0) for i, v in zip(t, sym))
            rhs = max((1 + delta) * prod_u, lam)
            worst = max(worst, pk - rhs)
            ok &= pk <= rhs * (1 + RTOL)
    checks.append(CertificateCheck("per_letter_domination", worst, 0.0, ok))

    second_moment = math.fsum(
        v * v * m for i in t for letter in reference[i] for v, m in letter.items()
    )
    power_budget = math.fsum(n * p[i - 1] for i in t)
    checks.append(
        CertificateCheck(
            "reference_power", second_moment, power_budget, second_moment <= power_budget * (1 + RTOL)
        )
    )
    alpha_size = math.prod(specs[i].size for i in t)
    alpha_bound = alphabet_size_bound(n, [p[i - 1] for i in t])
    checks.append(CertificateCheck("alphabet_size", alpha_size, alpha_bound, alpha_size <= alpha_bound))
    return tuple(checks)
