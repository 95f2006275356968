import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import wringing_check
from strongmac.exceptions import DomainError
from strongmac.wringing import (
    ProductApproxInstance,
    quantized_code_wringing,
    verify_wringing,
    wring,
)


def check_result(inst, res):
    fixed = {k - 1: x for k, x in zip(res.coordinates, res.values)}
    p = list(zip(map(tuple, inst.p_seqs.tolist()), inst.p_mass.tolist()))
    u = list(zip(map(tuple, inst.u_seqs.tolist()), inst.u_mass.tolist()))
    return wringing_check(p, u, len(inst.alphabet), fixed, inst.c, inst.delta, inst.lam)


def test_single_letter_example():
    inst = ProductApproxInstance(1, (0, 1), (((0,), 0.8), ((1,), 0.2)), (((0,), 0.5), ((1,), 0.5)), 0.6, 0.2, 0.1)
    res = wring(inst)
    assert res.ell == 1 and res.coordinates == (1,) and res.values == (0,)
    assert res.event_prob == pytest.approx(0.8)
    assert verify_wringing(inst, res).passed
    assert check_result(inst, res) == []


def product_atoms(n, marg):
    return tuple(
        (seq, math.prod(marg[s] for s in seq)) for seq in itertools.product(range(len(marg)), repeat=n)
    )


@pytest.mark.parametrize("n", [1, 2, 3])
def test_p_equals_u_needs_no_conditioning(n):
    atoms = product_atoms(n, [0.2, 0.3, 0.5])
    res = wring(ProductApproxInstance(n, (0, 1, 2), atoms, atoms, 1.0, 0.5, 0.01))
    assert res.ell == 0


def test_domination_checked():
    with pytest.raises(DomainError):
        ProductApproxInstance(1, (0, 1), (((0,), 1.0),), (((0,), 0.1), ((1,), 0.9)), 1.0, 0.5, 0.1)


@pytest.mark.parametrize(
    "c,delta,lam", [(1.0, 1.0, 0.1), (1.0, 0.0, 0.1), (1.0, 0.5, 1.0), (-1.0, 0.5, 0.1)]
)
def test_parameter_ranges(c, delta, lam):
    atoms = (((0,), 1.0),)
    with pytest.raises(DomainError):
        ProductApproxInstance(1, (0,), atoms, atoms, c, delta, lam)


@st.composite
def instances(draw):
    n = draw(st.integers(1, 4))
    k = draw(st.integers(1, 3))
    seqs = list(itertools.product(range(k), repeat=n))
    u_w = np.array(draw(st.lists(st.integers(1, 9), min_size=len(seqs), max_size=len(seqs))), float)
    u = u_w / u_w.sum()
    c = draw(st.floats(0.05, 3))
    # p = u * f with f in [0, 1 + c], renormalized; rescale f so domination holds.
    f = np.array(draw(st.lists(st.floats(0, 1), min_size=len(seqs), max_size=len(seqs))))
    f = f ** draw(st.sampled_from([1, 3, 8]))
    if f @ u == 0:
        f[0] = 1.0
    p = u * f / (u @ f)
    scale = np.max(p / u)
    if scale > 1 + c:
        c = float(scale * (1 + 1e-9)) - 1
    delta = draw(st.floats(0.01, 0.99)) * c
    lam = draw(st.floats(1e-4, 0.5))
    keep = p > 0
    return ProductApproxInstance(
        n,
        tuple(range(k)),
        tuple(zip(map(tuple, np.array(seqs)[keep].tolist()), p[keep].tolist())),
        tuple(zip(map(tuple, seqs), u.tolist())),
        c,
        delta,
        lam,
    )


@given(instances())
def test_random_instances_certified(inst):
    res = wring(inst)
    assert verify_wringing(inst, res).passed
    assert check_result(inst, res) == []
    assert res.ell * inst.delta <= inst.c


@given(instances())
def test_potential_grows_each_step(inst):
    res = wring(inst)
    prev = 1.0
    for step in res.steps:
        ratio = step.p_event / step.u_event
        assert ratio > (1 + inst.delta) * prev * (1 - 1e-12)
        prev = ratio
    assert prev <= (1 + inst.c) * (1 + 1e-9)


def pm1_books():
    b = np.array([[1.0, 1.0], [-1.0, -1.0]])
    return [b, b.copy()]


def test_quantized_all_zero_codebooks():
    res = quantized_code_wringing([np.zeros((2, 2))] * 2, list(itertools.product(range(2), repeat=2)), [1, 2], 0.0, [1, 1])
    assert res.wringing.ell == 0
    assert res.reference[1] == [{0.0: 1.0}, {0.0: 1.0}]
    assert res.passed


def test_quantized_independent_support_is_product():
    res = quantized_code_wringing(pm1_books(), list(itertools.product(range(2), repeat=2)), [1, 2], 0.0, [1, 1])
    assert res.wringing.ell == 0
    assert res.passed


def test_quantized_correlated_support_conditions():
    res = quantized_code_wringing(pm1_books(), [(0, 0), (1, 1)], [1, 2], 0.0, [1, 1])
    assert res.wringing.ell >= 1
    assert res.passed
    assert res.wringing.coordinates == (1,)
    assert res.support == ((1, 1),)
    checks = {c.name: c for c in res.checks}
    assert checks["alphabet_size"].lhs == 49


def _letter_domination(support, books, fixed, delta, lam):
    """Per-letter domination of the subcode by the conditioned product reference."""
    keep = [w for w in support if all(tuple(b[wi, k] for b, wi in zip(books, w)) == x for k, x in fixed.items())]
    if not keep:
        return None
    refs = []
    for i, b in enumerate(books):
        rows = [r for r in range(len(b)) if all(b[r, k] == x[i] for k, x in fixed.items())]
        refs.append(rows)
    for k in range(books[0].shape[1]):
        for w in keep:
            sym = tuple(b[wi, k] for b, wi in zip(books, w))
            pk = sum(1 for v in keep if tuple(b[vi, k] for b, vi in zip(books, v)) == sym) / len(keep)
            uk = math.prod(sum(1 for r in refs[i] if books[i][r, k] == sym[i]) / len(refs[i]) for i in range(len(books)))
            if pk > max((1 + delta) * uk, lam):
                return False
    return True


def test_quantized_all_conditionings_brute_force():
    books = pm1_books()
    support = [(0, 0), (1, 1)]
    res = quantized_code_wringing(books, support, [1, 2], 0.0, [1, 1])
    delta, lam = res.parameters["delta"], res.parameters["lambda"]
    # Without conditioning the per-letter joint is not dominated.
    assert _letter_domination(support, books, {}, delta, lam) is False
    # Every feasible single-coordinate conditioning restores domination.
    for k in range(2):
        for sym in [(1.0, 1.0), (-1.0, -1.0)]:
            assert _letter_domination(support, books, {k: sym}, delta, lam) is True
    assert res.wringing.ell == 1


def test_quantized_power_violation():
    with pytest.raises(DomainError):
        quantized_code_wringing([np.full((2, 2), 2.0)] * 2, [(0, 0)], [1, 2], 0.0, [1, 1])


def test_quantized_mass_precondition():
    with pytest.raises(DomainError):
        quantized_code_wringing(pm1_books(), [(0, 0)], [1, 2], 0.0, [1, 1])


def test_quantized_tail_must_be_shared():
    books = [np.array([[1.0, 0.0], [0.0, 1.0]])] * 2
    with pytest.raises(DomainError):
        quantized_code_wringing(books, [(0, 0), (0, 1)], [1], 0.0, [1, 1])


def test_quantized_subset_of_sources():
    rng = np.random.default_rng(3)
    books = []
    for m in (4, 3):
        x = rng.standard_normal((m, 3))
        books.append(x / np.linalg.norm(x, axis=1, keepdims=True) * math.sqrt(3))
    support = [(w1, 2) for w1 in range(4)]
    res = quantized_code_wringing(books, support, [1], 0.2, [1, 1])
    assert res.passed
    assert all(w[1] == 2 for w in res.support)
