import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import beta_grid, beta_lp
from strongmac.bht import (
    FiniteDistribution,
    beta,
    beta_lower_bound,
    verify_decoding_bound,
    verify_dpi,
)
from strongmac.exceptions import DomainError


def dist(size):
    return st.lists(st.integers(0, 20), min_size=size, max_size=size).filter(sum).map(
        lambda w: [v / sum(w) for v in w]
    )


pairs = st.integers(1, 6).flatmap(lambda k: st.tuples(dist(k), dist(k)))
deltas = st.floats(0, 1)


def test_examples():
    assert beta(0.3, [0.5, 0.5], [0.5, 0.5])[0] == pytest.approx(0.3, abs=1e-15)
    assert beta(1.0, [1, 0], [0.5, 0.5])[0] == pytest.approx(0.5, abs=1e-15)
    value, test = beta(0.7, [0.7, 0.3], [0.4, 0.6])
    assert value == pytest.approx(0.4, abs=1e-15)
    assert test.accept_prob.tolist() == [1.0, 0.0]


def test_example_against_grid():
    assert beta(0.7, [0.7, 0.3], [0.4, 0.6])[0] == pytest.approx(beta_grid(0.7, [0.7, 0.3], [0.4, 0.6]), abs=1 / 64)


def test_rejects_bad_input():
    with pytest.raises(DomainError):
        beta(0.5, [1.0], [0.5, 0.5])
    with pytest.raises(DomainError):
        beta(1.5, [1.0], [1.0])
    with pytest.raises(DomainError):
        FiniteDistribution([0.5, 0.4])


@given(pairs, deltas)
def test_matches_lp_optimum(pq, delta):
    p, q = pq
    value, test = beta(delta, p, q)
    assert value == pytest.approx(beta_lp(delta, p, q), abs=1e-10)
    assert test.power(p) >= delta - 1e-12
    assert test.type2(q) == pytest.approx(value, abs=1e-15)
    assert np.sum((test.accept_prob > 0) & (test.accept_prob < 1)) <= 1


@given(st.integers(1, 3).flatmap(lambda k: st.tuples(dist(k), dist(k))), deltas)
def test_matches_grid_bruteforce(pq, delta):
    p, q = pq
    value, _ = beta(delta, p, q)
    grid = beta_grid(delta, p, q)
    assert value <= grid + 1e-12
    assert grid - value <= max(q) / 64 * len(p) + 1e-12


@given(pairs, deltas)
def test_tie_order_irrelevant(pq, delta):
    p, q = pq
    assert beta(delta, p, q)[0] == pytest.approx(beta(delta, p, q, reverse_ties=True)[0], abs=1e-12)


@given(pairs, st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_delta(pq, d1, d2):
    p, q = pq
    lo, hi = sorted((d1, d2))
    assert beta(lo, p, q)[0] <= beta(hi, p, q)[0] + 1e-12


@given(pairs)
def test_endpoints(pq):
    p, q = pq
    assert beta(0, p, q)[0] == 0
    support_mass = sum(qi for pi, qi in zip(p, q) if pi > 0)
    assert beta(1, p, q)[0] == pytest.approx(support_mass, abs=1e-12)


@given(pairs, deltas, st.data())
def test_dpi(pq, delta, data):
    p, q = pq
    g = data.draw(st.lists(st.integers(0, 2), min_size=len(p), max_size=len(p)))
    holds, b0, b1 = verify_dpi(p, q, g, delta)
    assert holds and b0 <= b1 + 1e-12


def test_dpi_examples():
    holds, b0, b1 = verify_dpi([0.2, 0.3, 0.5], [0.6, 0.3, 0.1], [0, 1, 2], 0.4)
    assert holds and b0 == pytest.approx(b1, abs=1e-15)
    holds, b0, b1 = verify_dpi([0.2, 0.3, 0.5], [0.6, 0.3, 0.1], [0, 0, 0], 0.5)
    assert holds and b1 == pytest.approx(0.5)


@given(pairs, deltas, st.floats(0.01, 100))
def test_lower_bound_below_beta(pq, delta, xi):
    p, q = pq
    assert beta_lower_bound(delta, p, q, xi) <= beta(delta, p, q)[0] + 1e-12


def test_lower_bound_examples():
    assert beta_lower_bound(0.5, [0.5, 0.5], [0.5, 0.5], 2) == pytest.approx(0.25)
    assert beta_lower_bound(0.7, [0.7, 0.3], [0.4, 0.6], 1.75) == pytest.approx(0.0, abs=1e-15)
    assert beta_lower_bound(0.0, [0.7, 0.3], [0.4, 0.6], 0.5) <= 0


def test_decoding_bound_examples():
    m = 4
    rep = verify_decoding_bound(np.eye(m) / m, np.full(m, 1 / m))
    assert rep.alpha == 0
    assert all(r.beta == pytest.approx(r.q_u) for r in rep.rows)
    joint = np.array([[0.45, 0.05], [0.05, 0.45]])
    rep = verify_decoding_bound(joint, [0.5, 0.5])
    assert rep.alpha == pytest.approx(0.1)
    assert rep.holds
    with pytest.raises(DomainError):
        verify_decoding_bound(np.array([[0.0, 0.5], [0.0, 0.5]]), [0.5, 0.5])


@given(st.integers(2, 5).flatmap(lambda m: st.tuples(
    st.lists(st.floats(0.5, 1), min_size=m, max_size=m), dist(m))))
def test_decoding_bound_random(args):
    diag, qv = args
    m = len(diag)
    cond = np.array([[d if u == v else (1 - d) / (m - 1) for v in range(m)] for u, d in enumerate(diag)])
    assert verify_decoding_bound(cond / m, qv).holds
