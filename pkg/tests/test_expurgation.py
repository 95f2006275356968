import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from strongmac.exceptions import DomainError
from strongmac.expurgation import (
    CodeErrorProfile,
    check_expurgation,
    expurgate,
    kept_count,
    precondition_holds,
)


def test_worked_example():
    prof = CodeErrorProfile((2, 2), [0.1, 0.2, 0.9, 0.95])
    res = expurgate(prof, 0.6, [1, 2])
    assert res.kept == 1
    assert res.support == ((0, 0),)
    assert res.max_error <= 0.8


def test_zero_error_code_majority_tail():
    prof = CodeErrorProfile((3, 4), np.zeros(12))
    res = expurgate(prof, 0.0, [1])
    assert res.tail == (0,)
    assert res.support_t == ((0,), (1,), (2,))
    assert res.max_error == 0


def test_average_above_epsilon():
    with pytest.raises(DomainError):
        expurgate(CodeErrorProfile((2, 2), [0.7] * 4), 0.5, [1, 2])


def test_precondition_failure():
    # floor(0.1/1.9 * 4) = 0 < 0.1/3.8 * 4
    assert not precondition_holds(0.9, [4])
    with pytest.raises(DomainError):
        expurgate(CodeErrorProfile((2, 2), [0.0] * 4), 0.9, [1, 2])


def test_kept_count_exact():
    assert kept_count(Fraction(1, 3), [3, 3]) == 4
    assert kept_count(0.0, [5, 7]) == 35


profiles = st.tuples(
    st.lists(st.integers(1, 4), min_size=1, max_size=3),
    st.floats(0, 0.8),
    st.data(),
)


@given(profiles)
def test_guarantees_on_random_profiles(args):
    sizes, eps, data = args
    count = math.prod(sizes)
    raw = np.array(data.draw(st.lists(st.floats(0, 1), min_size=count, max_size=count)))
    # Rescale so the average error is at most eps.
    if raw.mean() > eps:
        raw = raw * (eps / raw.mean()) if raw.mean() > 0 else raw
    raw = np.clip(raw, 0, 1)
    assume(raw.mean() <= eps)
    t = data.draw(st.sets(st.integers(1, len(sizes)), min_size=1))
    sizes_t = [sizes[i - 1] for i in t]
    assume(precondition_holds(eps, sizes_t))
    res = expurgate(CodeErrorProfile(tuple(sizes), raw), eps, sorted(t))
    assert check_expurgation(CodeErrorProfile(tuple(sizes), raw), res)
    assert res.max_error <= (1 + eps) / 2 + 1e-12
    assert len(res.support) >= (1 - eps) / (2 * (1 + eps)) * math.prod(sizes_t) - 1e-9
    assert 1 / len(res.support) <= 2 * (1 + eps) / ((1 - eps) * math.prod(sizes_t)) + 1e-12


@given(st.lists(st.floats(0, 1), min_size=4, max_size=12), st.floats(0, 0.9))
def test_markov_rank(errors, eps):
    e = np.array(errors)
    assume(e.mean() <= eps)
    k = kept_count(eps, [len(e)])
    if k:
        assert np.sort(e)[k - 1] <= (1 + eps) / 2 + 1e-12


def test_deterministic():
    rng = np.random.default_rng(1)
    e = rng.random(24) * 0.2
    prof = CodeErrorProfile((2, 3, 4), e)
    assert expurgate(prof, 0.2, [1, 3]) == expurgate(prof, 0.2, [1, 3])


def test_ties_lexicographic():
    prof = CodeErrorProfile((2, 2), [0.0, 0.0, 0.0, 0.0])
    assert expurgate(prof, 0.5, [1, 2]).support == ((0, 0),)
