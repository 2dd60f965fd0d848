import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sflab.sl2z import (IDENTITY, INFINITE_ORDER, NEG_IDENTITY, IntMatrix2,
                        KodairaType, classify, euler_number,
                        invariant_vector_rank, order, representative)

ALL_TYPES = ([KodairaType("I", b) for b in range(4)]
             + [KodairaType("Istar", b) for b in range(4)]
             + [KodairaType(t) for t in
                ("II", "III", "IV", "IIstar", "IIIstar", "IVstar")])


def random_unimodular(rng, factors=3, span=5):
    P = IDENTITY
    for _ in range(factors):
        k = int(rng.integers(-span, span + 1))
        if rng.integers(2):
            P = P @ IntMatrix2(1, k, 0, 1)
        else:
            P = P @ IntMatrix2(1, 0, k, 1)
    return P


def test_determinant_enforced():
    with pytest.raises(ValueError):
        IntMatrix2(1, 0, 0, 2)


def test_int64_overflow_detected():
    big = 2 ** 62
    A = IntMatrix2(big, big - 1, big + 1, big)  # det = 1
    with pytest.raises(OverflowError):
        A @ A


def test_orders():
    assert order(IDENTITY) == 1
    assert order(NEG_IDENTITY) == 2
    assert order(IntMatrix2(1, 1, 0, 1)) is INFINITE_ORDER
    assert order(IntMatrix2(0, 1, -1, 1)) == 6   # II
    assert order(IntMatrix2(0, 1, -1, 0)) == 4   # III
    assert order(IntMatrix2(-1, 1, -1, 0)) == 3  # IV


def test_invariant_rank():
    assert invariant_vector_rank(IDENTITY) == (2, None)
    rank, v = invariant_vector_rank(IntMatrix2(1, 3, 0, 1))
    assert rank == 1 and v == (1, 0)
    assert IntMatrix2(1, 3, 0, 1).apply(v) == v
    assert invariant_vector_rank(IntMatrix2(0, 1, -1, 0))[0] == 0


def test_classify_representatives_round_trip():
    for t in ALL_TYPES:
        cls = classify(representative(t))
        assert cls.kodaira_type == t


def test_classify_conjugation_invariant():
    rng = np.random.default_rng(7)
    for t in ALL_TYPES:
        A = representative(t)
        for _ in range(50):
            P = random_unimodular(rng)
            cls = classify(P @ A @ P.inv())
            assert cls.kodaira_type == t


def test_conjugator_is_witness():
    rng = np.random.default_rng(11)
    for t in ALL_TYPES:
        A = representative(t)
        for _ in range(10):
            P = random_unimodular(rng)
            B = P @ A @ P.inv()
            cls = classify(B)
            if cls.conjugator is not None:
                Q = cls.conjugator
                assert Q @ representative(cls.kodaira_type) @ Q.inv() == B


def test_negative_parabolic_b():
    cls = classify(IntMatrix2(1, -2, 0, 1))
    assert cls.kodaira_type == KodairaType("I", 2)
    assert cls.parabolic_b == -2


def test_euler_numbers():
    assert euler_number(KodairaType("I", 3)) == 3
    assert euler_number(KodairaType("Istar", 2)) == 8
    with pytest.raises(ValueError):
        euler_number(KodairaType("II"))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ALL_TYPES),
       st.lists(st.tuples(st.booleans(), st.integers(-9, 9)),
                min_size=0, max_size=4))
def test_classification_is_conjugacy_invariant_property(t, word):
    P = IDENTITY
    for upper, k in word:
        P = P @ (IntMatrix2(1, k, 0, 1) if upper else IntMatrix2(1, 0, k, 1))
    B = P @ representative(t) @ P.inv()
    cls = classify(B)
    assert cls.kodaira_type == t
    assert order(B) == order(representative(t))


def test_type_parse_str_round_trip():
    for t in ALL_TYPES:
        assert KodairaType.parse(str(t)) == t
    assert str(KodairaType("Istar", 2)) == "I_2*"
    with pytest.raises(ValueError):
        KodairaType.parse("V")
