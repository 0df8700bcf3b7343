import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtsp.encodings import h_valid_hobo
from qtsp.polynomial import (BinaryPolynomial, IsingPolynomial, add, evaluate, evaluate_all, mul, order,
                             sum_polys, term_count, to_ising)

from conftest import all_bits

b = BinaryPolynomial.var
one = BinaryPolynomial.const(1.0)


def random_poly(rng, n, nterms=12, max_order=4):
    terms = {}
    for _ in range(nterms):
        size = int(rng.integers(0, max_order + 1))
        idx = tuple(rng.choice(n, size=min(size, n), replace=False))
        terms[idx] = float(rng.integers(-5, 6))
    return BinaryPolynomial(terms, num_vars=n)


def brute_eval(p, bits):
    total = 0.0
    for idx, c in p.terms.items():
        v = c
        for i in idx:
            v *= bits[i]
        total += v
    return total


poly_strategy = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.just(n),
    st.dictionaries(st.frozensets(st.integers(0, n - 1), max_size=n).map(tuple),
                    st.integers(-4, 4).map(float), max_size=10)))


def test_add_examples():
    assert (b(0) + b(1)) + (-b(1)) == b(0)
    p = b(0) * 3 + b(2)
    assert p + BinaryPolynomial() == p
    sq = mul(one - b(0), one - b(0))
    twice = add(sq, sq)
    for v in (0, 1):
        assert evaluate(twice, [v]) == 2 - 2 * v
    assert twice == 2.0 * one - 2.0 * b(0)


def test_mul_examples():
    assert mul(b(0), b(0)) == b(0)
    assert mul(one - b(0), one - b(0)) == one - b(0)
    d = b(0) - b(1)
    assert mul(d, d) == b(0) + b(1) - 2.0 * mul(b(0), b(1))


def test_evaluate_examples():
    assert evaluate(mul(b(0), b(1)), [1, 1]) == 1
    with pytest.raises(ValueError):
        evaluate(mul(b(0), b(3)), [1, 1])


def test_prefix_penalty_example():
    # N - 1 = 100101b; the displayed penalty punishes codes above it
    expected = (mul(b(5), b(4)) + mul(mul(b(5), one - b(4)), b(3))
                + mul(mul(mul(mul(b(5), one - b(4)), one - b(3)), b(2)), b(1)))
    p = h_valid_hobo(38, 6)
    assert p == expected.with_num_vars(6)
    bits = lambda v: [(v >> i) & 1 for i in range(6)]
    assert evaluate(p, bits(0b110000)) == 1
    assert evaluate(p, bits(0b100101)) == 0


def test_to_ising_examples():
    z = to_ising(b(0))
    assert z.terms == {(): 0.5, (0,): -0.5}
    z = to_ising(mul(b(0), b(1)))
    assert z.terms == {(): 0.25, (0,): -0.25, (1,): -0.25, (0, 1): 0.25}
    for n in (1, 2, 3, 5):
        prod = BinaryPolynomial({tuple(range(n)): 2.0 ** n})
        z = to_ising(prod)
        assert term_count(z) == 2 ** n
        for subset, c in z.terms.items():
            assert c == (-1) ** len(subset)


def test_counts_and_order():
    zero = BinaryPolynomial()
    assert term_count(zero) == 0 and order(zero) == 0
    d = b(0) - b(1)
    assert order(mul(d, d)) == 2
    assert term_count(to_ising(BinaryPolynomial({(0, 1, 2): 8.0}))) == 8


def test_canonical_form():
    p = BinaryPolynomial({(1, 0, 1): 2.0, (0, 1): -2.0, (2,): 0.0, (): 1.0})
    assert p.terms == {(): 1.0}
    with pytest.raises(ValueError):
        BinaryPolynomial({(3,): 1.0}, num_vars=2)
    assert all(c != 0 for c in (b(0) * 1e-14 + b(1)).terms.values())
    assert (b(0) * 1e-14).is_zero()


def test_json_round_trip(rng):
    p = random_poly(rng, 70, nterms=30)
    q = BinaryPolynomial.from_json(p.to_json())
    assert q == p and q.num_vars == 70


@given(poly_strategy, poly_strategy)
@settings(max_examples=60, deadline=None)
def test_add_mul_homomorphism(pa, pb):
    n = max(pa[0], pb[0])
    p = BinaryPolynomial(pa[1], num_vars=n)
    q = BinaryPolynomial(pb[1], num_vars=n)
    for bits in itertools.product((0, 1), repeat=n):
        assert evaluate(add(p, q), bits) == pytest.approx(brute_eval(p, bits) + brute_eval(q, bits), abs=1e-9)
        assert evaluate(mul(p, q), bits) == pytest.approx(brute_eval(p, bits) * brute_eval(q, bits), abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_homomorphism_ten_vars(seed):
    rng = np.random.default_rng(seed)
    p, q = random_poly(rng, 10), random_poly(rng, 10)
    bits = all_bits(10)
    vp = np.array([brute_eval(p, r) for r in bits])
    vq = np.array([brute_eval(q, r) for r in bits])
    np.testing.assert_allclose(evaluate_all(add(p, q)), vp + vq, atol=1e-9)
    np.testing.assert_allclose(evaluate_all(mul(p, q)), vp * vq, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_ising_round_trip(seed):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, 10, nterms=20, max_order=6)
    z = to_ising(p)
    assert isinstance(z, IsingPolynomial)
    for r in all_bits(10)[:: 7]:
        assert z.evaluate_bits(r) == pytest.approx(brute_eval(p, r), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_canonical_form_is_unique(seed):
    rng = np.random.default_rng(seed)
    p, q, r = (random_poly(rng, 8) for _ in range(3))
    left = mul(p, add(q, r))
    right = sum_polys([mul(p, q), mul(r, p)])
    assert left.almost_equal(right, 1e-9)
    diff = add(left, -right)
    assert np.allclose(evaluate_all(diff, 8), 0.0)
    assert all(abs(c) < 1e-9 for c in diff.terms.values())


def test_zero_function_has_no_terms():
    # (b0 - b1)^2 - (b0 xor b1) vanishes on every assignment
    d = b(0) - b(1)
    xor = b(0) + b(1) - 2.0 * mul(b(0), b(1))
    assert add(mul(d, d), -xor).is_zero()


def test_evaluate_all_matches_pointwise(rng):
    p = random_poly(rng, 9, nterms=25)
    table = evaluate_all(p)
    for i, r in enumerate(all_bits(9)):
        assert table[i] == pytest.approx(brute_eval(p, r))
