import itertools
import json
import math

import numpy as np
import pytest

from qtsp.encodings import (Encoding, Route, TspInstance, brute_force_tsp, ceil_log2, encode, encode_enum,
                            encode_hobo, encode_mixed, encode_qubo, h_valid_hobo, index_to_permutation,
                            permutation_to_index, random_instance)
from qtsp.polynomial import evaluate

from conftest import optimal_tours, tour_cost


def code_bits(v, k):
    return [(v >> i) & 1 for i in range(k)]


# ---------------------------------------------------------------- instances

def test_instance_validation():
    w = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], float)
    TspInstance(3, w, 3.1, 3.1, 1.0)
    with pytest.raises(ValueError):
        TspInstance(3, w, 3.0, 3.1, 1.0)  # a1 not above B*max W
    with pytest.raises(ValueError):
        TspInstance(3, w + np.eye(3), 5, 5, 1.0)
    asym = w.copy()
    asym[0, 1] = 2
    with pytest.raises(ValueError):
        TspInstance(3, asym, 5, 5, 1.0)
    with pytest.raises(ValueError):
        TspInstance(3, -w, 5, 5, 1.0)
    TspInstance.zero(3)  # W == 0 with unit penalties is allowed


def test_instance_json_round_trip():
    inst = random_instance(5, 3)
    back = TspInstance.from_json(json.dumps(inst.to_json()))
    assert np.array_equal(back.w, inst.w) and back.a1 == inst.a1 and back.b == inst.b


def test_random_instance_properties():
    assert np.array_equal(random_instance(5, 9).w, random_instance(5, 9).w)
    for seed in range(100):
        w = random_instance(6, seed).w
        assert np.array_equal(w, w.T)
        assert np.all(np.diag(w) == 0)
        off = w[~np.eye(6, dtype=bool)]
        assert off.min() >= 0 and off.max() <= 2
    big = random_instance(60, 1).w[~np.eye(60, dtype=bool)]
    assert 0.9 < big.mean() < 1.1  # mean of X + X^T is 1


def test_route_validation():
    assert Route((2, 0, 1)).order == (2, 0, 1)
    with pytest.raises(ValueError):
        Route((0, 0, 1))


# ---------------------------------------------------------------- QUBO

def test_qubo_zero_weights():
    p = encode_qubo(TspInstance.zero(3))
    assert p.num_qubits == 9
    table = p.energy_table()
    zeros = np.flatnonzero(table == 0)
    assert len(zeros) == 6
    routes = {p.decode(int(i)).order for i in zeros}
    assert routes == set(itertools.permutations(range(3)))
    assert p.hamiltonian.order() == 2


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_qubo_term_count(n):
    assert encode_qubo(random_instance(n, n)).hamiltonian.term_count() == 2 * n ** 3 - n ** 2 + 1


def test_qubo_term_count_zero_weights():
    # without the objective only the penalty terms remain: N^2 + 1 + 2N*C(N,2)
    for n in (3, 4):
        assert encode_qubo(TspInstance.zero(n)).hamiltonian.term_count() == n ** 3 + 1


@pytest.mark.parametrize("n", [3, 4])
def test_qubo_redundancy(n):
    free = encode_qubo(TspInstance.zero(n))
    fixed = encode_qubo(TspInstance.zero(n), fix_first_city=True)
    assert fixed.num_qubits == (n - 1) ** 2
    assert int((free.energy_table() == 0).sum()) == math.factorial(n)
    zero_fixed = np.flatnonzero(fixed.energy_table() == 0)
    assert len(zero_fixed) == math.factorial(n - 1)
    assert all(fixed.decode(int(i)).order[0] == 0 for i in zero_fixed)


def test_qubo_n2_uses_both_orientations():
    w = np.array([[0, 1.5], [1.5, 0]])
    p = encode_qubo(TspInstance(2, w, 2, 2, 1))
    for order in ((0, 1), (1, 0)):
        bits = [0] * 4
        for t, c in enumerate(order):
            bits[t * 2 + c] = 1
        assert p.energy(bits) == pytest.approx(3.0)


# ---------------------------------------------------------------- HOBO

def test_h_valid_examples():
    assert h_valid_hobo(4, 2).is_zero()
    p = h_valid_hobo(5, 3)
    for v in range(8):
        val = evaluate(p, code_bits(v, 3))
        assert (val == 0) if v <= 4 else (val >= 1)
    with pytest.raises(ValueError):
        h_valid_hobo(5, 2)


def test_h_valid_theorem_all_n():
    for n in range(2, 65):
        k = ceil_log2(n)
        if k == 0:
            continue
        p = h_valid_hobo(n, k)
        for v in range(1 << k):
            val = evaluate(p, code_bits(v, k))
            assert val == int(val)
            assert (val == 0) == (v < n) and val >= 0


def test_hobo_layout_and_zero_weights():
    assert encode_hobo(TspInstance.zero(4)).num_qubits == 8
    p = encode_hobo(TspInstance.zero(3))
    table = p.energy_table()
    assert table.min() == 0
    zeros = np.flatnonzero(table == 0)
    assert len(zeros) == 6
    assert {p.decode(int(i)).order for i in zeros} == set(itertools.permutations(range(3)))


def test_hobo_decode_rules():
    p = encode_hobo(TspInstance.zero(3))
    assert p.decode([1, 0, 0, 1, 0, 0]).order == (1, 2, 0)
    assert p.decode([1, 1, 0, 0, 1, 0]) is None  # code 3 >= N
    assert p.decode([1, 0, 1, 0, 0, 0]) is None  # repeated city


# ---------------------------------------------------------------- mixed

def test_mixed_layout_sizes():
    p = encode_mixed(TspInstance.zero(6), 2)
    assert p.layout.l == 2 and p.layout.slack == 2
    assert p.num_qubits == 6 * 4 + 6 * 2 == 36
    with pytest.raises(ValueError):
        encode_mixed(TspInstance.zero(6), 4)
    with pytest.raises(ValueError):
        encode_mixed(TspInstance.zero(6), 0)


def test_mixed_k1_matches_qubo():
    inst = random_instance(3, 4, kind="mixed")
    mixed = encode_mixed(inst, 1)
    qubo = encode_qubo(inst.with_penalties(inst.a1, inst.a2))
    lay = mixed.layout
    feas = np.flatnonzero(mixed.feasible_table())
    assert len(feas) == 6
    for idx in feas:
        bits = code_bits(int(idx), mixed.num_qubits)
        qbits = [0] * 9
        for t in range(3):
            for c in range(3):
                qbits[qubo.layout.qubit(t, c)] = bits[lay.qubit(t, c, 0)]
        assert qubo.decode(qbits) == mixed.decode(bits)
        assert qubo.energy(qbits) == pytest.approx(mixed.energy(bits))


def test_mixed_full_width_matches_hobo():
    inst = random_instance(3, 5, kind="hobo")
    mixed = encode_mixed(inst, 2)
    hobo = encode_hobo(inst)
    assert mixed.layout.l == 1
    count = 0
    for idx in range(1 << hobo.num_qubits):
        hb = code_bits(idx, 6)
        route = hobo.decode(hb)
        mb = [0] * mixed.num_qubits
        for t in range(3):
            code = idx >> (2 * t) & 3
            v = code + 1  # in-bunch codes start at 1
            if v > 3:
                continue
            for k, q in enumerate(mixed.layout.bunch_qubits(t, 0)):
                mb[q] = (v >> k) & 1
            ones = bin(v).count("1")
            for i, q in enumerate(mixed.layout.slack_qubits(t)):
                mb[q] = ((ones - 1) >> i) & 1
        if route is not None:
            count += 1
            assert mixed.decode(mb) == route
            assert mixed.energy(mb) == pytest.approx(hobo.energy(hb))
    assert count == 6


def test_mixed_guard_excludes_out_of_range_codes():
    # N=5, K=2: bunches cover 3 + 2 cities, code 3 in the last bunch is invalid
    p = encode_mixed(TspInstance.zero(5), 2)
    lay = p.layout
    bits = [0] * p.num_qubits
    for q, v in zip(lay.bunch_qubits(0, 1), (1, 1)):
        bits[q] = v
    bits[lay.slack_qubits(0)[0]] = 1
    assert p.decode(bits) is None
    assert evaluate(p.constraint, bits) > 0


# ---------------------------------------------------------------- enumeration

def test_permutation_numbering():
    assert index_to_permutation(0, 4).order == (0, 1, 2, 3)
    assert index_to_permutation(3, 3).order == (1, 2, 0)
    lex = list(itertools.permutations(range(4)))
    for i, perm in enumerate(lex):
        assert index_to_permutation(i, 4).order == perm
    for k in range(120):
        assert permutation_to_index(index_to_permutation(k, 5)) == k
    with pytest.raises(ValueError):
        index_to_permutation(6, 3)


def test_enum_encoding():
    assert encode_enum(TspInstance.zero(4)).num_qubits == 5
    inst = random_instance(3, 2)
    p = encode_enum(inst)
    assert p.hamiltonian is None
    assert p.decode(0b110) is None and p.energy(0b110) == p.e_pen
    best, _ = optimal_tours(inst.w)
    assert min(p.energy(i) for i in range(8)) == pytest.approx(inst.b * best)
    assert p.e_pen == pytest.approx(3 * inst.max_w)
    with pytest.raises(ValueError):
        encode_enum(inst, e_pen=0.1)


def test_brute_force_helper_matches_oracle():
    w = random_instance(5, 8).w
    best, tours = optimal_tours(w)
    got, routes = brute_force_tsp(w)
    assert got == pytest.approx(best)
    assert {r.order for r in routes} == set(tours)


# ---------------------------------------------------------------- cross-encoding properties

def _indices(num_qubits, must, limit=1 << 16):
    """Every basis index when there are few, else ``must`` plus a fixed random sample."""
    if (1 << num_qubits) <= limit:
        return range(1 << num_qubits)
    sample = np.random.default_rng(num_qubits).integers(0, 1 << num_qubits, limit)
    return np.unique(np.concatenate([np.asarray(must, dtype=np.int64), sample]))


SMALL = [("qubo", None, 3), ("qubo", None, 4), ("hobo", None, 3), ("hobo", None, 4), ("mixed", 1, 3),
         ("mixed", 2, 3), ("mixed", 2, 4), ("enum", None, 3), ("enum", None, 4)]


@pytest.mark.parametrize("kind,k,n", SMALL)
def test_feasible_energy_identity(kind, k, n):
    inst = random_instance(n, 11, kind=kind)
    p = encode(kind, inst, k=k)
    table = p.energy_table()
    mask = p.feasible_table()
    assert mask.sum() == math.factorial(n)
    for idx in _indices(p.num_qubits, np.flatnonzero(mask)):
        route = p.decode(int(idx))
        assert (route is not None) == mask[idx]
        if route is not None:
            assert table[idx] == pytest.approx(inst.b * tour_cost(inst.w, route.order), abs=1e-9)


@pytest.mark.parametrize("kind,k,n", [s for s in SMALL if s[0] != "enum"])
def test_polynomial_matches_table(kind, k, n):
    p = encode(kind, random_instance(n, 5, kind=kind), k=k)
    table = p.energy_table()
    for idx in _indices(p.num_qubits, [], limit=500):
        bits = code_bits(int(idx), p.num_qubits)
        assert evaluate(p.hamiltonian, bits) == pytest.approx(table[idx], abs=1e-9)


@pytest.mark.parametrize("kind,k,n", SMALL)
def test_penalty_positivity(kind, k, n):
    """Infeasible bitstrings never undercut the best tour.

    The stronger "above every feasible energy" form does not hold: with
    penalties just above B*max W one broken constraint can cost less than a
    long tour (see test_strict_penalty_counterexample).
    """
    for seed in range(5):
        p = encode(kind, random_instance(n, seed, kind=kind), k=k)
        table, mask = p.energy_table(), p.feasible_table()
        assert table[~mask].min() > table[mask].min()


def test_strict_penalty_counterexample():
    inst = random_instance(4, 1)  # one found by exhaustive search over seeds
    p = encode_qubo(inst)
    table, mask = p.energy_table(), p.feasible_table()
    assert table[~mask].min() < table[mask].max()


def test_encode_dispatch():
    inst = TspInstance.zero(3)
    assert encode("QUBO", inst).kind is Encoding.QUBO
    with pytest.raises(ValueError):
        encode("mixed", inst)
