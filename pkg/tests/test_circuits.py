import itertools

import numpy as np
import pytest

from qtsp.circuits import (CNOT_ROTATION, GRAY_ANCILLA, PER_TERM, PHASE_GATE, Gate, GateSchedule,
                           UnsupportedEncodingError, gray_sequence, round_robin, schedule)
from qtsp.encodings import TspInstance, ceil_log2, encode, random_instance
from qtsp.polynomial import to_ising
from qtsp.resources import mixed_depth_components


def ising_map(problem):
    return {k: v for k, v in to_ising(problem.hamiltonian).terms.items() if k}


def assert_same_terms(sched, problem):
    want = ising_map(problem)
    got = sched.ising_terms()
    assert set(got) == set(want)
    for key, v in want.items():
        assert got[key] == pytest.approx(v, abs=1e-12)
    assert sched.constant == pytest.approx(to_ising(problem.hamiltonian).constant())


def test_round_robin_examples():
    assert round_robin(2) == [[(0, 1)]]
    r5 = round_robin(5)
    assert len(r5) == 5 and all(len(r) == 2 for r in r5)
    r6 = round_robin(6)
    assert len(r6) == 5 and all(len(r) == 3 for r in r6)


@pytest.mark.parametrize("n", range(2, 21))
def test_round_robin_cover(n):
    rounds = round_robin(n)
    assert len(rounds) == (n - 1 if n % 2 == 0 else n)
    seen = [p for r in rounds for p in r]
    assert sorted(seen) == list(itertools.combinations(range(n), 2))
    for r in rounds:
        flat = [v for p in r for v in p]
        assert len(flat) == len(set(flat))


def test_gray_sequence_examples():
    assert gray_sequence(1) == [(0,)]
    assert gray_sequence(2) == [(0,), (0, 1), (1,)]
    with pytest.raises(ValueError):
        gray_sequence(0)


@pytest.mark.parametrize("k", range(1, 9))
def test_gray_sequence_properties(k):
    seq = gray_sequence(k)
    assert len(seq) == 2 ** k - 1
    assert len({frozenset(s) for s in seq}) == len(seq)
    assert all(s for s in seq)
    for a, b in zip(seq, seq[1:]):
        assert len(set(a) ^ set(b)) == 1


def test_depth_trivia():
    assert GateSchedule(3).depth(PHASE_GATE) == 0
    s = GateSchedule(3, rounds=[[(Gate((1,), 0.5),)]])
    assert s.depth(CNOT_ROTATION) == 1
    s = GateSchedule(3, rounds=[[(Gate((0, 1, 2), 0.5, "cnot-ladder"),)]])
    assert s.depth(CNOT_ROTATION) == 5 and s.depth(PHASE_GATE) == 1
    assert s.volume(CNOT_ROTATION) == 15


def test_ancilla_block_depth():
    # walk {0} -> {0,1} -> {1}: toggles 1 + 1 + 1 + 1 back to empty; two nonzero rotations
    block = (Gate((0,), 0.0, "ancilla", 0), Gate((0, 1), 1.0, "ancilla", 0), Gate((1,), 2.0, "ancilla", 0))
    s = GateSchedule(2, 1, [[block]])
    assert s.depth(PHASE_GATE) == 4 + 2
    assert s.check_gray_adjacency()


CASES = [("qubo", None, 3), ("qubo", None, 4), ("hobo", None, 3), ("hobo", None, 4),
         ("mixed", 1, 3), ("mixed", 2, 3), ("mixed", 1, 4), ("mixed", 2, 4)]


@pytest.mark.parametrize("kind,k,n", CASES)
@pytest.mark.parametrize("strategy", [PER_TERM, GRAY_ANCILLA])
def test_schedule_semantics_and_disjointness(kind, k, n, strategy):
    problem = encode(kind, random_instance(n, 3, kind=kind), k=k)
    if kind == "qubo" and strategy == GRAY_ANCILLA:
        with pytest.raises(UnsupportedEncodingError):
            schedule(problem, strategy)
        return
    sched = schedule(problem, strategy)
    assert_same_terms(sched, problem)
    assert sched.check_disjoint()
    assert sched.check_gray_adjacency()
    if strategy == GRAY_ANCILLA:
        assert sched.ancilla_count == -(-n // 2) * getattr(problem.layout, "l", 1)


def test_fixed_first_city_schedule():
    problem = encode("qubo", random_instance(4, 2), fix_first_city=True)
    sched = schedule(problem)
    assert_same_terms(sched, problem)
    assert sched.check_disjoint()


def test_enum_is_rejected():
    with pytest.raises(UnsupportedEncodingError):
        schedule(encode("enum", TspInstance.zero(3)))


@pytest.mark.parametrize("n", range(2, 8))
def test_qubo_depth_bounds(n):
    sched = schedule(encode("qubo", random_instance(n, n)))
    assert sched.depth(PHASE_GATE) <= 4 * n + 1
    assert sched.depth(CNOT_ROTATION) <= 12 * n + 1
    if n >= 3:
        assert sched.depth(PHASE_GATE) == (4 * n + 1 if n % 2 else 4 * n - 3)


def test_qubo_volume_n4():
    sched = schedule(encode("qubo", random_instance(4, 0)))
    assert sched.volume(CNOT_ROTATION) <= (12 * 4 + 1) * 16


@pytest.mark.parametrize("n", range(3, 7))
def test_mixed_depth_within_component_sum(n):
    for k in range(1, ceil_log2(n) + 1):
        problem = encode("mixed", random_instance(n, 1, kind="mixed"), k=k)
        sched = schedule(problem, GRAY_ANCILLA)
        assert sched.check_disjoint()
        assert sched.depth(PHASE_GATE) <= mixed_depth_components(n, k)["total"]


def test_schedule_evolution_matches_table(rng):
    problem = encode("hobo", random_instance(3, 0, kind="hobo"))
    sched = schedule(problem, GRAY_ANCILLA)
    table = problem.energy_table()
    np.testing.assert_allclose(sched.energies(), table, atol=1e-9)
    state = rng.normal(size=64) + 1j * rng.normal(size=64)
    theta = 0.37
    np.testing.assert_allclose(sched.evolve(state, theta), state * np.exp(-1j * theta * table), atol=1e-12)


def test_json_export():
    sched = schedule(encode("hobo", TspInstance.zero(4)), GRAY_ANCILLA)
    data = sched.to_json()
    assert data["summary"]["depth"][PHASE_GATE] == sched.depth(PHASE_GATE)
    gates = [g for rnd in data["rounds"] for g in rnd]
    assert all({"qubits", "angle_coeff", "kind"} <= set(g) for g in gates)
