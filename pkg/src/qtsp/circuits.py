"""Gate schedules for diagonal Hamiltonians.

A schedule implements ``exp(-i*theta*H)`` with ``H = c + sum_S alpha_S Z_S``
as rounds of commuting Z-rotations.  A round holds blocks with pairwise
disjoint supports; a block is a sequence of gates executed one after another
(a lone gate, or a Gray-ordered walk sharing one ancilla qubit).

Depth accounting
----------------
``phase-gate``
    Every multi-qubit phase gate costs 1.
``cnot-rotation``
    A ``w``-local gate decomposed as a CNOT ladder costs ``2(w-1) + 1``.

An ancilla block costs the number of CNOTs that toggle a parity into the
ancilla (``|S_i xor S_{i+1}|`` summed along the walk, starting and ending
at the empty set) plus one rotation per nonzero angle, in both units.
"""
from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .encodings import EncodedProblem, Encoding, HoboLayout, MixedLayout, QuboLayout
from .polynomial import to_ising

PHASE_GATE = "phase-gate"
CNOT_ROTATION = "cnot-rotation"
UNITS = (PHASE_GATE, CNOT_ROTATION)

PER_TERM = "per-term"
GRAY_ANCILLA = "gray-ancilla"
STRATEGIES = (PER_TERM, GRAY_ANCILLA)


class UnsupportedEncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    qubits: tuple[int, ...]
    angle_coeff: float
    kind: str = "multi-z"  # multi-z | cnot-ladder | ancilla
    ancilla: int | None = None

    def cost(self, unit: str) -> int:
        if unit == PHASE_GATE:
            return 1
        w = len(self.qubits)
        return 1 if w <= 1 else 2 * (w - 1) + 1


Block = tuple[Gate, ...]


def block_depth(block: Block, unit: str) -> int:
    if not block:
        return 0
    if block[0].kind != "ancilla":
        return max(g.cost(unit) for g in block) if len(block) == 1 else sum(g.cost(unit) for g in block)
    toggles = 0
    prev: set[int] = set()
    for g in block:
        cur = set(g.qubits)
        toggles += len(cur ^ prev)
        prev = cur
    toggles += len(prev)
    return toggles + sum(1 for g in block if g.angle_coeff != 0.0)


@dataclass
class GateSchedule:
    num_qubits: int
    ancilla_count: int = 0
    rounds: list[list[Block]] = field(default_factory=list)
    constant: float = 0.0

    def gates(self) -> Iterable[Gate]:
        for rnd in self.rounds:
            for block in rnd:
                yield from block

    def depth(self, unit: str = PHASE_GATE) -> int:
        if unit not in UNITS:
            raise ValueError(f"unknown unit {unit!r}")
        return sum(max((block_depth(b, unit) for b in rnd), default=0) for rnd in self.rounds)

    def volume(self, unit: str = PHASE_GATE) -> int:
        return self.depth(unit) * (self.num_qubits + self.ancilla_count)

    def ising_terms(self) -> dict[tuple[int, ...], float]:
        """Merged ``{support: angle}`` of all nonzero gates."""
        out: dict[tuple[int, ...], float] = {}
        for g in self.gates():
            if g.angle_coeff != 0.0:
                out[g.qubits] = out.get(g.qubits, 0.0) + g.angle_coeff
        return out

    def check_disjoint(self) -> bool:
        for rnd in self.rounds:
            used: set[int] = set()
            for block in rnd:
                sup = {q for g in block for q in g.qubits}
                sup |= {self.num_qubits + g.ancilla for g in block if g.ancilla is not None}
                if used & sup:
                    return False
                used |= sup
        return True

    def check_gray_adjacency(self) -> bool:
        for g0, g1 in self._ancilla_steps():
            if len(set(g0.qubits) ^ set(g1.qubits)) != 1:
                return False
        return True

    def _ancilla_steps(self):
        for rnd in self.rounds:
            for block in rnd:
                if block and block[0].kind == "ancilla":
                    yield from zip(block, block[1:])

    def energies(self) -> np.ndarray:
        """Diagonal of ``H`` assembled gate by gate (for cross-checks)."""
        idx = np.arange(1 << self.num_qubits)
        out = np.full(idx.shape, self.constant, dtype=np.float64)
        for g in self.gates():
            if g.angle_coeff != 0.0:
                out += g.angle_coeff * _z_product(idx, g.qubits)
        return out

    def evolve(self, state: np.ndarray, theta: float) -> np.ndarray:
        """Apply ``exp(-i*theta*H)`` one gate at a time; returns a new array."""
        idx = np.arange(state.shape[0])
        out = state * np.exp(-1j * theta * self.constant)
        for g in self.gates():
            if g.angle_coeff != 0.0:
                out = out * np.exp(-1j * theta * g.angle_coeff * _z_product(idx, g.qubits))
        return out

    def to_json(self) -> dict:
        rounds = []
        for rnd in self.rounds:
            gates = []
            for b, block in enumerate(rnd):
                for g in block:
                    d = {"qubits": list(g.qubits), "angle_coeff": g.angle_coeff, "kind": g.kind, "block": b}
                    if g.ancilla is not None:
                        d["ancilla"] = g.ancilla
                    gates.append(d)
            rounds.append(gates)
        return {"num_qubits": self.num_qubits, "ancilla_count": self.ancilla_count,
                "constant": self.constant, "rounds": rounds, "summary": self.summary()}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def summary(self) -> dict:
        return {
            "rounds": len(self.rounds),
            "gates": sum(1 for g in self.gates() if g.angle_coeff != 0.0),
            "ancilla_count": self.ancilla_count,
            "depth": {u: self.depth(u) for u in UNITS},
            "volume": {u: self.volume(u) for u in UNITS},
        }


def _z_product(idx: np.ndarray, qubits) -> np.ndarray:
    parity = np.zeros_like(idx)
    for q in qubits:
        parity ^= (idx >> q) & 1
    return 1.0 - 2.0 * parity


# --------------------------------------------------------------------------
# combinatorial building blocks


def round_robin(n: int) -> list[list[tuple[int, int]]]:
    """Circle-method tournament: ``n-1`` rounds for even ``n``, ``n`` for odd ``n``."""
    if n < 2:
        raise ValueError("need at least 2 collections")
    m = n + (n % 2)
    ring = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            a, b = ring[i], ring[m - 1 - i]
            if a < n and b < n:
                pairs.append((min(a, b), max(a, b)))
        rounds.append(pairs)
        ring = [ring[0], ring[-1]] + ring[1:-1]
    return rounds


def gray_sequence(k: int) -> list[tuple[int, ...]]:
    """Nonempty subsets of ``range(k)`` in reflected Gray order."""
    if k < 1:
        raise ValueError("K must be positive")
    out = []
    for i in range(1, 1 << k):
        g = i ^ (i >> 1)
        out.append(tuple(j for j in range(k) if (g >> j) & 1))
    return out


def cycle_edge_classes(n: int) -> list[list[int]]:
    """Split cyclic time edges ``(t, t+1 mod n)`` into vertex-disjoint classes."""
    if n == 2:
        return [[0]]
    if n % 2 == 0:
        return [list(range(0, n, 2)), list(range(1, n, 2))]
    return [list(range(0, n - 1, 2)), list(range(1, n - 1, 2)), [n - 1]]


def _time_shift_rounds(n: int) -> list[list[tuple[int, int]]]:
    """Rounds of (time edge t, city shift k) so every pair appears once
    and edges within a round touch disjoint time slots.

    Even ``n``: two edge classes per shift, ``2(n-1)`` rounds.  Odd ``n``:
    each near-perfect matching of the time cycle is used twice, ``2n`` rounds.
    """
    if n == 2:
        return [[(0, 1)], [(1, 1)]]
    if n % 2 == 0:
        return [[(t, k) for t in cls] for k in range(1, n) for cls in cycle_edge_classes(n)]
    nxt = [1] * n
    rounds = []
    for _ in range(2):
        for v in range(n):
            rnd = []
            for j in range((n - 1) // 2):
                t = (v + 1 + 2 * j) % n
                rnd.append((t, nxt[t]))
                nxt[t] += 1
            rounds.append(rnd)
    return rounds


# --------------------------------------------------------------------------
# strategies


def _kind_for(key) -> str:
    return "multi-z" if len(key) == 1 else "cnot-ladder"


def _single_round(keys, remaining) -> list[Block]:
    blocks = []
    for key in keys:
        if key in remaining:
            blocks.append((Gate(key, remaining.pop(key), _kind_for(key)),))
    return blocks


def _one_local_round(remaining) -> list[Block]:
    return _single_round(sorted(k for k in remaining if len(k) == 1), remaining)


def _first_fit(remaining) -> list[list[Block]]:
    rounds: list[tuple[set, list[Block]]] = []
    for key in sorted(remaining, key=lambda k: (-len(k), k)):
        gate = (Gate(key, remaining[key], _kind_for(key)),)
        s = set(key)
        for used, blocks in rounds:
            if not used & s and len(blocks[0][0].qubits) == len(key):
                used |= s
                blocks.append(gate)
                break
        else:
            rounds.append((s, [gate]))
    remaining.clear()
    return [blocks for _, blocks in rounds]


def _qubo_rounds(layout: QuboLayout, remaining) -> list[list[Block]]:
    n = layout.n
    cell = layout.qubit
    rounds = [_one_local_round(remaining)]

    def pair(a, b):
        if a is None or b is None:
            return None
        return (min(a, b), max(a, b))

    for pairs in round_robin(n):  # same time, two cities
        rounds.append(_single_round([pair(cell(t, i), cell(t, j)) for t in range(n) for i, j in pairs], remaining))
    for pairs in round_robin(n):  # same city, two times
        rounds.append(_single_round([pair(cell(t, i), cell(u, i)) for i in range(n) for t, u in pairs], remaining))
    for rnd in _time_shift_rounds(n):  # consecutive times, city shift k
        keys = [pair(cell(t, i), cell((t + 1) % n, (i + k) % n)) for t, k in rnd for i in range(n)]
        rounds.append(_single_round(keys, remaining))
    return [r for r in rounds if r]


def _gray_block(qubits: list[int], remaining, ancilla: int) -> Block:
    walk = []
    for subset in gray_sequence(len(qubits)):
        key = tuple(sorted(qubits[j] for j in subset))
        if len(key) >= 2 and key in remaining:
            walk.append(Gate(key, remaining.pop(key), "ancilla", ancilla))
        else:
            walk.append(Gate(key, 0.0, "ancilla", ancilla))
    live = [i for i, g in enumerate(walk) if g.angle_coeff != 0.0]
    if not live:
        return ()
    return tuple(walk[live[0]: live[-1] + 1])


def _gray_ancilla_rounds(layout, remaining) -> tuple[list[list[Block]], int]:
    slots = layout.slots()
    n, nb = len(slots), len(slots[0])
    rounds = [_one_local_round(remaining)]

    for pairs in round_robin(n):  # same bunch, two time slots
        blocks = []
        for p, (t, u) in enumerate(pairs):
            for bunch in range(nb):
                blk = _gray_block(slots[t][bunch] + slots[u][bunch], remaining, p * nb + bunch)
                if blk:
                    blocks.append(blk)
        rounds.append(blocks)

    if nb > 1:  # consecutive time slots, different bunches
        for edges in cycle_edge_classes(n):
            for shift in range(1, nb):
                blocks = []
                for p, t in enumerate(edges):
                    u = (t + 1) % n
                    for bunch in range(nb):
                        blk = _gray_block(slots[t][bunch] + slots[u][(bunch + shift) % nb], remaining, p * nb + bunch)
                        if blk:
                            blocks.append(blk)
                rounds.append(blocks)

    # whatever is left lives inside one slot (bunch exclusivity, slack bits)
    if isinstance(layout, MixedLayout):
        slot_q = [layout.slot_qubits(t) + layout.slack_qubits(t) for t in range(n)]
    else:
        slot_q = [layout.slot_qubits(t) for t in range(n)]
    if len(slot_q[0]) >= 2:
        for pairs in round_robin(len(slot_q[0])):
            keys = [tuple(sorted((q[a], q[b]))) for q in slot_q for a, b in pairs]
            rounds.append(_single_round(keys, remaining))
    rounds = [r for r in rounds if r]
    if remaining:
        rounds.extend(_first_fit(remaining))
    return rounds, -(-n // 2) * nb


def schedule(problem: EncodedProblem, strategy: str = PER_TERM) -> GateSchedule:
    """Compile ``problem.hamiltonian`` into a :class:`GateSchedule`.

    ``per-term``: one CNOT-ladder gate per Ising term.  QUBO uses the
    structured round-robin/shift layering; the other encodings are packed
    first-fit.  ``gray-ancilla``: binary-code encodings only; pairwise slot
    blocks walk Gray order over their bits sharing one ancilla each, with
    ``ceil(N/2)`` ancillas per bunch.
    """
    if problem.hamiltonian is None or problem.kind is Encoding.ENUM:
        raise UnsupportedEncodingError("enumeration encoding has no polynomial to schedule")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    ising = to_ising(problem.hamiltonian)
    remaining = {k: v for k, v in ising.terms.items() if k}
    sched = GateSchedule(problem.num_qubits, constant=ising.constant())
    layout = problem.layout
    if strategy == GRAY_ANCILLA:
        if not isinstance(layout, (HoboLayout, MixedLayout)):
            raise UnsupportedEncodingError("gray-ancilla needs a binary-code encoding (hobo or mixed)")
        sched.rounds, sched.ancilla_count = _gray_ancilla_rounds(layout, remaining)
    elif isinstance(layout, QuboLayout):
        sched.rounds = _qubo_rounds(layout, remaining)
        if remaining:
            sched.rounds.extend(_first_fit(remaining))
    else:
        sched.rounds = [_one_local_round(remaining)] + _first_fit(remaining)
        sched.rounds = [r for r in sched.rounds if r]
    return sched
