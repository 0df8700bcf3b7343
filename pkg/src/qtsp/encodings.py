"""TSP encodings: one-hot QUBO, binary HOBO, mixed bunch encoding, and
factoradic enumeration.

Bit convention everywhere: inside a K-bit city code, bit ``k`` carries weight
``2**k``.  A bitstring may be passed either as a sequence of 0/1 values
(``bits[q]`` is qubit ``q``) or as a basis index (qubit 0 is the least
significant bit).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np

from .polynomial import BinaryPolynomial, evaluate, evaluate_all, mul, sum_polys

ONE = BinaryPolynomial.const(1.0)
ZERO = BinaryPolynomial()


class Encoding(str, Enum):
    QUBO = "qubo"
    HOBO = "hobo"
    MIXED = "mixed"
    ENUM = "enum"

    @classmethod
    def parse(cls, value) -> Encoding:
        return value if isinstance(value, cls) else cls(str(value).lower())


# Penalty-to-max-weight ratios used when penalties are not given explicitly.
# The binary-number encodings need more than the one-hot one: replacing an
# invalid or duplicated slot by a missing city can add up to two edges.
PENALTY_SCALE = {
    Encoding.QUBO: 1.01,
    Encoding.HOBO: 2.02,
    Encoding.MIXED: 2.02,
    Encoding.ENUM: 1.01,
}


def bits_of(b, n: int) -> list[int]:
    if isinstance(b, (int, np.integer)):
        return [(int(b) >> i) & 1 for i in range(n)]
    bits = [int(x) for x in b]
    if len(bits) < n:
        raise ValueError(f"bitstring has {len(bits)} bits, need {n}")
    return bits


def index_of(bits: Sequence[int]) -> int:
    return sum(int(v) << i for i, v in enumerate(bits))


def ceil_log2(x: int) -> int:
    """Smallest K with 2**K >= x (0 for x <= 1)."""
    return max(0, (int(x) - 1).bit_length())


# --------------------------------------------------------------------------
# instances and routes


@dataclass(frozen=True, eq=False)
class TspInstance:
    """Symmetric TSP instance with penalty weights ``a1``, ``a2`` and objective weight ``b``."""

    n: int
    w: np.ndarray
    a1: float = 1.0
    a2: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.shape != (self.n, self.n):
            raise ValueError(f"cost matrix must be {self.n}x{self.n}, got {w.shape}")
        if self.n < 2:
            raise ValueError("need at least 2 cities")
        if not np.allclose(w, w.T, atol=0, rtol=0) and not np.array_equal(w, w.T):
            raise ValueError("cost matrix must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("cost matrix must have a zero diagonal")
        if np.any(w < 0):
            raise ValueError("cost matrix entries must be non-negative")
        if self.b <= 0:
            raise ValueError("objective weight b must be positive")
        bound = self.b * self.max_w_of(w)
        if not (self.a1 > bound and self.a2 > bound):
            raise ValueError(f"penalties a1={self.a1}, a2={self.a2} must exceed b*max(W)={bound}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @staticmethod
    def max_w_of(w: np.ndarray) -> float:
        off = w[~np.eye(len(w), dtype=bool)]
        return float(off.max()) if off.size else 0.0

    @property
    def max_w(self) -> float:
        return self.max_w_of(self.w)

    @property
    def min_w(self) -> float:
        off = self.w[~np.eye(self.n, dtype=bool)]
        return float(off.min())

    def cost(self, route) -> float:
        order = route.order if isinstance(route, Route) else tuple(route)
        return float(sum(self.w[order[t], order[(t + 1) % len(order)]] for t in range(len(order))))

    @classmethod
    def zero(cls, n: int, a1: float = 1.0, a2: float = 1.0, b: float = 1.0) -> TspInstance:
        return cls(n, np.zeros((n, n)), a1, a2, b)

    def with_penalties(self, a1: float, a2: float) -> TspInstance:
        return TspInstance(self.n, self.w, a1, a2, self.b)

    def to_json(self) -> dict:
        return {"n": self.n, "w": self.w.tolist(), "a1": self.a1, "a2": self.a2, "b": self.b}

    @classmethod
    def from_json(cls, data) -> TspInstance:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["n"]), np.asarray(data["w"], dtype=float),
                   float(data.get("a1", 1.0)), float(data.get("a2", 1.0)), float(data.get("b", 1.0)))


def default_penalty(kind, w: np.ndarray, b: float = 1.0) -> float:
    m = TspInstance.max_w_of(np.asarray(w, dtype=float))
    return PENALTY_SCALE[Encoding.parse(kind)] * b * m if m > 0 else 1.0


def random_instance(n: int, seed=None, *, kind=Encoding.QUBO, b: float = 1.0,
                    a1: float | None = None, a2: float | None = None) -> TspInstance:
    """``W = X + X^T`` with ``X`` i.i.d. uniform on [0, 1], zero diagonal."""
    if n < 2:
        raise ValueError("need at least 2 cities")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, n))
    w = x + x.T
    np.fill_diagonal(w, 0.0)
    pen = default_penalty(kind, w, b)
    return TspInstance(n, w, pen if a1 is None else a1, pen if a2 is None else a2, b)


@dataclass(frozen=True)
class Route:
    """Visit order: ``order[t]`` is the city visited at time ``t``."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(c) for c in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"{order} is not a permutation")
        object.__setattr__(self, "order", order)

    def __len__(self):
        return len(self.order)

    def canonical(self) -> tuple[int, ...]:
        """Rotation starting at city 0, direction with the smaller second city."""
        n = len(self.order)
        k = self.order.index(0)
        fwd = self.order[k:] + self.order[:k]
        back = (fwd[0],) + tuple(reversed(fwd[1:]))
        return min(fwd, back)


def brute_force_tsp(w: np.ndarray) -> tuple[float, list[Route]]:
    """Optimal cost and every optimal visit order (all rotations/directions)."""
    w = np.asarray(w, dtype=float)
    n = len(w)
    perms = np.array(list(itertools.permutations(range(n))))
    costs = w[perms, np.roll(perms, -1, axis=1)].sum(axis=1)
    best = costs.min()
    tol = 1e-9 * max(1.0, abs(best))
    return float(best), [Route(tuple(p)) for p in perms[costs <= best + tol]]


# --------------------------------------------------------------------------
# gadgets


def _x(q: int) -> BinaryPolynomial:
    return BinaryPolynomial.var(q)


def _eq_const(q: int, bit: int) -> BinaryPolynomial:
    """``1 - (b_q - bit)**2``: equals 1 iff ``b_q == bit``."""
    return _x(q) if bit else ONE - _x(q)


def delta_const(qubits: Sequence[int], value: int) -> BinaryPolynomial:
    """Indicator that the code held in ``qubits`` equals ``value``."""
    out = ONE
    for k, q in enumerate(qubits):
        out = mul(out, _eq_const(q, (value >> k) & 1))
    return out


def delta(qa: Sequence[int], qb: Sequence[int]) -> BinaryPolynomial:
    """``prod_k (1 - (a_k - b_k)**2)``: 1 iff the two codes are equal."""
    out = ONE
    for a, b in zip(qa, qb):
        out = mul(out, ONE - _x(a) - _x(b) + 2.0 * mul(_x(a), _x(b)))
    return out


def _h_valid_bits(n: int, qubits: Sequence[int]) -> BinaryPolynomial:
    k_bits = len(qubits)
    if n < 1 or n > (1 << k_bits):
        raise ValueError(f"K={k_bits} bits cannot encode {n} values")
    ref = n - 1
    terms = []
    for k0 in range(k_bits):
        if (ref >> k0) & 1:
            continue
        t = _x(qubits[k0])
        for k in range(k0 + 1, k_bits):
            t = mul(t, _eq_const(qubits[k], (ref >> k) & 1))
        terms.append(t)
    return sum_polys(terms)


def h_valid_hobo(n: int, k: int) -> BinaryPolynomial:
    """Penalty over ``k`` bits that is 0 iff the encoded integer is below ``n``.

    Sum over the zero bits ``k0`` of ``n - 1`` of ``b_k0`` times the
    indicator that every higher bit matches ``n - 1``.  Out-of-range codes
    score a positive integer.  Also valid for ``n <= 2**(k-1)`` (leading
    zeros of ``n - 1`` simply add more addends).
    """
    if k < 1:
        raise ValueError("K must be positive")
    return _h_valid_bits(n, list(range(k))).with_num_vars(k)


# --------------------------------------------------------------------------
# permutation numbering


def index_to_permutation(idx: int, n: int) -> Route:
    """Lexicographic rank -> permutation via factoradic digits and Lehmer decoding."""
    if not 0 <= idx < math.factorial(n):
        raise ValueError(f"index {idx} outside [0, {n}!)")
    digits = []
    for radix in range(1, n + 1):
        idx, d = divmod(idx, radix)
        digits.append(d)
    pool = list(range(n))
    order = [pool.pop(d) for d in reversed(digits)]
    return Route(tuple(order))


def permutation_to_index(route) -> int:
    order = list(route.order if isinstance(route, Route) else route)
    n = len(order)
    pool = list(range(n))
    idx = 0
    for pos, city in enumerate(order):
        d = pool.index(city)
        pool.pop(d)
        idx += d * math.factorial(n - 1 - pos)
    return idx


# --------------------------------------------------------------------------
# layouts


@dataclass(frozen=True)
class QuboLayout:
    n: int
    fix_first_city: bool = False

    @property
    def num_qubits(self) -> int:
        m = self.n - 1 if self.fix_first_city else self.n
        return m * m

    def qubit(self, t: int, i: int) -> int | None:
        """Qubit of ``b_{t,i}``; None for cells fixed by ``fix_first_city``."""
        if not self.fix_first_city:
            return t * self.n + i
        if t == 0 or i == 0:
            return None
        return (t - 1) * (self.n - 1) + (i - 1)

    def position(self, q: int) -> tuple[int, int]:
        if not self.fix_first_city:
            return divmod(q, self.n)
        t, i = divmod(q, self.n - 1)
        return t + 1, i + 1

    def slots(self) -> list[list[list[int]]]:
        out = []
        for t in range(self.n):
            qs = [self.qubit(t, i) for i in range(self.n)]
            out.append([[q for q in qs if q is not None]])
        return out

    def decode(self, bits: Sequence[int]) -> Route | None:
        grid = np.zeros((self.n, self.n), dtype=int)
        for t in range(self.n):
            for i in range(self.n):
                q = self.qubit(t, i)
                grid[t, i] = (1 if (t, i) == (0, 0) else 0) if q is None else bits[q]
        if np.all(grid.sum(axis=0) == 1) and np.all(grid.sum(axis=1) == 1):
            return Route(tuple(int(np.argmax(row)) for row in grid))
        return None

    def to_json(self) -> dict:
        return {"type": "qubo", "n": self.n, "fix_first_city": self.fix_first_city,
                "qubit_of": "t*n+i" if not self.fix_first_city else "(t-1)*(n-1)+(i-1)"}


@dataclass(frozen=True)
class HoboLayout:
    n: int
    k: int

    @property
    def num_qubits(self) -> int:
        return self.n * self.k

    def qubit(self, t: int, kbit: int) -> int:
        return t * self.k + kbit

    def slot_qubits(self, t: int) -> list[int]:
        return [self.qubit(t, kb) for kb in range(self.k)]

    def slots(self) -> list[list[list[int]]]:
        return [[self.slot_qubits(t)] for t in range(self.n)]

    def decode(self, bits: Sequence[int]) -> Route | None:
        codes = [index_of([bits[q] for q in self.slot_qubits(t)]) for t in range(self.n)]
        if any(c >= self.n for c in codes) or len(set(codes)) != self.n:
            return None
        return Route(tuple(codes))

    def to_json(self) -> dict:
        return {"type": "hobo", "n": self.n, "K": self.k, "qubit_of": "t*K+k"}


@dataclass(frozen=True)
class MixedLayout:
    n: int
    k: int
    l: int
    slack: int

    @property
    def span(self) -> int:
        return (1 << self.k) - 1

    @property
    def alpha(self) -> float:
        return self.k / math.log2(self.n)

    @property
    def num_qubits(self) -> int:
        return self.n * self.k * self.l + self.n * self.slack

    def qubit(self, t: int, bunch: int, kbit: int) -> int:
        return (t * self.l + bunch) * self.k + kbit

    def bunch_qubits(self, t: int, bunch: int) -> list[int]:
        return [self.qubit(t, bunch, kb) for kb in range(self.k)]

    def slack_qubits(self, t: int) -> list[int]:
        base = self.n * self.k * self.l + t * self.slack
        return list(range(base, base + self.slack))

    def slot_qubits(self, t: int) -> list[int]:
        return [q for bunch in range(self.l) for q in self.bunch_qubits(t, bunch)]

    def slots(self) -> list[list[list[int]]]:
        return [[self.bunch_qubits(t, bunch) for bunch in range(self.l)] for t in range(self.n)]

    def city(self, bunch: int, code: int) -> int:
        return bunch * self.span + code - 1

    def bunch_of(self, city: int) -> tuple[int, int]:
        """(bunch, in-bunch code) of a city."""
        bunch, rem = divmod(city, self.span)
        return bunch, rem + 1

    def decode(self, bits: Sequence[int]) -> Route | None:
        order = []
        for t in range(self.n):
            codes = [index_of([bits[q] for q in self.bunch_qubits(t, bunch)]) for bunch in range(self.l)]
            nonzero = [bunch for bunch, c in enumerate(codes) if c]
            if len(nonzero) != 1:
                return None
            city = self.city(nonzero[0], codes[nonzero[0]])
            if city >= self.n:
                return None
            ones = sum(bits[q] for q in self.slot_qubits(t))
            if index_of([bits[q] for q in self.slack_qubits(t)]) != ones - 1:
                return None
            order.append(city)
        if len(set(order)) != self.n:
            return None
        return Route(tuple(order))

    def to_json(self) -> dict:
        return {"type": "mixed", "n": self.n, "K": self.k, "L": self.l, "slack_bits": self.slack,
                "alpha": self.alpha, "qubit_of": "(t*L+l)*K+k", "slack_of": "n*K*L+t*slack_bits+i"}


@dataclass(frozen=True)
class EnumLayout:
    n: int

    @property
    def num_qubits(self) -> int:
        return ceil_log2(math.factorial(self.n))

    def decode(self, bits: Sequence[int]) -> Route | None:
        idx = index_of(bits[: self.num_qubits])
        if idx >= math.factorial(self.n):
            return None
        return index_to_permutation(idx, self.n)

    def to_json(self) -> dict:
        return {"type": "enum", "n": self.n, "num_codes": math.factorial(self.n)}


# --------------------------------------------------------------------------
# encoded problems


@dataclass(frozen=True, eq=False)
class EncodedProblem:
    """An encoding of one TSP instance.

    ``hamiltonian`` is the full objective polynomial (None for enumeration);
    ``constraint`` is the penalty part with unit weights, an integer-valued
    polynomial that vanishes exactly on feasible bitstrings.
    """

    kind: Encoding
    instance: TspInstance
    layout: object
    hamiltonian: BinaryPolynomial | None
    constraint: BinaryPolynomial | None = None
    e_pen: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    def energy(self, b) -> float:
        bits = bits_of(b, self.num_qubits)
        if self.hamiltonian is not None:
            return evaluate(self.hamiltonian, bits)
        route = self.layout.decode(bits)
        return self.e_pen if route is None else self.instance.b * self.instance.cost(route)

    energy_oracle = energy

    def decode(self, b) -> Route | None:
        return self.layout.decode(bits_of(b, self.num_qubits))

    def energy_table(self) -> np.ndarray:
        n = self.num_qubits
        if self.hamiltonian is not None:
            return evaluate_all(self.hamiltonian, n)
        fact = math.factorial(self.instance.n)
        table = np.full(1 << n, float(self.e_pen))
        perms = np.array(list(itertools.permutations(range(self.instance.n))))
        w = self.instance.w
        table[:fact] = self.instance.b * w[perms, np.roll(perms, -1, axis=1)].sum(axis=1)
        return table

    def feasible_table(self) -> np.ndarray:
        n = self.num_qubits
        if self.constraint is not None:
            return evaluate_all(self.constraint, n) < 0.5
        return np.arange(1 << n) < math.factorial(self.instance.n)

    @cached_property
    def num_terms(self) -> int | None:
        return None if self.hamiltonian is None else self.hamiltonian.term_count()

    def summary(self) -> dict:
        h = self.hamiltonian
        return {
            "kind": self.kind.value,
            "n": self.instance.n,
            "num_qubits": self.num_qubits,
            "num_terms": self.num_terms,
            "order": None if h is None else h.order(),
            "layout": self.layout.to_json(),
        }


def _tour_objective(n: int, w: np.ndarray, indicator) -> BinaryPolynomial:
    """``sum_{i != j} W_ij sum_t ind(t, i) * ind(t+1, j)`` with cyclic time."""
    parts = []
    for t in range(n):
        nxt = (t + 1) % n
        for i in range(n):
            a = indicator(t, i)
            if a.is_zero():
                continue
            for j in range(n):
                if i == j or w[i, j] == 0:
                    continue
                bpoly = indicator(nxt, j)
                if bpoly.is_zero():
                    continue
                parts.append(mul(a, bpoly).scale(w[i, j]))
    return sum_polys(parts)


def encode_qubo(inst: TspInstance, fix_first_city: bool = False) -> EncodedProblem:
    n = inst.n
    layout = QuboLayout(n, fix_first_city)
    nq = layout.num_qubits

    def cell(t, i):
        q = layout.qubit(t, i)
        if q is None:
            return ONE if (t, i) == (0, 0) else ZERO
        return _x(q)

    rows = sum_polys(mul(s, s) for s in (ONE - sum_polys(cell(t, i) for i in range(n)) for t in range(n)))
    cols = sum_polys(mul(s, s) for s in (ONE - sum_polys(cell(t, i) for t in range(n)) for i in range(n)))
    obj = _tour_objective(n, inst.w, cell)
    h = sum_polys([rows.scale(inst.a1), cols.scale(inst.a2), obj.scale(inst.b)], num_vars=nq)
    constraint = sum_polys([rows, cols], num_vars=nq)
    return EncodedProblem(Encoding.QUBO, inst, layout, h, constraint)


def encode_hobo(inst: TspInstance) -> EncodedProblem:
    n = inst.n
    k = max(1, ceil_log2(n))
    layout = HoboLayout(n, k)
    nq = layout.num_qubits
    slots = [layout.slot_qubits(t) for t in range(n)]
    valid = sum_polys(_h_valid_bits(n, slots[t]) for t in range(n))
    neq = sum_polys(delta(slots[t], slots[u]) for t in range(n) for u in range(t + 1, n))
    ind = [[delta_const(slots[t], i) for i in range(n)] for t in range(n)]
    obj = _tour_objective(n, inst.w, lambda t, i: ind[t][i])
    h = sum_polys([valid.scale(inst.a1), neq.scale(inst.a2), obj.scale(inst.b)], num_vars=nq)
    constraint = sum_polys([valid, neq], num_vars=nq)
    return EncodedProblem(Encoding.HOBO, inst, layout, h, constraint)


def mixed_layout(n: int, k: int) -> MixedLayout:
    kmax = max(1, ceil_log2(n))
    if not 1 <= k <= kmax:
        raise ValueError(f"K must be in [1, {kmax}] for N={n}, got {k}")
    span = (1 << k) - 1
    bunches = -(-n // span)
    return MixedLayout(n, k, bunches, max(1, ceil_log2(k * bunches)))


def encode_mixed(inst: TspInstance, k: int) -> EncodedProblem:
    n = inst.n
    layout = mixed_layout(n, k)
    nq = layout.num_qubits
    span, nb = layout.span, layout.l
    last_cities = n - (nb - 1) * span

    def bsum(t, bunch):
        return sum_polys(_x(q) for q in layout.bunch_qubits(t, bunch))

    valid_parts = []
    for t in range(n):
        sums = [bsum(t, bunch) for bunch in range(nb)]
        total = sum_polys(sums)
        slack = sum_polys(_x(q).scale(float(1 << i)) for i, q in enumerate(layout.slack_qubits(t)))
        s = ONE - total + slack
        valid_parts.append(mul(s, s))
        for bunch in range(nb):
            valid_parts.append(mul(sums[bunch], total - sums[bunch]))
        if last_cities != span:
            valid_parts.append(_h_valid_bits(last_cities + 1, layout.bunch_qubits(t, nb - 1)))
    valid = sum_polys(valid_parts)

    neq_parts = []
    for t in range(n):
        for u in range(t + 1, n):
            for bunch in range(nb):
                qa, qb = layout.bunch_qubits(t, bunch), layout.bunch_qubits(u, bunch)
                nonzero = sum_polys(_x(q) for q in qa + qb)
                neq_parts.append(mul(nonzero, delta(qa, qb)))
    neq = sum_polys(neq_parts)

    ind = []
    for t in range(n):
        row = []
        for i in range(n):
            bunch, code = layout.bunch_of(i)
            row.append(delta_const(layout.bunch_qubits(t, bunch), code))
        ind.append(row)
    obj = _tour_objective(n, inst.w, lambda t, i: ind[t][i])

    h = sum_polys([valid.scale(inst.a1), neq.scale(inst.a2), obj.scale(inst.b)], num_vars=nq)
    constraint = sum_polys([valid, neq], num_vars=nq)
    return EncodedProblem(Encoding.MIXED, inst, layout, h, constraint)


def default_e_pen(inst: TspInstance) -> float:
    """``B*N*max W``, raised above the identity tour's energy when that is not larger (e.g. W == 0)."""
    e_pen = inst.b * inst.n * inst.max_w
    identity = inst.b * inst.cost(tuple(range(inst.n)))
    if e_pen <= identity:
        e_pen = identity + max(inst.b * inst.max_w, 1.0)
    return e_pen


def encode_enum(inst: TspInstance, e_pen: float | None = None) -> EncodedProblem:
    n = inst.n
    if e_pen is None:
        e_pen = default_e_pen(inst)
    elif n <= 8:
        best, _ = brute_force_tsp(inst.w)
        if e_pen <= inst.b * best:
            raise ValueError(f"e_pen={e_pen} must exceed the optimal route energy {inst.b * best}")
    return EncodedProblem(Encoding.ENUM, inst, EnumLayout(n), None, None, float(e_pen))


def encode(kind, inst: TspInstance, *, k: int | None = None, fix_first_city: bool = False,
           e_pen: float | None = None) -> EncodedProblem:
    kind = Encoding.parse(kind)
    if kind is Encoding.QUBO:
        return encode_qubo(inst, fix_first_city)
    if kind is Encoding.HOBO:
        return encode_hobo(inst)
    if kind is Encoding.MIXED:
        if k is None:
            raise ValueError("the mixed encoding needs K")
        return encode_mixed(inst, k)
    return encode_enum(inst, e_pen)
