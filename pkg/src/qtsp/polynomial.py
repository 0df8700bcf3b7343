"""Pseudo-Boolean polynomials over binary variables and their Ising form.

A :class:`BinaryPolynomial` maps sorted index tuples ``I`` to coefficients
``alpha_I`` and represents ``sum_I alpha_I * prod_{i in I} b_i`` with
``b_i in {0, 1}``.  Products are idempotent (``b_i * b_i == b_i``), so a term
never repeats an index.  An :class:`IsingPolynomial` has the same storage but
represents products of Pauli-Z eigenvalues ``z_i = 1 - 2*b_i``.

Both classes are immutable and always canonical: no stored coefficient is
zero (magnitudes below :data:`ZERO_TOL` are pruned).
"""
from __future__ import annotations

import itertools
import json
from collections.abc import Iterable, Mapping, Sequence
from types import MappingProxyType

import numpy as np

from . import _kernels

ZERO_TOL = 1e-12

Term = tuple[int, ...]


def _prune(terms: dict[Term, float]) -> dict[Term, float]:
    return {k: v for k, v in terms.items() if abs(v) > ZERO_TOL}


class _Polynomial:
    __slots__ = ("_terms", "_num_vars")

    def __init__(self, terms: Mapping[Iterable[int], float] | None = None, num_vars: int | None = None):
        clean: dict[Term, float] = {}
        top = -1
        for key, coeff in (terms or {}).items():
            idx = tuple(sorted(set(int(i) for i in key)))
            if idx and idx[0] < 0:
                raise ValueError(f"negative variable index in term {key!r}")
            if idx:
                top = max(top, idx[-1])
            clean[idx] = clean.get(idx, 0.0) + float(coeff)
        if num_vars is None:
            num_vars = top + 1
        elif top >= num_vars:
            raise ValueError(f"term index {top} out of range for num_vars={num_vars}")
        self._terms = _prune(clean)
        self._num_vars = int(num_vars)

    @classmethod
    def _raw(cls, terms: dict[Term, float], num_vars: int):
        obj = cls.__new__(cls)
        obj._terms = _prune(terms)
        obj._num_vars = num_vars
        return obj

    @property
    def terms(self) -> Mapping[Term, float]:
        return MappingProxyType(self._terms)

    @property
    def num_vars(self) -> int:
        return self._num_vars

    def term_count(self) -> int:
        return len(self._terms)

    def order(self) -> int:
        return max((len(k) for k in self._terms), default=0)

    def constant(self) -> float:
        return self._terms.get((), 0.0)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, type(self)):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def almost_equal(self, other, tol: float = 1e-9) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= tol for k in keys)

    def to_json(self) -> dict:
        return {
            "num_vars": self._num_vars,
            "terms": [[list(k), v] for k, v in sorted(self._terms.items(), key=lambda kv: (len(kv[0]), kv[0]))],
        }

    @classmethod
    def from_json(cls, data: Mapping | str):
        if isinstance(data, str):
            data = json.loads(data)
        return cls({tuple(idx): c for idx, c in data["terms"]}, num_vars=data["num_vars"])

    def __repr__(self) -> str:
        return f"{type(self).__name__}(num_vars={self._num_vars}, terms={len(self._terms)})"


class BinaryPolynomial(_Polynomial):
    """Polynomial in 0/1 variables with idempotent multiplication."""

    __slots__ = ()

    @classmethod
    def const(cls, value: float, num_vars: int = 0) -> BinaryPolynomial:
        return cls._raw({(): float(value)}, num_vars)

    @classmethod
    def var(cls, index: int, num_vars: int | None = None) -> BinaryPolynomial:
        n = index + 1 if num_vars is None else num_vars
        if index >= n:
            raise ValueError(f"variable {index} out of range for num_vars={n}")
        return cls._raw({(index,): 1.0}, n)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = BinaryPolynomial.const(other)
        if not isinstance(other, BinaryPolynomial):
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return BinaryPolynomial._raw({k: -v for k, v in self._terms.items()}, self._num_vars)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = BinaryPolynomial.const(other)
        return add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(other)
        if not isinstance(other, BinaryPolynomial):
            return NotImplemented
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = BinaryPolynomial.const(1.0, self._num_vars)
        for _ in range(k):
            out = mul(out, self)
        return out

    def scale(self, factor: float) -> BinaryPolynomial:
        return BinaryPolynomial._raw({k: factor * v for k, v in self._terms.items()}, self._num_vars)

    def with_num_vars(self, num_vars: int) -> BinaryPolynomial:
        return BinaryPolynomial(self._terms, num_vars=num_vars)

    def evaluate(self, assignment: Sequence[int]) -> float:
        return evaluate(self, assignment)

    def to_ising(self) -> IsingPolynomial:
        return to_ising(self)


class IsingPolynomial(_Polynomial):
    """Polynomial in Pauli-Z eigenvalues ``z_i in {+1, -1}``."""

    __slots__ = ()

    def evaluate(self, spins: Sequence[int]) -> float:
        if len(spins) < self._num_vars:
            raise ValueError(f"need {self._num_vars} spins, got {len(spins)}")
        total = 0.0
        for idx, coeff in self._terms.items():
            prod = 1
            for i in idx:
                prod *= spins[i]
            total += coeff * prod
        return total

    def evaluate_bits(self, assignment: Sequence[int]) -> float:
        return self.evaluate([1 - 2 * int(b) for b in assignment])


def add(p: BinaryPolynomial, q: BinaryPolynomial) -> BinaryPolynomial:
    out = dict(p._terms)
    for k, v in q._terms.items():
        out[k] = out.get(k, 0.0) + v
    return BinaryPolynomial._raw(out, max(p.num_vars, q.num_vars))


def mul(p: BinaryPolynomial, q: BinaryPolynomial) -> BinaryPolynomial:
    out: dict[Term, float] = {}
    for kp, vp in p._terms.items():
        sp = set(kp)
        for kq, vq in q._terms.items():
            key = tuple(sorted(sp.union(kq))) if kq else kp
            out[key] = out.get(key, 0.0) + vp * vq
    return BinaryPolynomial._raw(out, max(p.num_vars, q.num_vars))


def sum_polys(polys: Iterable[BinaryPolynomial], num_vars: int | None = None) -> BinaryPolynomial:
    """Add many polynomials with one accumulator (cheaper than chained ``+``)."""
    out: dict[Term, float] = {}
    n = 0
    for p in polys:
        n = max(n, p.num_vars)
        for k, v in p._terms.items():
            out[k] = out.get(k, 0.0) + v
    return BinaryPolynomial._raw(out, n if num_vars is None else num_vars)


def product(polys: Iterable[BinaryPolynomial]) -> BinaryPolynomial:
    out = BinaryPolynomial.const(1.0)
    for p in polys:
        out = mul(out, p)
    return out


def evaluate(p: BinaryPolynomial, assignment: Sequence[int]) -> float:
    if len(assignment) < p.num_vars:
        raise ValueError(f"assignment has {len(assignment)} bits, polynomial needs {p.num_vars}")
    total = 0.0
    for idx, coeff in p._terms.items():
        if all(assignment[i] for i in idx):
            total += coeff
    return total


def to_ising(p: BinaryPolynomial) -> IsingPolynomial:
    """Substitute ``b_i = (1 - Z_i)/2`` and expand.

    A term over ``I`` contributes ``alpha_I * 2**-|I| * (-1)**|S|`` to every
    ``S`` contained in ``I``.
    """
    out: dict[Term, float] = {}
    for idx, coeff in p._terms.items():
        scale = coeff / (1 << len(idx))
        for size in range(len(idx) + 1):
            c = -scale if size % 2 else scale
            for sub in itertools.combinations(idx, size):
                out[sub] = out.get(sub, 0.0) + c
    return IsingPolynomial._raw(out, p.num_vars)


def term_count(p: _Polynomial) -> int:
    return p.term_count()


def order(p: _Polynomial) -> int:
    return p.order()


def evaluate_all(p: BinaryPolynomial, num_vars: int | None = None) -> np.ndarray:
    """Values of ``p`` on every basis index ``0 .. 2**n - 1`` (bit ``i`` = ``b_i``).

    Places each coefficient at its term's bitmask and runs a subset-sum
    transform, so the cost is ``n * 2**n`` regardless of the term count.
    """
    n = p.num_vars if num_vars is None else num_vars
    if n < p.num_vars:
        raise ValueError("num_vars smaller than the polynomial's")
    table = np.zeros(1 << n, dtype=np.float64)
    for idx, coeff in p._terms.items():
        mask = 0
        for i in idx:
            mask |= 1 << i
        table[mask] += coeff
    _kernels.subset_sum_inplace(table, n)
    return table
