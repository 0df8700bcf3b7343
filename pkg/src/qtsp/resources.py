"""Closed-form resource estimates per encoding: qubits, terms, depth, volume,
energy range and Hoeffding sample counts."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .encodings import (EncodedProblem, Encoding, TspInstance, ceil_log2, default_e_pen, default_penalty,
                        mixed_layout)

EXACT = "exact"
BOUND = "bound"
EXPONENTIAL = "exponential"

PAPER = "paper"
STANDARD = "standard"


def _kind(kind) -> Encoding:
    return Encoding.parse(kind)


def hobo_bits(n: int) -> int:
    return max(1, ceil_log2(n))


@dataclass(frozen=True)
class MixedParameters:
    k: int
    l: int
    slack: int
    alpha: float
    c: float


def mixed_parameters(n: int, k: int | None = None, alpha: float | None = None) -> MixedParameters:
    """Resolve ``K`` from ``alpha`` (``K = floor(alpha*log2 N)``) or ``alpha`` from ``K``;
    ``C = 2**(K - alpha*log2 N)``."""
    if (k is None) == (alpha is None):
        raise ValueError("give exactly one of K or alpha")
    log_n = math.log2(n)
    if k is None:
        k = max(1, math.floor(alpha * log_n + 1e-12))
    else:
        alpha = k / log_n
    layout = mixed_layout(n, k)
    return MixedParameters(k, layout.l, layout.slack, alpha, 2.0 ** (k - alpha * log_n))


def qubit_count(kind, n: int, k: int | None = None) -> int:
    """Logical qubits; for the mixed encoding the ``floor(N/2)*L`` ancillas are included."""
    kind = _kind(kind)
    if kind is Encoding.QUBO:
        return n * n
    if kind is Encoding.HOBO:
        return n * hobo_bits(n)
    if kind is Encoding.MIXED:
        if k is None:
            raise ValueError("the mixed encoding needs K")
        p = mixed_layout(n, k)
        return n * p.k * p.l + (n // 2) * p.l + n * p.slack
    return ceil_log2(math.factorial(n))


def ancilla_count(kind, n: int, k: int | None = None) -> int:
    """Ancillas reported separately from :func:`qubit_count` (HOBO only)."""
    return n // 2 if _kind(kind) is Encoding.HOBO else 0


def term_count_formula(kind, n: int, k: int | None = None) -> tuple[float | None, str]:
    kind = _kind(kind)
    if kind is Encoding.QUBO:
        return 2 * n ** 3 - n ** 2 + 1, EXACT
    if kind is Encoding.HOBO:
        return (n ** 4 - n ** 3) // 2 + n ** 2, BOUND
    if kind is Encoding.MIXED:
        if k is None:
            raise ValueError("the mixed encoding needs K")
        p = mixed_parameters(n, k=k)
        return p.c / 2 * n ** (3 + p.alpha), BOUND
    return None, EXPONENTIAL


def depth_formula(kind, n: int, k: int | None = None, unit: str = "cnot-rotation") -> float | None:
    """Depth bound: QUBO ``12N+1`` (cnot-rotation) or ``4N+1`` (phase-gate);
    HOBO ``2N^3-1`` with ancillas; mixed leading form ``2 C^2 N^(1+2 alpha)``."""
    kind = _kind(kind)
    if kind is Encoding.QUBO:
        return 12 * n + 1 if unit == "cnot-rotation" else 4 * n + 1
    if kind is Encoding.HOBO:
        return 2 * n ** 3 - 1
    if kind is Encoding.MIXED:
        if k is None:
            raise ValueError("the mixed encoding needs K")
        p = mixed_parameters(n, k=k)
        return 2 * p.c ** 2 * n ** (1 + 2 * p.alpha)
    return None


def mixed_depth_components(n: int, k: int) -> dict[str, int]:
    """Addend-by-addend depth of the mixed gray-ancilla construction.

    Same-bunch pairs: one Gray walk of ``2*4**K - 1`` per round-robin round.
    Cross-bunch neighbours: ``L-1`` shifts per class of vertex-disjoint time
    edges (2 classes for even N, 3 for odd N).  Slot-internal 2-local terms
    and slacks: ``3(KL + slack) + 1``.
    """
    p = mixed_layout(n, k)
    walk = 2 * 4 ** p.k - 1
    rr = n - 1 if n % 2 == 0 else n
    classes = 1 if n == 2 else (2 if n % 2 == 0 else 3)
    out = {
        "same_bunch": rr * walk,
        "cross_bunch": classes * (p.l - 1) * walk,
        "slot_internal": 3 * (p.k * p.l + p.slack) + 1,
    }
    out["total"] = sum(out.values())
    return out


def volume_formula(kind, n: int, k: int | None = None, unit: str = "cnot-rotation") -> float | None:
    d = depth_formula(kind, n, k, unit)
    if d is None:
        return None
    return d * (qubit_count(kind, n, k) + ancilla_count(kind, n, k))


def energy_bounds(kind, inst: TspInstance, k: int | None = None, e_pen: float | None = None) -> tuple[float, float]:
    """(lower, upper) over every bitstring, summed addend by addend with the
    instance's actual penalties and weights."""
    kind = _kind(kind)
    n, a1, a2, b = inst.n, inst.a1, inst.a2, inst.b
    w = inst.w
    max_w = inst.max_w
    if kind is Encoding.QUBO:
        # (1 - sum_i b_ti)^2 <= (N-1)^2 per row/column; each (t, i != j) edge at most once
        return 0.0, (a1 + a2) * n * (n - 1) ** 2 + b * n * float(w.sum())
    if kind is Encoding.HOBO:
        kk = hobo_bits(n)
        return 0.0, a1 * n * max(kk - 1, 1) + a2 * math.comb(n, 2) + b * n * max_w
    if kind is Encoding.MIXED:
        if k is None:
            raise ValueError("the mixed encoding needs K")
        p = mixed_layout(n, k)
        kl = p.k * p.l
        valid = max(4 ** p.slack, (kl - 1) ** 2) + kl ** 2 + p.k
        neq = 2 * kl
        return 0.0, a1 * n * valid + a2 * math.comb(n, 2) * neq + b * n * p.l ** 2 * max_w
    pen = default_e_pen(inst) if e_pen is None else e_pen
    return b * n * inst.min_w, max(pen, b * n * max_w)


def energy_upper_bound(problem: EncodedProblem) -> float:
    k = getattr(problem.layout, "k", None) if problem.kind is Encoding.MIXED else None
    return energy_bounds(problem.kind, problem.instance, k, problem.e_pen)[1]


def hoeffding_samples(range_width: float, t: float, delta: float, convention: str = STANDARD) -> int:
    """Smallest ``M`` with ``2 exp(-2 M t^2 / D) <= delta``.

    ``D`` is the range width under the ``paper`` convention and its square
    under the ``standard`` (classical Hoeffding) convention.
    """
    if range_width <= 0 or t <= 0 or not 0 < delta < 1:
        raise ValueError("need range_width > 0, t > 0 and 0 < delta < 1")
    if convention not in (PAPER, STANDARD):
        raise ValueError(f"unknown convention {convention!r}")
    d = range_width if convention == PAPER else range_width ** 2
    return max(1, math.ceil(d * math.log(2.0 / delta) / (2.0 * t * t) - 1e-9))


def unit_instance(n: int, kind=Encoding.QUBO, b: float = 1.0) -> TspInstance:
    """All off-diagonal costs 1, penalties at the encoding's default ratio."""
    w = np.ones((n, n)) - np.eye(n)
    pen = default_penalty(kind, w, b)
    return TspInstance(n, w, pen, pen, b)


@dataclass
class ResourceReport:
    kind: str
    n: int
    k: int | None
    alpha: float | None
    qubits: int
    ancillas: int
    terms: float | None
    terms_flag: str
    depth_phase_gate: float | None
    depth_cnot_rotation: float | None
    volume: float | None
    energy_range: tuple[float, float]
    samples_standard: int
    samples_paper: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["energy_range"] = list(self.energy_range)
        return d


def report(kind, n: int, k: int | None = None, *, alpha: float | None = None, t: float = 0.1,
           delta: float = 0.05, inst: TspInstance | None = None) -> ResourceReport:
    kind = _kind(kind)
    if kind is Encoding.MIXED:
        p = mixed_parameters(n, k=k, alpha=alpha) if (k is None) != (alpha is None) else mixed_parameters(n, k=k)
        k, alpha = p.k, p.alpha
    else:
        k = alpha = None
    inst = inst or unit_instance(n, kind)
    lo, hi = energy_bounds(kind, inst, k)
    terms, flag = term_count_formula(kind, n, k)
    width = max(hi - lo, 1e-12)
    return ResourceReport(
        kind.value, n, k, alpha, qubit_count(kind, n, k), ancilla_count(kind, n, k), terms, flag,
        depth_formula(kind, n, k, "phase-gate"), depth_formula(kind, n, k, "cnot-rotation"),
        volume_formula(kind, n, k), (lo, hi),
        hoeffding_samples(width, t, delta, STANDARD), hoeffding_samples(width, t, delta, PAPER),
    )


def format_table(reports: list[ResourceReport]) -> str:
    def fmt(v, flag=None):
        if v is None:
            return EXPONENTIAL
        s = f"{v:.4g}" if isinstance(v, float) and not float(v).is_integer() else str(int(v))
        return f"{s} ({flag})" if flag else s

    header = ["kind", "N", "K", "qubits", "ancillas", "terms", "depth(phase)", "depth(cnot)", "volume",
              "M(standard)", "M(paper)"]
    rows = [header]
    for r in reports:
        rows.append([r.kind, str(r.n), "-" if r.k is None else str(r.k), str(r.qubits), str(r.ancillas),
                     fmt(r.terms, r.terms_flag), fmt(r.depth_phase_gate), fmt(r.depth_cnot_rotation),
                     fmt(r.volume), str(r.samples_standard), str(r.samples_paper)])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(wd) for c, wd in zip(row, widths)).rstrip() for row in rows)


def fit_exponent(ns, values) -> float:
    """Least-squares slope of log(value) against log(N)."""
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])
