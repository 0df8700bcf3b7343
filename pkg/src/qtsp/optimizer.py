"""Classical outer loop for QAOA.

L-BFGS over the parameter torus (mixer angles mod pi, objective angles mod
R), best-of-restarts for shallow circuits and the trajectory method (warm
start from the previous level with its last angles duplicated) for deep ones.

Determinism: attempt ``j`` at level ``r`` always draws its initial point from
``default_rng([seed, r, j])`` and results are reduced in attempt order, so the
output does not depend on the worker count.
"""
from __future__ import annotations

import json
import math
import os
import warnings
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import line_search

from . import _kernels
from .encodings import encode, random_instance
from .simulator import (DiagonalHamiltonian, QaoaParams, build_diagonal, default_period,
                        feasible_probability, qaoa_state)

WORKERS_ENV = "QTSP_WORKERS"


@dataclass
class OptimizerConfig:
    grad_tol: float = 1e-5
    max_iters: int = 2000
    period: float | None = None
    restarts: int = 100
    seed: int = 0
    memory: int = 10
    trajectory_start: int = 5
    retry_factor: int = 5

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")

    def resolved_period(self, kind=None) -> float:
        if self.period is not None:
            return float(self.period)
        return default_period(kind) if kind is not None else 2.0 * math.pi

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data) -> OptimizerConfig:
        if isinstance(data, str):
            data = json.loads(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class MinimizeResult:
    params: QaoaParams
    energy: float
    converged: bool
    n_iter: int
    grad_norm: float
    history: list[float] = field(default_factory=list)


def _wrap(x: np.ndarray, period: float) -> np.ndarray:
    r = x.shape[0] // 2
    out = x.copy()
    out[:r] = np.mod(out[:r], math.pi)
    out[r:] = np.mod(out[r:], period)
    return out


class _Objective:
    """Caches the last (x, f, g) so the line search does not recompute."""

    def __init__(self, h: DiagonalHamiltonian):
        self.h = h
        self._x = None
        self._fg = None
        self.calls = 0

    def fg(self, x):
        if self._x is None or not np.array_equal(x, self._x):
            r = x.shape[0] // 2
            self._fg = _kernels.energy_and_gradient(self.h.energies, self.h.n, x[:r], x[r:])
            self._x = np.array(x, copy=True)
            self.calls += 1
        return self._fg

    def f(self, x):
        return self.fg(x)[0]

    def g(self, x):
        return self.fg(x)[1]


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def _backtrack(obj, x, f, g, d, alpha=1.0):
    slope = float(np.dot(g, d))
    for _ in range(60):
        if obj.f(x + alpha * d) <= f + 1e-4 * alpha * slope:
            return alpha
        alpha *= 0.5
    return None


def minimize(h: DiagonalHamiltonian, init: QaoaParams, cfg: OptimizerConfig | None = None) -> MinimizeResult:
    """L-BFGS with a strong-Wolfe line search; iterates are wrapped onto the torus."""
    cfg = cfg or OptimizerConfig()
    period = init.period
    obj = _Objective(h)
    x = _wrap(init.vector(), period)
    if x.size == 0:
        e = float(h.energies.mean())
        return MinimizeResult(init, e, True, 0, 0.0, [e])
    f, g = obj.fg(x)
    history = [f]
    pairs: deque = deque(maxlen=cfg.memory)
    prev_f = f + np.linalg.norm(g) / 2
    converged = False
    it = 0
    for it in range(cfg.max_iters):
        if np.max(np.abs(g)) < cfg.grad_tol:
            converged = True
            break
        d = _two_loop(g, list(pairs))
        if np.dot(g, d) >= 0:
            pairs.clear()
            d = -g
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="The line search algorithm")
            alpha = line_search(obj.f, obj.g, x, d, gfk=g, old_fval=f, old_old_fval=prev_f, c2=0.9, maxiter=50)[0]
        if alpha is None:
            alpha = _backtrack(obj, x, f, g, d, 1.0 if pairs else min(1.0, 1.0 / max(np.abs(g).max(), 1e-12)))
            if alpha is None:
                pairs.clear()
                alpha = _backtrack(obj, x, f, g, -g, min(1.0, 1.0 / max(np.abs(g).max(), 1e-12)))
                if alpha is None:
                    break
                d = -g
        s = alpha * d
        f_new, g_new = obj.fg(x + s)
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-12:
            pairs.append((s, y, 1.0 / sy))
        x_new = _wrap(x + s, period)
        if not np.array_equal(x_new, x + s):
            f_new, g_new = obj.fg(x_new)
        prev_f, x, f, g = f, x_new, f_new, g_new
        history.append(f)
    else:
        converged = bool(np.max(np.abs(g)) < cfg.grad_tol)
    return MinimizeResult(QaoaParams.from_vector(x, period), float(f), converged, it,
                          float(np.max(np.abs(g))), history)


def extend_trajectory(p: QaoaParams) -> QaoaParams:
    """Add one level whose angles copy the current last level."""
    if p.r == 0:
        raise ValueError("cannot extend an empty parameter vector")
    return QaoaParams(np.append(p.theta_mix, p.theta_mix[-1]), np.append(p.theta_obj, p.theta_obj[-1]), p.period)


# --------------------------------------------------------------------------
# experiments


@dataclass
class LevelResult:
    r: int
    best_feasible_prob: float | None
    best_energy: float | None
    n_accepted: int
    best_params: QaoaParams | None = None


@dataclass
class ExperimentResult:
    levels: list[LevelResult]
    baseline_feasible_prob: float

    def by_r(self) -> dict[int, LevelResult]:
        return {lv.r: lv for lv in self.levels}


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _attempt_init(seed: int, r: int, j: int, period: float) -> QaoaParams:
    return QaoaParams.random(r, np.random.default_rng([seed, r, j]), period)


def _restart_job(args):
    h, r, j, cfg, period = args
    res = minimize(h, _attempt_init(cfg.seed, r, j, period), cfg)
    return res, feasible_probability(qaoa_state(h, res.params), h)


def _chain_job(args):
    """Optimize level ``r0`` from attempt ``j`` then extend up to ``r_max``."""
    h, r0, r_max, j, cfg, period = args
    out = []
    res = minimize(h, _attempt_init(cfg.seed, r0, j, period), cfg)
    ok = res.converged
    out.append((res, feasible_probability(qaoa_state(h, res.params), h), ok))
    for _ in range(r0 + 1, r_max + 1):
        if not ok:
            break
        res = minimize(h, extend_trajectory(res.params), cfg)
        ok = ok and res.converged
        out.append((res, feasible_probability(qaoa_state(h, res.params), h), ok))
    return out


def _run_jobs(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def _collect(fn, make_job, target: int, budget: int, accepted, workers: int):
    """Run attempts 0, 1, ... in order until ``target`` are accepted or the budget runs out."""
    results = []
    j = 0
    while j < budget and sum(1 for res in results if accepted(res)) < target:
        need = target - sum(1 for res in results if accepted(res))
        batch = list(range(j, min(budget, j + max(need, workers))))
        results.extend(_run_jobs(fn, [make_job(i) for i in batch], workers))
        j = batch[-1] + 1
    kept, count = [], 0
    for res in results:
        if accepted(res) and count < target:
            kept.append(res)
            count += 1
    return kept


def run_experiment(h: DiagonalHamiltonian, r_max: int, cfg: OptimizerConfig | None = None, *,
                   period: float | None = None, workers: int | None = None) -> ExperimentResult:
    """Best feasible probability per level ``r = 1 .. r_max`` over accepted runs."""
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    cfg = cfg or OptimizerConfig()
    period = cfg.resolved_period() if period is None else period
    workers = _workers() if workers is None else workers
    budget = cfg.retry_factor * cfg.restarts
    levels = []

    def summarize(r, runs):
        if not runs:
            return LevelResult(r, None, None, 0)
        best = max(runs, key=lambda t: t[1])
        return LevelResult(r, best[1], min(res.energy for res, _ in runs), len(runs), best[0].params)

    for r in range(1, min(cfg.trajectory_start, r_max + 1)):
        runs = _collect(_restart_job, lambda j: (h, r, j, cfg, period), cfg.restarts, budget,
                        lambda t: t[0].converged, workers)
        levels.append(summarize(r, runs))

    r0 = cfg.trajectory_start
    if r_max >= r0:
        chains = _collect(_chain_job, lambda j: (h, r0, r_max, j, cfg, period), cfg.restarts, budget,
                          lambda c: c[0][2], workers)
        for r in range(r0, r_max + 1):
            i = r - r0
            runs = [(c[i][0], c[i][1]) for c in chains if len(c) > i and c[i][2]]
            levels.append(summarize(r, runs))

    baseline = float(h.feasible_mask.mean())
    return ExperimentResult(levels, baseline)


CSV_COLUMNS = ("encoding", "N", "W_id", "r", "best_feasible_prob", "best_energy", "n_accepted")
SUMMARY_COLUMNS = ("encoding", "N", "r", "mean_feasible_prob", "min_feasible_prob", "max_feasible_prob",
                   "n_instances")


def experiment_rows(kind: str, n: int, w_id: str, result: ExperimentResult) -> list[dict]:
    rows = []
    for lv in result.levels:
        rows.append({
            "encoding": kind, "N": n, "W_id": w_id, "r": lv.r,
            "best_feasible_prob": "" if lv.best_feasible_prob is None else repr(lv.best_feasible_prob),
            "best_energy": "" if lv.best_energy is None else repr(lv.best_energy),
            "n_accepted": lv.n_accepted,
        })
    return rows


def aggregate_rows(kind: str, n: int, per_instance: list[ExperimentResult]) -> list[dict]:
    """Mean and min-max band of the per-instance best probabilities at each level."""
    by_r: dict[int, list[float]] = {}
    for res in per_instance:
        for lv in res.levels:
            by_r.setdefault(lv.r, [])
            if lv.best_feasible_prob is not None:
                by_r[lv.r].append(lv.best_feasible_prob)
    rows = []
    for r in sorted(by_r):
        vals = by_r[r]
        rows.append({
            "encoding": kind, "N": n, "r": r,
            "mean_feasible_prob": repr(float(np.mean(vals))) if vals else "",
            "min_feasible_prob": repr(float(np.min(vals))) if vals else "",
            "max_feasible_prob": repr(float(np.max(vals))) if vals else "",
            "n_instances": len(vals),
        })
    return rows


def run_random_instances(kind, n: int, instances: int, r_max: int, cfg: OptimizerConfig, *,
                         k: int | None = None, workers: int | None = None):
    """Experiment over ``instances`` random cost matrices; instance ``i`` uses seed ``[cfg.seed, i]``."""
    out = []
    for i in range(instances):
        inst = random_instance(n, [cfg.seed, i], kind=kind)
        h = build_diagonal(encode(kind, inst, k=k))
        out.append(run_experiment(h, r_max, cfg, period=cfg.resolved_period(kind), workers=workers))
    return out
