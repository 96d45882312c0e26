"""End-to-end community detection: graph -> B -> QUBO -> solver -> labeling."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .graph_io import Graph
from .modularity import CommunityLabeling, ModularityMatrix, modularity_matrix, threshold_matrix
from .qubo import PenaltyConfig, Qubo, decode_labeling, k_concurrent_qubo, one_hot_violations
from .solvers import (
    Backend,
    SampleSet,
    SolverParams,
    derive_seed,
    exhaustive_solve,
    hybrid_solve,
    sa_sample,
    tabu_improve,
)

__all__ = [
    "AUTO_K_CAP",
    "Detection",
    "auto_detect",
    "choose_backend",
    "detect_communities",
    "run_detection",
    "solve_qubo",
]

log = logging.getLogger(__name__)

# problems this small are enumerated outright by the "auto" backend
AUTO_EXHAUSTIVE_MAX_VARS = 20
AUTO_K_CAP = 16
AUTO_K_TOL = 1e-5
MAX_RETUNES = 5
POLISH_TOP = 10


@dataclass(frozen=True)
class Detection:
    """One solver run on one graph at one ``k``.

    ``violations`` counts one-hot violations in the raw best sample (before
    repair) of the last attempt; ``retunes`` is how many times gamma was
    doubled to get rid of them. ``labeling.score`` is always measured on
    the unthresholded modularity matrix.
    """

    labeling: CommunityLabeling
    k: int
    threshold: float
    kept_pairs: int
    backend: Backend
    gamma: float
    beta: float
    energy: float
    violations: int
    retunes: int
    num_vars: int
    seed: int
    wall_time: float

    @property
    def score(self) -> float:
        return self.labeling.score


def choose_backend(num_vars: int, params: SolverParams) -> Backend:
    if num_vars <= AUTO_EXHAUSTIVE_MAX_VARS:
        return Backend.EXHAUSTIVE
    if num_vars <= params.var_budget:
        return Backend.SA
    return Backend.HYBRID


def _polish(q: Qubo, ss: SampleSet, params: SolverParams) -> SampleSet:
    polished = [
        tabu_improve(q, ss.bits[r], replace(params, seed=derive_seed(params.seed, 10, r) >> 32))
        for r in range(min(POLISH_TOP, len(ss)))
    ]
    extra = SampleSet.from_states(q, np.array(polished), ss.backend, ss.seed)
    return ss.merge(q, extra)


def solve_qubo(q: Qubo, params: SolverParams, backend: Backend | str = "auto", start=None) -> SampleSet:
    """Run one backend; ``"auto"`` picks exhaustive, SA or hybrid by size.

    SA reads are followed by a tabu pass over the best few of them, and the
    tabu backend runs tabu search from ``num_reads`` random starts. A
    ``start`` bit vector seeds the hybrid incumbent, replaces the first
    tabu start, and is tabu-polished into the SA sample set.
    """
    t0 = time.perf_counter()
    backend = choose_backend(q.num_vars, params) if backend == "auto" else Backend(backend)
    if backend is Backend.EXHAUSTIVE:
        ss = exhaustive_solve(q)
    elif backend is Backend.SA:
        ss = sa_sample(q, params)
        if start is not None:
            ss = ss.merge(q, SampleSet.from_states(q, np.asarray(start)[None, :], Backend.SA, params.seed))
        ss = _polish(q, ss, params)
    elif backend is Backend.TABU:
        rng = np.random.default_rng(derive_seed(params.seed, 11))
        starts = rng.integers(0, 2, (params.num_reads, q.num_vars), dtype=np.int8)
        if start is not None:
            starts[0] = start
        ends = [
            tabu_improve(q, s, replace(params, seed=derive_seed(params.seed, 12, r) >> 32))
            for r, s in enumerate(starts)
        ]
        ss = SampleSet.from_states(q, np.array(ends), Backend.TABU, params.seed)
    else:
        ss = hybrid_solve(q, params, start)
    return replace(ss, seed=params.seed, wall_time=time.perf_counter() - t0)


def _prepare(g: Graph | ModularityMatrix, threshold: float) -> tuple[ModularityMatrix, ModularityMatrix, int]:
    bm = g if isinstance(g, ModularityMatrix) else modularity_matrix(g)
    work, kept = threshold_matrix(bm, threshold)
    return bm, work, kept


def run_detection(
    g: Graph | ModularityMatrix,
    k: int,
    params: SolverParams | None = None,
    penalty: PenaltyConfig | None = None,
    *,
    threshold: float = 0.0,
    backend: Backend | str = "auto",
    retune: bool = True,
    start: Sequence[int] | None = None,
) -> Detection:
    """Detect up to ``k`` communities with the k-concurrent formulation.

    The QUBO is built from the thresholded matrix; the decoded labeling is
    scored on the original one. If the best sample breaks one-hot
    constraints and ``retune`` is set, gamma is doubled and the problem
    re-solved, at most five times; any violations left are repaired by the
    decoder. ``start`` is an optional labeling (ids below ``k``) used as a
    warm start.
    """
    params = params or SolverParams()
    penalty = penalty or PenaltyConfig()
    t0 = time.perf_counter()
    bm, work, kept = _prepare(g, threshold)
    n = bm.n
    gamma = penalty.gamma_vector(work)
    # the variable budget only limits direct annealing; hybrid handles the rest
    max_vars = max(n * k, params.var_budget)
    x0 = None
    if start is not None:
        start = np.asarray(start, dtype=np.int64)
        if start.shape != (n,) or start.min() < 0 or start.max() >= k:
            raise ValueError(f"start must hold {n} community ids in 0..{k - 1}")
        x0 = np.zeros(n * k, dtype=np.int8)
        x0[start * n + np.arange(n)] = 1
    retunes = 0
    while True:
        q = k_concurrent_qubo(work, k, PenaltyConfig(gamma, penalty.beta), max_vars=max_vars)
        run_params = params if retunes == 0 else replace(params, seed=derive_seed(params.seed, 20, retunes) >> 32)
        ss = solve_qubo(q, run_params, backend, x0)
        x, energy = ss.first
        violations = one_hot_violations(x, n, k)
        if violations == 0 or not retune or retunes == MAX_RETUNES:
            break
        log.info("k=%d: %d one-hot violations, doubling gamma", k, violations)
        gamma = gamma * 2.0
        retunes += 1
    labeling = decode_labeling(x, n, k, bm)
    return Detection(
        labeling=labeling,
        k=k,
        threshold=threshold,
        kept_pairs=kept,
        backend=ss.backend,
        gamma=float(gamma.max()),
        beta=penalty.beta,
        energy=energy,
        violations=violations,
        retunes=retunes,
        num_vars=q.num_vars,
        seed=params.seed,
        wall_time=time.perf_counter() - t0,
    )


def _k_ladder(n: int, cap: int) -> list[int]:
    top = max(2, min(n, cap))
    ks = []
    k = 2
    while k < top:
        ks.append(k)
        k *= 2
    ks.append(top)
    return ks


def auto_detect(
    g: Graph | ModularityMatrix,
    params: SolverParams | None = None,
    penalty: PenaltyConfig | None = None,
    *,
    threshold: float = 0.0,
    backend: Backend | str = "auto",
    k_cap: int = AUTO_K_CAP,
) -> tuple[Detection, list[Detection]]:
    """Double ``k`` from 2 until the score stops improving by more than 1e-5.

    ``k`` never exceeds ``min(n, k_cap)``. Each step is warm-started from
    the best labeling so far, which is still feasible with more
    communities. Returns the best run and every run tried, in order.
    """
    bm, _, _ = _prepare(g, 0.0)
    tried: list[Detection] = []
    best: Detection | None = None
    for k in _k_ladder(bm.n, k_cap):
        warm = best.labeling.labels if best is not None else None
        d = run_detection(bm, k, params, penalty, threshold=threshold, backend=backend, start=warm)
        tried.append(d)
        if best is not None and not d.score > best.score + AUTO_K_TOL:
            break
        best = d
    assert best is not None
    return best, tried


def detect_communities(
    g: Graph,
    k: int | None = None,
    params: SolverParams | None = None,
    penalty: PenaltyConfig | None = None,
    *,
    threshold: float = 0.0,
    backend: Backend | str = "auto",
) -> CommunityLabeling:
    """Community labeling of ``g``; ``k=None`` searches k by doubling."""
    if k is None:
        return auto_detect(g, params, penalty, threshold=threshold, backend=backend)[0].labeling
    return run_detection(g, k, params, penalty, threshold=threshold, backend=backend).labeling
