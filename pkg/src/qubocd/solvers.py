"""QUBO solvers: exhaustive oracle, simulated annealing, tabu search and a
qbsolv-style decomposition loop for problems too large to anneal directly."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .qubo import Qubo

__all__ = [
    "Backend",
    "SampleSet",
    "SolverParams",
    "auto_beta_range",
    "clamp_qubo",
    "derive_seed",
    "exhaustive_solve",
    "hybrid_solve",
    "sa_sample",
    "tabu_improve",
]

log = logging.getLogger(__name__)

EXHAUSTIVE_MAX_VARS = 25
ENERGY_TOL = 1e-9


class Backend(str, Enum):
    EXHAUSTIVE = "exhaustive"
    SA = "sa"
    TABU = "tabu"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class SolverParams:
    """Knobs for the annealing stack.

    ``tabu_tenure`` None means ``max(10, num_vars // 20)``.
    ``beta_schedule`` is the ``(hot, cold)`` inverse temperature pair;
    None calibrates it per problem (see :func:`auto_beta_range`).
    ``sub_num_reads``/``sub_sweeps`` size the anneals of hybrid subproblems.
    ``debug`` re-checks incrementally tracked energies against a full
    recomputation.
    """

    seed: int = 0
    num_reads: int = 50
    sweeps: int = 2000
    beta_schedule: tuple[float, float] | None = None
    tabu_tenure: int | None = None
    tabu_max_stall: int = 2000
    subqubo_size: int = 40
    hybrid_max_rounds: int = 50
    var_budget: int = 1024
    sub_num_reads: int = 10
    sub_sweeps: int = 300
    block_mode: str = "coupled"
    debug: bool = False

    def __post_init__(self):
        if self.tabu_tenure is not None and self.tabu_tenure <= 0:
            raise ValueError("tabu_tenure must be positive")
        for name in ("num_reads", "sweeps", "tabu_max_stall", "subqubo_size",
                     "hybrid_max_rounds", "var_budget", "sub_num_reads", "sub_sweeps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.beta_schedule is not None:
            hot, cold = self.beta_schedule
            if not 0 < hot < cold:
                raise ValueError("beta_schedule must satisfy 0 < hot < cold")
        if self.subqubo_size > self.var_budget:
            raise ValueError("subqubo_size must not exceed var_budget")
        if self.block_mode not in ("coupled", "impact", "random"):
            raise ValueError("block_mode must be 'coupled', 'impact' or 'random'")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Distinct bit vectors with energies and occurrence counts, sorted by (energy, bits)."""

    bits: np.ndarray
    energies: np.ndarray
    occurrences: np.ndarray
    backend: Backend
    seed: int = 0
    wall_time: float = 0.0
    history: tuple[float, ...] = ()

    @classmethod
    def from_states(cls, q: Qubo, states, backend: Backend, seed: int = 0, wall_time: float = 0.0,
                    occurrences=None) -> "SampleSet":
        states = np.atleast_2d(np.asarray(states, dtype=np.int8))
        if occurrences is None:
            occurrences = np.ones(len(states), dtype=np.int64)
        uniq, inverse = np.unique(states, axis=0, return_inverse=True)
        counts = np.bincount(inverse.ravel(), weights=occurrences, minlength=len(uniq)).astype(np.int64)
        energies = np.asarray(q.energy(uniq), dtype=float).reshape(-1)
        order = np.lexsort(tuple(uniq.T[::-1]) + (energies,))
        return cls(uniq[order], energies[order], counts[order], Backend(backend), seed, wall_time)

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def first(self) -> tuple[np.ndarray, float]:
        return self.bits[0], float(self.energies[0])

    def merge(self, q: Qubo, other: "SampleSet") -> "SampleSet":
        return SampleSet.from_states(
            q,
            np.concatenate([self.bits, other.bits]),
            self.backend,
            self.seed,
            self.wall_time + other.wall_time,
            occurrences=np.concatenate([self.occurrences, other.occurrences]),
        )


def derive_seed(seed: int, *keys: int) -> int:
    """Independent non-negative 62-bit seed for a ``(seed, keys...)`` path."""
    hi, lo = np.random.SeedSequence([seed, *keys]).generate_state(2, np.uint32)
    return ((int(hi) << 30) ^ int(lo)) & ((1 << 62) - 1)


def _csr(q: Qubo):
    adj = q.adjacency
    return (adj.indptr.astype(np.int64), adj.indices.astype(np.int64),
            adj.data.astype(np.float64), np.ascontiguousarray(q.linear, dtype=np.float64))


def exhaustive_solve(q: Qubo) -> SampleSet:
    """All ground states of ``q`` by complete enumeration (at most 25 variables)."""
    if q.num_vars > EXHAUSTIVE_MAX_VARS:
        raise ValueError(f"exhaustive_solve handles at most {EXHAUSTIVE_MAX_VARS} variables, got {q.num_vars}")
    t0 = time.perf_counter()
    scale = 1.0 + float(np.abs(q.linear).sum() + np.abs(q.values).sum())
    codes, _ = _kernels.enumerate_minima(*_csr(q), 1e-12 * scale)
    states = ((codes[:, None] >> np.arange(q.num_vars)) & 1).astype(np.int8)
    ss = SampleSet.from_states(q, states, Backend.EXHAUSTIVE, wall_time=time.perf_counter() - t0)
    keep = ss.energies <= ss.energies[0] + ENERGY_TOL * max(1.0, abs(ss.energies[0]))
    return replace(ss, bits=ss.bits[keep], energies=ss.energies[keep], occurrences=ss.occurrences[keep])


def auto_beta_range(q: Qubo, seed: int = 0, num_samples: int = 8) -> tuple[float, float]:
    """Inverse temperatures giving ~0.8 initial and ~1e-4 final uphill acceptance.

    The hot end uses the median single-flip ``|dE|`` at random states.
    Near the end of an anneal the remaining uphill moves are the small
    ones, so the cold end uses a low (5th) percentile of the nonzero
    coefficient magnitudes instead.
    """
    deltas = _kernels.sample_deltas(*_csr(q), num_samples, seed)
    deltas = deltas[deltas > 1e-12]
    coeffs = np.abs(np.concatenate([q.linear, q.values]))
    coeffs = coeffs[coeffs > 1e-12]
    if deltas.size == 0 or coeffs.size == 0:
        return 0.1, 1.0
    hot = np.log(1 / 0.8) / float(np.median(deltas))
    cold = np.log(1e4) / float(np.percentile(coeffs, 5))
    if cold <= hot:
        cold = hot * 1e3
    return hot, cold


def _betas(q: Qubo, params: SolverParams, sweeps: int) -> np.ndarray:
    hot, cold = params.beta_schedule or auto_beta_range(q, params.seed)
    if sweeps == 1:
        return np.array([cold])
    return np.geomspace(hot, cold, sweeps)


def sa_sample(q: Qubo, params: SolverParams, *, num_reads: int | None = None,
              sweeps: int | None = None) -> SampleSet:
    """Independent simulated-annealing reads from random initial states."""
    if q.num_vars > params.var_budget:
        raise ValueError(
            f"{q.num_vars} variables exceed var_budget={params.var_budget}; use hybrid_solve"
        )
    num_reads = num_reads or params.num_reads
    sweeps = sweeps or params.sweeps
    t0 = time.perf_counter()
    if q.num_vars == 0:
        return SampleSet.from_states(q, np.zeros((1, 0), dtype=np.int8), Backend.SA, params.seed)
    # read r uses stream base + r, so reads can be split across workers freely
    base = derive_seed(params.seed, 0)
    states, tracked = _kernels.anneal(*_csr(q), _betas(q, params, sweeps), num_reads, base)
    ss = SampleSet.from_states(q, states, Backend.SA, params.seed, time.perf_counter() - t0)
    if params.debug:
        full = q.energy(states) - q.offset
        if not np.allclose(tracked, full, rtol=0, atol=1e-9 * (1 + np.abs(full).max())):
            raise AssertionError("incremental SA energies diverged from recomputation")
    return ss


def tabu_improve(q: Qubo, start, params: SolverParams) -> np.ndarray:
    """Tabu search from ``start``; the result never has higher energy than ``start``."""
    start = np.asarray(start, dtype=np.int8)
    if start.shape != (q.num_vars,):
        raise ValueError(f"start must have length {q.num_vars}")
    tenure = params.tabu_tenure or max(10, q.num_vars // 20)
    best, best_e, _ = _kernels.tabu(
        *_csr(q), start, tenure, params.tabu_max_stall, 100 * params.tabu_max_stall,
        derive_seed(params.seed, 1),
    )
    if params.debug:
        if abs((q.energy(best) - q.offset) - best_e) > 1e-9 * (1 + abs(best_e)):
            raise AssertionError("incremental tabu energy diverged from recomputation")
    return best


def clamp_qubo(q: Qubo, x, block, energy: float | None = None) -> Qubo:
    """Subproblem over ``block`` with every other variable fixed at its value in ``x``.

    Couplings to fixed variables fold into the linear terms; the fixed
    part's energy becomes the offset, so ``sub.energy(y) == q.energy(x')``
    where ``x'`` is ``x`` with ``x'[block] = y``. Passing the known
    ``energy`` of ``x`` avoids recomputing it over the whole problem.
    """
    x = np.asarray(x, dtype=np.int8)
    block = np.asarray(block, dtype=np.int64)
    adj = q.adjacency
    fixed = x.astype(float)
    fixed[block] = 0.0
    rows = adj[block]
    linear = q.linear[block] + rows @ fixed
    sub = sp.triu(rows[:, block], k=1).tocoo()
    if energy is None:
        offset = float(q.energy(fixed.astype(np.int8)))
    else:
        # remove what the block contributes at its current values
        y = x[block].astype(float)
        inner = float(y[sub.row] @ (sub.data * y[sub.col])) if sub.nnz else 0.0
        offset = energy - float(linear @ y) - inner
    return Qubo(linear, sub.row, sub.col, sub.data, offset)


def _solve_block(q: Qubo, params: SolverParams, seed: int) -> np.ndarray:
    if q.num_vars <= 16:
        return exhaustive_solve(q).bits[0]
    sub_params = replace(params, seed=seed, var_budget=max(params.var_budget, q.num_vars))
    ss = sa_sample(q, sub_params, num_reads=params.sub_num_reads, sweeps=params.sub_sweeps)
    return tabu_improve(q, ss.bits[0], sub_params)


def _blocks(q: Qubo, x: np.ndarray, params: SolverParams, rng: np.random.Generator) -> list[np.ndarray]:
    n = q.num_vars
    if params.block_mode == "random":
        order = rng.permutation(n)
    else:
        order = np.argsort(-np.abs(q.flip_deltas(x)), kind="stable")
    if params.block_mode != "coupled":
        return [np.sort(order[lo:lo + params.subqubo_size]) for lo in range(0, n, params.subqubo_size)]
    adj = q.adjacency
    members, block_of, nblocks = _kernels.grow_blocks(
        adj.indptr.astype(np.int64), adj.indices.astype(np.int64), adj.data.astype(np.float64),
        order.astype(np.int64), params.subqubo_size,
    )
    return [np.sort(members[block_of[members] == b]) for b in range(nblocks)]


def hybrid_solve(q: Qubo, params: SolverParams, start=None) -> SampleSet:
    """Decomposition loop: clamp blocks of the incumbent, solve them, then tabu over everything.

    Each round ranks variables by the magnitude of their single-flip
    energy change at the incumbent and cuts them into blocks of
    ``subqubo_size``. ``block_mode="impact"`` cuts the ranking directly;
    ``"coupled"`` (default) seeds each block with the highest-ranked free
    variable and grows it along the strongest couplings, so strongly
    linked variables are re-optimized together; ``"random"`` uses a random
    order. Each clamped block is annealed (or enumerated when small) and
    accepted on strict improvement; a tabu pass over all variables ends
    the round. Stops after a round without improvement.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(params.seed)
    n = q.num_vars
    if start is None:
        x = rng.integers(0, 2, n, dtype=np.int8)
    else:
        x = np.asarray(start, dtype=np.int8).copy()
    x = tabu_improve(q, x, params)
    energy = float(q.energy(x))
    history = [energy]
    for rnd in range(params.hybrid_max_rounds):
        before = energy
        for b, block in enumerate(_blocks(q, x, params, rng)):
            sub = clamp_qubo(q, x, block, energy)
            y = _solve_block(sub, params, derive_seed(params.seed, 2, rnd, b) >> 32)
            e = float(sub.energy(y))
            if e < energy - ENERGY_TOL * max(1.0, abs(energy)):
                x = x.copy()
                x[block] = y
                energy = e
        x = tabu_improve(q, x, replace(params, seed=derive_seed(params.seed, 3, rnd) >> 32))
        energy = float(q.energy(x))
        history.append(energy)
        log.debug("hybrid round %d: energy %.12g", rnd, energy)
        if not energy < before - ENERGY_TOL * max(1.0, abs(before)):
            break
    ss = SampleSet.from_states(q, x[None, :], Backend.HYBRID, params.seed, time.perf_counter() - t0)
    return replace(ss, history=tuple(history))
