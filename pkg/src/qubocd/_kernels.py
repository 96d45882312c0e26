"""Compiled inner loops for the QUBO solvers.

All kernels take the symmetric CSR coupling matrix (``indptr``,
``indices``, ``data``) plus the linear vector, and keep a per-variable
local field ``f_i = linear_i + sum_j Q_ij x_j`` so that the energy change
of flipping ``x_i`` is ``(1 - 2 x_i) f_i``.

Random numbers come from a splitmix64 stream per read, seeded with
``seed + read_index``, so results do not depend on scheduling.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _next(state):
    s = state[0] + _GOLDEN
    state[0] = s
    z = s
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _uniform(state):
    return np.float64(_next(state) >> np.uint64(11)) * _INV53


@njit(cache=True)
def _seed_state(seed):
    state = np.zeros(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    _next(state)
    return state


@njit(cache=True)
def _local_field(indptr, indices, data, linear, x):
    n = linear.shape[0]
    f = linear.copy()
    for i in range(n):
        if x[i]:
            for p in range(indptr[i], indptr[i + 1]):
                f[indices[p]] += data[p]
    return f


@njit(cache=True)
def _energy(indptr, indices, data, linear, x):
    e = 0.0
    n = linear.shape[0]
    for i in range(n):
        if x[i]:
            e += linear[i]
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j > i and x[j]:
                    e += data[p]
    return e


@njit(cache=True)
def _flip(indptr, indices, data, x, f, i):
    step = 1.0 - 2.0 * x[i]
    x[i] = 1 - x[i]
    for p in range(indptr[i], indptr[i + 1]):
        f[indices[p]] += step * data[p]


@njit(cache=True)
def sample_deltas(indptr, indices, data, linear, num_samples, seed):
    """|delta E| of every single flip at ``num_samples`` random states."""
    n = linear.shape[0]
    out = np.empty(num_samples * n)
    state = _seed_state(seed)
    x = np.zeros(n, dtype=np.int8)
    for s in range(num_samples):
        for i in range(n):
            x[i] = 1 if _uniform(state) < 0.5 else 0
        f = _local_field(indptr, indices, data, linear, x)
        for i in range(n):
            out[s * n + i] = abs((1.0 - 2.0 * x[i]) * f[i])
    return out


@njit(cache=True)
def anneal(indptr, indices, data, linear, betas, num_reads, seed):
    """Metropolis single-flip annealing; one full sweep per entry of ``betas``.

    Returns the final states and the energies tracked incrementally
    (linear + quadratic part, no offset).
    """
    n = linear.shape[0]
    states = np.zeros((num_reads, n), dtype=np.int8)
    tracked = np.zeros(num_reads)
    for r in range(num_reads):
        state = _seed_state(seed + r)
        x = states[r]
        for i in range(n):
            x[i] = 1 if _uniform(state) < 0.5 else 0
        f = _local_field(indptr, indices, data, linear, x)
        e = _energy(indptr, indices, data, linear, x)
        for beta in betas:
            for i in range(n):
                delta = (1.0 - 2.0 * x[i]) * f[i]
                if delta <= 0.0:
                    accept = True
                else:
                    bd = beta * delta
                    accept = bd < 40.0 and _uniform(state) < np.exp(-bd)
                if accept:
                    _flip(indptr, indices, data, x, f, i)
                    e += delta
        tracked[r] = e
    return states, tracked


@njit(cache=True)
def tabu(indptr, indices, data, linear, start, tenure, max_stall, max_steps, seed):
    """Single-flip tabu search from ``start``.

    Each step flips the non-tabu variable with the lowest energy change,
    breaking exact ties uniformly at random; a tabu variable is allowed
    when the flip beats the best energy seen so far. Stops after
    ``max_stall`` steps without a new best, or ``max_steps`` in total.
    Returns ``(best_state, best_energy, tracked_energy_of_last_state)``.
    """
    n = linear.shape[0]
    state = _seed_state(seed)
    x = start.copy()
    f = _local_field(indptr, indices, data, linear, x)
    e = _energy(indptr, indices, data, linear, x)
    best = x.copy()
    best_e = e
    tabu_until = np.zeros(n, dtype=np.int64)
    stall = 0
    step = 0
    eps = 1e-12 * (1.0 + abs(best_e))
    while stall < max_stall and step < max_steps and n > 0:
        step += 1
        pick = -1
        pick_delta = np.inf
        ties = 0
        for i in range(n):
            delta = (1.0 - 2.0 * x[i]) * f[i]
            if delta > pick_delta + eps:
                continue
            if not (tabu_until[i] < step or e + delta < best_e - eps):
                continue
            if delta < pick_delta - eps:
                pick = i
                pick_delta = delta
                ties = 1
            else:
                ties += 1
                if _uniform(state) * ties < 1.0:
                    pick = i
                    pick_delta = delta
        if pick < 0:
            stall += 1
            continue
        _flip(indptr, indices, data, x, f, pick)
        e += pick_delta
        tabu_until[pick] = step + tenure
        if e < best_e - eps:
            best_e = e
            best[:] = x
            stall = 0
            eps = 1e-12 * (1.0 + abs(best_e))
        else:
            stall += 1
    return best, best_e, e


@njit(cache=True)
def enumerate_minima(indptr, indices, data, linear, tol):
    """Gray-code walk over all 2^n states; returns every state within ``tol`` of the minimum."""
    n = linear.shape[0]
    x = np.zeros(n, dtype=np.int8)
    f = linear.copy()
    e = 0.0
    best_e = 0.0
    cap = 64
    codes = np.zeros(cap, dtype=np.int64)
    count = 1
    code = 0
    total = 1 << n
    for t in range(1, total):
        # bit that changes between gray(t-1) and gray(t)
        i = 0
        while not (t >> i) & 1:
            i += 1
        delta = (1.0 - 2.0 * x[i]) * f[i]
        _flip(indptr, indices, data, x, f, i)
        e += delta
        code ^= 1 << i
        if e < best_e - tol:
            best_e = e
            count = 0
        if e <= best_e + tol:
            if count == cap:
                grown = np.zeros(cap * 2, dtype=np.int64)
                grown[:cap] = codes
                codes = grown
                cap *= 2
            codes[count] = code
            count += 1
    return codes[:count], best_e


@njit(cache=True)
def grow_blocks(indptr, indices, data, order, size):
    """Cut variables into blocks of ``size``, growing each block from the
    next unassigned variable in ``order`` by repeatedly adding the
    unassigned variable with the strongest ``|Q_ij|`` link to the block."""
    n = order.shape[0]
    assigned = np.zeros(n, dtype=np.bool_)
    link = np.zeros(n)
    block_of = np.empty(n, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    filled = 0
    nblocks = 0
    cursor = 0
    while filled < n:
        while assigned[order[cursor]]:
            cursor += 1
        v = order[cursor]
        count = 0
        touched = np.empty(0, dtype=np.int64)
        while True:
            assigned[v] = True
            block_of[v] = nblocks
            members[filled] = v
            filled += 1
            count += 1
            for p in range(indptr[v], indptr[v + 1]):
                j = indices[p]
                a = abs(data[p])
                if not assigned[j] and a > link[j]:
                    link[j] = a
            if count == size or filled == n:
                break
            best = -1
            best_link = 0.0
            for j in range(n):
                if not assigned[j] and link[j] > best_link:
                    best = j
                    best_link = link[j]
            if best < 0:
                while assigned[order[cursor]]:
                    cursor += 1
                best = order[cursor]
            v = best
        for j in range(n):
            link[j] = 0.0
        nblocks += 1
    return members, block_of, nblocks
