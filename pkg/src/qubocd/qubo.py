"""QUBO / Ising models and the modularity encodings built on them.

Variables of the k-concurrent model are laid out community-major: node
``i`` in community ``j`` is variable ``j * n + i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .modularity import CommunityLabeling, ModularityMatrix, make_labeling

__all__ = [
    "IsingModel",
    "PenaltyConfig",
    "Qubo",
    "QuboFormatError",
    "decode_labeling",
    "default_gamma",
    "dumps_qubo",
    "ising_from_qubo",
    "k_concurrent_qubo",
    "loads_qubo",
    "one_hot_violations",
    "qubo_from_ising",
    "two_community_qubo",
    "var_index",
]

DEFAULT_MAX_VARS = 200_000


def _canonical_couplings(num_vars, rows, cols, values):
    """Sort, merge and drop zeros; returns upper-triangular COO arrays."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=float).ravel()
    if not (rows.shape == cols.shape == values.shape):
        raise ValueError("coupling arrays must have equal length")
    if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= num_vars):
        raise ValueError("coupling index out of range")
    if np.any(rows == cols):
        raise ValueError("couplings must be off-diagonal; put x_i*x_i terms in linear")
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    m = sp.coo_matrix((values, (lo, hi)), shape=(num_vars, num_vars)).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    coo = m.tocoo()
    return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data.astype(float)


@dataclass(frozen=True, eq=False)
class _QuadraticModel:
    linear: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        linear = np.asarray(self.linear, dtype=float).ravel()
        rows, cols, values = _canonical_couplings(linear.size, self.rows, self.cols, self.values)
        for name, arr in (("linear", linear), ("rows", rows), ("cols", cols), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_dict(cls, linear: Sequence[float], quadratic: Mapping[tuple[int, int], float], offset: float = 0.0):
        keys = list(quadratic)
        rows = [i for i, _ in keys]
        cols = [j for _, j in keys]
        return cls(np.asarray(linear, dtype=float), rows, cols, [quadratic[k] for k in keys], offset)

    @property
    def num_vars(self) -> int:
        return self.linear.size

    @property
    def num_couplings(self) -> int:
        return self.values.size

    @property
    def quadratic(self) -> dict[tuple[int, int], float]:
        return {(int(i), int(j)): float(v) for i, j, v in zip(self.rows, self.cols, self.values)}

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric CSR coupling matrix (both triangles, zero diagonal)."""
        n = self.num_vars
        upper = sp.coo_matrix((self.values, (self.rows, self.cols)), shape=(n, n))
        sym = (upper + upper.T).tocsr()
        sym.sort_indices()
        return sym

    def _energies(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        z2 = np.atleast_2d(z)
        if z2.shape[1] != self.num_vars:
            raise ValueError(f"expected vectors of length {self.num_vars}, got {z2.shape[1]}")
        e = self.offset + z2 @ self.linear + (z2[:, self.rows] * z2[:, self.cols]) @ self.values
        return e[0] if single else e

    def __repr__(self) -> str:
        return f"{type(self).__name__}(num_vars={self.num_vars}, couplings={self.num_couplings}, offset={self.offset!r})"


class Qubo(_QuadraticModel):
    """Minimize ``offset + sum_i linear_i x_i + sum_{i<j} q_ij x_i x_j`` over ``x`` in {0,1}^n."""

    def energy(self, x) -> float | np.ndarray:
        """Energy of one bit vector, or a vector of energies for a 2-D batch."""
        x = np.asarray(x)
        if not np.all((x == 0) | (x == 1)):
            raise ValueError("QUBO variables must be 0 or 1")
        return self._energies(x)

    def to_dense(self) -> np.ndarray:
        """Upper-triangular matrix with ``linear`` on the diagonal (offset dropped)."""
        q = np.diag(self.linear).astype(float)
        q[self.rows, self.cols] = self.values
        return q

    def flip_deltas(self, x) -> np.ndarray:
        """Energy change of flipping each variable of ``x`` individually."""
        x = np.asarray(x, dtype=float)
        field = self.linear + self.adjacency @ x
        return (1.0 - 2.0 * x) * field


class IsingModel(_QuadraticModel):
    """``offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j`` over ``s`` in {-1,+1}^n."""

    @property
    def h(self) -> np.ndarray:
        return self.linear

    @property
    def J(self) -> dict[tuple[int, int], float]:
        return self.quadratic

    def energy(self, s) -> float | np.ndarray:
        s = np.asarray(s)
        if not np.all((s == -1) | (s == 1)):
            raise ValueError("Ising spins must be -1 or +1")
        return self._energies(s)


def ising_from_qubo(q: Qubo) -> IsingModel:
    """Substitute ``x = (s + 1) / 2``."""
    h = q.linear / 2.0
    quarter = q.values / 4.0
    h = h + np.bincount(q.rows, quarter, q.num_vars) + np.bincount(q.cols, quarter, q.num_vars)
    offset = q.offset + q.linear.sum() / 2.0 + quarter.sum()
    return IsingModel(h, q.rows, q.cols, quarter, offset)


def qubo_from_ising(m: IsingModel) -> Qubo:
    """Substitute ``s = 2x - 1``."""
    n = m.num_vars
    lin = 2.0 * m.linear - 2.0 * (np.bincount(m.rows, m.values, n) + np.bincount(m.cols, m.values, n))
    offset = m.offset - m.linear.sum() + m.values.sum()
    return Qubo(lin, m.rows, m.cols, 4.0 * m.values, offset)


def _upper_pairs(B: np.ndarray):
    iu, ju = np.triu_indices(B.shape[0], 1)
    vals = B[iu, ju]
    keep = vals != 0
    return iu[keep], ju[keep], vals[keep]


def two_community_qubo(bm: ModularityMatrix) -> Qubo:
    """QUBO whose energy is ``-(1/m) x^T B x``.

    Since the rows of B sum to zero, ``-energy(x)`` is exactly the
    modularity of the split ``{x_i = 1} | {x_i = 0}``.
    """
    scale = -2.0 / bm.two_m
    iu, ju, vals = _upper_pairs(bm.B)
    return Qubo(scale * np.diag(bm.B), iu, ju, 2.0 * scale * vals, 0.0)


@dataclass(frozen=True)
class PenaltyConfig:
    """One-hot penalty weights ``gamma`` and modularity weight ``beta``.

    ``gamma`` may be a scalar (uniform), a per-node sequence, or None for
    :func:`default_gamma`.
    """

    gamma: float | Sequence[float] | None = None
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if self.gamma is not None and not np.all(np.asarray(self.gamma, dtype=float) > 0):
            raise ValueError("gamma must be > 0")

    def gamma_vector(self, bm: ModularityMatrix) -> np.ndarray:
        if self.gamma is None:
            return default_gamma(bm)
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim == 0:
            return np.full(bm.n, float(gamma))
        if gamma.shape != (bm.n,):
            raise ValueError(f"gamma must have length {bm.n}")
        return gamma.copy()

    def scaled(self, factor: float, bm: ModularityMatrix) -> "PenaltyConfig":
        return PenaltyConfig(gamma=tuple(self.gamma_vector(bm) * factor), beta=self.beta)


def default_gamma(bm: ModularityMatrix) -> np.ndarray:
    """Uniform ``1.1 * max_i sum_j |B_ij| / 2m``.

    This exceeds the modularity any single node can gain by violating
    its one-hot constraint.
    """
    value = 1.1 * float(np.abs(bm.B).sum(axis=1).max()) / bm.two_m
    return np.full(bm.n, value)


def var_index(node: int, community: int, n: int) -> int:
    return community * n + node


def k_concurrent_qubo(
    bm: ModularityMatrix,
    k: int,
    cfg: PenaltyConfig | None = None,
    *,
    max_vars: int = DEFAULT_MAX_VARS,
) -> Qubo:
    """Energy ``-beta sum_j x_j^T (B/2m) x_j + sum_i gamma_i (sum_j x_ij - 1)^2``.

    The penalty is the expansion ``X^T B_G X - 2 G^T X + sum(gamma)`` with
    ``B_G`` a k-by-k block matrix of ``diag(gamma)`` blocks and ``G`` the
    per-variable gamma vector.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    cfg = cfg or PenaltyConfig()
    n = bm.n
    N = n * k
    if N > max_vars:
        raise ValueError(
            f"k-concurrent QUBO needs {N} variables (budget {max_vars}); "
            "use hybrid_solve with a larger budget or a smaller k"
        )
    gamma = cfg.gamma_vector(bm)
    mod = -cfg.beta / bm.two_m
    iu, ju, vals = _upper_pairs(bm.B)

    # X^T B_G X: diagonal gamma_i per variable, 2 gamma_i between the k copies of node i
    gamma_var = np.tile(gamma, k)
    linear = np.tile(mod * np.diag(bm.B), k) + gamma_var - 2.0 * gamma_var

    blocks = np.arange(k) * n
    rows = [(blocks[:, None] + iu[None, :]).ravel()]
    cols = [(blocks[:, None] + ju[None, :]).ravel()]
    values = [np.tile(2.0 * mod * vals, k)]
    ja, jb = np.triu_indices(k, 1)
    node = np.arange(n)
    rows.append((ja[:, None] * n + node[None, :]).ravel())
    cols.append((jb[:, None] * n + node[None, :]).ravel())
    values.append(np.tile(2.0 * gamma, ja.size))
    return Qubo(
        linear,
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(values),
        float(gamma.sum()),
    )


def _one_hot_matrix(x, n: int, k: int) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.size != n * k:
        raise ValueError(f"expected a bit vector of length n*k = {n * k}, got shape {x.shape}")
    return x.reshape(k, n).T.astype(np.int64)


def one_hot_violations(x, n: int, k: int) -> int:
    """Number of nodes whose super-node does not have exactly one bit set."""
    return int(np.count_nonzero(_one_hot_matrix(x, n, k).sum(axis=1) != 1))


def decode_labeling(x, n: int, k: int, bm: ModularityMatrix) -> CommunityLabeling:
    """Turn a k-concurrent bit vector into a valid labeling.

    Nodes with exactly one bit set keep that community. The rest are then
    placed in index order into the community with the largest modularity
    gain against nodes already placed (lowest community id on ties).
    The labeling is scored with ``bm``.
    """
    if bm.n != n:
        raise ValueError("matrix dimension does not match n")
    onehot = _one_hot_matrix(x, n, k)
    valid = onehot.sum(axis=1) == 1
    labels = np.full(n, -1, dtype=np.int64)
    labels[valid] = onehot[valid].argmax(axis=1)
    repairs = 0
    for i in np.flatnonzero(~valid):
        gain = np.zeros(k)
        placed = labels >= 0
        np.add.at(gain, labels[placed], bm.B[i, placed])
        labels[i] = int(np.argmax(gain))
        repairs += 1
    return make_labeling(bm, labels, repairs)


class QuboFormatError(ValueError):
    pass


def dumps_qubo(q: Qubo) -> str:
    """qbsolv-style text: ``p qubo 0 <maxNodes> <nDiagonals> <nElements>`` then entries.

    A nonzero offset is kept in a ``c offset`` comment line.
    """
    diag = np.flatnonzero(q.linear)
    lines = []
    if q.offset != 0.0:
        lines.append(f"c offset {q.offset:.17g}")
    lines.append(f"p qubo 0 {q.num_vars} {diag.size} {q.num_couplings}")
    lines += [f"{i} {i} {q.linear[i]:.17g}" for i in diag.tolist()]
    lines += [
        f"{i} {j} {v:.17g}" for i, j, v in zip(q.rows.tolist(), q.cols.tolist(), q.values.tolist())
    ]
    return "\n".join(lines) + "\n"


def loads_qubo(text: str) -> Qubo:
    header = None
    offset = 0.0
    linear: dict[int, float] = {}
    couplers: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if tokens[0] == "c":
            if len(tokens) == 3 and tokens[1] == "offset":
                offset = float(tokens[2])
            continue
        if tokens[0] == "p":
            if header is not None or len(tokens) != 6 or tokens[1] != "qubo":
                raise QuboFormatError(f"line {lineno}: bad problem line")
            header = tuple(int(t) for t in tokens[3:])
            continue
        if header is None:
            raise QuboFormatError(f"line {lineno}: entry before 'p qubo' line")
        if len(tokens) != 3:
            raise QuboFormatError(f"line {lineno}: expected 'i j value'")
        try:
            i, j, v = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise QuboFormatError(f"line {lineno}: malformed entry") from None
        if not (0 <= i < header[0] and 0 <= j < header[0]):
            raise QuboFormatError(f"line {lineno}: index out of range")
        if i == j:
            linear[i] = linear.get(i, 0.0) + v
        else:
            couplers.append((i, j, v))
    if header is None:
        raise QuboFormatError("missing 'p qubo' line")
    num_vars, n_diag, n_couplers = header
    if len(linear) != n_diag or len(couplers) != n_couplers:
        raise QuboFormatError(
            f"header announces {n_diag} diagonals / {n_couplers} couplers, "
            f"found {len(linear)} / {len(couplers)}"
        )
    lin = np.zeros(num_vars)
    for i, v in linear.items():
        lin[i] = v
    if couplers:
        r, c, v = zip(*couplers)
    else:
        r = c = v = ()
    return Qubo(lin, r, c, v, offset)
