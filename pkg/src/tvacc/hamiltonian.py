"""t-V Hamiltonian on a ring in a fixed-N sector.

    H = -t sum_i (c+_i c_{i+1} + h.c.) + V sum_i n_i n_{i+1}

Creation operators are site ordered, so a hop across a bulk bond carries no
string sign and a hop across the (L-1, 0) bond carries the boundary sign
``LatticeSpec.boundary_sign`` = (-1)^(N-1) (PBC) or (-1)^N (APBC).

Three interchangeable storage modes share one contract (``apply``):

``rows``
    matrix free; each output row is regenerated from bit operations.
``stored``
    scipy CSR matrix, for small sectors and the dense oracle.
``bipartite``
    matrix free over the block layout of a half-chain cut. The coefficient
    vector is a set of dense matrices (left config x right config) and the
    Hamiltonian acts as small sparse matrices on either side plus the two
    bonds crossing the cut. Memory access is sequential, which is what makes
    sectors of ~4e7 states tractable on one core.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp
from numba import njit

from .fock_basis import (
    BipartiteLayout,
    SectorBasis,
    _popcount,
    _rank,
    binomial_table,
)

STORED_MAX_DIM = 1_000_000
ROWS_MAX_DIM = 200_000


@dataclass(frozen=True)
class ModelParams:
    t: float = 1.0
    V: float = 0.0

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"hopping t must be positive, got {self.t}")


# ---------------------------------------------------------------- row kernels


@njit(cache=True)
def _diag_entry(s, L, V):
    top = L - 1
    rot = (s >> 1) | ((s & 1) << top)
    return V * _popcount(s & rot)


@njit(cache=True)
def _diagonal(states, L, V, out):
    for a in range(states.size):
        out[a] = _diag_entry(np.int64(states[a]), L, V)


@njit(cache=True)
def _matvec_rows(states, C, L, t, V, sign, x, y):
    top = L - 1
    wrap = -t * sign
    for a in range(states.size):
        s = np.int64(states[a])
        acc = _diag_entry(s, L, V) * x[a]
        j = 0  # occupied sites below p
        for p in range(top):
            bp = (s >> p) & 1
            bq = (s >> (p + 1)) & 1
            if bp == 1 and bq == 0:
                acc -= t * x[a + C[p, j]]
            elif bp == 0 and bq == 1:
                acc -= t * x[a - C[p, j]]
            j += bp
        if ((s >> top) & 1) != (s & 1):
            r = s ^ (1 | (1 << top))
            acc += wrap * x[_rank(r, C)]
        y[a] = acc


@njit(cache=True)
def _hop_count(states, L):
    top = L - 1
    total = 0
    for a in range(states.size):
        s = np.int64(states[a])
        rot = (s >> 1) | ((s & 1) << top)
        total += _popcount(s ^ rot)
    return total


@njit(cache=True)
def _hop_entries(states, C, L, t, sign, rows, cols, vals):
    top = L - 1
    k = 0
    for a in range(states.size):
        s = np.int64(states[a])
        j = 0
        for p in range(top):
            bp = (s >> p) & 1
            bq = (s >> (p + 1)) & 1
            if bp == 1 and bq == 0:
                rows[k] = a
                cols[k] = a + C[p, j]
                vals[k] = -t
                k += 1
            elif bp == 0 and bq == 1:
                rows[k] = a
                cols[k] = a - C[p, j]
                vals[k] = -t
                k += 1
            j += bp
        if ((s >> top) & 1) != (s & 1):
            rows[k] = a
            cols[k] = _rank(s ^ (1 | (1 << top)), C)
            vals[k] = -t * sign
            k += 1


# ---------------------------------------------------------- bipartite kernels


def _side_configs(nsites: int, k: int) -> np.ndarray:
    """All k-particle patterns on ``nsites`` sites, ascending."""
    from itertools import combinations

    out = [sum(1 << p for p in c) for c in combinations(range(nsites), k)]
    out.sort()
    return np.array(out, dtype=np.int64)


@dataclass(eq=False)
class _Side:
    """Sub-configurations of one side of the cut, all particle numbers."""

    nsites: int
    start: np.ndarray           # first global index of each particle number
    configs: np.ndarray         # global index -> bit pattern
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)   # local index in the same block
    data: np.ndarray = field(repr=False)
    first: np.ndarray = field(repr=False)     # occupation of local site 0
    last: np.ndarray = field(repr=False)      # occupation of local site nsites-1
    add_first: np.ndarray = field(repr=False)  # local index in block k+1, or -1
    add_last: np.ndarray = field(repr=False)
    rem_first: np.ndarray = field(repr=False)  # local index in block k-1, or -1
    rem_last: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, nsites: int, t: float, V: float) -> "_Side":
        C = binomial_table(nsites)
        blocks = [_side_configs(nsites, k) for k in range(nsites + 1)]
        start = np.zeros(nsites + 2, dtype=np.int64)
        for k, b in enumerate(blocks):
            start[k + 1] = start[k] + b.size
        configs = np.concatenate(blocks)
        n = configs.size
        top = nsites - 1
        indptr = [0]
        indices, data = [], []
        first = np.zeros(n, dtype=np.float64)
        last = np.zeros(n, dtype=np.float64)
        maps = {key: np.full(n, -1, dtype=np.int64)
                for key in ("add_first", "add_last", "rem_first", "rem_last")}
        for g in range(n):
            s = int(configs[g])
            # bonds fully inside this side
            inner = s & (s >> 1) & ((1 << top) - 1) if top > 0 else 0
            diag = V * inner.bit_count()
            if diag != 0.0:
                indices.append(int(_rank(np.int64(s), C)))
                data.append(diag)
            for p in range(top):
                if ((s >> p) & 1) != ((s >> (p + 1)) & 1):
                    indices.append(int(_rank(np.int64(s ^ (3 << p)), C)))
                    data.append(-t)
            indptr.append(len(indices))
            first[g] = s & 1
            last[g] = (s >> top) & 1
            for key, bit in (("first", 0), ("last", top)):
                r = s ^ (1 << bit)
                idx = int(_rank(np.int64(r), C))
                if (s >> bit) & 1:
                    maps["rem_" + key][g] = idx
                else:
                    maps["add_" + key][g] = idx
        return cls(
            nsites=nsites,
            start=start,
            configs=configs,
            indptr=np.array(indptr, dtype=np.int64),
            indices=np.array(indices, dtype=np.int64),
            data=np.array(data, dtype=np.float64),
            first=first,
            last=last,
            **maps,
        )


@njit(cache=True)
def _matvec_bipartite(N, nmin, nmax, offsets,
                      aS, aP, aI, aD, aF, aL, aAF, aAL, aRF, aRL,
                      bS, bP, bI, bD, bF, bL, bAF, bAL, bRF, bRL,
                      t, V, wrap, x, y):
    # left side: site 0 = a-first, site cut-1 = a-last
    # right side: site cut = b-first, site L-1 = b-last
    for n in range(nmin, nmax + 1):
        m = N - n
        off = offsets[n]
        a0 = aS[n]
        b0 = bS[m]
        dA = aS[n + 1] - a0
        dB = bS[m + 1] - b0
        # diagonal of the two crossing bonds + right-side internal terms
        for i in range(dA):
            gi = a0 + i
            la = aL[gi]
            fa = aF[gi]
            row = off + i * dB
            for j in range(dB):
                gj = b0 + j
                acc = V * (la * bF[gj] + fa * bL[gj]) * x[row + j]
                for k in range(bP[gj], bP[gj + 1]):
                    acc += bD[k] * x[row + bI[k]]
                y[row + j] = acc
        # left-side internal terms
        for i in range(dA):
            gi = a0 + i
            row = off + i * dB
            for k in range(aP[gi], aP[gi + 1]):
                v = aD[k]
                src = off + aI[k] * dB
                for j in range(dB):
                    y[row + j] += v * x[src + j]
        # hops across the cut bond (cut-1, cut) and the ring bond (L-1, 0)
        if n > nmin:
            # source block n-1 has one more particle on the right
            so = offsets[n - 1]
            sdB = bS[m + 2] - bS[m + 1]
            for i in range(dA):
                gi = a0 + i
                row = off + i * dB
                ia = aRL[gi]
                if ia >= 0:
                    srow = so + ia * sdB
                    for j in range(dB):
                        jb = bAF[b0 + j]
                        if jb >= 0:
                            y[row + j] -= t * x[srow + jb]
                ia = aRF[gi]
                if ia >= 0:
                    srow = so + ia * sdB
                    for j in range(dB):
                        jb = bAL[b0 + j]
                        if jb >= 0:
                            y[row + j] += wrap * x[srow + jb]
        if n < nmax:
            so = offsets[n + 1]
            sdB = bS[m] - bS[m - 1]
            for i in range(dA):
                gi = a0 + i
                row = off + i * dB
                ia = aAL[gi]
                if ia >= 0:
                    srow = so + ia * sdB
                    for j in range(dB):
                        jb = bRF[b0 + j]
                        if jb >= 0:
                            y[row + j] -= t * x[srow + jb]
                ia = aAF[gi]
                if ia >= 0:
                    srow = so + ia * sdB
                    for j in range(dB):
                        jb = bRL[b0 + j]
                        if jb >= 0:
                            y[row + j] += wrap * x[srow + jb]


class _BipartiteOperator:
    def __init__(self, basis: SectorBasis, params: ModelParams, cut: int | None = None):
        L, N = basis.L, basis.N
        self.cut = L // 2 if cut is None else cut
        self.layout = BipartiteLayout.create(L, N, self.cut)
        self.left = _Side.build(self.cut, params.t, params.V)
        self.right = _Side.build(L - self.cut, params.t, params.V)
        self.t = params.t
        self.V = params.V
        self.wrap = -params.t * basis.spec.boundary_sign
        self.N = N

    def matvec(self, x: np.ndarray, y: np.ndarray) -> None:
        a, b = self.left, self.right
        sec = self.layout.sectors
        _matvec_bipartite(
            self.N, int(sec[0]), int(sec[-1]), self.layout.offsets,
            a.start, a.indptr, a.indices, a.data, a.first, a.last,
            a.add_first, a.add_last, a.rem_first, a.rem_last,
            b.start, b.indptr, b.indices, b.data, b.first, b.last,
            b.add_first, b.add_last, b.rem_first, b.rem_last,
            self.t, self.V, self.wrap, x, y,
        )


# ------------------------------------------------------------------ public


class SparseHamiltonian:
    """The t-V Hamiltonian over one sector.

    ``apply`` works in the ascending basis order. Solvers use the
    ``native`` methods, which for the bipartite mode act on the block layout
    and skip the reordering on every product.
    """

    def __init__(self, basis: SectorBasis, params: ModelParams, storage: str = "auto"):
        if basis.dim == 0:
            raise ValueError("empty basis")
        self.basis = basis
        self.params = params
        if storage == "auto":
            if basis.dim <= ROWS_MAX_DIM or basis.L < 4:
                storage = "rows"
            else:
                storage = "bipartite"
        if storage not in ("rows", "stored", "bipartite"):
            raise ValueError(f"unknown storage mode {storage!r}")
        if storage == "stored" and basis.dim > STORED_MAX_DIM:
            raise ValueError(f"stored mode limited to dim <= {STORED_MAX_DIM}")
        if storage == "bipartite" and basis.L < 2:
            raise ValueError("bipartite mode needs L >= 2")
        self.storage = storage
        self._csr = None
        self._bip = None
        if storage == "stored":
            self._csr = self.to_sparse()
        elif storage == "bipartite":
            self._bip = _BipartiteOperator(basis, params)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def diagonal(self) -> np.ndarray:
        out = np.empty(self.dim, dtype=np.float64)
        _diagonal(self.basis.states, self.basis.L, float(self.params.V), out)
        return out

    def row(self, a: int) -> list[tuple[int, float]]:
        """Off-diagonal hop terms of row ``a`` as (target index, amplitude).

        Terms are listed once per hop, so on L = 2 the two bonds joining the
        same pair of states appear separately.
        """
        return self._row_exact(a)

    def _row_exact(self, a: int) -> list[tuple[int, float]]:
        b = self.basis
        L = b.L
        s = int(b.states[a])
        t = self.params.t
        out = []
        for p in range(L - 1):
            if ((s >> p) & 1) != ((s >> (p + 1)) & 1):
                out.append((b.rank(s ^ (3 << p)), -t))
        if ((s >> (L - 1)) & 1) != (s & 1):
            out.append((b.rank(s ^ (1 | (1 << (L - 1)))), -t * b.spec.boundary_sign))
        return out

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"vector of shape {x.shape} does not match dim {self.dim}")
        if self.storage == "bipartite":
            return self.from_native(self.matvec_native(self.to_native(x)))
        return self.matvec_native(x)

    __matmul__ = apply

    # -- solver interface

    def to_native(self, x: np.ndarray) -> np.ndarray:
        if self._bip is None:
            return np.array(x, dtype=np.float64)
        return self._bip.layout.to_blocks(self.basis, x)

    def from_native(self, y: np.ndarray) -> np.ndarray:
        if self._bip is None:
            return np.array(y, dtype=np.float64)
        return self._bip.layout.from_blocks(self.basis, y)

    def matvec_native(self, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty(self.dim, dtype=np.float64)
        if self.storage == "stored":
            out[:] = self._csr @ x
        elif self.storage == "rows":
            b = self.basis
            _matvec_rows(b.states, b.binom, b.L, float(self.params.t), float(self.params.V),
                         float(b.spec.boundary_sign), x, out)
        else:
            self._bip.matvec(x, out)
        return out

    # -- explicit matrices

    def to_sparse(self) -> sp.csr_matrix:
        if self._csr is not None:
            return self._csr
        b = self.basis
        k = _hop_count(b.states, b.L)
        rows = np.empty(k, dtype=np.int64)
        cols = np.empty(k, dtype=np.int64)
        vals = np.empty(k, dtype=np.float64)
        _hop_entries(b.states, b.binom, b.L, float(self.params.t),
                     float(b.spec.boundary_sign), rows, cols, vals)
        idx = np.arange(self.dim, dtype=np.int64)
        rows = np.concatenate([rows, idx])
        cols = np.concatenate([cols, idx])
        vals = np.concatenate([vals, self.diagonal])
        m = sp.coo_matrix((vals, (rows, cols)), shape=(self.dim, self.dim)).tocsr()
        m.sum_duplicates()
        return m

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def build_hamiltonian(basis: SectorBasis, params: ModelParams,
                      storage: str = "auto") -> SparseHamiltonian:
    return SparseHamiltonian(basis, params, storage)


def apply(H: SparseHamiltonian, x: np.ndarray) -> np.ndarray:
    return H.apply(x)


def off_diagonal_count(s: int, L: int, N: int) -> int:
    """Hop terms leaving configuration ``s``: 2N - 2 n11 on a ring."""
    rot = (s >> 1) | ((s & 1) << (L - 1))
    return (s ^ rot).bit_count()


def sector_dim(L: int, N: int) -> int:
    return comb(L, N)
