"""Fixed particle-number occupation basis on a ring of L sites.

A configuration is an integer whose bit ``i`` is set when site ``i`` is
occupied. Site 0 is the leftmost site, so the string ``"1100"`` on four sites
has sites 0 and 1 occupied. States of a sector are kept in ascending integer
order, which is colexicographic order of the occupied-site sets, so the
combinatorial number system gives the rank of a state directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb

import numpy as np
from numba import njit

# C(28, 14)
DEFAULT_MAX_DIM = 40_116_600

MAX_SITES = 62


class CapacityError(ValueError):
    """Raised when a sector is larger than the configured maximum dimension."""


class Boundary(str, enum.Enum):
    PBC = "pbc"
    APBC = "apbc"

    @classmethod
    def parse(cls, value: "str | Boundary | None", N: int) -> "Boundary":
        if value is None or (isinstance(value, str) and value.lower() == "auto"):
            return default_boundary(N)
        if isinstance(value, Boundary):
            return value
        return cls(value.lower())


def default_boundary(N: int) -> Boundary:
    """Periodic for odd N, antiperiodic for even N (nondegenerate ground state)."""
    return Boundary.PBC if N % 2 == 1 else Boundary.APBC


@dataclass(frozen=True)
class LatticeSpec:
    L: int
    N: int
    boundary: Boundary = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"need at least two sites, got L={self.L}")
        if self.L > MAX_SITES:
            raise ValueError(f"L={self.L} exceeds the {MAX_SITES}-bit configuration limit")
        if not 0 <= self.N <= self.L:
            raise ValueError(f"particle number N={self.N} outside [0, {self.L}]")
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary, self.N))

    @property
    def dim(self) -> int:
        return comb(self.L, self.N)

    @property
    def boundary_sign(self) -> int:
        """Sign carried by a hop across the (L-1, 0) bond.

        The site-ordered string contributes (-1)^(N-1); antiperiodic
        boundaries add one more factor of -1.
        """
        s = -1 if (self.N - 1) % 2 else 1
        return s if self.boundary is Boundary.PBC else -s


def binomial_table(nmax: int) -> np.ndarray:
    """Table ``C[n, k]`` for 0 <= n, k <= nmax as int64."""
    C = np.zeros((nmax + 1, nmax + 1), dtype=np.int64)
    for n in range(nmax + 1):
        for k in range(n + 1):
            C[n, k] = comb(n, k)
    return C


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _fill_states(states, first):
    # Gosper's hack: next integer with the same popcount
    x = first
    states[0] = x
    for i in range(1, states.size):
        u = x & -x
        v = x + u
        x = v + (((v ^ x) // u) >> 2)
        states[i] = x


@njit(cache=True)
def _rank(s, C):
    r = 0
    j = 0
    p = 0
    while s:
        if s & 1:
            j += 1
            r += C[p, j]
        s >>= 1
        p += 1
    return r


@njit(cache=True)
def _rank_many(configs, C, out):
    for i in range(configs.size):
        out[i] = _rank(configs[i], C)


@njit(cache=True)
def _unrank(r, L, N, C):
    s = 0
    k = N
    for p in range(L - 1, -1, -1):
        if k == 0:
            break
        if C[p, k] <= r:
            r -= C[p, k]
            s |= 1 << p
            k -= 1
    return s


def state_dtype(L: int):
    return np.uint32 if L <= 31 else np.int64


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """All C(L, N) configurations of a sector, ascending by integer value."""

    spec: LatticeSpec
    states: np.ndarray = field(repr=False)
    binom: np.ndarray = field(repr=False)

    @property
    def L(self) -> int:
        return self.spec.L

    @property
    def N(self) -> int:
        return self.spec.N

    @property
    def dim(self) -> int:
        return self.states.size

    def __len__(self) -> int:
        return self.states.size

    def rank(self, s) -> "int | np.ndarray":
        """Ordinal index of one configuration or an array of them."""
        if np.ndim(s) == 0:
            return int(_rank(np.int64(s), self.binom))
        s = np.asarray(s, dtype=np.int64)
        out = np.empty(s.shape, dtype=np.int64)
        _rank_many(s.ravel(), self.binom, out.ravel())
        return out

    def unrank(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise IndexError(f"index {i} outside basis of dimension {self.dim}")
        return int(_unrank(np.int64(i), self.L, self.N, self.binom))

    def label(self, i: int) -> str:
        return to_string(int(self.states[i]), self.L)


def enumerate_basis(spec: LatticeSpec, max_dim: int = DEFAULT_MAX_DIM) -> SectorBasis:
    dim = spec.dim
    if dim > max_dim:
        raise CapacityError(
            f"sector L={spec.L}, N={spec.N} has dimension {dim} > max_dim={max_dim}"
        )
    states = np.empty(dim, dtype=np.int64)
    _fill_states(states, np.int64((1 << spec.N) - 1))
    states = states.astype(state_dtype(spec.L))
    return SectorBasis(spec=spec, states=states, binom=binomial_table(spec.L))


def from_string(bits: str) -> int:
    """``"1100"`` -> integer with bits 0 and 1 set."""
    return sum(1 << i for i, ch in enumerate(bits) if ch == "1")


def to_string(s: int, L: int) -> str:
    return "".join("1" if (s >> i) & 1 else "0" for i in range(L))


def count_occupied_bonds(s: int, spec: "LatticeSpec | int") -> int:
    """Number of ring bonds (i, i+1 mod L) with both ends occupied."""
    L = spec if isinstance(spec, int) else spec.L
    s = int(s)
    rotated = (s >> 1) | ((s & 1) << (L - 1))
    return (s & rotated).bit_count()


def subregion_count(s: int, ell: int) -> int:
    """Particles on sites 0..ell-1."""
    return (int(s) & ((1 << ell) - 1)).bit_count()


def translate(s: int, L: int, shift: int = 1) -> int:
    """Move every particle from site i to site (i + shift) mod L."""
    shift %= L
    mask = (1 << L) - 1
    return ((s << shift) | (s >> (L - shift))) & mask


@njit(cache=True)
def _translate_once(states, C, L, sign, x, out):
    top = L - 1
    mask = (1 << L) - 1
    for a in range(states.size):
        s = np.int64(states[a])
        r = ((s << 1) | (s >> top)) & mask
        v = x[a]
        if (s >> top) & 1:
            v = sign * v
        out[_rank(r, C)] = v


def translate_vector(basis: SectorBasis, x: np.ndarray, shift: int = 1) -> np.ndarray:
    """Apply the lattice translation ``shift`` times to a sector vector.

    A particle carried across the (L-1, 0) bond picks up the boundary sign,
    which makes the translation commute with the Hamiltonian.
    """
    L = basis.L
    shift %= L
    x = np.asarray(x, dtype=np.float64)
    if shift == 0:
        return x.copy()
    sign = float(basis.spec.boundary_sign)
    cur = x
    for _ in range(shift):
        out = np.empty_like(x)
        _translate_once(basis.states, basis.binom, L, sign, cur, out)
        cur = out
    return cur


@dataclass(frozen=True, eq=False)
class BipartiteLayout:
    """Block layout of a sector vector under the cut (0..cut-1 | cut..L-1).

    Block ``n`` holds the coefficients with ``n`` particles left of the cut as
    a row-major ``C(cut, n) x C(L-cut, N-n)`` matrix indexed by the colex rank
    of the left and right sub-configurations.
    """

    L: int
    N: int
    cut: int
    sectors: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    left_dims: np.ndarray = field(repr=False)
    right_dims: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, L: int, N: int, cut: int) -> "BipartiteLayout":
        if not 1 <= cut <= L - 1:
            raise ValueError(f"cut {cut} outside [1, {L - 1}]")
        lo, hi = max(0, N - (L - cut)), min(cut, N)
        sectors = np.arange(lo, hi + 1, dtype=np.int64)
        left = np.array([comb(cut, n) for n in sectors], dtype=np.int64)
        right = np.array([comb(L - cut, N - n) for n in sectors], dtype=np.int64)
        offsets = np.zeros(N + 2, dtype=np.int64)
        pos = 0
        for n, dl, dr in zip(sectors, left, right):
            offsets[n] = pos
            pos += dl * dr
        offsets[N + 1] = pos
        return cls(L, N, cut, sectors, offsets, left, right)

    @property
    def dim(self) -> int:
        return int(self.offsets[self.N + 1])

    def block(self, x: np.ndarray, n: int) -> np.ndarray:
        """View of block ``n`` of a vector already in block layout."""
        k = n - int(self.sectors[0])
        start = int(self.offsets[n])
        dl, dr = int(self.left_dims[k]), int(self.right_dims[k])
        return x[start:start + dl * dr].reshape(dl, dr)

    def to_blocks(self, basis: SectorBasis, x: np.ndarray) -> np.ndarray:
        out = np.empty(self.dim, dtype=np.float64)
        _scatter_blocks(basis.states, basis.binom, self.cut, self.offsets,
                        self._right_by_n(), np.asarray(x, dtype=np.float64), out, True)
        return out

    def from_blocks(self, basis: SectorBasis, y: np.ndarray) -> np.ndarray:
        out = np.empty(self.dim, dtype=np.float64)
        _scatter_blocks(basis.states, basis.binom, self.cut, self.offsets,
                        self._right_by_n(), np.asarray(y, dtype=np.float64), out, False)
        return out

    def _right_by_n(self) -> np.ndarray:
        r = np.zeros(self.N + 1, dtype=np.int64)
        r[self.sectors] = self.right_dims
        return r


@njit(cache=True)
def _scatter_blocks(states, C, cut, offsets, right_dims, src, out, forward):
    lmask = (1 << cut) - 1
    for a in range(states.size):
        s = np.int64(states[a])
        left = s & lmask
        right = s >> cut
        n = _popcount(left)
        p = offsets[n] + _rank(left, C) * right_dims[n] + _rank(right, C)
        if forward:
            out[p] = src[a]
        else:
            out[a] = src[p]
