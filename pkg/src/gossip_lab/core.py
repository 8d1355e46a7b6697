"""Opinion vectors, bias arithmetic and seeded random streams.

Bias follows the "zeros minus ones" convention throughout the package: a
positive bias means opinion 0 holds the majority.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    """Raised when an operation is called with arguments outside its domain."""


@dataclass(frozen=True, eq=False)
class OpinionVector:
    """Binary opinions of ``n >= 2`` nodes; node ``i`` (1-based) is ``opinions[i-1]``."""

    opinions: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.opinions, dtype=np.int8).copy()
        if arr.ndim != 1 or arr.size < 2:
            raise ParameterError("an opinion vector needs at least 2 nodes")
        if np.any((arr != 0) & (arr != 1)):
            raise ParameterError("opinions must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "opinions", arr)

    @property
    def n(self) -> int:
        return int(self.opinions.size)

    @property
    def count_zeros(self) -> int:
        return int(self.n - self.opinions.sum(dtype=np.int64))

    @property
    def count_ones(self) -> int:
        return int(self.opinions.sum(dtype=np.int64))

    @property
    def bias(self) -> int:
        return bias(self)

    def is_unanimous(self) -> bool:
        return abs(self.bias) == self.n

    def unanimous_value(self) -> int | None:
        if not self.is_unanimous():
            return None
        return int(self.opinions[0])

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return int(self.opinions[i])

    def __eq__(self, other):
        if not isinstance(other, OpinionVector):
            return NotImplemented
        return np.array_equal(self.opinions, other.opinions)

    def __hash__(self):
        return hash(self.opinions.tobytes())

    def tolist(self) -> list[int]:
        return self.opinions.tolist()

    def __repr__(self):
        if self.n <= 16:
            return f"OpinionVector({self.tolist()})"
        return f"OpinionVector(n={self.n}, bias={self.bias})"


def bias(v: OpinionVector) -> int:
    """Number of zeros minus number of ones."""
    return 2 * v.count_zeros - v.n


def make_canonical(n: int, k: int) -> OpinionVector:
    """The vector whose first ``k`` nodes hold 0 and the remaining ``n - k`` hold 1."""
    if not 0 <= k <= n:
        raise ParameterError(f"k={k} outside [0, {n}]")
    arr = np.ones(n, dtype=np.int8)
    arr[:k] = 0
    return OpinionVector(arr)


def make_majority_pair(n: int, b: int) -> tuple[OpinionVector, OpinionVector]:
    """Two inputs of bias ``+b`` and ``-b`` that differ only on the last ``b`` nodes.

    Nodes ``1..(n-b)/2`` hold 0, nodes ``(n-b)/2+1..n-b`` hold 1, and the last
    ``b`` nodes hold 0 in the first vector and 1 in the second.
    """
    if not 0 < b <= n:
        raise ParameterError(f"b={b} outside (0, {n}]")
    if (n - b) % 2:
        raise ParameterError(f"n - b must be even (n={n}, b={b})")
    half = (n - b) // 2
    base = np.zeros(n, dtype=np.int8)
    base[half:n - b] = 1
    first = base.copy()
    second = base.copy()
    second[n - b:] = 1
    return OpinionVector(first), OpinionVector(second)


def make_biased(n: int, b: int) -> OpinionVector:
    """Canonical vector with bias exactly ``b`` (zeros first)."""
    if abs(b) > n or (n - b) % 2:
        raise ParameterError(f"no vector of length {n} has bias {b}")
    return make_canonical(n, (n + b) // 2)


@dataclass(frozen=True)
class RandomStream:
    """Seed descriptor for one replica.

    Equal ``(master_seed, stream_index)`` pairs always produce the same
    generator output; distinct indices give independent child streams of the
    same :class:`numpy.random.SeedSequence`.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if self.master_seed < 0 or self.stream_index < 0:
            raise ParameterError("seed and stream index must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64DXSM(ss))

    def child(self, index: int) -> "RandomStream":
        return RandomStream(self.master_seed, index)
