"""Per-batch binary images of codeword symbols.

Two interchangeable inner layers:

* ConstantWeightCode: payloads map to fixed-weight bit strings via colex
  (combinadic) combination ranking; the all-zero string is reserved for
  "nobody wrote here".  Used when tests are noiseless, where exact Hamming
  weights separate empty / one writer / several writers.

* BinaryLinearCode: a seeded random systematic linear code with exhaustive
  nearest-codeword decoding, paired with a WeightClassifier whose thresholds
  separate the empty string, one codeword, and the OR of two codewords by
  observed weight under a known BSC crossover.

Bit strings are plain ints (bit i = position i); numpy arrays of uint64 are
used for batched decoding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np


class Occupancy(enum.Enum):
    EMPTY = 0
    ONE = 1
    MANY = 2


ERASURE = object()  # payload sentinel for "write nothing"


class UnsupportedCodeSize(ValueError):
    pass


# ---------------------------------------------------------------------------
# combinadic (colexicographic) combination ranking
# ---------------------------------------------------------------------------

def combination_unrank(rank: int, ell: int, weight: int) -> int:
    """The rank-th weight-`weight` subset of [ell] in colex order, as a bitmask."""
    if not 0 <= rank < comb(ell, weight):
        raise ValueError(f"rank {rank} out of range for C({ell},{weight})")
    mask = 0
    for i in range(weight, 0, -1):
        c = i - 1
        while comb(c + 1, i) <= rank:
            c += 1
        rank -= comb(c, i)
        mask |= 1 << c
    return mask


def combination_rank(mask: int) -> int:
    """Inverse of combination_unrank; colex rank of the set bits."""
    rank, i = 0, 0
    while mask:
        c = (mask & -mask).bit_length() - 1
        i += 1
        rank += comb(c, i)
        mask &= mask - 1
    return rank


# ---------------------------------------------------------------------------
# constant-weight code
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantWeightCode:
    ell: int
    weight: int
    payload_bits: int

    def __post_init__(self):
        if not 0 < self.weight < self.ell:
            raise ValueError("weight must be strictly between 0 and ell")
        if comb(self.ell, self.weight) < (1 << self.payload_bits):
            raise ValueError(
                f"C({self.ell},{self.weight}) < 2^{self.payload_bits}: payload does not fit"
            )

    def encode(self, payload) -> int:
        """ERASURE -> all-zero; otherwise the payload-th constant-weight string."""
        if payload is ERASURE:
            return 0
        if not 0 <= payload < (1 << self.payload_bits):
            raise ValueError(f"payload {payload} out of range")
        return combination_unrank(payload, self.ell, self.weight)

    def classify_noiseless(self, observed: int):
        """(Occupancy, payload | None) from an exact observed string.

        Weight 0 is empty; weight == `weight` decodes when the string is a
        valid image, otherwise it is treated as a collision (several writers
        can in principle OR to the target weight without hitting an image).
        """
        if observed >> self.ell:
            raise ValueError("observed string longer than ell")
        w = observed.bit_count()
        if w == 0:
            return Occupancy.EMPTY, None
        if w == self.weight:
            payload = combination_rank(observed)
            if payload < (1 << self.payload_bits):
                return Occupancy.ONE, payload
        return Occupancy.MANY, None


# ---------------------------------------------------------------------------
# binary linear code
# ---------------------------------------------------------------------------

MAX_ENUMERABLE_DIM = 20


@dataclass(frozen=True)
class BinaryLinearCode:
    """Systematic seeded random code: codeword = payload | parity(payload).

    The full codebook is enumerated at construction (dim <= 20), indexed by
    payload, so nearest-codeword ties resolve to the smallest payload.
    """

    ell: int
    dim: int
    seed: int

    def __post_init__(self):
        if self.dim > MAX_ENUMERABLE_DIM:
            raise UnsupportedCodeSize(
                f"dim {self.dim} > {MAX_ENUMERABLE_DIM}: codebook not enumerable"
            )
        if not 0 < self.dim <= self.ell or self.ell > 64:
            raise ValueError("need 0 < dim <= ell <= 64")
        rng = np.random.default_rng(self.seed)
        rows = []
        for i in range(self.dim):
            parity = 0
            for j in range(self.ell - self.dim):
                if rng.integers(0, 2):
                    parity |= 1 << (self.dim + j)
            rows.append((1 << i) | parity)
        object.__setattr__(self, "generator_rows", tuple(rows))
        idx = np.arange(1 << self.dim, dtype=np.uint64)
        cb = np.zeros(1 << self.dim, dtype=np.uint64)
        for i in range(self.dim):
            cb[((idx >> np.uint64(i)) & np.uint64(1)) == 1] ^= np.uint64(rows[i])
        cb.setflags(write=False)
        object.__setattr__(self, "codebook", cb)

    def encode(self, payload: int) -> int:
        if not 0 <= payload < (1 << self.dim):
            raise ValueError(f"payload {payload} out of range")
        return int(self.codebook[payload])

    def decode(self, observed: int) -> int:
        """Payload of the codeword nearest to observed (ties: smallest payload)."""
        if observed >> self.ell:
            raise ValueError("observed string longer than ell")
        d = np.bitwise_count(self.codebook ^ np.uint64(observed))
        return int(np.argmin(d))

    def decode_many(self, observed: np.ndarray) -> np.ndarray:
        """Vectorized decode of a uint64 array of observed strings."""
        observed = np.asarray(observed, dtype=np.uint64)
        out = np.empty(observed.shape[0], dtype=np.int64)
        chunk = 256
        for lo in range(0, observed.shape[0], chunk):
            block = observed[lo:lo + chunk]
            d = np.bitwise_count(block[:, None] ^ self.codebook[None, :])
            out[lo:lo + chunk] = np.argmin(d, axis=1)
        return out

    def min_weight(self) -> int:
        return int(np.bitwise_count(self.codebook[1:]).min())


def or_weight_identity_check(code: BinaryLinearCode, u: int, v: int) -> bool:
    """|w OR w'| == (|w| + |w'| + |w XOR w'|) / 2, exactly."""
    w = code.encode(u)
    wp = code.encode(v)
    lhs = (w | wp).bit_count()
    rhs2 = w.bit_count() + wp.bit_count() + (w ^ wp).bit_count()
    if rhs2 % 2:
        return False
    return lhs == rhs2 // 2


# ---------------------------------------------------------------------------
# weight classifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightClassifier:
    """Mean-weight hypothesis test: empty vs one codeword vs OR of several.

    Under a BSC with crossover p the three cases have expected sample means
    p, 1/2, and 3/4 - p/2; tau and theta are the midpoints between them.
    """

    ell: int
    p: float

    def __post_init__(self):
        if not 0 <= self.p < 0.5:
            raise ValueError(f"crossover must be in [0, 1/2), got {self.p}")

    @property
    def tau(self) -> float:
        return (self.p + 0.5) / 2

    @property
    def theta(self) -> float:
        return (0.5 + 0.75 - self.p / 2) / 2

    def classify_weight(self, ones: int) -> Occupancy:
        mean = ones / self.ell
        if mean < self.tau:
            return Occupancy.EMPTY
        if mean < self.theta:
            return Occupancy.ONE
        return Occupancy.MANY

    def classify(self, observed: int) -> Occupancy:
        if observed >> self.ell:
            raise ValueError("observed string longer than ell")
        return self.classify_weight(observed.bit_count())


# ---------------------------------------------------------------------------
# sizing helpers
# ---------------------------------------------------------------------------

def min_even_block_length(payload_bits: int) -> int:
    """Smallest even ell with C(ell, ell/2) >= 2^payload_bits."""
    ell = 2
    while comb(ell, ell // 2) < (1 << payload_bits):
        ell += 2
    return ell


@lru_cache(maxsize=None)
def linear_code(ell: int, dim: int, seed: int) -> BinaryLinearCode:
    """Cached constructor; codebooks are immutable and shareable."""
    return BinaryLinearCode(ell, dim, seed)
