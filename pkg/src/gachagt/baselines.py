"""Reference decoders for oracle-equivalence testing.

COMP keeps everyone who never appears in a negative test.  The brute-force
decoder enumerates all k-subsets: with noiseless results it lists every
support that explains the observations exactly; with a channel it ranks
supports by exact log-likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .channels import DiscreteChannel
from .core_model import ConfigMatrix

MAX_ENUMERATION = 10 ** 6


@dataclass
class OracleResult:
    consistent_supports: list  # noiseless: exact matches; noisy: [(loglik, support)] ranked
    best: tuple


def comp_decode(matrix: ConfigMatrix, y) -> set:
    """Everyone whose tests are all positive (vacuously true for no tests)."""
    y = np.asarray(y, dtype=np.uint8)
    if len(y) != matrix.m:
        raise ValueError(f"result length {len(y)} != m = {matrix.m}")
    out = set()
    for j in range(matrix.n):
        col = np.asarray(matrix.columns[j], dtype=np.int64)
        if col.size == 0 or bool(y[col].all()):
            out.add(j)
    return out


def _column_masks(matrix: ConfigMatrix):
    masks = []
    for col in matrix.columns:
        mask = 0
        for t in np.asarray(col, dtype=np.int64):
            mask |= 1 << int(t)
        masks.append(mask)
    return masks


def brute_force_decode(matrix: ConfigMatrix, observations, k: int,
                       channel: DiscreteChannel | None = None) -> OracleResult:
    """Enumerate all k-subsets of the population.

    Noiseless (channel None): supports whose OR of columns equals the results
    bit-for-bit.  Noisy: the exact log-likelihood of the observed symbols,
    argmax returned (ties go to the lexicographically smallest support).
    """
    if math.comb(matrix.n, k) > MAX_ENUMERATION:
        raise ValueError(f"C({matrix.n},{k}) exceeds the enumeration cap")
    observations = np.asarray(observations)
    if len(observations) != matrix.m:
        raise ValueError(f"observation length {len(observations)} != m = {matrix.m}")
    masks = _column_masks(matrix)

    if channel is None:
        target = 0
        for i, b in enumerate(observations):
            if b:
                target |= 1 << i
        consistent = [
            support
            for support in combinations(range(matrix.n), k)
            if _or_all(masks, support) == target
        ]
        best = consistent[0] if consistent else tuple()
        return OracleResult(consistent_supports=consistent, best=best)

    # per-test log-likelihoods; zero-probability symbols tracked as masks so
    # impossible supports rank at exactly -inf without NaN arithmetic
    l0 = np.zeros(matrix.m)
    l1 = np.zeros(matrix.m)
    imp0 = imp1 = 0
    for i, z in enumerate(observations):
        p0, p1 = channel.mu0[int(z)], channel.mu1[int(z)]
        if p0 > 0:
            l0[i] = math.log(p0)
        else:
            imp0 |= 1 << i
        if p1 > 0:
            l1[i] = math.log(p1)
        else:
            imp1 |= 1 << i
    base = float(l0.sum())
    full = (1 << matrix.m) - 1

    ranked = []
    for support in combinations(range(matrix.n), k):
        u = _or_all(masks, support)
        if (imp0 & (full ^ u)) or (imp1 & u):
            ranked.append((-math.inf, support))
            continue
        ll = base
        v = u
        while v:
            low = v & -v
            i = low.bit_length() - 1
            ll += float(l1[i] - l0[i])
            v ^= low
        ranked.append((ll, support))
    ranked.sort(key=lambda pair: (-pair[0], pair[1]))
    return OracleResult(consistent_supports=ranked, best=ranked[0][1])


def _or_all(masks, support) -> int:
    u = 0
    for j in support:
        u |= masks[j]
    return u
