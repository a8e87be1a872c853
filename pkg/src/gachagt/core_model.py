"""Problem instances, test evaluation, and FP/FN accounting.

Everything downstream shares these types: an instance is the hidden sick set,
a configuration matrix says which tests each person joins (stored as sorted
per-person index lists since columns are sparse), and TrialMetrics carries the
per-trial error counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProblemInstance:
    n: int
    k: int
    sick_set: frozenset

    def __post_init__(self):
        if not 0 < self.k < self.n:
            raise ValueError(f"need 0 < k < n, got k={self.k}, n={self.n}")
        if len(self.sick_set) != self.k:
            raise ValueError("sick_set size does not match k")
        if any(not 0 <= j < self.n for j in self.sick_set):
            raise ValueError("sick index out of range")


@dataclass
class ConfigMatrix:
    """m x n boolean matrix, stored column-sparse (sorted test indices)."""

    m: int
    n: int
    columns: list

    def __post_init__(self):
        if len(self.columns) != self.n:
            raise ValueError("column count does not match n")
        for col in self.columns:
            arr = np.asarray(col)
            if arr.size and (arr[0] < 0 or arr[-1] >= self.m or np.any(np.diff(arr) <= 0)):
                raise ValueError("columns must be strictly increasing indices in [0, m)")


@dataclass
class TrialMetrics:
    false_positives: int
    false_negatives: int
    m: int = 0
    decode_nanos: int = 0


def sample_instance(n: int, k: int, seed) -> ProblemInstance:
    """Uniformly random k-subset of [n]; deterministic given the seed."""
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sick = rng.choice(n, size=k, replace=False)
    return ProblemInstance(n=n, k=k, sick_set=frozenset(int(j) for j in sick))


def run_tests(matrix: ConfigMatrix, inst: ProblemInstance) -> np.ndarray:
    """Noiseless results: test i fires iff some sick person's column contains i."""
    if matrix.n != inst.n:
        raise ValueError(f"matrix has n={matrix.n} but instance has n={inst.n}")
    y = np.zeros(matrix.m, dtype=np.uint8)
    for j in inst.sick_set:
        y[np.asarray(matrix.columns[j], dtype=np.int64)] = 1
    return y


def score(inst: ProblemInstance, estimate, m: int = 0, decode_nanos: int = 0) -> TrialMetrics:
    estimate = set(estimate)
    if any(not 0 <= j < inst.n for j in estimate):
        raise ValueError("estimated index out of range")
    return TrialMetrics(
        false_positives=len(estimate - inst.sick_set),
        false_negatives=len(inst.sick_set - estimate),
        m=m,
        decode_nanos=decode_nanos,
    )
