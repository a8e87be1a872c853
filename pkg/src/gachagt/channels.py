"""Binary-input discrete-output noise channels and BSC symmetrization.

A channel is a pair of output distributions, one per input bit.  Any
positive-capacity channel can be post-processed by a randomized likelihood
threshold so the end-to-end behavior is a binary symmetric channel; the
threshold is found by bisection.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-12
CAPACITY_TOL = 1e-9


class ZeroCapacityError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteChannel:
    """Binary-input channel: output symbol drawn from mu0 or mu1."""

    mu0: tuple
    mu1: tuple

    def __post_init__(self):
        object.__setattr__(self, "mu0", tuple(float(p) for p in self.mu0))
        object.__setattr__(self, "mu1", tuple(float(p) for p in self.mu1))
        if len(self.mu0) != len(self.mu1) or len(self.mu0) < 2:
            raise ValueError("mu0 and mu1 must have equal length >= 2")
        for mu in (self.mu0, self.mu1):
            if any(p < 0 for p in mu):
                raise ValueError("negative probability")
            if abs(sum(mu) - 1.0) > PROB_TOL:
                raise ValueError(f"distribution sums to {sum(mu)}, not 1")
        if all(abs(a - b) <= CAPACITY_TOL for a, b in zip(self.mu0, self.mu1)):
            raise ZeroCapacityError("mu0 == mu1: channel has zero capacity")

    @property
    def q(self) -> int:
        return len(self.mu0)

    def transmit(self, bit: int, rng: np.random.Generator) -> int:
        """One symbol drawn from mu_bit."""
        if bit not in (0, 1):
            raise ValueError("input bit must be 0 or 1")
        mu = self.mu1 if bit else self.mu0
        u = rng.random()
        acc = 0.0
        for i, p in enumerate(mu):
            acc += p
            if u < acc:
                return i
        return len(mu) - 1

    def transmit_many(self, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        u = rng.random(bits.shape[0])
        out = np.empty(bits.shape[0], dtype=np.int64)
        cdf0 = np.cumsum(self.mu0)
        cdf1 = np.cumsum(self.mu1)
        ones = bits.astype(bool)
        out[~ones] = np.searchsorted(cdf0, u[~ones], side="right")
        out[ones] = np.searchsorted(cdf1, u[ones], side="right")
        np.clip(out, 0, self.q - 1, out=out)
        return out


def bsc(s: float) -> DiscreteChannel:
    if not 0 <= s < 0.5:
        raise ValueError(f"BSC crossover must be in [0, 1/2), got {s}")
    return DiscreteChannel((1 - s, s), (s, 1 - s))


def bec(p: float) -> DiscreteChannel:
    """Alphabet (0, erasure, 1)."""
    if not 0 <= p < 1:
        raise ValueError(f"erasure probability must be in [0, 1), got {p}")
    return DiscreteChannel((1 - p, p, 0.0), (0.0, p, 1 - p))


def fp_channel(q: float) -> DiscreteChannel:
    """0 flips to 1 with probability q; 1 always stays 1."""
    if not 0 <= q < 1:
        raise ValueError(f"FP probability must be in [0, 1), got {q}")
    return DiscreteChannel((1 - q, q), (0.0, 1.0))


def fn_channel(r: float) -> DiscreteChannel:
    """1 flips to 0 with probability r; 0 always stays 0."""
    if not 0 <= r < 1:
        raise ValueError(f"FN probability must be in [0, 1), got {r}")
    return DiscreteChannel((1.0, 0.0), (r, 1 - r))


def make_channel(kind: str, param=None, mu0=None, mu1=None) -> DiscreteChannel:
    kind = kind.lower()
    if kind == "bsc":
        return bsc(param)
    if kind == "bec":
        return bec(param)
    if kind == "fp":
        return fp_channel(param)
    if kind == "fn":
        return fn_channel(param)
    if kind == "custom":
        return DiscreteChannel(mu0, mu1)
    raise ValueError(f"unknown channel kind {kind!r}")


def parse_channel_spec(spec: str):
    """Parse 'bsc:0.1', 'bec:0.2', 'fp:0.2', 'fn:0.3', 'custom:<csv path>' or 'none'.

    The CSV has a header row symbol,mu0,mu1 and one row per output symbol.
    Returns None for 'none'.
    """
    spec = spec.strip()
    if spec == "none":
        return None
    kind, _, arg = spec.partition(":")
    kind = kind.lower()
    if kind in ("bsc", "bec", "fp", "fn"):
        return make_channel(kind, float(arg))
    if kind == "custom":
        with open(arg, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["symbol", "mu0", "mu1"]:
                raise ValueError("custom channel CSV must have header symbol,mu0,mu1")
            mu0, mu1 = [], []
            for row in reader:
                mu0.append(float(row["mu0"]))
                mu1.append(float(row["mu1"]))
        return DiscreteChannel(tuple(mu0), tuple(mu1))
    raise ValueError(f"unknown channel spec {spec!r}")


@dataclass(frozen=True)
class SymmetrizerPlan:
    """Randomized threshold turning a channel into a BSC.

    `order` lists symbol indices sorted by likelihood ratio mu1/mu0 ascending
    (mu0 == 0 sorts last); symbol at sorted position i (1-based) maps to 0
    when i < t + U for a fresh uniform U.
    """

    order: tuple
    t: float
    crossover: float

    def rank1(self, symbol: int) -> int:
        """1-based position of the symbol in likelihood order."""
        return self.order.index(symbol) + 1


def _error_rates(ch: DiscreteChannel, order, t: float):
    """(P(out 1 | in 0), P(out 0 | in 1)) under the threshold t."""
    p_zero_given0 = 0.0
    p_zero_given1 = 0.0
    for pos, sym in enumerate(order):
        c = min(1.0, max(0.0, t - pos))  # P(position pos+1 maps to 0)
        p_zero_given0 += ch.mu0[sym] * c
        p_zero_given1 += ch.mu1[sym] * c
    return 1.0 - p_zero_given0, p_zero_given1


def plan_symmetrize(ch: DiscreteChannel, tol: float = 1e-9) -> SymmetrizerPlan:
    """Bisection on the threshold until both error directions agree within tol."""
    def ratio(sym):
        if ch.mu0[sym] == 0.0:
            return (1, sym)  # infinite ratio sorts after all finite ones
        return (0, ch.mu1[sym] / ch.mu0[sym], sym)

    order = tuple(sorted(range(ch.q), key=ratio))
    lo, hi = 0.0, float(ch.q)
    for _ in range(200):
        mid = (lo + hi) / 2
        p10, p01 = _error_rates(ch, order, mid)
        gap = p10 - p01
        if abs(gap) < tol:
            break
        if gap > 0:
            lo = mid
        else:
            hi = mid
    else:
        mid = (lo + hi) / 2
    p10, p01 = _error_rates(ch, order, mid)
    if abs(p10 - p01) >= tol:
        raise ZeroCapacityError("bisection failed to symmetrize the channel")
    crossover = (p10 + p01) / 2
    if crossover >= 0.5:
        raise ZeroCapacityError(f"symmetrized crossover {crossover} >= 1/2")
    return SymmetrizerPlan(order=order, t=mid, crossover=crossover)


def apply_symmetrized(plan: SymmetrizerPlan, ch: DiscreteChannel, bit: int,
                      rng: np.random.Generator) -> int:
    """Transmit through ch, then collapse the symbol to a bit with a fresh U."""
    sym = ch.transmit(bit, rng)
    u = rng.random()
    return 1 if u <= plan.rank1(sym) - plan.t else 0


def apply_plan_many(plan: SymmetrizerPlan, symbols: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    rank1 = np.empty(len(plan.order), dtype=np.float64)
    for pos, sym in enumerate(plan.order):
        rank1[sym] = pos + 1
    u = rng.random(symbols.shape[0])
    return (u <= rank1[symbols] - plan.t).astype(np.uint8)


def as_bsc(plan: SymmetrizerPlan) -> DiscreteChannel:
    """The end-to-end channel the plan realizes, as a plain BSC."""
    return bsc(plan.crossover)
