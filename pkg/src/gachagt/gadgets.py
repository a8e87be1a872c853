"""Composition gadgets: parallel repeat, serial vote, and expander repeat.

Each gadget wraps any SchemeHandle and returns a bigger SchemeHandle:

* parallel_build splits a larger population across disjoint copies, one copy
  per person, multiplying throughput.
* serial_build runs independent shuffled copies over the same population and
  keeps indices reported by at least half of them.
* expander_build lets every person join rho of R copies under a fresh
  birthday/fragment code, so per-copy results can be re-assembled by the same
  group-and-interpolate decoder the core scheme uses.

pyramid_build stacks expander layers, then an optional vote layer, then an
optional parallel layer outermost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gf2e import field
from .gacha_core import recover_from_groups
from .scheme import SchemeHandle

# rng stream tags so each gadget derives an independent stream from its seed
_PARALLEL_TAG, _SERIAL_TAG, _EXPANDER_TAG, _FAULTS_TAG = 11, 12, 13, 14


@dataclass(frozen=True)
class GadgetParams:
    """Free composition parameters, validated up front."""

    pi: int = 1
    sigma: int = 1
    rho: int = 4
    R: int = 16
    tau_depth: int = 2
    outer_w: int = 8

    def __post_init__(self):
        if self.pi < 1:
            raise ValueError(f"need pi >= 1, got {self.pi}")
        if self.sigma < 1:
            raise ValueError(f"need sigma >= 1, got {self.sigma}")
        if not 1 < self.rho < self.R:
            raise ValueError(f"need 1 < rho < R, got rho={self.rho}, R={self.R}")
        if self.tau_depth < 2:
            raise ValueError(f"need tau_depth >= 2, got {self.tau_depth}")


def majority_vote(decoded_sets, threshold: int):
    """Indices appearing in at least `threshold` of the per-copy sets."""
    counts = {}
    for s in decoded_sets:
        for j in s:
            counts[j] = counts.get(j, 0) + 1
    return {j for j, c in counts.items() if c >= threshold}


def parallel_build(inner: SchemeHandle, pi: int, seed: int = 0) -> SchemeHandle:
    """pi disjoint copies; a seeded permutation of [pi * n] assigns every
    person one copy and one distinct slot inside it."""
    if pi < 1:
        raise ValueError(f"need pi >= 1, got {pi}")
    n_out = pi * inner.n
    rng = np.random.default_rng((seed, _PARALLEL_TAG))
    perm = rng.permutation(n_out)
    inv = np.empty(n_out, dtype=np.int64)
    inv[perm] = np.arange(n_out)

    def column(j):
        if not 0 <= j < n_out:
            raise ValueError(f"person index {j} out of range")
        p = int(perm[j])
        c, i = divmod(p, inner.n)
        return np.asarray(inner.column(i), dtype=np.int64) + c * inner.m

    def decode(bits):
        bits = np.asarray(bits, dtype=np.uint8)
        out = set()
        for c in range(pi):
            sub = bits[c * inner.m:(c + 1) * inner.m]
            for i in inner.decode(sub):
                out.add(int(inv[c * inner.n + i]))
        return out

    return SchemeHandle(
        n=n_out,
        k_design=pi * inner.k_design // 2,
        m=pi * inner.m,
        column=column,
        decode=decode,
        expected_eps=inner.expected_eps,
        layers=inner.layers + (f"parallel(pi={pi})",),
    )


def serial_build(inner: SchemeHandle, sigma: int, seed: int = 0) -> SchemeHandle:
    """sigma stacked copies with independent column shuffles; an index
    survives when at least ceil(sigma / 2) copies report it."""
    if sigma < 1:
        raise ValueError(f"need sigma >= 1, got {sigma}")
    rng = np.random.default_rng((seed, _SERIAL_TAG))
    perms = [rng.permutation(inner.n) for _ in range(sigma)]
    invs = []
    for p in perms:
        inv = np.empty(inner.n, dtype=np.int64)
        inv[p] = np.arange(inner.n)
        invs.append(inv)
    threshold = (sigma + 1) // 2

    def column(j):
        if not 0 <= j < inner.n:
            raise ValueError(f"person index {j} out of range")
        parts = [
            np.asarray(inner.column(int(perms[c][j])), dtype=np.int64) + c * inner.m
            for c in range(sigma)
        ]
        return np.concatenate(parts)

    def decode(bits):
        bits = np.asarray(bits, dtype=np.uint8)
        per_copy = []
        for c in range(sigma):
            sub = bits[c * inner.m:(c + 1) * inner.m]
            per_copy.append({int(invs[c][i]) for i in inner.decode(sub)})
        return majority_vote(per_copy, threshold)

    return SchemeHandle(
        n=inner.n,
        k_design=inner.k_design,
        m=sigma * inner.m,
        column=column,
        decode=decode,
        expected_eps=inner.expected_eps,
        layers=inner.layers + (f"serial(sigma={sigma})",),
    )


def expander_build(inner: SchemeHandle, rho: int, R: int, outer_w: int,
                   seed: int = 0) -> SchemeHandle:
    """R copies, rho joined per person under a fresh birthday/fragment code.

    Person j of the new population becomes a polynomial of dimension
    ceil(rho/2) over GF(2^outer_w); in copy r she impersonates the inner index
    pairing (g(0), g(r+1)).  Decoding maps per-copy indices back to pairs,
    groups by birthday, and interpolates, with the same verification policy as
    the core decoder.
    """
    if not 1 < rho < R:
        raise ValueError(f"need 1 < rho < R, got rho={rho}, R={R}")
    if R + 1 > (1 << outer_w):
        raise ValueError(f"need R + 1 <= 2^outer_w evaluation points, got R={R}, outer_w={outer_w}")
    if (1 << (2 * outer_w)) > inner.n:
        raise ValueError(
            f"pair map not injective: 2^(2*{outer_w}) > inner population {inner.n}"
        )
    fld = field(outer_w)
    d_out = (rho + 1) // 2
    n_out = 1 << (outer_w * d_out)
    k_out = max(1, R * inner.k_design // (2 * rho))
    mask = (1 << outer_w) - 1

    def column(j):
        if not 0 <= j < n_out:
            raise ValueError(f"person index {j} out of range")
        rng = np.random.default_rng((seed, _EXPANDER_TAG, j))
        copies = np.sort(rng.choice(R, size=rho, replace=False))
        g = fld.index_to_poly(j, d_out)
        hi = fld.poly_eval(g, 0)
        parts = []
        for r in copies:
            lo = fld.poly_eval(g, int(r) + 1)
            v = (hi << outer_w) | lo
            parts.append(np.asarray(inner.column(v), dtype=np.int64) + int(r) * inner.m)
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)

    def decode(bits):
        bits = np.asarray(bits, dtype=np.uint8)
        groups = {}
        seen = set()
        for r in range(R):
            sub = bits[r * inner.m:(r + 1) * inner.m]
            for v in inner.decode(sub):
                if v >= (1 << (2 * outer_w)):
                    continue  # inner false positive outside the pair range
                hi, lo = v >> outer_w, v & mask
                if (hi, r) in seen:
                    continue  # conflicting duplicate for the same copy
                seen.add((hi, r))
                groups.setdefault(hi, []).append((r, lo))
        return recover_from_groups(fld, d_out, 0, groups, lambda r: r + 1, n_out)

    return SchemeHandle(
        n=n_out,
        k_design=k_out,
        m=R * inner.m,
        column=column,
        decode=decode,
        expected_eps=inner.expected_eps,
        layers=inner.layers + (f"expander(rho={rho},R={R},w={outer_w})",),
    )


def default_layer_rho(nu: float, layers_left: int) -> int:
    """rho ~ nu^(1/layers_left), floored at 3."""
    return max(3, round(nu ** (1.0 / layers_left)))


def pyramid_build(base: SchemeHandle, tau_depth: int, sigma: int = 1, pi: int = 1,
                  seed: int = 0, rho_schedule=None, R_schedule=None,
                  outer_w_schedule=None) -> SchemeHandle:
    """(tau_depth - 1) expander layers over the base, then a vote layer when
    sigma > 1, then a parallel layer when pi > 1.

    Schedules default per layer to rho = max(3, round(nu^(1/(tau-i)))) with nu
    the current population's log2, R = 4 rho, and the widest outer field the
    pair-injectivity precondition allows.
    """
    if tau_depth < 2:
        raise ValueError(f"need tau_depth >= 2, got {tau_depth}")
    handle = base
    n_layers = tau_depth - 1
    for i in range(n_layers):
        nu = math.log2(handle.n)
        rho = rho_schedule[i] if rho_schedule else default_layer_rho(nu, n_layers - i)
        R = R_schedule[i] if R_schedule else 4 * rho
        if outer_w_schedule:
            outer_w = outer_w_schedule[i]
        else:
            outer_w = int(nu // 2)
            need = math.ceil(math.log2(R + 1))
            outer_w = max(min(outer_w, 32), 2)
            if outer_w < need:
                outer_w = need
        try:
            handle = expander_build(handle, rho=rho, R=R, outer_w=outer_w,
                                    seed=(seed * 1000003 + i))
        except ValueError as e:
            raise ValueError(f"expander layer {i}: {e}") from e
    if sigma > 1:
        handle = serial_build(handle, sigma, seed=(seed * 1000003 + 97))
    if pi > 1:
        handle = parallel_build(handle, pi, seed=(seed * 1000003 + 98))
    return handle


# ---------------------------------------------------------------------------
# test scaffolding: a perfect one-test-per-person scheme and fault injection
# ---------------------------------------------------------------------------

def identity_scheme(n: int) -> SchemeHandle:
    """m = n, person j joins exactly test j; decoding reads the bits off."""

    def column(j):
        if not 0 <= j < n:
            raise ValueError(f"person index {j} out of range")
        return np.array([j], dtype=np.int64)

    def decode(bits):
        bits = np.asarray(bits, dtype=np.uint8)
        return {int(j) for j in np.flatnonzero(bits)}

    return SchemeHandle(n=n, k_design=n, m=n, column=column, decode=decode,
                        layers=("identity",))


def fault_injected(inner: SchemeHandle, eps: float, seed: int = 0) -> SchemeHandle:
    """Wrap decode: drop each found index with probability eps and, with
    probability eps, inject one uniformly random index.  The wrapper keeps its
    own rng, so successive decodes draw a deterministic fault stream."""
    rng = np.random.default_rng((seed, _FAULTS_TAG))

    def decode(bits):
        out = set()
        for j in inner.decode(bits):
            if rng.random() >= eps:
                out.add(j)
        if rng.random() < eps:
            out.add(int(rng.integers(0, inner.n)))
        return out

    return SchemeHandle(
        n=inner.n,
        k_design=inner.k_design,
        m=inner.m,
        column=inner.column,
        decode=decode,
        expected_eps=eps,
        layers=inner.layers + (f"faults(eps={eps})",),
    )
