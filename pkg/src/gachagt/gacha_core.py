"""The single-layer Gacha scheme: birthday-tagged polynomial fragments spread
over batches of tests.

Encoding: person j owns the polynomial whose coefficients are the base-2^w
digits of j.  She joins r of the B batches; in chosen batch s she writes the
pair (g(b0), g(p_s)) through the inner layer, where b0 is a shared evaluation
point and the p_s are distinct per batch.  The first element tags every
fragment she writes with the same "birthday", so the decoder can sort
fragments by owner without knowing who wrote what.

Decoding: classify each batch as empty / one writer / several writers, read
the pair back where exactly one person wrote, group pairs by birthday, and
interpolate each group back to a polynomial.  Interpolated candidates are
verified against the whole group before their index is emitted, so corrupted
fragments degrade into misses rather than fabricated indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gf2e import FieldSpec, InsufficientEvaluations, field
from .inner_code import (
    BinaryLinearCode,
    ConstantWeightCode,
    Occupancy,
    WeightClassifier,
    min_even_block_length,
)
from .scheme import SchemeHandle


class _Collision:
    __slots__ = ()

    def __repr__(self):
        return "COLLISION"


COLLISION = _Collision()  # SynthWord slot marker: several writers, nothing readable


class NoiselessInner:
    """Constant-weight image per block; a symbol is one or two blocks."""

    def __init__(self, code: ConstantWeightCode, w: int):
        if code.payload_bits >= 2 * w:
            self.blocks = 1
        elif code.payload_bits >= w:
            self.blocks = 2
        else:
            raise ValueError(
                f"inner payload {code.payload_bits} bits cannot carry a pair of {w}-bit values"
            )
        self.code = code
        self.w = w
        self.bits_per_symbol = self.blocks * code.ell

    def _payloads(self, hi: int, lo: int):
        if self.blocks == 1:
            return ((hi << self.w) | lo,)
        return (hi, lo)

    def encode_pair(self, hi: int, lo: int, s: int = 0):
        return tuple(self.code.encode(p) for p in self._payloads(hi, lo))

    def classify(self, block_words, s: int = 0):
        kinds = []
        payloads = []
        for word in block_words:
            kind, payload = self.code.classify_noiseless(word)
            kinds.append(kind)
            payloads.append(payload)
        if all(k is Occupancy.EMPTY for k in kinds):
            return None
        if all(k is Occupancy.ONE for k in kinds):
            if self.blocks == 1:
                v = payloads[0]
                return v >> self.w, v & ((1 << self.w) - 1)
            return payloads[0], payloads[1]
        return COLLISION


def _whiten_key(s: int, b: int, dim: int) -> int:
    """Fixed per-(batch, block) payload scrambling key (splitmix64 finalizer).

    Persons whose birthday equals their fragment (low indices map to constant
    polynomials) would otherwise write the same codeword into every block of
    every batch, making their symbol weight a single atypical draw repeated r
    times; XOR-ing a batch-keyed constant into the payload restores the
    fresh-codeword-per-batch statistics the weight classifier assumes.
    """
    z = (s * 2 + b + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (z ^ (z >> 31)) & ((1 << dim) - 1)


class NoisyInner:
    """Linear-code image per block plus a weight test over the whole symbol."""

    def __init__(self, code: BinaryLinearCode, classifier: WeightClassifier, w: int):
        if code.dim >= 2 * w:
            self.blocks = 1
        elif code.dim >= w:
            self.blocks = 2
        else:
            raise ValueError(
                f"inner dimension {code.dim} bits cannot carry a pair of {w}-bit values"
            )
        self.code = code
        self.classifier = classifier
        self.w = w
        self.bits_per_symbol = self.blocks * code.ell
        if classifier.ell != self.bits_per_symbol:
            raise ValueError(
                f"classifier covers {classifier.ell} bits but a symbol spans {self.bits_per_symbol}"
            )

    def _payloads(self, hi: int, lo: int):
        if self.blocks == 1:
            return ((hi << self.w) | lo,)
        return (hi, lo)

    def encode_pair(self, hi: int, lo: int, s: int = 0):
        return tuple(
            self.code.encode(p ^ _whiten_key(s, b, self.code.dim))
            for b, p in enumerate(self._payloads(hi, lo))
        )

    def _unpack(self, payloads, s: int):
        payloads = [p ^ _whiten_key(s, b, self.code.dim) for b, p in enumerate(payloads)]
        if self.blocks == 1:
            v = payloads[0]
            return v >> self.w, v & ((1 << self.w) - 1)
        return payloads[0], payloads[1]

    def classify(self, block_words, s: int = 0):
        ones = sum(wd.bit_count() for wd in block_words)
        kind = self.classifier.classify_weight(ones)
        if kind is Occupancy.EMPTY:
            return None
        if kind is Occupancy.MANY:
            return COLLISION
        return self._unpack([self.code.decode(wd) for wd in block_words], s)


def default_noiseless_inner(w: int, ell: int = 0, weight: int = 0) -> NoiselessInner:
    """Single block when a pair fits in a 32-bit-or-shorter block, else split."""
    if ell == 0:
        single = min_even_block_length(2 * w)
        payload_bits = 2 * w if single <= 32 else w
        ell = min_even_block_length(payload_bits)
    else:
        payload_bits = 2 * w if math.comb(ell, weight or ell // 2) >= (1 << (2 * w)) else w
    return NoiselessInner(ConstantWeightCode(ell, weight or ell // 2, payload_bits), w)


def default_noisy_inner(w: int, crossover: float, ell: int = 0, dim: int = 0,
                        seed: int = 7) -> NoisyInner:
    from .inner_code import MAX_ENUMERABLE_DIM, linear_code

    if dim == 0:
        dim = 2 * w if 2 * w <= MAX_ENUMERABLE_DIM else w
    if ell == 0:
        ell = 2 * dim
    code = linear_code(ell, dim, seed)
    blocks = 1 if dim >= 2 * w else 2
    return NoisyInner(code, WeightClassifier(ell=blocks * ell, p=crossover), w)


@dataclass
class GachaParams:
    """All sizing constants for one scheme layer.

    n        population (must fit in the polynomial index space 2^(w*d))
    k_cap    design sick count the batch budget is sized for
    w        field width; birthdays collide with probability 2^-w
    d        polynomial dimension; groups need d surviving fragments
    r        batches each person joins ("circles")
    B        total batch count; the default ratios r = 9 d and B = 24 d k
             put the circle density at r * k / B = 3/8
    inner    per-batch symbol codec
    """

    n: int
    k_cap: int
    w: int
    d: int
    r: int
    B: int
    inner: object
    matrix_seed: int = 0

    def __post_init__(self):
        self.field: FieldSpec = field(self.w)
        if self.n < 1 or self.w * self.d < math.log2(self.n):
            raise ValueError(f"population {self.n} exceeds 2^(w*d) = 2^{self.w * self.d}")
        if self.B < self.r:
            raise ValueError(f"need B >= r, got B={self.B}, r={self.r}")
        if self.r < self.d:
            raise ValueError(f"need r >= d circles to interpolate, got r={self.r}, d={self.d}")
        if self.B + 1 > (1 << self.w):
            raise ValueError(
                f"need B + 1 <= 2^w distinct evaluation points, got B={self.B}, w={self.w}"
            )

    @property
    def nu(self) -> float:
        return math.log2(self.n)

    @property
    def bits_per_symbol(self) -> int:
        return self.inner.bits_per_symbol

    @property
    def m(self) -> int:
        return self.B * self.bits_per_symbol

    # evaluation points: b0 = 0, batch s uses the (s+1)-th field element
    b0 = 0

    def point(self, s: int) -> int:
        return s + 1


def default_params(n: int, k: int, channel_crossover=None, matrix_seed: int = 0,
                   w: int = 0, d: int = 0, r: int = 0, B: int = 0,
                   ell: int = 0, weight: int = 0, lin_dim: int = 0,
                   code_seed: int = 7) -> GachaParams:
    """Fill unset sizing from the standard ratios.

    nu = ceil(log2 n); d ~ sqrt(nu)/3; w covers both the index space (w*d >=
    nu) and a comfortable birthday margin (w >= 3 sqrt(nu)); r = 9d; B = 24dk.
    """
    nu = max(1, math.ceil(math.log2(max(n, 2))))
    if d == 0:
        d = max(1, round(math.sqrt(nu) / 3))
    if r == 0:
        r = 9 * d
    if B == 0:
        B = 24 * d * k
    if w == 0:
        w = max(math.ceil(nu / d), math.ceil(3 * math.sqrt(nu)),
                math.ceil(math.log2(B + 1)), 2)
    if channel_crossover is None:
        inner = default_noiseless_inner(w, ell=ell, weight=weight)
    else:
        inner = default_noisy_inner(w, channel_crossover, ell=ell, dim=lin_dim,
                                    seed=code_seed)
    return GachaParams(n=n, k_cap=k, w=w, d=d, r=r, B=B, inner=inner,
                       matrix_seed=matrix_seed)


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def person_rng(params: GachaParams, j: int) -> np.random.Generator:
    return np.random.default_rng((params.matrix_seed, j))


def column_symbols(params: GachaParams, j: int):
    """[(batch, block words)] for person j; deterministic in (matrix_seed, j)."""
    if not 0 <= j < params.n:
        raise ValueError(f"person index {j} out of range")
    rng = person_rng(params, j)
    batches = np.sort(rng.choice(params.B, size=params.r, replace=False))
    g = params.field.index_to_poly(j, params.d)
    hi = params.field.poly_eval(g, params.b0)
    out = []
    for s in batches:
        lo = params.field.poly_eval(g, params.point(int(s)))
        out.append((int(s), params.inner.encode_pair(hi, lo, int(s))))
    return out


def build_column(params: GachaParams, j: int) -> np.ndarray:
    """Sparse column over m = B * bits_per_symbol tests."""
    bps = params.bits_per_symbol
    ell = bps // params.inner.blocks
    idx = []
    for s, words in column_symbols(params, j):
        base = s * bps
        for b, word in enumerate(words):
            off = base + b * ell
            while word:
                low = word & -word
                idx.append(off + low.bit_length() - 1)
                word ^= low
    return np.array(sorted(idx), dtype=np.int64)


def build_matrix(params: GachaParams):
    from .core_model import ConfigMatrix

    return ConfigMatrix(
        m=params.m,
        n=params.n,
        columns=[build_column(params, j) for j in range(params.n)],
    )


def observed_blocks(params: GachaParams, sick_set):
    """OR of the sick columns, one int per (batch, block).

    Exactly equivalent to build_matrix + run_tests, without touching the
    n - k healthy columns.
    """
    nblocks = params.B * params.inner.blocks
    words = [0] * nblocks
    for j in sick_set:
        for s, blocks in column_symbols(params, j):
            base = s * params.inner.blocks
            for b, word in enumerate(blocks):
                words[base + b] |= word
    return words


def blocks_to_bits(params: GachaParams, words) -> np.ndarray:
    ell = params.bits_per_symbol // params.inner.blocks
    bits = np.zeros(params.m, dtype=np.uint8)
    for i, word in enumerate(words):
        off = i * ell
        while word:
            low = word & -word
            bits[off + low.bit_length() - 1] = 1
            word ^= low
    return bits


def bits_to_blocks(params: GachaParams, bits: np.ndarray):
    """Pack the observed bit vector into one int per (batch, block)."""
    if len(bits) != params.m:
        raise ValueError(f"observed length {len(bits)} != m = {params.m}")
    ell = params.bits_per_symbol // params.inner.blocks
    rows = np.asarray(bits, dtype=np.uint64).reshape(-1, ell)
    weights = np.uint64(1) << np.arange(ell, dtype=np.uint64)
    lo = (rows[:, : min(ell, 32)] * weights[: min(ell, 32)]).sum(axis=1, dtype=np.uint64)
    if ell > 32:
        hi = (rows[:, 32:] * (weights[32:] >> np.uint64(32))).sum(axis=1, dtype=np.uint64)
        lo = lo | (hi << np.uint64(32))
    return [int(v) for v in lo]


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

@dataclass
class SynthWord:
    """Per-batch reading: None (empty), (birthday, fragment), or COLLISION."""

    symbols: list


def synthesize(params: GachaParams, observed_bits) -> SynthWord:
    """Classify every batch of the length-m observed bit vector."""
    return synthesize_blocks(params, bits_to_blocks(params, np.asarray(observed_bits)))


def synthesize_blocks(params: GachaParams, observed) -> SynthWord:
    """Same as synthesize, on pre-packed per-(batch, block) ints."""
    nb = params.inner.blocks
    if len(observed) != params.B * nb:
        raise ValueError(f"expected {params.B * nb} blocks, got {len(observed)}")
    inner = params.inner
    symbols = []
    if isinstance(inner, NoisyInner):
        # classify all batches first, then decode the single-writer ones in bulk
        kinds = []
        for s in range(params.B):
            ones = sum(observed[s * nb + b].bit_count() for b in range(nb))
            kinds.append(inner.classifier.classify_weight(ones))
        single = [s for s in range(params.B) if kinds[s] is Occupancy.ONE]
        decoded = {}
        if single:
            for b in range(nb):
                words = np.array([observed[s * nb + b] for s in single], dtype=np.uint64)
                payloads = inner.code.decode_many(words)
                for s, v in zip(single, payloads):
                    decoded.setdefault(s, []).append(int(v))
        for s in range(params.B):
            if kinds[s] is Occupancy.EMPTY:
                symbols.append(None)
            elif kinds[s] is Occupancy.MANY:
                symbols.append(COLLISION)
            else:
                symbols.append(inner._unpack(decoded[s], s))
    else:
        for s in range(params.B):
            symbols.append(inner.classify(tuple(observed[s * nb + b] for b in range(nb)), s))
    return SynthWord(symbols=symbols)


def recover_from_groups(fld: FieldSpec, d: int, b0: int, groups, point_of_slot, n: int):
    """Shared candidate recovery: interpolate each birthday group and verify.

    groups maps a birthday value to [(slot, fragment)] with pairwise-distinct
    slots; point_of_slot maps a slot to its evaluation point.  A candidate is
    accepted when it reproduces the birthday at b0, its index fits in [0, n),
    and it matches a strict majority (and at least d) of the group's points.
    Interpolation runs on the d smallest slots, with one retry on the next d
    slots, then the group is abandoned.
    """
    found = set()
    for birthday, pts in groups.items():
        if len(pts) < d:
            continue
        pts = sorted(pts)
        attempts = [pts[:d]]
        if len(pts) >= 2 * d:
            attempts.append(pts[d:2 * d])
        elif len(pts) > d:
            attempts.append(pts[1:d + 1])
        need = max(d, len(pts) // 2 + 1)
        for subset in attempts:
            try:
                g = fld.interpolate([(point_of_slot(s), y) for s, y in subset], d)
            except InsufficientEvaluations:
                break
            if fld.poly_eval(g, b0) != birthday:
                continue
            j = fld.poly_to_index(g)
            if j >= n:
                continue
            matches = sum(1 for s, y in pts if fld.poly_eval(g, point_of_slot(s)) == y)
            if matches >= need:
                found.add(j)
                break
    return found


def list_decode(params: GachaParams, word: SynthWord):
    """Group per-batch pairs by birthday, interpolate, verify, emit indices."""
    groups = {}
    for s, sym in enumerate(word.symbols):
        if sym is None or sym is COLLISION:
            continue
        hi, lo = sym
        groups.setdefault(hi, []).append((s, lo))
    return recover_from_groups(params.field, params.d, params.b0, groups,
                               params.point, params.n)


def decode_pipeline(params: GachaParams, matrix, z, plan=None, rng=None):
    """Symmetrize (when a plan is given) -> synthesize -> list-decode."""
    m = matrix.m if matrix is not None else params.m
    z = np.asarray(z)
    if len(z) != m:
        raise ValueError(f"observed length {len(z)} != m = {m}")
    if plan is not None:
        from .channels import apply_plan_many

        if rng is None:
            raise ValueError("symmetrization needs an rng for the threshold draws")
        z = apply_plan_many(plan, z.astype(np.int64), rng)
    return list_decode(params, synthesize(params, z.astype(np.uint8)))


def gacha_scheme(params: GachaParams) -> SchemeHandle:
    def decode(bits):
        return list_decode(params, synthesize(params, np.asarray(bits, dtype=np.uint8)))

    return SchemeHandle(
        n=params.n,
        k_design=params.k_cap,
        m=params.m,
        column=lambda j: build_column(params, j),
        decode=decode,
        layers=("gacha",),
    )


def analytic_budget(k: int, w: int, d: int, r: int) -> float:
    """Mean FN+FP budget: fragment-starvation tail plus birthday collision mass.

    The first term is the Hoeffding bound on a person keeping fewer than d of
    her r circles when each survives independently with probability >= 5/8;
    the second is the expected number of colliding birthday pairs over 2^w.
    """
    concentrate = k * math.exp(-2 * (5 / 8 - d / r) ** 2 * r)
    birthday = k * k / (1 << (w + 1))
    return concentrate + birthday
