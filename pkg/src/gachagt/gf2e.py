"""Arithmetic in GF(2^w) plus low-degree polynomial evaluation and interpolation.

Field elements are plain ints in [0, 2^w); a FieldSpec carries the bit width
and the reduction polynomial and does all arithmetic.  Polynomials are tuples
of coefficient ints, lowest degree first, with a fixed length ("dimension"):
trailing zeros are kept, so (3, 0) and (3,) are different objects even though
they evaluate identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache


class InsufficientEvaluations(ValueError):
    """Raised when interpolation gets fewer distinct x-coordinates than the dimension."""


# One irreducible polynomial per width, lowest-weight first (trinomials where
# they exist, pentanomials otherwise).  Masks include the leading x^w bit.
IRREDUCIBLE_POLY = {
    2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x83, 8: 0x11B,
    9: 0x203, 10: 0x409, 11: 0x805, 12: 0x1009, 13: 0x201B, 14: 0x4021,
    15: 0x8003, 16: 0x1002B, 17: 0x20009, 18: 0x40009, 19: 0x80027,
    20: 0x100009, 21: 0x200005, 22: 0x400003, 23: 0x800021, 24: 0x100001B,
    25: 0x2000009, 26: 0x400001B, 27: 0x8000027, 28: 0x10000003,
    29: 0x20000005, 30: 0x40000003, 31: 0x80000009, 32: 0x10000008D,
}


def _poly_mod(a: int, b: int) -> int:
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_mod(a, b)
    return a


def _mulmod_poly(a: int, b: int, f: int) -> int:
    deg = f.bit_length() - 1
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if (a >> deg) & 1:
            a ^= f
    return r


def _x_pow_2e_mod(e: int, f: int) -> int:
    r = 0b10
    for _ in range(e):
        r = _mulmod_poly(r, r, f)
    return r


def is_irreducible(mask: int) -> bool:
    """Rabin's test over GF(2): x^(2^w) == x mod f, and for each prime p | w
    the polynomial x^(2^(w/p)) - x is coprime with f."""
    w = mask.bit_length() - 1
    if w < 1 or not mask & 1:
        return False
    if _x_pow_2e_mod(w, mask) != 0b10:
        return False
    primes, rest, p = set(), w, 2
    while p * p <= rest:
        while rest % p == 0:
            primes.add(p)
            rest //= p
        p += 1
    if rest > 1:
        primes.add(rest)
    for p in primes:
        h = _x_pow_2e_mod(w // p, mask) ^ 0b10
        if _poly_gcd(mask, h) != 1:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^w) context.  All element-level operations live here."""

    w: int
    reduction_poly: int = 0  # filled from the built-in table when left 0

    def __post_init__(self):
        if not 2 <= self.w <= 32:
            raise ValueError(f"field width must be in [2, 32], got {self.w}")
        if self.reduction_poly == 0:
            object.__setattr__(self, "reduction_poly", IRREDUCIBLE_POLY[self.w])
        if self.reduction_poly.bit_length() - 1 != self.w:
            raise ValueError("reduction polynomial degree does not match width")
        if not is_irreducible(self.reduction_poly):
            raise ValueError(f"reduction polynomial {self.reduction_poly:#x} is reducible")

    @property
    def order(self) -> int:
        return 1 << self.w

    def check(self, a: int) -> int:
        if not 0 <= a < (1 << self.w):
            raise ValueError(f"{a} is not an element of GF(2^{self.w})")
        return a

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        self.check(a)
        self.check(b)
        f, w = self.reduction_poly, self.w
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if (a >> w) & 1:
                a ^= f
        return r

    def pow(self, a: int, e: int) -> int:
        self.check(a)
        r, base = 1, a
        while e:
            if e & 1:
                r = self.mul(r, base)
            base = self.mul(base, base)
            e >>= 1
        return r

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return self.pow(a, (1 << self.w) - 2)

    # ----- polynomials (tuples of coefficients, low degree first) -----

    def poly_eval(self, coeffs, p: int) -> int:
        """Horner evaluation of the polynomial at p."""
        self.check(p)
        acc = 0
        for c in reversed(coeffs):
            acc = self.mul(acc, p) ^ self.check(c)
        return acc

    def interpolate(self, points, d: int):
        """Unique polynomial of dimension d through the first d points with
        pairwise-distinct x-coordinates (duplicates after the first are dropped).

        Solves the Vandermonde system by Gaussian elimination.
        """
        if d < 1:
            raise ValueError("dimension must be positive")
        seen, use = set(), []
        for x, y in points:
            if x in seen:
                continue
            seen.add(x)
            use.append((self.check(x), self.check(y)))
            if len(use) == d:
                break
        if len(use) < d:
            raise InsufficientEvaluations(
                f"need {d} points with distinct x-coordinates, got {len(use)}"
            )
        # augmented rows [x^0, ..., x^(d-1) | y]
        rows = []
        for x, y in use:
            row, xp = [], 1
            for _ in range(d):
                row.append(xp)
                xp = self.mul(xp, x)
            row.append(y)
            rows.append(row)
        for col in range(d):
            piv = next(i for i in range(col, d) if rows[i][col])
            rows[col], rows[piv] = rows[piv], rows[col]
            scale = self.inv(rows[col][col])
            rows[col] = [self.mul(scale, v) for v in rows[col]]
            for i in range(d):
                if i != col and rows[i][col]:
                    f = rows[i][col]
                    rows[i] = [vi ^ self.mul(f, vc) for vi, vc in zip(rows[i], rows[col])]
        return tuple(rows[i][d] for i in range(d))

    # ----- the index <-> polynomial bijection -----

    def index_to_poly(self, j: int, d: int):
        """The d base-2^w digits of j, little-endian, as coefficients."""
        if not 0 <= j < (1 << (self.w * d)):
            raise ValueError(f"index {j} out of range for w={self.w}, d={d}")
        mask = (1 << self.w) - 1
        return tuple((j >> (self.w * i)) & mask for i in range(d))

    def poly_to_index(self, coeffs) -> int:
        j = 0
        for i, c in enumerate(coeffs):
            j |= self.check(c) << (self.w * i)
        return j


@lru_cache(maxsize=None)
def field(w: int) -> FieldSpec:
    """Shared FieldSpec for the built-in reduction polynomial of width w."""
    return FieldSpec(w)
