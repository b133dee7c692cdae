"""Scalar arithmetic for the two base fields: R and Qp.

Real scalars are plain floats.  p-adic scalars are exact `fractions.Fraction`
values (a rational u * p^v is stored in lowest terms, so the valuation and the
unit part are always recoverable exactly; zero is Fraction(0)).  Keeping
native numeric types means matrix code downstream is field-generic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

INF = math.inf

TWO_PI = 2.0 * math.pi


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def int_valuation(n: int, p: int) -> int:
    """Largest v with p^v | n; n must be nonzero."""
    if n == 0:
        raise ValueError("valuation of 0 is +inf; handle separately")
    n = abs(n)
    v = 0
    while n % p == 0:
        v += 1
        n //= p
    return v


@dataclass(frozen=True)
class LocalField:
    """Field descriptor: kind 'R' or 'Qp' (with the prime p).

    Immutable; all element-level operations live here so that callers never
    branch on the field kind themselves.
    """

    kind: str
    p: int | None = None

    def __post_init__(self):
        if self.kind not in ("R", "Qp"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "Qp":
            if self.p is None or not _is_prime(self.p):
                raise ValueError(f"Qp requires a prime p, got {self.p!r}")
        elif self.p is not None:
            raise ValueError("real field takes no prime")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def real() -> "LocalField":
        return LocalField("R")

    @staticmethod
    def padic(p: int) -> "LocalField":
        return LocalField("Qp", p)

    @staticmethod
    def parse(descriptor: str) -> "LocalField":
        """Parse "R" or "Qp:<p>" (the descriptor format used by the CLI)."""
        d = descriptor.strip()
        if d == "R":
            return LocalField.real()
        if d.startswith("Qp:"):
            return LocalField.padic(int(d[3:]))
        raise ValueError(f"bad field descriptor {descriptor!r}")

    @property
    def is_real(self) -> bool:
        return self.kind == "R"

    @property
    def is_padic(self) -> bool:
        return self.kind == "Qp"

    @property
    def residue_cardinality(self) -> int:
        if not self.is_padic:
            raise ValueError("residue cardinality only defined for Qp")
        return self.p

    def descriptor(self) -> str:
        return "R" if self.is_real else f"Qp:{self.p}"

    def __str__(self):
        return self.descriptor()

    # -- elements ----------------------------------------------------------

    def element(self, x):
        """Coerce x into this field's scalar type."""
        if self.is_real:
            return float(x)
        if isinstance(x, Fraction):
            return x
        if isinstance(x, int):
            return Fraction(x)
        if isinstance(x, str):
            return Fraction(x)
        raise TypeError(f"cannot coerce {x!r} into {self}: Qp needs exact rationals")

    def zero(self):
        return 0.0 if self.is_real else Fraction(0)

    def one(self):
        return 1.0 if self.is_real else Fraction(1)

    # -- absolute value and valuation ---------------------------------------

    def valuation(self, x) -> int | float:
        """p-adic valuation; +inf for 0.  Rejects the real field."""
        if self.is_real:
            raise ValueError("valuation is only defined over Qp")
        x = self.element(x)
        if x == 0:
            return INF
        return int_valuation(x.numerator, self.p) - int_valuation(x.denominator, self.p)

    def unit_part(self, x) -> Fraction:
        """u with x = u * p^v, u a p-adic unit in lowest terms; x nonzero."""
        v = self.valuation(x)
        if v is INF:
            raise ValueError("0 has no unit part")
        return self.element(x) / Fraction(self.p) ** v

    def abs_value(self, x):
        """Normalized absolute value: |x| over R, p^{-v(x)} exactly over Qp."""
        if self.is_real:
            return abs(float(x))
        x = self.element(x)
        if x == 0:
            return Fraction(0)
        return Fraction(1, 1) / Fraction(self.p) ** self.valuation(x)

    def abs_float(self, x) -> float:
        return float(self.abs_value(x))

    # -- additive character and measure --------------------------------------

    def frac_part(self, x: Fraction) -> Fraction:
        """p-adic fractional part: the unique rational t/p^m in [0,1) with
        x - t/p^m integral at p.  Only for Qp."""
        if not self.is_padic:
            raise ValueError("frac_part is only defined over Qp")
        x = self.element(x)
        if x == 0:
            return Fraction(0)
        p = self.p
        b = x.denominator
        m = int_valuation(b, p) if b % p == 0 else 0
        if m == 0:
            return Fraction(0)
        pm = p**m
        c = b // pm
        t = (x.numerator * pow(c, -1, pm)) % pm
        return Fraction(t, pm)

    def psi(self, x) -> complex:
        """The pinned additive character: e^{2 pi i x} over R,
        e^{2 pi i frac_p(x)} over Qp."""
        if self.is_real:
            return cmath.exp(1j * TWO_PI * float(x))
        return cmath.exp(1j * TWO_PI * float(self.frac_part(x)))

    def psi_conj(self, x) -> complex:
        return self.psi(x).conjugate()

    def self_dual_measure_unit(self) -> float:
        """Normalization constant of the self-dual measure for psi:
        Lebesgue scale 1 over R, vol(Zp) = 1 over Qp."""
        return 1.0

    # -- sampling (tests, orbit statistics) ----------------------------------

    def sample(self, rng, span: int = 3):
        """A random nonzero-biased element; exact rational over Qp."""
        if self.is_real:
            return rng.gauss(0.0, 1.0)
        p = self.p
        v = rng.randint(-span, span)
        num = rng.randint(1, p - 1) + p * rng.randint(0, 3)
        den = 1 + p * rng.randint(0, 3)
        sign = -1 if rng.random() < 0.5 else 1
        return Fraction(sign * num, den) * Fraction(p) ** v


@dataclass(frozen=True)
class AdditiveCharacter:
    """The fixed unitary character psi of the field (no free parameters)."""

    field: LocalField

    def __call__(self, x) -> complex:
        return self.field.psi(x)

    def conj(self, x) -> complex:
        return self.field.psi_conj(x)


def psi_eval(field: LocalField, x) -> complex:
    return field.psi(x)


def abs_value(field: LocalField, x):
    return field.abs_value(x)


def valuation(field: LocalField, x):
    return field.valuation(x)
