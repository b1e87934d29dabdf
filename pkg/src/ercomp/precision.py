"""Arithmetic-mode plumbing: double, extended (MPFR), and exact rational.

Every numeric routine in the package takes a PrecisionCtx and does its
arithmetic in that mode.  The ctx also carries the comparison tolerance used
by verifiers (0 in rational mode, where checks are exact).
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

DOUBLE = "double"
EXTENDED = "extended"
RATIONAL = "rational"

_MODES = (DOUBLE, EXTENDED, RATIONAL)


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ResourceCapError(RuntimeError):
    """Request exceeds a documented size or precision policy cap."""


class ConditioningError(ArithmeticError):
    """A numerically recovered quantity landed outside its feasible range."""


def _default_tol(mode: str) -> float:
    if mode == RATIONAL:
        return 0.0
    if mode == EXTENDED:
        return 2.0 ** -64
    return 1e-12


@dataclass(frozen=True)
class PrecisionCtx:
    """Arithmetic mode + working precision + verifier tolerance.

    mode is one of "double", "extended", "rational".  bits only matters in
    extended mode (MPFR mantissa width).  tol defaults per mode: 1e-12 for
    double, 2^-64 for extended, exactly 0 for rational.
    """

    mode: str = DOUBLE
    bits: int = 256
    tol: float = -1.0  # sentinel, replaced in __post_init__

    def __post_init__(self):
        if self.mode not in _MODES:
            raise DomainError(f"unknown precision mode {self.mode!r}")
        if self.mode == EXTENDED and self.bits < 64:
            raise DomainError("extended mode needs at least 64 bits")
        if self.tol < 0:
            object.__setattr__(self, "tol", _default_tol(self.mode))

    # -- constructors -------------------------------------------------

    @classmethod
    def double(cls) -> "PrecisionCtx":
        return cls(DOUBLE)

    @classmethod
    def extended(cls, bits: int = 256) -> "PrecisionCtx":
        return cls(EXTENDED, bits=bits)

    @classmethod
    def rational(cls) -> "PrecisionCtx":
        return cls(RATIONAL)

    @classmethod
    def parse(cls, spec: str) -> "PrecisionCtx":
        """Parse a CLI-style mode string: double | rational | ext:<bits> | ext."""
        s = spec.strip().lower()
        if s == DOUBLE:
            return cls.double()
        if s == RATIONAL:
            return cls.rational()
        if s == "ext" or s == EXTENDED:
            return cls.extended()
        if s.startswith("ext:"):
            try:
                bits = int(s[4:])
            except ValueError:
                raise DomainError(f"bad precision spec {spec!r}") from None
            return cls.extended(bits)
        raise DomainError(f"bad precision spec {spec!r}")

    def spec_string(self) -> str:
        if self.mode == EXTENDED:
            return f"ext:{self.bits}"
        return self.mode

    def with_bits(self, bits: int) -> "PrecisionCtx":
        return PrecisionCtx(self.mode, bits=bits, tol=self.tol)

    # -- arithmetic surface -------------------------------------------

    def workspace(self):
        """Context manager installing the MPFR precision (no-op otherwise)."""
        if self.mode == EXTENDED:
            return gmpy2.context(precision=self.bits)
        return contextlib.nullcontext()

    def real(self, x):
        """Convert x (int, Fraction, float, or decimal string) to mode type."""
        if self.mode == RATIONAL:
            if isinstance(x, float) and not x.is_integer():
                # floats are exact binary rationals but rarely the rational
                # the caller meant; insist on Fraction/str for non-integers
                raise DomainError("rational mode needs exact inputs, got float")
            return Fraction(x)
        if self.mode == EXTENDED:
            if isinstance(x, Fraction):
                return mpfr(x.numerator) / mpfr(x.denominator)
            return mpfr(x)
        return float(x)

    def zero(self):
        return self.real(0)

    def one(self):
        return self.real(1)

    def exp(self, x):
        if self.mode == RATIONAL:
            if x == 0:
                return Fraction(1)
            raise DomainError("exp is irrational; not available in rational mode")
        if self.mode == EXTENDED:
            return gmpy2.exp(mpfr(x))
        return math.exp(x)

    def expm1(self, x):
        if self.mode == RATIONAL:
            if x == 0:
                return Fraction(0)
            raise DomainError("expm1 is irrational; not available in rational mode")
        if self.mode == EXTENDED:
            return gmpy2.expm1(mpfr(x))
        return math.expm1(x)

    def to_float(self, x) -> float:
        return float(x)


def format_value(ctx: PrecisionCtx, x) -> str:
    """Serialize a mode value: num/den in rational, full digits otherwise.

    mpfr's str() prints enough digits to round-trip at the value's own
    precision, which is what reports want.
    """
    if ctx.mode == RATIONAL:
        f = Fraction(x)
        if f.denominator == 1:
            return str(f.numerator)
        return f"{f.numerator}/{f.denominator}"
    if ctx.mode == EXTENDED:
        return str(x)
    return repr(float(x))


def parse_prob(text: str):
    """Parse a probability given as a/b or a decimal literal.

    Fractions stay exact (needed by rational mode); decimals become floats.
    """
    s = text.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        val = Fraction(int(num), int(den))
    else:
        val = Fraction(s) if "." not in s and "e" not in s.lower() else float(s)
    if not 0 <= val <= 1:
        raise DomainError(f"probability {text!r} outside [0, 1]")
    return val
