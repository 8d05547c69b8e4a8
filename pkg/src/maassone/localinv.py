"""Local arithmetic invariants.

p-adic Hilbert symbols by the closed unit formulas, the set Diff(m) of
primes where (-m, D)_p = -1, the multiplicity factor nu_p(m), and the
ramified support count o(m).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Union

from .quadfield import kronecker, kronecker_chi

Rational = Union[int, Fraction]

INFINITE_PLACE = 0  # sentinel accepted by hilbert_symbol for the real place


class SplitPrime(ValueError):
    """nu_p is undefined at primes split in k."""


def _val_unit(x: Fraction, p: int):
    """(v, u) with x = p^v * u and u a p-unit, as exact rationals."""
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v, Fraction(num, den)


def _legendre_fraction(u: Fraction, p: int) -> int:
    """Legendre symbol (u/p) for a p-unit rational u."""
    num = u.numerator % p
    den = u.denominator % p
    return kronecker(num * pow(den, -1, p), p)


def hilbert_symbol(a: Rational, b: Rational, p) -> int:
    """The Hilbert symbol (a, b)_p; p a rational prime or the infinite place.

    Pass p = None, 0 or the string "inf" for the real place.
    """
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol requires nonzero arguments")
    if p in (None, 0, "inf", "oo"):
        return -1 if (a < 0 and b < 0) else 1
    if p == 2:
        alpha, u = _val_unit(a, 2)
        beta, v = _val_unit(b, 2)
        # epsilon(u) = (u-1)/2, omega(u) = (u^2-1)/8 mod 2, on odd parts
        un = (u.numerator * pow(u.denominator, -1, 8)) % 8
        vn = (v.numerator * pow(v.denominator, -1, 8)) % 8
        eps_u, eps_v = (un - 1) // 2 % 2, (vn - 1) // 2 % 2
        om_u, om_v = (un * un - 1) // 8 % 2, (vn * vn - 1) // 8 % 2
        e = eps_u * eps_v + alpha * om_v + beta * om_u
        return -1 if e % 2 else 1
    alpha, u = _val_unit(a, p)
    beta, v = _val_unit(b, p)
    e = alpha * beta * ((p - 1) // 2)
    sym = (-1) ** (e % 2)
    if beta % 2:
        sym *= _legendre_fraction(u, p)
    if alpha % 2:
        sym *= _legendre_fraction(v, p)
    return sym


@dataclass(frozen=True)
class DiffResult:
    """Diff(m) for the field of discriminant D: primes with (-m, D)_p = -1."""

    primes: tuple
    m: Fraction
    D: int

    def __len__(self):
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def sole_prime(self) -> int:
        if len(self.primes) != 1:
            raise ValueError(f"|Diff| = {len(self.primes)}, not 1")
        return self.primes[0]


def _prime_factors(n: int):
    n = abs(n)
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def diff_set(m: Rational, D: int) -> DiffResult:
    """Diff(m) = {p finite : (-m, D)_p = -1}.

    Only primes dividing 2*D*num(m)*den(m) can give -1; all others are
    unramified for both arguments.
    """
    m = Fraction(m)
    if m <= 0:
        raise ValueError("m must be positive")
    candidates = set(_prime_factors(2 * D * m.numerator * m.denominator))
    primes = tuple(sorted(p for p in candidates
                          if hilbert_symbol(-m, D, p) == -1))
    return DiffResult(primes, m, D)


def nu_p(m: Rational, p: int, D: int) -> Fraction:
    """(ord_p(m)+1)/2 at inert p, ord_p(m|D|) at ramified p."""
    chi = kronecker_chi(D, p)
    if chi == 1:
        raise SplitPrime(f"{p} splits in Q(sqrt({D}))")
    m = Fraction(m)
    if chi == -1:
        v, _ = _val_unit(m, p)
        return Fraction(v + 1, 2)
    v, _ = _val_unit(m * abs(D), p)
    return Fraction(v)


def o_count(m: Rational, D: int) -> int:
    """Number of primes q | D with ord_q(m|D|) > 0."""
    m = Fraction(m)
    if m <= 0:
        raise ValueError("m must be positive")
    count = 0
    for q in _prime_factors(D):
        v, _ = _val_unit(m * abs(D), q)
        if v > 0:
            count += 1
    return count
