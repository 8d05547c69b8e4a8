"""Special-cycle multiplicities and arithmetic degrees.

Closed-form multiplicities Z(m)_P = 2^(o-1) nu_p rho(m|D|/p, class) for
prime discriminants, the Duke-Li valuation 2^o nu_p rho, the telescoping
identity behind both, and the degree generating series.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from .localinv import DiffResult, diff_set, nu_p, o_count
from .quadfield import (ClassGroup, IdealClass, count_ideals_in_class,
                        kronecker_chi)

Rational = Union[int, Fraction]


class CompositeD(ValueError):
    """The closed form needs |D| prime; supply translation data otherwise."""


class NoSupport(ValueError):
    """dukeli_valuation requires |Diff(m)| = 1."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _check_prime_disc(group: ClassGroup, translation: Optional[IdealClass]):
    if not _is_prime(-group.D) and translation is None:
        raise CompositeD(
            "closed form needs a prime discriminant; pass the c0 translation "
            "class for composite odd fundamental D")


@dataclass(frozen=True)
class CycleMultiplicity:
    """Z(m)_P data at the supporting prime, per Galois label."""

    m: Fraction
    base_class: IdealClass
    p: Optional[int]
    per_sigma: Dict[int, Fraction]
    o: int
    nu: Optional[Fraction]

    def total(self) -> Fraction:
        return sum(self.per_sigma.values(), Fraction(0))


def cycle_multiplicity(m: Rational, a: IdealClass, b: IdealClass,
                       translation: Optional[IdealClass] = None) -> Fraction:
    """Z(m)_{P_0^sigma(b)} for the lattice attached to [a]:
    2^(o(m)-1) nu_p(m) rho(m|D|/p, [a]^-2 [b]^-2-translated), zero unless
    |Diff(m)| = 1.

    The Galois labeling conventions of the two source formulas differ by
    an inversion; the class-sum (hence every verified identity) is
    labeling independent.  ``translation`` supplies the c0 class for
    composite discriminants.
    """
    group = a.group
    _check_prime_disc(group, translation)
    m = Fraction(m)
    D = group.D
    if (m * abs(D)).denominator != 1:
        raise ValueError("m|D| must be integral")
    diff = diff_set(m, D)
    if len(diff) != 1:
        return Fraction(0)
    p = diff.sole_prime()
    o = o_count(m, D)
    nu = nu_p(m, p, D)
    arg = m * abs(D) / p
    if arg.denominator != 1 or arg < 1:
        return Fraction(0)
    cls = (~a) * (~a) * (~b) * (~b)
    if translation is not None:
        cls = cls * translation
    rho = count_ideals_in_class(int(arg), cls)
    return Fraction(2) ** (o - 1) * nu * rho


def cycle_data(m: Rational, a: IdealClass,
               translation: Optional[IdealClass] = None) -> CycleMultiplicity:
    """The full per-sigma table of Z(m) multiplicities for the base class a."""
    group = a.group
    m = Fraction(m)
    diff = diff_set(m, group.D)
    if len(diff) != 1:
        return CycleMultiplicity(m, a, None, {}, o_count(m, group.D), None)
    p = diff.sole_prime()
    per = {b.index: cycle_multiplicity(m, a, b, translation)
           for b in group.classes()}
    return CycleMultiplicity(m, a, p, per, o_count(m, group.D),
                             nu_p(m, p, group.D))


def dukeli_valuation(m: Rational, a: IdealClass, b: IdealClass,
                     translation: Optional[IdealClass] = None) -> Fraction:
    """2^o(m) nu_p(m) rho(m|D|/p, [a]^2 [b]^-2): the r-free part of
    ord_P(alpha(a^2, m)); equals twice the cycle multiplicity under the
    square-class alignment."""
    group = a.group
    _check_prime_disc(group, translation)
    m = Fraction(m)
    diff = diff_set(m, group.D)
    if len(diff) != 1:
        raise NoSupport(f"|Diff({m})| = {len(diff)}")
    p = diff.sole_prime()
    o = o_count(m, group.D)
    nu = nu_p(m, p, group.D)
    arg = m * abs(group.D) / p
    if arg.denominator != 1 or arg < 1:
        return Fraction(0)
    cls = a * a * (~b) * (~b)
    if translation is not None:
        cls = cls * translation
    return Fraction(2) ** o * nu * count_ideals_in_class(int(arg), cls)


def telescoping_check(n: int, C: IdealClass) -> bool:
    """sum_{j >= 1} rho(n/p^j, C) = nu_p(n/|D|) rho(n/p, C) for
    Diff(n/|D|) = {p}, checked with exact integer arithmetic."""
    group = C.group
    D = group.D
    diff = diff_set(Fraction(n, abs(D)), D)
    if len(diff) != 1:
        raise ValueError(f"precondition |Diff(n/|D|)| = 1 fails for n = {n}")
    p = diff.sole_prime()
    lhs = 0
    pj = p
    while n % pj == 0:
        lhs += count_ideals_in_class(n // pj, C)
        pj *= p
    nu = nu_p(Fraction(n, abs(D)), p, D)
    if n % p:
        rhs = 0
    else:
        rhs = nu * count_ideals_in_class(n // p, C)
    return lhs == rhs


def degree(m: Rational, a: IdealClass, f_convention: Dict[str, int],
           translation: Optional[IdealClass] = None):
    """(coefficient, p) with deg Z(m) = coefficient * log(p).

    coefficient = f_p * sum over b of Z(m)_{P_0^sigma(b)}, where f_p is
    the residue-degree factor from ``f_convention`` ({"ramified": _,
    "inert": _}), pinned empirically by the verification pipeline.
    """
    group = a.group
    m = Fraction(m)
    diff = diff_set(m, group.D)
    if len(diff) != 1:
        return Fraction(0), None
    p = diff.sole_prime()
    kind = "ramified" if kronecker_chi(group.D, p) == 0 else "inert"
    f_p = f_convention[kind]
    total = sum((cycle_multiplicity(m, a, b, translation)
                 for b in group.classes()), Fraction(0))
    return f_p * total, p


@dataclass
class DegreeSeries:
    """Entries m -> (coefficient, p) of the degree generating series."""

    D: int
    base_index: int
    entries: Dict[Fraction, Tuple[Fraction, int]]

    def to_json(self) -> str:
        return json.dumps({
            "D": self.D,
            "class": self.base_index,
            "entries": [[str(m), str(c), p]
                        for m, (c, p) in sorted(self.entries.items())],
        })

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["m", "coefficient", "prime"])
        for m, (c, p) in sorted(self.entries.items()):
            w.writerow([str(m), str(c), p])
        return buf.getvalue()


def degree_series(D: int, a: IdealClass, m_max: Rational,
                  f_convention: Dict[str, int]) -> DegreeSeries:
    """All represented indices m in (1/|D|)Z with 0 < m <= m_max."""
    if not _is_prime(-D):
        raise CompositeD("degree series implemented for prime |D|")
    entries: Dict[Fraction, Tuple[Fraction, int]] = {}
    absD = abs(D)
    n = 1
    while Fraction(n, absD) <= Fraction(m_max):
        m = Fraction(n, absD)
        # representability: m = -Q(mu) mod 1 for some mu, i.e. chi(n) != -1
        if kronecker_chi(D, n % absD if n % absD else absD) != -1:
            coeff, p = degree(m, a, f_convention)
            if p is not None and coeff:
                entries[m] = (coeff, p)
        n += 1
    return DegreeSeries(D, a.index, entries)
