"""Exact q-expansion arithmetic.

Truncated Laurent series with fractional exponents over exact rationals
(the carrier for all q-expansions in this package), integer polynomials
with exact resultants, and arbitrary-precision evaluation of series on
the upper half-plane.
"""

from __future__ import annotations

import json
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Mapping, Union

import mpmath

Rational = Union[int, Fraction]


class DivisionByZeroSeries(ZeroDivisionError):
    """Divisor is identically zero up to its truncation."""


class InsufficientConvergence(ArithmeticError):
    """|q| too large or tail bound above the requested accuracy."""


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


class FracSeries:
    """Truncated q-series sum c_e q^e with e in (1/denom)*Z, c_e rational.

    Exponents are stored as integers scaled by ``denom``; ``trunc`` is the
    scaled exponent from which on coefficients are unknown.  All arithmetic
    propagates truncation pessimistically: a coefficient is never reported
    unless it is fully determined by the stored data of both operands.
    Instances are immutable.
    """

    __slots__ = ("denom", "coeffs", "trunc")

    def __init__(self, denom: int, coeffs: Mapping[int, Rational], trunc: int):
        if denom <= 0:
            raise ValueError("denom must be positive")
        self.denom = denom
        self.coeffs = {n: Fraction(c) for n, c in coeffs.items() if c and n < trunc}
        self.trunc = trunc

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_terms(cls, terms: Mapping[Rational, Rational], trunc: Rational,
                   denom: int = 1) -> "FracSeries":
        """Build a series from {exponent: coefficient} with exact exponents."""
        d = denom
        for e in terms:
            d = _lcm(d, Fraction(e).denominator)
        d = _lcm(d, Fraction(trunc).denominator)
        scaled = {}
        for e, c in terms.items():
            fe = Fraction(e) * d
            scaled[int(fe)] = Fraction(c)
        return cls(d, scaled, int(Fraction(trunc) * d))

    @classmethod
    def zero(cls, trunc: Rational = 200, denom: int = 1) -> "FracSeries":
        return cls.from_terms({}, trunc, denom)

    @classmethod
    def one(cls, trunc: Rational = 200, denom: int = 1) -> "FracSeries":
        return cls.from_terms({0: 1}, trunc, denom)

    @classmethod
    def q_power(cls, e: Rational, trunc: Rational = 200) -> "FracSeries":
        return cls.from_terms({e: 1}, trunc)

    # -- basic queries -----------------------------------------------------

    @property
    def truncation(self) -> Fraction:
        return Fraction(self.trunc, self.denom)

    def exponents(self):
        return sorted(Fraction(n, self.denom) for n in self.coeffs)

    def coeff(self, e: Rational) -> Fraction:
        """Coefficient at exponent e; raises if e is at or beyond trunc."""
        fe = Fraction(e) * self.denom
        if fe >= self.trunc:
            raise ValueError(f"coefficient at {e} is beyond truncation "
                             f"{self.truncation}")
        if fe.denominator != 1:
            return Fraction(0)
        return self.coeffs.get(int(fe), Fraction(0))

    def valuation(self) -> Fraction:
        """Order of the lowest nonzero known term (trunc if none stored)."""
        if not self.coeffs:
            return self.truncation
        return Fraction(min(self.coeffs), self.denom)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FracSeries):
            return NotImplemented
        return self.eq_to_order(other, min(self.truncation, other.truncation)) \
            and self.truncation == other.truncation

    def __hash__(self):
        return hash((self.denom, self.trunc, tuple(sorted(self.coeffs.items()))))

    def eq_to_order(self, other: "FracSeries", order: Rational) -> bool:
        """Exact equality of all coefficients at exponents < order."""
        bound = Fraction(order)
        if bound > min(self.truncation, other.truncation):
            raise ValueError("comparison order exceeds known truncation")
        for n, c in self.coeffs.items():
            if Fraction(n, self.denom) < bound and other.coeff(Fraction(n, self.denom)) != c:
                return False
        for n, c in other.coeffs.items():
            e = Fraction(n, other.denom)
            if e < bound and self.coeff(e) != c:
                return False
        return True

    # -- rescaling helpers -------------------------------------------------

    def with_denom(self, denom: int) -> "FracSeries":
        """Re-grade onto a finer exponent lattice (denom must be a multiple)."""
        if denom == self.denom:
            return self
        if denom % self.denom:
            raise ValueError("new denom must be a multiple of the old one")
        k = denom // self.denom
        return FracSeries(denom, {n * k: c for n, c in self.coeffs.items()},
                          self.trunc * k)

    def rescale_exponents(self, k: int) -> "FracSeries":
        """Substitute q -> q^k (k positive integer)."""
        if k <= 0:
            raise ValueError("rescaling factor must be positive")
        g = gcd(k, self.denom)
        mult, denom = k // g, self.denom // g
        return FracSeries(denom, {n * mult: c for n, c in self.coeffs.items()},
                          self.trunc * mult)

    def scale_exponents_by(self, k: int) -> "FracSeries":
        """Multiply every exponent by a positive integer k (incl. trunc)."""
        return self.rescale_exponents(k)

    def canonical(self) -> "FracSeries":
        """Shrink denom to the lattice actually spanned by the exponents.

        The truncation is rounded down to the coarser grid, so this never
        claims knowledge beyond what was stored.
        """
        g = self.denom
        for n in self.coeffs:
            g = gcd(g, n)
            if g == 1:
                return self
        d = self.denom // g
        return FracSeries(d, {n // g: c for n, c in self.coeffs.items()},
                          self.trunc // g)

    def shift(self, e: Rational) -> "FracSeries":
        """Multiply by q^e exactly (shifts all exponents and the truncation)."""
        fe = Fraction(e)
        d = _lcm(self.denom, fe.denominator)
        s = self.with_denom(d)
        k = int(fe * d)
        return FracSeries(d, {n + k: c for n, c in s.coeffs.items()}, s.trunc + k)

    def truncate(self, order: Rational) -> "FracSeries":
        t = int(Fraction(order) * self.denom)
        if t > self.trunc:
            raise ValueError("cannot extend truncation")
        return FracSeries(self.denom, {n: c for n, c in self.coeffs.items() if n < t}, t)

    def __repr__(self):
        items = sorted(self.coeffs.items())[:8]
        parts = [f"{c}*q^{Fraction(n, self.denom)}" for n, c in items]
        tail = " + ..." if len(self.coeffs) > 8 else ""
        body = " + ".join(parts) if parts else "0"
        return f"FracSeries({body}{tail}; O(q^{self.truncation}))"

    # -- ring operations ---------------------------------------------------

    def _aligned(self, other: "FracSeries"):
        d = _lcm(self.denom, other.denom)
        return self.with_denom(d), other.with_denom(d)

    def __add__(self, other) -> "FracSeries":
        if isinstance(other, (int, Fraction)):
            other = FracSeries.from_terms({0: other}, self.truncation, self.denom)
        a, b = self._aligned(other)
        t = min(a.trunc, b.trunc)
        coeffs = dict(a.coeffs)
        for n, c in b.coeffs.items():
            coeffs[n] = coeffs.get(n, Fraction(0)) + c
        return FracSeries(a.denom, coeffs, t)

    __radd__ = __add__

    def __neg__(self) -> "FracSeries":
        return FracSeries(self.denom, {n: -c for n, c in self.coeffs.items()}, self.trunc)

    def __sub__(self, other) -> "FracSeries":
        return self + (-other if isinstance(other, FracSeries) else -Fraction(other))

    def __rsub__(self, other) -> "FracSeries":
        return (-self) + other

    def __mul__(self, other) -> "FracSeries":
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            return FracSeries(self.denom,
                              {n: c * v for n, v in self.coeffs.items()},
                              self.trunc)
        a, b = self._aligned(other)
        # Joint truncation: the product coefficient at e is known only when
        # every unknown tail term of one factor lands at or beyond e.
        va = min(a.coeffs) if a.coeffs else a.trunc
        vb = min(b.coeffs) if b.coeffs else b.trunc
        t = min(a.trunc + vb, b.trunc + va)
        coeffs: dict[int, Fraction] = {}
        for n, c in a.coeffs.items():
            for m, d in b.coeffs.items():
                e = n + m
                if e < t:
                    coeffs[e] = coeffs.get(e, Fraction(0)) + c * d
        return FracSeries(a.denom, coeffs, t)

    __rmul__ = __mul__

    def inverse(self) -> "FracSeries":
        """Multiplicative inverse (lowest known term must be nonzero)."""
        if not self.coeffs:
            raise DivisionByZeroSeries("series is zero to its truncation")
        v = min(self.coeffs)
        u0 = self.coeffs[v]
        rel_order = self.trunc - v  # relative precision of the unit part
        # u = sum_{k>=0} u_k q^(k/denom) with u_0 != 0; invert by recursion.
        u = {n - v: c for n, c in self.coeffs.items()}
        inv = {0: 1 / u0}
        for k in range(1, rel_order):
            s = Fraction(0)
            for j, c in u.items():
                if 0 < j <= k and (k - j) in inv:
                    s += c * inv[k - j]
            if s:
                inv[k] = -s / u0
        return FracSeries(self.denom,
                          {n - v: c for n, c in inv.items() if c},
                          rel_order - v)

    def __truediv__(self, other) -> "FracSeries":
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        a, b = self._aligned(other)
        return a * b.inverse()

    def __pow__(self, k: int) -> "FracSeries":
        if k < 0:
            return self.inverse() ** (-k)
        result = FracSeries.one(self.truncation, self.denom)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def qderiv(self) -> "FracSeries":
        """Apply q d/dq (multiplies the coefficient at q^e by e)."""
        return FracSeries(self.denom,
                          {n: c * Fraction(n, self.denom)
                           for n, c in self.coeffs.items()},
                          self.trunc)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        rows = [[n, self.denom, c.numerator, c.denominator]
                for n, c in sorted(self.coeffs.items())]
        return json.dumps({"denom": self.denom,
                           "trunc": [self.trunc, self.denom],
                           "coeffs": rows})

    @classmethod
    def from_json(cls, text: str) -> "FracSeries":
        data = json.loads(text)
        denom = data["denom"]
        coeffs = {n: Fraction(cn, cd) for n, d, cn, cd in data["coeffs"]}
        return cls(denom, coeffs, data["trunc"][0])


def series_mul(a: FracSeries, b: FracSeries) -> FracSeries:
    return a * b


def series_div(a: FracSeries, b: FracSeries) -> FracSeries:
    return a / b


# -- classical expansions --------------------------------------------------

def eta_expansion(scale: int, order: Rational) -> FracSeries:
    """q^(scale/24) * prod_{n>=1} (1 - q^(scale*n)), truncated at order."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    order = Fraction(order)
    if order <= Fraction(scale, 24):
        raise ValueError("order must exceed the leading exponent scale/24")
    # Integer-exponent Euler product, then shift by the q^(scale/24) prefactor.
    n_max = int(order) + 1
    prod = {0: 1}
    n = scale
    while n < n_max:
        new = dict(prod)
        for e, c in prod.items():
            if e + n < n_max:
                new[e + n] = new.get(e + n, 0) - c
        prod = {e: c for e, c in new.items() if c}
        n += scale
    shift = Fraction(scale, 24)
    return FracSeries.from_terms({e + shift: c for e, c in prod.items()}, order)


def _sigma_list(power: int, n_max: int) -> list:
    """sigma_power(n) for 1 <= n < n_max by sieving divisors."""
    sig = [0] * n_max
    for d in range(1, n_max):
        dp = d ** power
        for n in range(d, n_max, d):
            sig[n] += dp
    return sig


def eisenstein_e4(order: int) -> FracSeries:
    sig = _sigma_list(3, order)
    terms = {0: Fraction(1)}
    for n in range(1, order):
        terms[n] = Fraction(240 * sig[n])
    return FracSeries.from_terms(terms, order)


def eisenstein_e6(order: int) -> FracSeries:
    sig = _sigma_list(5, order)
    terms = {0: Fraction(1)}
    for n in range(1, order):
        terms[n] = Fraction(-504 * sig[n])
    return FracSeries.from_terms(terms, order)


def delta_j_expansions(order: int) -> tuple:
    """(Delta, j) to the given integer order; Delta = eta^24, j = E4^3/Delta."""
    if order < 2:
        raise ValueError("order must be at least 2")
    eta = eta_expansion(1, order + 2)
    delta = (eta ** 24).canonical()
    e4 = eisenstein_e4(order + 2)
    j = ((e4 ** 3) / delta).canonical()
    return delta.truncate(order), j.truncate(order)


# -- integer polynomials ---------------------------------------------------

class IPoly:
    """Dense integer polynomial, coefficients low-to-high."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[int]):
        cs = [int(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def from_roots_monic(cls, roots: Iterable[int]) -> "IPoly":
        p = cls([1])
        for r in roots:
            p = p * cls([-r, 1])
        return p

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs else -1

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> int:
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __eq__(self, other):
        return isinstance(other, IPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "IPoly(0)"
        terms = [f"{c}*x^{i}" for i, c in enumerate(self.coeffs) if c]
        return "IPoly(" + " + ".join(terms) + ")"

    def __add__(self, other: "IPoly") -> "IPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (n - len(self.coeffs))
        for i, c in enumerate(other.coeffs):
            a[i] += c
        return IPoly(a)

    def __neg__(self) -> "IPoly":
        return IPoly([-c for c in self.coeffs])

    def __sub__(self, other: "IPoly") -> "IPoly":
        return self + (-other)

    def __mul__(self, other) -> "IPoly":
        if isinstance(other, int):
            return IPoly([c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return IPoly([])
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return IPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "IPoly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        r, b = IPoly([1]), self
        while k:
            if k & 1:
                r = r * b
            k >>= 1
            if k:
                b = b * b
        return r

    def __call__(self, x):
        """Evaluate by Horner; x may be int, Fraction or mpmath number."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def content(self) -> int:
        g = 0
        for c in self.coeffs:
            g = gcd(g, abs(c))
        return g

    def derivative(self) -> "IPoly":
        return IPoly([i * c for i, c in enumerate(self.coeffs)][1:])


def _bareiss_det(m: list) -> int:
    """Exact determinant of a square integer matrix (Bareiss)."""
    n = len(m)
    if n == 0:
        return 1
    m = [row[:] for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * pivot - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def poly_resultant(p: IPoly, q: IPoly) -> int:
    """Res(p, q) = lc(p)^deg(q) * prod q(alpha) over roots alpha of p.

    Computed as the Sylvester determinant with exact integer arithmetic.
    """
    if p.is_zero():
        raise ValueError("resultant requires a nonzero first argument")
    dp, dq = p.degree, q.degree
    if q.is_zero():
        return 1 if dp == 0 else 0
    if dp == 0:
        return p.coeffs[0] ** dq
    if dq == 0:
        return q.coeffs[0] ** dp
    n = dp + dq
    rows = []
    pc = list(reversed(p.coeffs))
    qc = list(reversed(q.coeffs))
    for i in range(dq):
        rows.append([0] * i + pc + [0] * (n - dp - 1 - i))
    for i in range(dp):
        rows.append([0] * i + qc + [0] * (n - dq - 1 - i))
    return _bareiss_det(rows)


class RFunc:
    """Rational function assembled as a product of integer polynomials.

    Stored in factored form {IPoly: exponent}; ``num``/``den`` expand the
    positive and negative parts on demand (guarded, the factored form is
    what the verification pipeline consumes).
    """

    def __init__(self, factors: Mapping[IPoly, int]):
        self.factors = {p: e for p, e in factors.items() if e and not p.is_zero()}
        if any(p.is_zero() for p in factors):
            raise ZeroDivisionError("zero polynomial factor")

    def _expand(self, sign: int, max_degree: int = 4000) -> IPoly:
        out = IPoly([1])
        total = sum(p.degree * e * sign for p, e in self.factors.items()
                    if e * sign > 0)
        if total > max_degree:
            raise OverflowError(f"expansion degree {total} exceeds guard")
        for p, e in sorted(self.factors.items(), key=lambda t: t[0].coeffs):
            if e * sign > 0:
                out = out * p ** (e * sign)
        return out

    @property
    def num(self) -> IPoly:
        return self._expand(+1)

    @property
    def den(self) -> IPoly:
        return self._expand(-1)

    def __call__(self, x):
        acc = None
        for p, e in self.factors.items():
            v = p(x) if e > 0 else 1 / p(x)
            term = v ** abs(e)
            acc = term if acc is None else acc * term
        return acc if acc is not None else 1


# -- arbitrary-precision evaluation ----------------------------------------

class BigComplex:
    """Arbitrary-precision complex number with explicit bit precision."""

    __slots__ = ("re", "im", "precision")

    def __init__(self, re, im, precision: int):
        if precision < 64:
            raise ValueError("precision must be at least 64 bits")
        self.precision = precision
        with mpmath.workprec(precision):
            self.re = mpmath.mpf(re)
            self.im = mpmath.mpf(im)

    @classmethod
    def from_mpc(cls, z, precision: int) -> "BigComplex":
        return cls(z.real, z.imag, precision)

    def mpc(self):
        with mpmath.workprec(self.precision):
            return mpmath.mpc(self.re, self.im)

    def __add__(self, other: "BigComplex") -> "BigComplex":
        p = min(self.precision, other.precision)
        with mpmath.workprec(p):
            return BigComplex.from_mpc(self.mpc() + other.mpc(), p)

    def __mul__(self, other: "BigComplex") -> "BigComplex":
        p = min(self.precision, other.precision)
        with mpmath.workprec(p):
            return BigComplex.from_mpc(self.mpc() * other.mpc(), p)

    def __abs__(self):
        with mpmath.workprec(self.precision):
            return mpmath.sqrt(self.re ** 2 + self.im ** 2)

    def __repr__(self):
        return f"BigComplex({self.re}, {self.im}; {self.precision} bits)"


def evaluate_series(s: FracSeries, tau: BigComplex, precision: int,
                    tail_coeff_bound=None) -> BigComplex:
    """Evaluate sum c_e e(e*tau) at tau in the upper half-plane.

    ``tail_coeff_bound``: optional callable n -> bound on |c| at scaled
    exponent n, used for the rigorous tail estimate; defaults to a bound
    extrapolated from the stored coefficients.  Raises
    InsufficientConvergence when |q^(1/denom)| > 0.9 or the tail exceeds
    2^(-precision/2) relative to the leading term.
    """
    if tau.im <= 0:
        raise ValueError("tau must lie in the upper half-plane")
    work = precision + 32
    with mpmath.workprec(work):
        t = tau.mpc()
        w = mpmath.e ** (2j * mpmath.pi * t / s.denom)  # q^(1/denom)
        absw = abs(w)
        if absw > mpmath.mpf("0.9"):
            raise InsufficientConvergence(f"|q^(1/denom)| = {absw} > 0.9")
        total = mpmath.mpc(0)
        scale = mpmath.mpf(0)
        for n, c in sorted(s.coeffs.items()):
            term = mpmath.mpf(c.numerator) / c.denominator * w ** n
            total += term
            scale = max(scale, abs(term))
        # Tail bound: geometric estimate from the largest recent coefficient.
        if tail_coeff_bound is None:
            recent = [abs(c) for n, c in s.coeffs.items() if n >= s.trunc - 20 * s.denom]
            base = max(recent, default=Fraction(1))
            bound = mpmath.mpf(base.numerator) / base.denominator * 4
        else:
            bound = mpmath.mpf(tail_coeff_bound(s.trunc))
        tail = bound * absw ** s.trunc / (1 - absw)
        ok = tail <= mpmath.mpf(2) ** (-(precision // 2)) * max(scale, mpmath.mpf(1))
        if not ok:
            raise InsufficientConvergence(f"tail bound {tail} too large")
        return BigComplex.from_mpc(total, precision)
