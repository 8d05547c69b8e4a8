"""Weak Jacobi forms of even weight.

The Eichler-Zagier generators phi_{-2,1} and phi_{0,1} from theta
quotients, products, the theta decomposition into vector-valued forms
over Z/2m, and the seesaw pairing with the positive definite rank-one
theta series.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Dict, Tuple

from .fqmodule import FiniteQuadModule
from .qseries import FracSeries, eta_expansion
from .thetaseries import VVSeries


class JacobiForm:
    """Weak Jacobi form phi = sum c(n, r) q^n zeta^r of integer weight.

    Coefficients are stored keyed by (4nm - r^2, r mod 2m); by the elliptic
    transformation law c(n, r) depends only on that pair.  ``trunc`` bounds
    the known q-exponents: c(n, r) is available for all n < trunc.
    """

    def __init__(self, weight: int, index: int, data: Dict[Tuple[int, int], Fraction],
                 trunc: int):
        self.weight = weight
        self.index = index
        self.data = {k: Fraction(v) for k, v in data.items() if v}
        self.trunc = trunc

    @classmethod
    def from_raw(cls, weight: int, index: int,
                 raw: Dict[Tuple[int, int], Fraction], trunc: int) -> "JacobiForm":
        """Build from a raw {(n, r): c} table, checking the elliptic law."""
        m = index
        data: Dict[Tuple[int, int], Fraction] = {}
        for (n, r), c in raw.items():
            if n >= trunc or not c:
                continue
            key = (4 * n * m - r * r, r % (2 * m))
            if key in data and data[key] != c:
                raise ValueError(f"elliptic transformation law violated at {key}")
            data[key] = Fraction(c)
        return cls(weight, index, data, trunc)

    def c(self, n: int, r: int) -> Fraction:
        if n >= self.trunc:
            raise ValueError(f"coefficient at q^{n} beyond truncation")
        key = (4 * n * self.index - r * r, r % (2 * self.index))
        return self.data.get(key, Fraction(0))

    def min_disc(self) -> int:
        return min((d for d, _ in self.data), default=0)

    def raw_items(self):
        """Yield ((n, r), c) for all known n < trunc and all r."""
        m = self.index
        min_d = self.min_disc()
        for n in range(self.trunc):
            rmax = isqrt(max(4 * n * m - min_d, 0))
            for r in range(-rmax, rmax + 1):
                c = self.c(n, r)
                if c:
                    yield (n, r), c

    def q_row(self, n: int) -> Dict[int, Fraction]:
        """The Laurent polynomial in zeta at q^n."""
        m = self.index
        min_d = self.min_disc()
        rmax = isqrt(max(4 * n * m - min_d, 0))
        return {r: self.c(n, r) for r in range(-rmax, rmax + 1) if self.c(n, r)}

    def specialize_z0(self) -> FracSeries:
        """phi(tau, 0): substitute zeta = 1."""
        out: Dict[int, Fraction] = {}
        for (n, _), c in self.raw_items():
            out[n] = out.get(n, Fraction(0)) + c
        return FracSeries.from_terms(out, self.trunc)

    def __mul__(self, other: "JacobiForm") -> "JacobiForm":
        t = min(self.trunc, other.trunc)
        raw: Dict[Tuple[int, int], Fraction] = {}
        items_a = [(k, v) for k, v in self.raw_items() if k[0] < t]
        items_b = [(k, v) for k, v in other.raw_items() if k[0] < t]
        for (n1, r1), c1 in items_a:
            for (n2, r2), c2 in items_b:
                n = n1 + n2
                if n < t:
                    key = (n, r1 + r2)
                    raw[key] = raw.get(key, Fraction(0)) + c1 * c2
        return JacobiForm.from_raw(self.weight + other.weight,
                                   self.index + other.index, raw, t)

    def __pow__(self, k: int) -> "JacobiForm":
        if k < 1:
            raise ValueError("only positive powers of Jacobi forms are used")
        out = self
        for _ in range(k - 1):
            out = out * self
        return out


def jacobi_mul(a: JacobiForm, b: JacobiForm) -> JacobiForm:
    return a * b


# -- the generators ----------------------------------------------------------


def _theta_pair_square(order: int, signs: bool) -> Dict[Tuple[int, int], Fraction]:
    """(sum_n (+-1)^n q^((2n+1)^2/8) zeta^((2n+1)/2))^2 divided by q^(1/4).

    Returns raw {(n, r): c} with integer q-exponents n < order.
    """
    raw: Dict[Tuple[int, int], Fraction] = {}
    kmax = isqrt(8 * order) + 2
    for n1 in range(-kmax, kmax + 1):
        e1 = (2 * n1 + 1) ** 2
        for n2 in range(-kmax, kmax + 1):
            e2 = (2 * n2 + 1) ** 2
            num = e1 + e2 - 2  # 8*exponent after removing q^(1/4)
            if num % 8:
                raise AssertionError("odd-square sum parity")
            n = num // 8
            if n < order:
                r = n1 + n2 + 1
                c = (-1) ** (n1 + n2) if signs else 1
                key = (n, r)
                raw[key] = raw.get(key, Fraction(0)) + c
    return raw


def _theta_int_square(order: int, signs: bool, denom2: bool = True):
    """(sum_n (+-1)^n q^(n^2/2) zeta^n)^2 as raw {(2n_scaled, r)} in half steps."""
    raw: Dict[Tuple[int, int], Fraction] = {}
    kmax = isqrt(2 * order) + 2
    for n1 in range(-kmax, kmax + 1):
        for n2 in range(-kmax, kmax + 1):
            num = n1 * n1 + n2 * n2  # 2 * exponent
            if num < 2 * order:
                c = (-1) ** (n1 + n2) if signs else 1
                key = (num, n1 + n2)  # q-exponent scaled by 2
                raw[key] = raw.get(key, Fraction(0)) + c
    return raw


def _univariate_from_scaled(raw_scaled: Dict[int, Fraction], scale: int,
                            order: Fraction) -> FracSeries:
    return FracSeries.from_terms({Fraction(n, scale): c
                                  for n, c in raw_scaled.items()}, order)


def _quotient_rows(raw: Dict[Tuple[int, int], Fraction], scale: int,
                   order: int) -> Dict[Tuple[Fraction, int], Fraction]:
    """Divide a bivariate table (q-exponents nn/scale) by its zeta = 1 row sum.

    Returns {(exponent, r): c} with exponents in (1/scale)Z below order.
    """
    uni: Dict[int, Fraction] = {}
    for (nn, _), c in raw.items():
        uni[nn] = uni.get(nn, Fraction(0)) + c
    inv = _univariate_from_scaled(uni, scale, Fraction(order)).inverse()
    inv_terms = [(e, inv.coeff(e)) for e in inv.exponents()]
    out: Dict[Tuple[Fraction, int], Fraction] = {}
    for (nn, r), c in raw.items():
        for e, ic in inv_terms:
            tot = Fraction(nn, scale) + e
            if tot < order:
                key = (tot, r)
                out[key] = out.get(key, Fraction(0)) + c * ic
    return out


def _to_integer_rows(parts, trunc: int) -> Dict[Tuple[int, int], Fraction]:
    """Sum fractional-exponent tables; fractional rows must cancel."""
    acc: Dict[Tuple[Fraction, int], Fraction] = {}
    for part in parts:
        for key, c in part.items():
            acc[key] = acc.get(key, Fraction(0)) + c
    out: Dict[Tuple[int, int], Fraction] = {}
    for (e, r), c in acc.items():
        if not c:
            continue
        if e.denominator != 1:
            raise AssertionError(f"uncancelled fractional q-row at {e}")
        if e < trunc:
            out[(int(e), r)] = c
    return out


def phi_m2_1(order: int) -> JacobiForm:
    """The weight -2, index 1 generator; q^0 row is zeta - 2 + zeta^{-1}."""
    th1sq = _theta_pair_square(order + 1, signs=True)
    eta6 = eta_expansion(1, order + 2) ** 6
    unit = eta6.shift(Fraction(-1, 4))  # strip the q^(1/4) prefactor
    inv = unit.inverse()
    inv_terms = [(e, inv.coeff(e)) for e in inv.exponents()]
    out: Dict[Tuple[int, int], Fraction] = {}
    for (n, r), c in th1sq.items():
        for e, ic in inv_terms:
            tot = Fraction(n) + e
            if tot < order:
                if tot.denominator != 1:
                    raise AssertionError("non-integer exponent in phi_{-2,1}")
                key = (int(tot), r)
                out[key] = out.get(key, Fraction(0)) + c * ic
    return JacobiForm.from_raw(-2, 1, out, order)


def phi_0_1(order: int) -> JacobiForm:
    """The weight 0, index 1 generator; q^0 row is zeta + 10 + zeta^{-1}."""
    n = order + 2
    # scale-1 table (integer exponents after removing the common q^(1/4))
    part2 = _quotient_rows(_theta_pair_square(n, signs=False), 1, order)
    # theta3/theta4 parts live on half-integer exponents; they cancel in the sum
    part3 = _quotient_rows(_theta_int_square(n, signs=False), 2, order)
    part4 = _quotient_rows(_theta_int_square(n, signs=True), 2, order)
    rows = _to_integer_rows([part2, part3, part4], order)
    rows = {k: 4 * v for k, v in rows.items()}
    return JacobiForm.from_raw(0, 1, rows, order)


# -- theta decomposition and pairing ----------------------------------------


def theta_decomposition(phi: JacobiForm) -> VVSeries:
    """phi = sum_r h_r theta_r; returns (h_r)_r over Z/2m with Q = -x^2/4m."""
    m = phi.index
    module = FiniteQuadModule.cyclic(2 * m, Fraction(-1, 4 * m))
    comps: Dict[Tuple[int, ...], Dict[Fraction, Fraction]] = {}
    for (n, r), c in phi.raw_items():
        rbar = r % (2 * m)
        e = Fraction(n) - Fraction(r * r, 4 * m)
        slot = comps.setdefault((rbar,), {})
        if e in slot and slot[e] != c:
            raise ValueError("theta decomposition inconsistency")
        slot[e] = c
    components = {}
    for rbar in range(2 * m):
        rmin = min(rbar % (2 * m), (2 * m - rbar) % (2 * m))
        t = Fraction(phi.trunc) - Fraction(rmin * rmin, 4 * m)
        components[(rbar,)] = FracSeries.from_terms(comps.get((rbar,), {}), t,
                                                    denom=4 * m)
    return VVSeries(module, components)


def recompose(vv: VVSeries, index: int, trunc: int) -> JacobiForm:
    """Inverse of theta_decomposition (for round-trip checks)."""
    m = index
    raw: Dict[Tuple[int, int], Fraction] = {}
    for (rbar,), h in vv.components.items():
        for e in h.exponents():
            c = h.coeff(e)
            kmax = isqrt(4 * m * (trunc + m)) // (2 * m) + 2
            for k in range(-kmax, kmax + 1):
                r = rbar + 2 * m * k
                n = e + Fraction(r * r, 4 * m)
                if n.denominator == 1 and 0 <= n < trunc:
                    raw[(int(n), r)] = c
    return JacobiForm.from_raw(None, m, raw, trunc)


def theta_nminus(A: int, order: Fraction) -> VVSeries:
    """Theta series of the rank-one lattice with Q(x) = A x^2 (module Z/2A)."""
    module = FiniteQuadModule.cyclic(2 * A, Fraction(1, 4 * A))
    comps: Dict[Tuple[int, ...], Dict[Fraction, int]] = {(r,): {} for r in range(2 * A)}
    nmax = isqrt(int(4 * A * order)) + 1
    for n in range(-nmax, nmax + 1):
        e = Fraction(n * n, 4 * A)
        if e < order:
            slot = comps[(n % (2 * A),)]
            slot[e] = slot.get(e, 0) + 1
    return VVSeries(module, {k: FracSeries.from_terms(v, order, denom=4 * A)
                             for k, v in comps.items()})


def fg_pairing(A: int, j: int, order: int) -> FracSeries:
    """<F^j G^(A-j), Theta_{N^-}> as a q-series (12^A for j = 0, else 0)."""
    if not 0 <= j <= A:
        raise ValueError("need 0 <= j <= A")
    if A > 4:
        raise ValueError("pairing implemented for A <= 4 (desk scale)")
    F = phi_m2_1(order + A + 1)
    G = phi_0_1(order + A + 1)
    phi = None
    for _ in range(j):
        phi = F if phi is None else phi * F
    for _ in range(A - j):
        phi = G if phi is None else phi * G
    vv = theta_decomposition(phi)
    th = theta_nminus(A, Fraction(order + A + 1))
    total = None
    for r in range(2 * A):
        prod = vv.component((r,)) * th.component((r,))
        total = prod if total is None else total + prod
    return total.truncate(order)
