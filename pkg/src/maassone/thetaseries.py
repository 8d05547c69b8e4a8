"""Theta series of ideal classes and the genus Eisenstein series.

Scalar theta series by lattice-point enumeration over the reduced form,
their vector-valued refinements over the discriminant module Z/|D|, the
normalized genus Eisenstein series, the Siegel-Weil identity check, and
plus/minus space support tests.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Dict, Tuple

from .fqmodule import FiniteQuadModule
from .qseries import FracSeries
from .quadfield import (ClassGroup, IdealClass, QuadForm, genus_of, genus_rho,
                        kronecker_chi, square_classes)


class VVSeries:
    """Vector-valued q-series: one FracSeries per module element."""

    def __init__(self, module: FiniteQuadModule,
                 components: Dict[Tuple[int, ...], FracSeries]):
        self.module = module
        self.components = {module.reduce(mu): s for mu, s in components.items()}

    def component(self, mu) -> FracSeries:
        mu = self.module.reduce(mu if isinstance(mu, tuple) else (mu,))
        if mu in self.components:
            return self.components[mu]
        denom = 1
        trunc = min((s.truncation for s in self.components.values()),
                    default=Fraction(0))
        return FracSeries.from_terms({}, trunc, denom)

    def collapse(self, rescale: int) -> FracSeries:
        """Sum all components and multiply every exponent by ``rescale``."""
        total = None
        for s in self.components.values():
            total = s if total is None else total + s
        if total is None:
            raise ValueError("empty vector-valued series")
        return total.scale_exponents_by(rescale)

    def to_json(self) -> str:
        import json
        return json.dumps({
            "orders": list(self.module.orders),
            "components": {",".join(map(str, mu)): s.to_json()
                           for mu, s in sorted(self.components.items())},
        })


def _form_for_class(C: IdealClass) -> QuadForm:
    """Reduced representative with gcd(a, D) = 1 (needed for the vv layout)."""
    f = C.form
    D = C.group.D
    if _coprime(f.a, D):
        return f
    for x in range(-6, 7):
        for y in range(-6, 7):
            v = f.value(x, y)
            if v > 0 and _coprime(v, D):
                from .quadfield import _ext_gcd
                g, q, s = _ext_gcd(x, y)
                if g == 1:
                    return f.transform(x, -s, y, q)
    raise ArithmeticError("no representative coprime to D in range")


def _coprime(a: int, b: int) -> bool:
    from math import gcd
    return gcd(a, abs(b)) == 1


def theta_ideal(C: IdealClass, order: int) -> FracSeries:
    """theta_a(tau) = sum over x in the ideal of q^(N(x)/N(a)).

    Computed as the representation counts of the reduced form of the class;
    the constant term is 1 (x = 0).
    """
    f = C.form
    a, b, c = f.a, f.b, f.c
    counts = {0: 1}
    # a u^2 + b uv + c v^2 < order; |v| <= sqrt(4 a order / |D|)
    D = f.disc
    vmax = isqrt(4 * a * order // (-D)) + 1
    for v in range(-vmax, vmax + 1):
        # solve a u^2 + b u v + (c v^2 - n) over u: bound via discriminant
        # (2au + bv)^2 = 4 a n + (b^2 - 4ac) v^2 <= 4 a order
        lo = (-b * v - isqrt(4 * a * order)) // (2 * a) - 1
        hi = (-b * v + isqrt(4 * a * order)) // (2 * a) + 1
        for u in range(lo, hi + 1):
            if u == 0 and v == 0:
                continue
            n = f.value(u, v)
            if 0 < n < order:
                counts[n] = counts.get(n, 0) + 1
    return FracSeries.from_terms(counts, order)


def theta_vector(C: IdealClass, order) -> VVSeries:
    """Vector-valued theta of the ideal lattice (a, N(x)/N(a)).

    Components over mu in d^{-1}a/a = Z/|D| (generated by a/sqrt(D));
    exponents lie in (1/|D|)Z.  Summing all components and substituting
    q -> q^|D| recovers theta_ideal.
    """
    group = C.group
    D = group.D
    absD = -D
    f = _form_for_class(C)
    a, b = f.a, f.b
    order = Fraction(order)
    module = FiniteQuadModule.cyclic(absD, Fraction(a, absD))
    # x = s*a/sqrt(D) + u*a + v*(b+sqrt(D))/2; with T = 2ua + vb and
    # V = v|D| - 2sa, the exponent is N(x)/a = (|D| T^2 + V^2) / (4a|D|),
    # T = vb mod 2a and V = -2sa mod |D|.
    bound4 = 4 * a * absD * order  # compare |D|T^2 + V^2 < bound4 exactly
    vmax = isqrt(int(bound4)) + 1
    components = {}
    for s in range(absD):
        entries: Dict[Fraction, int] = {}
        V0 = (-2 * s * a) % absD
        for V in range(V0 - (vmax // absD + 1) * absD, vmax + absD, absD):
            if V * V >= bound4:
                continue
            v = (V + 2 * s * a) // absD
            tmax = isqrt(int((bound4 - V * V) / absD)) + 1
            T0 = (v * b) % (2 * a)
            for T in range(T0 - (tmax // (2 * a) + 1) * 2 * a, tmax + 2 * a, 2 * a):
                val = absD * T * T + V * V
                if val < bound4:
                    e = Fraction(val, 4 * a * absD)
                    entries[e] = entries.get(e, 0) + 1
        components[(s,)] = FracSeries.from_terms(entries, order, denom=absD)
    return VVSeries(module, components)


def genus_eisenstein(D: int, order: int, genus=None) -> FracSeries:
    """E_A(tau) = 1 + (w/h) sum_n rho_A(n) q^n for the genus A."""
    group = ClassGroup(D)
    if genus is None:
        genus = [IdealClass(group, i) for i in genus_of(group, group.principal)]
    terms = {0: Fraction(1)}
    w, h = group.w, group.h
    for n in range(1, order):
        r = genus_rho(n, genus)
        if r:
            terms[n] = Fraction(w * r, h)
    return FracSeries.from_terms(terms, order)


def siegel_weil_check(D: int, order: int) -> bool:
    """sum over b of theta_{a b^2} = h_k * E_A, exactly to the given order."""
    group = ClassGroup(D)
    for base in group.classes():
        total = None
        for b in group.classes():
            t = theta_ideal(base * b * b, order)
            total = t if total is None else total + t
        genus = [IdealClass(group, i) for i in genus_of(group, base)]
        E = genus_eisenstein(D, order, genus)
        if not total.eq_to_order(E * group.h, order):
            return False
    return True


def plus_space_check(s: FracSeries, D: int, parity: str = "plus") -> bool:
    """True iff the support avoids chi_D(n) = -1 (plus) resp. +1 (minus)."""
    bad = -1 if parity == "plus" else 1
    if s.denom != 1:
        raise ValueError("support check requires integer exponents")
    for n, c in s.coeffs.items():
        if c and kronecker_chi(D, n) == bad:
            return False
    return True
