"""Imaginary quadratic fields via binary quadratic forms.

Class groups of fundamental discriminants D < 0 with Gauss composition,
the Kronecker character chi_D, and the ideal counting functions
rho(n, C) (ideals of norm n in a fixed class) and rho_A(n) (per genus).

An integral ideal (a, (b+sqrt(D))/2) is identified with the form class
of [a, b, (b^2-D)/(4a)] throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt


def kronecker_chi(D: int, n: int) -> int:
    """Kronecker symbol (D/n), completely multiplicative in n."""
    return kronecker(D, n)


def kronecker(a: int, n: int) -> int:
    if n == 0:
        return 1 if a in (1, -1) else 0
    if n < 0:
        return (-1 if a < 0 else 1) * kronecker(a, -n)
    result = 1
    # factor out twos of n: (a/2) = 0 if a even, else (-1)^((a^2-1)/8)
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            result = -result
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_fundamental(D: int) -> bool:
    """True iff D < 0 is a fundamental discriminant."""
    if D >= 0:
        return False
    if D % 4 == 1:
        return _squarefree(-D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(-m)
    return False


def _squarefree(n: int) -> bool:
    if n % 4 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class QuadForm:
    """Positive definite integral binary quadratic form a x^2 + b xy + c y^2."""

    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __post_init__(self):
        if self.a <= 0 or self.disc >= 0:
            raise ValueError(f"form {(self.a, self.b, self.c)} is not positive definite")

    def value(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def conjugate(self) -> "QuadForm":
        return QuadForm(self.a, -self.b, self.c)

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (-a < b <= a <= c):
            return False
        return b >= 0 if a == c else True

    def reduced(self) -> "QuadForm":
        return reduce_form(self)

    def transform(self, p: int, q: int, r: int, s: int) -> "QuadForm":
        """Right action of [[p, q], [r, s]] in SL2(Z)."""
        if p * s - q * r != 1:
            raise ValueError("matrix is not unimodular")
        a, b, c = self.a, self.b, self.c
        a2 = a * p * p + b * p * r + c * r * r
        c2 = a * q * q + b * q * s + c * s * s
        b2 = 2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s
        return QuadForm(a2, b2, c2)


def reduce_form(f: QuadForm) -> QuadForm:
    """Gauss reduction to the unique reduced representative."""
    a, b, c = f.a, f.b, f.c
    while True:
        if c < a or (c == a and b < 0):
            a, b, c = c, -b, a
        if -a < b <= a:
            if a == c and b < 0:
                b = -b
            return QuadForm(a, b, c)
        # normalize b into (-a, a]
        k = (a - b) // (2 * a)
        b2 = b + 2 * k * a
        c2 = (b2 * b2 - f.disc) // (4 * a)
        b, c = b2, c2


def _coprime_representative(f: QuadForm, n: int) -> QuadForm:
    """An SL2(Z)-equivalent form whose leading coefficient is coprime to n."""
    if gcd(f.a, n) == 1:
        return f
    bound = 1
    while bound < 64:
        for x in range(-bound, bound + 1):
            for y in range(-bound, bound + 1):
                if gcd(x, y) != 1:
                    continue
                v = f.value(x, y)
                if v > 0 and gcd(v, n) == 1:
                    g, q, s = _ext_gcd(x, y)  # q*x + s*y = 1
                    return f.transform(x, -s, y, q)  # det = x*q + s*y = 1
        bound *= 2
    raise ArithmeticError("no representative coprime to n found")


def _ext_gcd(a: int, b: int):
    """(g, u, v) with u*a + v*b = g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _compose_raw(f1: QuadForm, f2: QuadForm) -> QuadForm:
    """Gauss composition via concordant representatives, then reduce."""
    D = f1.disc
    if f2.disc != D:
        raise ValueError("forms must share a discriminant")
    f2 = _coprime_representative(f2, f1.a)
    a1, b1 = f1.a, f1.b
    a2, b2 = f2.a, f2.b
    # B = b1 mod 2a1 and B = b2 mod 2a2; both b's share the parity of D.
    g, u, v = _ext_gcd(2 * a1, 2 * a2)
    assert (b2 - b1) % g == 0
    lcm = 2 * a1 * a2 * 2 // g
    B = (b1 + (b2 - b1) // g * u * 2 * a1) % lcm
    A = a1 * a2
    assert (B * B - D) % (4 * A) == 0
    return reduce_form(QuadForm(A, B, (B * B - D) // (4 * A)))


class ClassGroup:
    """Form class group of a fundamental discriminant D < 0."""

    def __init__(self, D: int):
        if not is_fundamental(D):
            raise ValueError(f"{D} is not a negative fundamental discriminant")
        self.D = D
        self.reduced_forms = self._enumerate()
        self.h = len(self.reduced_forms)
        self.w = 6 if D == -3 else (4 if D == -4 else 2)
        self._index = {f: i for i, f in enumerate(self.reduced_forms)}
        self.composition = [[self._compose_idx(i, j) for j in range(self.h)]
                            for i in range(self.h)]
        self.inverse = [self._index[reduce_form(f.conjugate())]
                        for f in self.reduced_forms]

    # h_k / w_k aliases matching the usual notation
    @property
    def h_k(self) -> int:
        return self.h

    @property
    def w_k(self) -> int:
        return self.w

    def _enumerate(self):
        D = self.D
        forms = []
        a_max = isqrt(-D // 3)
        for a in range(1, a_max + 1):
            for b in range(-a + 1, a + 1):
                if (b * b - D) % (4 * a):
                    continue
                c = (b * b - D) // (4 * a)
                if c < a:
                    continue
                if a == c and b < 0:
                    continue
                if gcd(gcd(a, b), c) != 1:
                    continue
                forms.append(QuadForm(a, b, c))
        forms.sort(key=lambda f: (f.a, f.b))
        return forms

    def _compose_idx(self, i: int, j: int) -> int:
        f = _compose_raw(self.reduced_forms[i], self.reduced_forms[j])
        return self._index[f]

    @property
    def principal(self) -> "IdealClass":
        one = reduce_form(QuadForm(1, self.D % 2, (self.D % 2 - self.D) // 4))
        return IdealClass(self, self._index[one])

    def class_of_form(self, f: QuadForm) -> "IdealClass":
        return IdealClass(self, self._index[reduce_form(f)])

    def classes(self):
        return [IdealClass(self, i) for i in range(self.h)]

    def to_json(self) -> str:
        return json.dumps({
            "D": self.D,
            "forms": [[f.a, f.b, f.c] for f in self.reduced_forms],
            "composition": [[i, j, self.composition[i][j]]
                            for i in range(self.h) for j in range(self.h)],
        })


@dataclass(frozen=True)
class IdealClass:
    """An element of a ClassGroup, referenced by index."""

    group: ClassGroup
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.group.h:
            raise ValueError("class index out of range")

    @property
    def form(self) -> QuadForm:
        return self.group.reduced_forms[self.index]

    def __mul__(self, other: "IdealClass") -> "IdealClass":
        if other.group is not self.group:
            raise ValueError("classes from different groups")
        return IdealClass(self.group, self.group.composition[self.index][other.index])

    def __invert__(self) -> "IdealClass":
        return IdealClass(self.group, self.group.inverse[self.index])

    def __pow__(self, k: int) -> "IdealClass":
        if k < 0:
            return (~self) ** (-k)
        out = self.group.principal
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def is_principal(self) -> bool:
        return self == self.group.principal


def artin_translate(C: IdealClass, target: IdealClass) -> IdealClass:
    """Translation by ``target`` in Cl_k (the Artin-label move)."""
    return C * target


def class_group(D: int) -> ClassGroup:
    return ClassGroup(D)


# -- ideal counting ---------------------------------------------------------

def _prime_class(group: ClassGroup, p: int) -> IdealClass:
    """Class of a fixed prime ideal above a non-inert prime p.

    For split p the ideal (p, (b+sqrt(D))/2) with b^2 = D mod 4p and
    0 < b < 2p; for ramified p the ideal with b = p.
    """
    D = group.D
    chi = kronecker(D, p)
    if chi == -1:
        raise ValueError(f"{p} is inert")
    if chi == 0:
        b = p
    else:
        b = next(bb for bb in range(2 * p)
                 if (bb * bb - D) % (4 * p) == 0)
    c = (b * b - D) // (4 * p)
    return group.class_of_form(QuadForm(p, b, c))


def _factorize(n: int):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def ideal_classes_of_norm(group: ClassGroup, n: int):
    """Multiset of ideal classes over all integral ideals of norm n."""
    if n <= 0:
        raise ValueError("norm must be a positive integer")
    D = group.D
    results = [group.principal]
    for p, e in _factorize(n):
        chi = kronecker(D, p)
        choices = []
        if chi == 1:
            pc = _prime_class(group, p)
            # p^i * pbar^(e-i): class pc^i * pc^-(e-i)
            for i in range(e + 1):
                choices.append(pc ** (2 * i - e))
        elif chi == -1:
            if e % 2:
                return []
            choices.append(group.principal)
        else:
            choices.append(_prime_class(group, p) ** e)
        results = [r * c for r in results for c in choices]
    return results


def count_ideals_in_class(n: int, C: IdealClass) -> int:
    """rho(n, C): integral ideals of O_k of norm n in the class C."""
    return sum(1 for cl in ideal_classes_of_norm(C.group, int(n)) if cl == C)


def total_ideal_count(group: ClassGroup, n: int) -> int:
    """r(n) = sum over d | n of chi_D(d); oracle for sum_C rho(n, C)."""
    total = 0
    for d in range(1, n + 1):
        if n % d == 0:
            total += kronecker(group.D, d)
    return total


def reduced_primitive_forms(disc: int):
    """All reduced primitive positive definite forms of discriminant disc.

    Works for any negative discriminant (0 or 1 mod 4), fundamental or not;
    the count is the class number h(disc) of the corresponding order.
    """
    if disc >= 0 or disc % 4 not in (0, 1):
        raise ValueError(f"{disc} is not a negative discriminant")
    forms = []
    a_max = isqrt(-disc // 3)
    for a in range(1, a_max + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - disc) % (4 * a):
                continue
            c = (b * b - disc) // (4 * a)
            if c < a or (a == c and b < 0):
                continue
            if gcd(gcd(a, b), c) != 1:
                continue
            forms.append(QuadForm(a, b, c))
    forms.sort(key=lambda f: (f.a, f.b))
    return forms


def square_classes(group: ClassGroup):
    """The subgroup Cl^2 of squares."""
    seen = {}
    for C in group.classes():
        seen[(C * C).index] = C * C
    return sorted(seen.values(), key=lambda c: c.index)


def genus_of(group: ClassGroup, C: IdealClass):
    """The genus (coset of Cl^2) containing C."""
    return sorted({(C * S).index for S in square_classes(group)})


def genus_rho(n: int, genus) -> int:
    """rho_A(n) = number of integral ideals of norm n in the genus A."""
    genus = list(genus)
    if not genus:
        raise ValueError("empty genus")
    group = genus[0].group
    members = {C.index for C in genus}
    return sum(1 for cl in ideal_classes_of_norm(group, int(n))
               if cl.index in members)
