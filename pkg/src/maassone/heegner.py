"""Heegner divisors on X_0(23) and CM values of the Hauptmodul.

Points of Z(d/92, r) are roots of forms [A, B, C] with 23 | A and
B = r mod 46, one per SL_2(Z) class of discriminant -d (the
Gross-Kohnen-Zagier transport).  H_23 is evaluated at high precision
via theta_O/g at a Gamma_0(23)*-reduced representative, and the integer
polynomials P_d(x) = prod (x - H_23(z)) are recovered by certified
rounding with precision-doubling stability.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Dict, List, Optional, Tuple

import mpmath

from .qseries import IPoly
from .quadfield import QuadForm, reduced_primitive_forms, _ext_gcd
from .whforms23 import Level23


class TransportFailure(ArithmeticError):
    """The bounded search for a Gamma_0(23) representative exhausted."""


class StuckPoint(ArithmeticError):
    """No reduction move reaches the target |q| bound."""


class RoundingFailure(ArithmeticError):
    """Polynomial coefficients failed to round to integers."""


@dataclass
class CMContext:
    """Evaluation parameters for CM values of H_23."""

    precision: int = 256
    precision_cap: int = 4096
    series_order: int = 1400
    q_bound: float = 0.35
    cache_dir: Optional[str] = None
    double_self_paired: bool = False  # union semantics for Z(mu)+Z(-mu), mu = -mu


@dataclass(frozen=True)
class HeegnerPoint:
    """A CM point (-B + sqrt(-d))/(2A) with 23 | A, given by its form."""

    form: QuadForm
    scale: int = 1  # the point arises from scale * (primitive vector)

    @property
    def d(self) -> int:
        return -self.form.disc

    def tau(self, precision: int):
        with mpmath.workprec(precision):
            return mpmath.mpc(-self.form.b, mpmath.sqrt(self.d)) / (2 * self.form.a)

    def im_tau(self) -> float:
        return float(self.d) ** 0.5 / (2 * self.form.a)


def _gamma0_23_reduce(f: QuadForm) -> QuadForm:
    """Minimize A over the Gamma_0(23)*-orbit (T, lower-triangular, Fricke).

    Keeps 23 | A throughout; the result maximizes Im(tau) among the
    representatives reachable by the move set, which suffices for series
    evaluation (|q| < 0.84 in the worst case at this level).
    """
    a, b, c = f.a, f.b, f.c
    assert a % 23 == 0
    improved = True
    while improved:
        improved = False
        # T-normalize b into (-a, a]
        k = (a - b) // (2 * a)
        if k:
            b2 = b + 2 * k * a
            c = (b2 * b2 - f.disc) // (4 * a)
            b = b2
        # Fricke flip [A, B, C] -> [23C, -B, A/23]
        if 23 * c < a:
            a, b, c = 23 * c, -b, a // 23
            improved = True
            continue
        # lower-triangular moves [[1, 0], [23j, 1]]
        for j in (-2, -1, 1, 2):
            a2 = a + b * 23 * j + c * 529 * j * j
            if 0 < a2 < a and a2 % 23 == 0:
                b2 = b + 46 * j * c
                a, b, c = a2, b2, (b2 * b2 - f.disc) // (4 * a2)
                improved = True
                break
    # final T-normalization
    k = (a - b) // (2 * a)
    if k:
        b = b + 2 * k * a
        c = (b * b - f.disc) // (4 * a)
    return QuadForm(a, b, c)


def transport_to_level(F: QuadForm, r: int, search_bound: int = 8) -> QuadForm:
    """A Gamma_0(23)-representative of the SL_2(Z)-class of F with 23 | A
    and B = r mod 46 (unique per class; GKZ).
    """
    d = -F.disc
    if (r * r + d) % 92:
        raise ValueError(f"r^2 != -d mod 92 for r={r}, d={d}")
    lines = []
    for x in range(23):
        if F.value(x, 1) % 23 == 0:
            lines.append((x, 1))
    if F.a % 23 == 0:
        lines.append((1, 0))
    bound = search_bound
    while bound <= 64 * search_bound:
        for (x0, y0) in lines:
            for i in range(bound):
                for sign in ((1,) if i == 0 else (1, -1)):
                    p, s = x0 + sign * i * 23, y0
                    if p == 0 and s == 0:
                        continue
                    g = gcd(p, s)
                    if abs(g) != 1:
                        continue
                    gg, u, v = _ext_gcd(p, s)  # u p + v s = 1
                    cand = F.transform(p, -v, s, u)
                    if cand.a % 23 == 0 and (cand.b - r) % 46 == 0:
                        return _gamma0_23_reduce(cand)
        bound *= 2
    raise TransportFailure(f"no level representative for {F} at r = {r}")


def enumerate_points(d: int, r: int) -> List[HeegnerPoint]:
    """One Gamma_0(23)-class representative per SL_2(Z)-class of primitive
    forms of discriminant -d, with B = r mod 46 (a single residue class)."""
    reps = reduced_primitive_forms(-d)
    points = [HeegnerPoint(transport_to_level(F, r)) for F in reps]
    if len(points) != len(reps):
        raise TransportFailure(f"count mismatch at d={d}, r={r}")
    return points


def residue_pair(d: int) -> Tuple[int, ...]:
    """The residues {r, -r} mod 46 with r^2 = -d mod 92, if any."""
    rs = sorted({r for r in range(46) if (r * r + d) % 92 == 0})
    out = []
    for r in rs:
        if (46 - r) % 46 not in out:
            out.append(r)
    return tuple(sorted({r % 46 for r in rs}))


@dataclass
class HeegnerDivisor:
    """Points of Z(d/92, r) + Z(d/92, -r) on X_0(23), union semantics.

    ``residues`` is {r, -r} mod 46; when r = -r the point set is the single
    residue class (counted once unless the context's double_self_paired
    convention is enabled).
    """

    d: int
    residues: Tuple[int, ...]
    points: List[HeegnerPoint]

    @property
    def self_paired(self) -> bool:
        return len(set(self.residues)) == 1


def heegner_divisor(d: int, r: int) -> HeegnerDivisor:
    r %= 46
    rneg = (-r) % 46
    if (r * r + d) % 92:
        raise ValueError(f"r^2 != -d mod 92 (d={d}, r={r})")
    pts = enumerate_points(d, r)
    if rneg != r:
        pts = pts + enumerate_points(d, rneg)
    return HeegnerDivisor(d, (r, rneg), pts)


class CMEvaluator:
    """High-precision evaluation of H_23 = theta_O/g - 3 at CM points.

    Series coefficients are exact integers with divisor-bound tails, so
    the truncation error is rigorously controlled; correctness is further
    pinned by precision-doubling stability in the polynomial rounding.
    """

    def __init__(self, ctx23: Level23, cm: CMContext):
        self.ctx23 = ctx23
        self.cm = cm
        self._series: Dict[int, Tuple[list, list]] = {}
        self._value_cache: Dict[Tuple[QuadForm, int], "mpmath.mpc"] = {}

    def _series_arrays(self, order: int) -> Tuple[list, list]:
        key = order
        if key not in self._series:
            from .thetaseries import theta_ideal
            th = theta_ideal(self.ctx23.cls_principal, order)
            ta = theta_ideal(self.ctx23.cls_a, order)
            gs = (th - ta) * Fraction(1, 2)
            theta_c = [0] * order
            for n, c in th.coeffs.items():
                theta_c[n] = int(c)
            g_c = [0] * order
            for n, c in gs.coeffs.items():
                g_c[n] = int(c)
            self._series[key] = (theta_c, g_c)
        return self._series[key]

    def order_for(self, im_tau: float, precision: int) -> int:
        need = int((precision + 48) * 0.6931 / (6.2832 * im_tau)) + 48
        return min(max(need, 300), self.cm.series_order * 8)

    def eval_h23(self, point: HeegnerPoint, precision: Optional[int] = None):
        """H_23 at the (already reduced) point, to the requested precision."""
        prec = precision or self.cm.precision
        key = (point.form, prec)
        if key in self._value_cache:
            return self._value_cache[key]
        im = point.im_tau()
        order = self.order_for(im, prec)
        theta_c, g_c = self._series_arrays(order)
        with mpmath.workprec(prec + 64):
            tau = point.tau(prec + 64)
            q = mpmath.e ** (2j * mpmath.pi * tau)
            if abs(q) > 0.9:
                raise StuckPoint(f"|q| = {abs(q)} at {point.form}")
            qp = mpmath.mpc(1)
            th = mpmath.mpc(0)
            gv = mpmath.mpc(0)
            for n in range(order):
                if theta_c[n]:
                    th += theta_c[n] * qp
                if g_c[n]:
                    gv += g_c[n] * qp
                qp *= q
            val = th / gv - 3
        self._value_cache[key] = val
        return val

    def polynomial(self, points: List[HeegnerPoint], precision: Optional[int] = None,
                   tol_exp: int = -10) -> IPoly:
        """prod (x - H(z)) over the points, rounded to integers.

        Raises RoundingFailure if any coefficient is farther than 10^tol_exp
        from an integer; the caller escalates precision.
        """
        prec = precision or self.cm.precision
        with mpmath.workprec(prec + 64):
            coeffs = [mpmath.mpc(1)]
            for pt in points:
                v = self.eval_h23(pt, prec)
                new = [mpmath.mpc(0)] * (len(coeffs) + 1)
                for i, c in enumerate(coeffs):
                    new[i + 1] += c
                    new[i] -= c * v
                coeffs = new
            out = []
            tol = mpmath.mpf(10) ** tol_exp
            for c in coeffs:
                r = mpmath.nint(c.real)
                if abs(c.real - r) > tol or abs(c.imag) > tol:
                    raise RoundingFailure(
                        f"coefficient {c} is {abs(c.real - r)} from an integer")
                out.append(int(r))
        return IPoly(out)


class HeegnerCache:
    """P_d polynomials with certified rounding and on-disk caching."""

    def __init__(self, evaluator: CMEvaluator):
        self.ev = evaluator
        self._divisors: Dict[Tuple[int, int], HeegnerDivisor] = {}
        self._polys: Dict[Tuple[int, Tuple[int, ...], bool], IPoly] = {}

    def divisor(self, d: int, r: int) -> HeegnerDivisor:
        key = (d, r % 46)
        if key not in self._divisors:
            self._divisors[key] = heegner_divisor(d, r)
        return self._divisors[key]

    def _cache_path(self, d: int, residues, convention: bool) -> Optional[str]:
        cd = self.ev.cm.cache_dir
        if cd is None:
            return None
        res = "-".join(map(str, residues))
        return os.path.join(cd, f"pd_{d}_r{res}_{'dbl' if convention else 'sgl'}"
                                f"_p{self.ev.cm.precision}.json")

    def polynomial(self, d: int, r: int) -> IPoly:
        """P_d over Z(d/92, r) + Z(d/92, -r): primitive-vector points only.

        Imprimitive contributions are handled by the caller through the
        descendant expansion (see verify.assemble_exponents).
        """
        div = self.divisor(d, r)
        key = (d, div.residues, self.ev.cm.double_self_paired)
        if key in self._polys:
            return self._polys[key]
        path = self._cache_path(d, div.residues, self.ev.cm.double_self_paired)
        if path and os.path.exists(path):
            with open(path) as fh:
                poly = IPoly(json.load(fh)["coeffs"])
            self._polys[key] = poly
            return poly
        points = list(div.points)
        if div.self_paired and self.ev.cm.double_self_paired:
            points = points + points
        prec = self.ev.cm.precision
        poly = None
        while prec <= self.ev.cm.precision_cap:
            try:
                poly = self.ev.polynomial(points, prec)
                # stability under precision doubling certifies the rounding
                poly2 = self.ev.polynomial(points, prec * 2)
                if poly == poly2:
                    break
                poly = None
            except RoundingFailure:
                poly = None
            prec *= 2
        if poly is None:
            raise RoundingFailure(f"P_{d} did not stabilize below the cap")
        self._polys[key] = poly
        if path:
            os.makedirs(self.ev.cm.cache_dir, exist_ok=True)
            with open(path, "w") as fh:
                json.dump({"d": d, "residues": list(div.residues),
                           "convention": self.ev.cm.double_self_paired,
                           "precision": prec, "coeffs": list(poly.coeffs)}, fh)
        return poly


def minpoly_cm(cache: HeegnerCache) -> Tuple[IPoly, list]:
    """The cubic of H_23 over the three discriminant -23 Heegner points.

    Returns (monic integer cubic, [real root value, conjugate pair values]);
    the real root is the value at z_23 = (-23 + sqrt(-23))/46 (the Fricke
    flip of the canonical CM point attached to the principal form).
    """
    div = cache.divisor(23, 23)
    poly = cache.polynomial(23, 23)
    prec = cache.ev.cm.precision
    with mpmath.workprec(prec + 64):
        vals = [cache.ev.eval_h23(pt, prec) for pt in div.points]
        reals = [v for v in vals if abs(v.imag) < mpmath.mpf(2) ** (-prec // 4)]
        if len(reals) != 1:
            raise RoundingFailure("expected exactly one real CM value at d=23")
        others = [v for v in vals if v not in reals]
        if abs(others[0].conjugate() - others[1]) > mpmath.mpf(2) ** (-prec // 4):
            raise RoundingFailure("non-real d=23 values are not conjugate")
    return poly, [reals[0], others[0], others[1]]
