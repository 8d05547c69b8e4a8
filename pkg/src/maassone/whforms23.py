"""Level-23 weakly holomorphic weight-one forms.

The Hauptmodul H_23 = theta_O/g - 2 of the Fricke quotient of X_0(23),
the plus-space forms f_m = q^{-m} + O(q^2), the minus-space forms
f_2, f_3, f_4, the j(23 tau) ladder for large pole orders, the duality
relations between the two families, and the principal part of the
tensor F_m = f_m (x) phi_{0,1} used by the Borcherds-product pipeline.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .jacobiforms import JacobiForm, phi_0_1, phi_m2_1, theta_decomposition
from .qseries import FracSeries, delta_j_expansions, eta_expansion
from .quadfield import ClassGroup, QuadForm, kronecker_chi
from .thetaseries import genus_eisenstein, plus_space_check, theta_ideal

D23 = -23


class SolveFailure(ArithmeticError):
    """The spanning set does not contain a form with the requested data."""


def valid_plus_index(m: int) -> bool:
    """Pole orders m with chi_{-23}(m) != 1 admit a plus-space f_m."""
    return kronecker_chi(D23, m) != 1


def sqrt_class_mod23(n: int) -> Optional[int]:
    """A residue s mod 23 with s^2 = n mod 23, if one exists."""
    n %= 23
    for s in range(12):
        if (s * s - n) % 23 == 0:
            return s
    return None


@dataclass(frozen=True)
class WHForm:
    """A weakly holomorphic weight-one form at level 23 (scalar model)."""

    series: FracSeries
    parity: str            # "plus" or "minus"
    pole_order: int
    weight: int = 1

    def coeff(self, n: int) -> Fraction:
        return self.series.coeff(n)


class Level23:
    """Shared exact series data for the level-23 pipeline.

    All series are computed once to a common order and reused; f_m forms
    are cached by (m, parity) and optionally persisted as JSON.
    """

    def __init__(self, order: int = 140, cache_dir: Optional[str] = None):
        self.order = order
        self.cache_dir = cache_dir
        self.group = ClassGroup(D23)
        self.cls_principal = self.group.class_of_form(QuadForm(1, 1, 6))
        self.cls_a = self.group.class_of_form(QuadForm(2, 1, 3))
        self.theta_O = theta_ideal(self.cls_principal, order)
        self.theta_a = theta_ideal(self.cls_a, order)
        self.g = (self.theta_O - self.theta_a) * Fraction(1, 2)
        self.E = genus_eisenstein(D23, order)
        # Normalized so that the constant term vanishes, matching the
        # printed expansion q^-1 + 4q + 7q^2 + ...; theta_O/g has constant
        # term 3, so this is theta_O/g - 3.
        self.H = self.theta_O / self.g - 3
        self._h_powers = [FracSeries.one(self.H.truncation)]
        self._j23: Optional[FracSeries] = None
        self._forms: Dict[Tuple[int, str], WHForm] = {}
        self._w1_basis: Optional[List[FracSeries]] = None

    def h_power(self, k: int) -> FracSeries:
        while len(self._h_powers) <= k:
            self._h_powers.append(self._h_powers[-1] * self.H)
        return self._h_powers[k]

    @property
    def j23(self) -> FracSeries:
        if self._j23 is None:
            _, j = delta_j_expansions(self.order // 23 + 3)
            self._j23 = j.scale_exponents_by(23)
        return self._j23

    def weight1_basis(self) -> List[FracSeries]:
        """Echelonized basis of weight-13 forms divided by Delta(23 tau).

        M_13(Gamma_0(23), chi) is spanned by theta_O, theta_a times
        weight-12 monomials in theta products and level-one Eisenstein
        blocks at tau and 23 tau; dividing by Delta(23 tau) gives weakly
        holomorphic weight-one forms with a pole of order at most 23 and
        the cusp-0 behavior of the vector-valued forms.  This is the
        solver's search space for both the plus and the minus family.
        """
        if self._w1_basis is None:
            window = self.order - 26
            monomials = _weight12_monomials(self.theta_O, self.theta_a,
                                            self.order + 26)
            d23_inv = _delta23_inverse(self.order + 26)
            basis: List[FracSeries] = []
            for b in monomials:
                for a in (self.theta_O, self.theta_a):
                    series = a * b * d23_inv
                    _echelon_insert(basis, series, window)
            self._w1_basis = basis
        return self._w1_basis

    # -- cache --------------------------------------------------------------

    def _cache_path(self, m: int, parity: str) -> Optional[str]:
        if self.cache_dir is None:
            return None
        return os.path.join(self.cache_dir,
                            f"form_D-23_m{m}_{parity}_o{self.order}.json")

    def form(self, m: int, parity: str = "plus") -> WHForm:
        key = (m, parity)
        if key in self._forms:
            return self._forms[key]
        path = self._cache_path(m, parity)
        if path and os.path.exists(path):
            with open(path) as fh:
                series = FracSeries.from_json(fh.read())
            form = WHForm(series, parity, m)
        elif parity == "plus":
            form = ladder_fm(m, self) if m > 23 else build_fm_plus(m, self)
        else:
            form = build_fm_minus(m, self)
        self._forms[key] = form
        if path:
            os.makedirs(self.cache_dir, exist_ok=True)
            with open(path, "w") as fh:
                fh.write(form.series.to_json())
        return form


def hauptmodul(order: int) -> FracSeries:
    """H_23 = theta_O/g - 2 = q^-1 + 4q + 7q^2 + ... (exact integers)."""
    if order < 2:
        raise ValueError("order must be at least 2")
    ctx = Level23(order + 2)
    return ctx.H.truncate(order)


# -- linear solver over the rationals ---------------------------------------


def _solve_exact(rows: List[List[Fraction]], rhs: List[Fraction]):
    """One exact solution of rows * x = rhs, or None if inconsistent."""
    m = len(rows)
    n = len(rows[0]) if m else 0
    a = [list(map(Fraction, rows[i])) + [Fraction(rhs[i])] for i in range(m)]
    piv_cols = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = Fraction(1) / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(m):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if a[i][n]:
            return None  # inconsistent
    x = [Fraction(0)] * n
    for i, c in enumerate(piv_cols):
        x[c] = a[i][n]
    return x


def _weight12_monomials(theta_O: FracSeries, theta_a: FracSeries,
                        order: int) -> List[FracSeries]:
    """Weight-12 trivial-character forms on Gamma_0(23) from block products."""
    from .qseries import eisenstein_e4, eisenstein_e6

    small = order // 23 + 3
    e4a, e6a = eisenstein_e4(order), eisenstein_e6(order)
    e4b = eisenstein_e4(small).scale_exponents_by(23).truncate(order)
    e6b = eisenstein_e6(small).scale_exponents_by(23).truncate(order)
    delta_a = eta_expansion(1, order + 2) ** 24
    delta_b = (eta_expansion(1, small + 2) ** 24).scale_exponents_by(23).truncate(order)
    even_blocks = [(4, e4a), (4, e4b), (6, e6a), (6, e6b),
                   (12, delta_a), (12, delta_b)]

    def even_monomials(w: int) -> List[FracSeries]:
        out = []

        def rec(i, w_left, acc):
            if w_left == 0:
                out.append(acc)
                return
            if i == len(even_blocks):
                return
            wt, s = even_blocks[i]
            rec(i + 1, w_left, acc)
            if wt <= w_left:
                rec(i, w_left - wt, s if acc is None else acc * s)

        rec(0, w, None)
        return [FracSeries.one(order) if m is None else m for m in out]

    theta_pows = {(0, 0): FracSeries.one(order)}
    for i in range(13):
        for j in range(13 - i):
            if (i, j) == (0, 0) or i + j > 12:
                continue
            if j > 0:
                theta_pows[(i, j)] = theta_pows[(i, j - 1)] * theta_a
            else:
                theta_pows[(i, 0)] = theta_pows[(i - 1, 0)] * theta_O
    monomials = []
    for (i, j), tp in sorted(theta_pows.items()):
        k = i + j
        if k % 2 or k > 12:
            continue
        for em in even_monomials(12 - k):
            monomials.append(tp * em if k else em)
    return monomials


def _delta23_inverse(order: int) -> FracSeries:
    small = order // 23 + 5
    delta23 = (eta_expansion(1, small) ** 24).scale_exponents_by(23)
    return delta23.inverse()


def _echelon_insert(basis: List[FracSeries], series: FracSeries, window: int):
    """Insert into an echelon basis ordered by leading exponent (< window)."""
    s = series
    while True:
        val = s.valuation()
        if val >= window or not s.coeffs:
            return
        lead = s.coeff(val)
        for i, b in enumerate(basis):
            if b.valuation() == val:
                s = s - b * lead
                break
        else:
            s = s * (Fraction(1) / lead)
            basis.append(s)
            basis.sort(key=lambda t: t.valuation())
            return


def _solve_form(ctx: Level23, m: int, parity: str) -> FracSeries:
    """The normalized f_m of either parity over the weight-13/Delta span."""
    chi_bad = -1 if parity == "plus" else 1
    span = ctx.weight1_basis()
    max_pole = max(int(-s.valuation()) for s in span)
    bound = min(int(s.truncation) for s in span)
    if m > max_pole:
        raise SolveFailure(f"pole order {m} exceeds the search space")
    if bound < 30:
        raise SolveFailure(
            f"context order {ctx.order} too small for the form solver")
    rows, rhs = [], []
    top = 2 if parity == "plus" else -1  # minus: q^-1, q^0 not imposed
    for e in range(-max_pole, top):
        rows.append([s.coeff(e) for s in span])
        rhs.append(Fraction(1 if e == -m else 0))
    for n in range(max(top, 1), bound):
        if kronecker_chi(D23, n) == chi_bad:
            rows.append([s.coeff(n) for s in span])
            rhs.append(Fraction(0))
    x = _solve_exact(rows, rhs)
    if x is None:
        raise SolveFailure(f"no solution for f_{m} ({parity}) in the span")
    f = None
    for c, s in zip(x, span):
        if c:
            f = s * c if f is None else f + s * c
    if f is not None:
        f = f.canonical()
    if f is None or not plus_space_check(f, D23, parity):
        raise SolveFailure(f"solution for f_{m} ({parity}) failed verification")
    return f


def build_fm_plus(m: int, ctx: Level23) -> WHForm:
    """The unique f_m = q^{-m} + O(q^2) in the plus space (m <= 23).

    Plus membership is imposed as support constraints and verified to the
    full truncation; all coefficients are certified integral.
    """
    if not valid_plus_index(m):
        raise ValueError(f"chi(-23/{m}) = 1: no plus-space form q^-{m} + O(q^2)")
    if m < 2:
        raise ValueError("pole order must be at least 2")
    return _validated_plus(_solve_form(ctx, m, "plus"), m)


def _validated_plus(f: FracSeries, m: int) -> WHForm:
    f = f.canonical()
    for e in range(int(f.valuation()), 2):
        expected = 1 if e == -m else 0
        if f.coeff(e) != expected:
            raise SolveFailure(f"f_{m}: coefficient {f.coeff(e)} at q^{e}")
    if not plus_space_check(f, D23, "plus"):
        raise SolveFailure(f"f_{m} violates plus-space support")
    for n, c in f.coeffs.items():
        if c.denominator != 1:
            raise SolveFailure(f"f_{m} has non-integral coefficient at {n}")
    return WHForm(f, "plus", m)


def build_fm_minus(m: int, ctx: Level23) -> WHForm:
    """f_m in the minus space for m in {2, 3, 4}.

    Normalization: principal part q^{-m}; the q^{-1} and q^0 coefficients
    are not imposed, they come out uniquely determined by the obstruction
    against the holomorphic plus space (q^{-1} + ... - 1 for m = 2, 3).
    """
    if m not in (2, 3, 4):
        raise ValueError("minus-space construction implemented for m in {2,3,4}")
    f = _solve_form(ctx, m, "minus")
    if f.coeff(-m) != 1 or any(f.coeff(-e) for e in range(m + 1, int(-f.valuation()) + 1)):
        raise SolveFailure(f"minus solver normalization failed for m = {m}")
    for n, c in f.coeffs.items():
        if c.denominator != 1:
            raise SolveFailure(f"f_{m} (minus) non-integral at {n}")
    return WHForm(f, "minus", m)


def ladder_fm(m: int, ctx: Level23) -> WHForm:
    """f_m for m > 23 via m = 23a + b and j(23 tau)^a f_b.

    Multiples of the f_n with smaller poles are subtracted to reach the
    principal part q^{-m}; theta_a and g clear the q^0 and q^1 terms.
    All subtracted multiples are certified integral.
    """
    if not valid_plus_index(m):
        raise ValueError(f"chi(-23/{m}) = 1: no plus-space form q^-{m}")
    a, b = divmod(m, 23)
    if b == 0:
        a, b = a - 1, 23
    X = ctx.form(b, "plus").series
    for _ in range(a):
        X = X * ctx.j23
    # clear extraneous poles from the deepest up
    for e in range(-m + 1, 0):
        c = X.coeff(e)
        if c:
            if c.denominator != 1:
                raise SolveFailure(f"ladder produced non-integral multiple {c}")
            X = X - ctx.form(-e, "plus").series * c
    c0 = X.coeff(0)
    if c0:
        X = X - theta_ideal(ctx.cls_a, int(X.truncation)) * c0
    c1 = X.coeff(1)
    if c1:
        X = X - ctx.g * c1
    return _validated_plus(X, m)


# -- duality ------------------------------------------------------------------


@dataclass(frozen=True)
class DualityResult:
    """Outcome of the coefficient duality checks between f_m and f_2,3,4.

    ``printed``  -- the three relations with the signs printed in the source
                    identity (c_m(2) = -c_2(m), c_m(3) = c_3(m),
                    c_m(4) = -c_4(m));
    ``uniform``  -- the uniform antisymmetric relation
                    c_m(n) = -w_m * c_n(m) for n = 2, 3, 4, where w_m = 2
                    when 23 | m (the self-paired component carries half the
                    pairing weight) and w_m = 1 otherwise.
    """

    m: int
    printed: Tuple[bool, bool, bool]
    uniform: Tuple[bool, bool, bool]
    values: Dict[str, Fraction]

    @property
    def printed_all(self) -> bool:
        return all(self.printed)

    @property
    def uniform_all(self) -> bool:
        return all(self.uniform)


def duality_check(m: int, ctx: Level23) -> DualityResult:
    """Compare c_m(2..4) against c_2,3,4(m) under both sign conventions."""
    fm = ctx.form(m, "plus")
    vals = {}
    printed, uniform = [], []
    weight = 2 if m % 23 == 0 else 1
    for n, sign in ((2, -1), (3, +1), (4, -1)):
        cm_n = fm.coeff(n)
        cn_m = ctx.form(n, "minus").coeff(m)
        vals[f"c_m({n})"] = cm_n
        vals[f"c_{n}(m)"] = cn_m
        printed.append(cm_n == sign * cn_m)
        uniform.append(cm_n == -weight * cn_m)
    return DualityResult(m, tuple(printed), tuple(uniform), vals)


# -- tensor principal part ----------------------------------------------------


@dataclass
class PrincipalPartTable:
    """Principal part of F_m = f_m (x) phi_{0,1} over the Z/46 module.

    ``entries`` maps (d, mu) -> coefficient, recording the coefficient at
    exponent -d/92 in component mu (and equally -mu); mu is reduced to
    min(mu, 46 - mu).  ``ct`` is the constant term after correction (zero).
    """

    m: int
    entries: Dict[Tuple[int, int], Fraction]
    ct: Fraction
    correction_multiple: Fraction

    def row(self, d: int) -> Fraction:
        vals = [c for (dd, _), c in self.entries.items() if dd == d]
        if not vals:
            return Fraction(0)
        if len(vals) > 1:
            raise ValueError(f"multiple residue classes at d = {d}")
        return vals[0]

    def paper_rows(self) -> Dict[int, Fraction]:
        """The five-row table {4m+23: 1, 4m: 10, 15: c_m(2), 11: c_m(3), 7: c_m(4)}."""
        return {d: self.row(d) for d in (4 * self.m + 23, 4 * self.m, 15, 11, 7)
                if self.row(d)}


def _scalar_to_vv(series: FracSeries) -> Dict[Tuple[int, int], Fraction]:
    """Level-23 plus form -> {(component s, scaled exponent 92e): c}.

    Component pairs (+-s) both carry the scalar coefficient; exponents are
    returned scaled by 92 for exact integer bookkeeping (e = n/23 -> 4n).
    """
    out: Dict[Tuple[int, int], Fraction] = {}
    for n_scaled, c in series.coeffs.items():
        if series.denom != 1:
            raise ValueError("scalar form must have integer exponents")
        n = n_scaled
        s = sqrt_class_mod23(n)
        if s is None:
            raise ValueError(f"support at chi = -1 index {n}")
        out[(s % 23, 4 * n)] = c
        out[((-s) % 23, 4 * n)] = c
    return out


def _jacobi_vv_scaled(phi: JacobiForm) -> Dict[Tuple[int, int], Fraction]:
    """Theta components of an index-1 Jacobi form, exponents scaled by 92."""
    vv = theta_decomposition(phi)
    out: Dict[Tuple[int, int], Fraction] = {}
    for (r,), h in vv.components.items():
        for e in h.exponents():
            out[(r % 2, int(e * 92))] = h.coeff(e)
    return out


def _mu46(s: int, r: int) -> int:
    """CRT embedding of (Z/23) x (Z/2) into Z/46 matching Q = x^2/92."""
    return (2 * s + 23 * r) % 46


def tensor_principal_part(f: WHForm, ctx: Level23, A: int = 1) -> PrincipalPartTable:
    """Principal part of F_m = f_m (x) phi_{0,1} with vanishing constant term.

    For 23 | m the plain tensor has a nonzero constant term; an integral
    multiple of g (x) (phi_{-2,1} * g2) with g2 = q^{-1} + O(q) in
    M_2^!(SL_2(Z)) is added.  That corrector pairs to zero against the
    rank-one theta series, so the seesaw value is unchanged.
    """
    if A != 1:
        raise ValueError("the level-23 pipeline uses A = 1")
    if f.parity != "plus":
        raise ValueError("tensor principal part requires a plus-space form")
    m = f.pole_order
    G = phi_0_1(max(m // 23 + 3, 4))
    g_vv = _jacobi_vv_scaled(G)
    f_vv = _scalar_to_vv(f.series)
    tensor: Dict[Tuple[int, int], Fraction] = {}
    for (s, ef), cf in f_vv.items():
        if ef > 23:
            # the most negative phi_{0,1} component exponent is -23 (scaled
            # by 92), so larger f-exponents cannot reach the principal part
            continue
        for (r, eg), cg in g_vv.items():
            e = ef + eg
            if e <= 0:
                mu = _mu46(s, r)
                key = (mu, e)
                tensor[key] = tensor.get(key, Fraction(0)) + cf * cg
    ct = tensor.pop((0, 0), Fraction(0))
    kappa = Fraction(0)
    if ct:
        corr, corr_ct = _ct_corrector(ctx, m)
        kappa = -ct / corr_ct
        if kappa.denominator != 1:
            raise SolveFailure(f"non-integral CT correction {kappa} at m = {m}")
        for key, c in corr.items():
            if key == (0, 0):
                continue
            tensor[key] = tensor.get(key, Fraction(0)) + kappa * c
        ct = ct + kappa * corr_ct
    assert ct == 0
    entries: Dict[Tuple[int, int], Fraction] = {}
    for (mu, e), c in tensor.items():
        if c and e < 0:
            d = -e
            mu_c = min(mu, 46 - mu)
            key = (d, mu_c)
            prev = entries.get(key)
            if prev is not None and prev != c:
                raise ValueError(f"asymmetric principal part at {key}")
            entries[key] = c
    table = PrincipalPartTable(m, entries, Fraction(0), kappa)
    _assert_proper_intersection(table)
    return table


def _ct_corrector(ctx: Level23, m: int):
    """Tensor table of g (x) (phi_{-2,1} * g2), exponents scaled by 92."""
    order = m // 23 + 4
    F2 = phi_m2_1(order + 2)
    _, j = delta_j_expansions(order + 3)
    g2 = -j.qderiv()  # q^{-1} + 0 + O(q), integral
    Fg2 = _jacobi_times_series(F2, g2, order + 1)
    corr_g = _jacobi_vv_scaled(Fg2)
    g_vv = _scalar_to_vv(ctx.g)
    out: Dict[Tuple[int, int], Fraction] = {}
    for (s, ef), cf in g_vv.items():
        for (r, eg), cg in corr_g.items():
            e = ef + eg
            if e <= 0:
                mu = _mu46(s, r)
                key = (mu, e)
                out[key] = out.get(key, Fraction(0)) + cf * cg
    ct = out.get((0, 0), Fraction(0))
    if ct == 0:
        raise SolveFailure("corrector has vanishing constant term")
    return out, ct


def _jacobi_times_series(phi: JacobiForm, u: FracSeries, trunc: int) -> JacobiForm:
    """Multiply a Jacobi form by a weight-2k level-1 q-series (same index)."""
    raw: Dict[Tuple[int, int], Fraction] = {}
    u_terms = [(e, u.coeff(e)) for e in u.exponents()]
    lowest = min((e for e, _ in u_terms), default=0)
    for (n, r), c in phi.raw_items():
        for e, uc in u_terms:
            tot = Fraction(n) + e
            if tot < trunc:
                if tot.denominator != 1:
                    raise ValueError("non-integer exponent in product")
                key = (int(tot), r)
                raw[key] = raw.get(key, Fraction(0)) + c * uc
    return _JacobiLaurent(phi.weight + 2, phi.index, raw, trunc)


class _JacobiLaurent(JacobiForm):
    """Jacobi form with possibly negative q-exponents (internal)."""

    def __init__(self, weight, index, raw, trunc):
        m = index
        data = {}
        self._min_n = 0
        for (n, r), c in raw.items():
            if n >= trunc or not c:
                continue
            self._min_n = min(self._min_n, n)
            key = (4 * n * m - r * r, r % (2 * m))
            if key in data and data[key] != c:
                raise ValueError("elliptic law violated")
            data[key] = Fraction(c)
        JacobiForm.__init__(self, weight, index, data, trunc)

    def raw_items(self):
        from math import isqrt
        m = self.index
        min_d = self.min_disc()
        for n in range(self._min_n, self.trunc):
            rmax = isqrt(max(4 * n * m - min_d, 0))
            for r in range(-rmax, rmax + 1):
                c = self.c(n, r)
                if c:
                    yield (n, r), c


def _assert_proper_intersection(table: PrincipalPartTable):
    """Sum over n of c(-n^2/4, n * mu_R) must vanish (proper intersection)."""
    total = table.ct
    for n in range(1, 12):
        d = 23 * n * n  # -n^2/4 = -(23 n^2)/92
        mu = (23 * n) % 46
        mu_c = min(mu, 46 - mu)
        c = table.entries.get((d, mu_c), Fraction(0))
        total += 2 * c
    if total != 0:
        raise ValueError(f"improper intersection multiplicity {total}")
