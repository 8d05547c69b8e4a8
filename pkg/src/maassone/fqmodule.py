"""Finite quadratic modules, Weil representation generators, res/tr maps.

Modules are finite abelian groups (products of cyclic factors) with a
Q: M -> Q/Z quadratic form.  The Weil representation matrices act on the
group algebra basis (phi_mu); restriction and trace are the two natural
maps between forms over a lattice and forms over a finite-index
sublattice, adjoint for the bilinear pairing <phi_mu, phi_nu> = delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Dict, List, Optional, Tuple

import mpmath

from .qseries import FracSeries


class IncompatibleModules(ValueError):
    """Inclusion data inconsistent with the quadratic forms."""


def _frac_mod1(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


class FiniteQuadModule:
    """Product of cyclic groups Z/n_i with Q(x) = x^T G x mod 1.

    ``gram`` is a rational symmetric matrix on the generators: Q(sum x_i g_i)
    = sum_i G_ii x_i^2 + 2 sum_{i<j} G_ij x_i x_j mod 1.  Elements are
    tuples reduced mod the orders.
    """

    def __init__(self, orders: Tuple[int, ...], gram):
        self.orders = tuple(int(n) for n in orders)
        if any(n <= 0 for n in self.orders):
            raise ValueError("cyclic orders must be positive")
        k = len(self.orders)
        self.gram = [[Fraction(gram[i][j]) for j in range(k)] for i in range(k)]
        for i in range(k):
            for j in range(k):
                if self.gram[i][j] != self.gram[j][i]:
                    raise ValueError("gram matrix must be symmetric")

    @classmethod
    def cyclic(cls, n: int, qcoef) -> "FiniteQuadModule":
        """Z/n with Q(x) = qcoef * x^2 mod 1."""
        return cls((n,), [[Fraction(qcoef)]])

    @property
    def order(self) -> int:
        out = 1
        for n in self.orders:
            out *= n
        return out

    def elements(self) -> List[Tuple[int, ...]]:
        return [tuple(e) for e in iproduct(*(range(n) for n in self.orders))]

    def reduce(self, x) -> Tuple[int, ...]:
        return tuple(int(xi) % n for xi, n in zip(x, self.orders))

    def neg(self, x) -> Tuple[int, ...]:
        return tuple((-xi) % n for xi, n in zip(x, self.orders))

    def add(self, x, y) -> Tuple[int, ...]:
        return tuple((a + b) % n for a, b, n in zip(x, y, self.orders))

    def q_value(self, x) -> Fraction:
        x = self.reduce(x)
        total = Fraction(0)
        k = len(self.orders)
        for i in range(k):
            total += self.gram[i][i] * x[i] * x[i]
            for j in range(i + 1, k):
                total += 2 * self.gram[i][j] * x[i] * x[j]
        return _frac_mod1(total)

    def bilinear(self, x, y) -> Fraction:
        """(x, y) = Q(x+y) - Q(x) - Q(y) mod 1."""
        return _frac_mod1(self.q_value(self.add(x, y)) - self.q_value(x)
                          - self.q_value(y))

    def is_nondegenerate(self) -> bool:
        els = self.elements()
        for x in els:
            if any(xi for xi in x):
                if all(self.bilinear(x, y) == 0 for y in els):
                    return False
        return True

    def tensor(self, other: "FiniteQuadModule") -> "FiniteQuadModule":
        k1, k2 = len(self.orders), len(other.orders)
        gram = [[Fraction(0)] * (k1 + k2) for _ in range(k1 + k2)]
        for i in range(k1):
            for j in range(k1):
                gram[i][j] = self.gram[i][j]
        for i in range(k2):
            for j in range(k2):
                gram[k1 + i][k1 + j] = other.gram[i][j]
        return FiniteQuadModule(self.orders + other.orders, gram)


@dataclass
class WeilRepMatrices:
    """rho(S), rho(T) for a finite quadratic module at fixed signature."""

    module: FiniteQuadModule
    sig_mod8: int
    S_matrix: "mpmath.matrix"
    T_matrix: "mpmath.matrix"
    precision: int
    basis: List[Tuple[int, ...]]


def weil_generators(fqm: FiniteQuadModule, sig_mod8: int,
                    precision: int = 256) -> WeilRepMatrices:
    """rho(T) phi_mu = e(Q(mu)) phi_mu and
    rho(S) phi_mu = e(-sig/8)/sqrt(|M|) sum_nu e(-(mu,nu)) phi_nu.
    """
    basis = fqm.elements()
    n = len(basis)
    with mpmath.workprec(precision):
        def e(x: Fraction):
            return mpmath.e ** (2j * mpmath.pi * mpmath.mpf(x.numerator)
                                / x.denominator)

        T = mpmath.zeros(n, n)
        for i, mu in enumerate(basis):
            T[i, i] = e(fqm.q_value(mu))
        front = e(Fraction(-sig_mod8, 8)) / mpmath.sqrt(n)
        S = mpmath.zeros(n, n)
        for i, mu in enumerate(basis):
            for j, nu in enumerate(basis):
                S[i, j] = front * e(_frac_mod1(-fqm.bilinear(mu, nu)))
    return WeilRepMatrices(fqm, sig_mod8 % 8, S, T, precision, basis)


# -- integral lattices and discriminant modules -----------------------------


def _smith_normal_form(M: List[List[int]]):
    """(D, U, V) with U*M*V = D diagonal, U and V unimodular."""
    m = [row[:] for row in M]
    rows, cols = len(m), len(m[0])
    U = [[int(i == j) for j in range(rows)] for i in range(rows)]
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in m:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    def add_row(i, j, k):  # row_i += k * row_j
        m[i] = [a + k * b for a, b in zip(m[i], m[j])]
        U[i] = [a + k * b for a, b in zip(U[i], U[j])]

    def add_col(i, j, k):  # col_i += k * col_j
        for r in m:
            r[i] += k * r[j]
        for r in V:
            r[i] += k * r[j]

    t = 0
    while t < min(rows, cols):
        # find pivot
        piv = None
        for i in range(t, rows):
            for j in range(t, cols):
                if m[i][j]:
                    if piv is None or abs(m[i][j]) < abs(m[piv[0]][piv[1]]):
                        piv = (i, j)
        if piv is None:
            break
        swap_rows(t, piv[0])
        swap_cols(t, piv[1])
        done = False
        while not done:
            done = True
            for i in range(t + 1, rows):
                if m[i][t]:
                    add_row(i, t, -(m[i][t] // m[t][t]))
                    if m[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, cols):
                if m[t][j]:
                    add_col(j, t, -(m[t][j] // m[t][t]))
                    if m[t][j]:
                        swap_cols(t, j)
                        done = False
        if m[t][t] < 0:
            add_row(t, t, -2)
        t += 1
    # enforce divisibility d_i | d_{i+1}
    for rep in range(min(rows, cols)):
        for i in range(min(rows, cols) - 1):
            a, b = m[i][i], m[i + 1][i + 1]
            if a and b % a:
                add_col(i, i + 1, 1)
                done = False
                while m[i + 1][i]:
                    q = m[i][i] // m[i + 1][i] if m[i + 1][i] else 0
                    add_row(i, i + 1, -(m[i][i] // m[i + 1][i]))
                    swap_rows(i, i + 1)
                while m[i][i + 1]:
                    add_col(i + 1, i, -(m[i][i + 1] // m[i][i]))
                if m[i][i] < 0:
                    add_row(i, i, -2)
    D = [m[i][i] for i in range(min(rows, cols))]
    return D, U, V


class IntegralLattice:
    """Even integral lattice given by its Gram matrix (integer, even diag)."""

    def __init__(self, gram: List[List[int]]):
        self.gram = [[int(x) for x in row] for row in gram]
        self.rank = len(gram)
        for i in range(self.rank):
            if self.gram[i][i] % 2:
                raise ValueError("lattice must be even")

    def disc_module(self) -> Tuple[FiniteQuadModule, List[List[Fraction]]]:
        """Discriminant module L'/L with Q(v-class) = v^T G^{-1} v / 2 mod 1.

        Returns (module, generator_duals) where generator_duals[i] is the
        dual vector (rational coordinates in the lattice basis) representing
        the i-th cyclic generator.
        """
        D, U, V = _smith_normal_form(self.gram)
        orders = [d for d in D if d not in (1, -1)]
        ginv = _rational_inverse(self.gram)
        gens = []
        # class group Z^n / G Z^n: generator i is the class of column
        # w_i = U^{-1} e_i, of order D_i; its dual vector is G^{-1} w_i.
        Uinv = _integer_inverse(U)
        k = self.rank
        kept = [i for i, d in enumerate(D) if d not in (1, -1)]
        for i in kept:
            w = [Uinv[r][i] for r in range(k)]
            dual = [sum(ginv[r][c] * w[c] for c in range(k)) for r in range(k)]
            gens.append(dual)
        gram = [[Fraction(0)] * len(gens) for _ in range(len(gens))]
        for a in range(len(gens)):
            for b in range(len(gens)):
                val = Fraction(0)
                for r in range(k):
                    for c in range(k):
                        val += gens[a][r] * self.gram[r][c] * gens[b][c]
                gram[a][b] = val / 2 if a == b else val / 2
        # Q(x) = (1/2) x^T G x on dual vectors; off-diagonal entries carry
        # half the bilinear form, matching FiniteQuadModule's convention.
        module = FiniteQuadModule(tuple(abs(d) for d in D if d not in (1, -1)),
                                  gram)
        return module, gens

    def dual_coords_to_class(self, vec, module: FiniteQuadModule, gens):
        """Class of a dual vector (rational lattice coords) in the module."""
        # solve vec = sum x_i gens_i + lattice vector, x_i mod orders
        k = self.rank
        # G * vec is integral exactly when vec is in L'; class of G*vec in
        # Z^n/G Z^n determines the element.  Solve by exhausting the module
        # (desk scale) using the bilinear pairing signature.
        for x in module.elements():
            cand = [sum(Fraction(x[i]) * gens[i][r] for i in range(len(gens)))
                    for r in range(k)]
            diff = [vec[r] - cand[r] for r in range(k)]
            if all(d.denominator == 1 for d in diff):
                return x
        raise IncompatibleModules("vector is not in the dual lattice")


def _rational_inverse(M):
    n = len(M)
    a = [[Fraction(M[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def _integer_inverse(M):
    inv = _rational_inverse(M)
    out = [[int(x) for x in row] for row in inv]
    for i, row in enumerate(inv):
        for j, x in enumerate(row):
            if x.denominator != 1:
                raise ValueError("matrix is not unimodular")
    return out


# -- res / tr ----------------------------------------------------------------


@dataclass
class InclusionData:
    """Data of a finite-index sublattice M of L at the module level.

    ``big``    -- the module M'/M;
    ``small``  -- the module L'/L;
    ``proj``   -- map from elements of the subgroup L'/M < M'/M to L'/L;
    ``lm_subgroup`` -- elements of M'/M forming L/M.
    """

    big: FiniteQuadModule
    small: FiniteQuadModule
    proj: Dict[Tuple[int, ...], Tuple[int, ...]]
    lm_subgroup: List[Tuple[int, ...]]

    def validate(self):
        if len(self.proj) != self.small.order * len(self.lm_subgroup):
            raise IncompatibleModules("|L'/M| != |L'/L| * |L/M|")
        for mu, bar in self.proj.items():
            if self.big.q_value(mu) != self.small.q_value(bar):
                raise IncompatibleModules(
                    f"Q mismatch along projection at {mu}")
        for alpha in self.lm_subgroup:
            if self.proj.get(alpha) != self.small.reduce((0,) * len(self.small.orders)):
                raise IncompatibleModules("L/M must project to zero")
        return self


def lattice_inclusion(L: IntegralLattice, basis_M: List[List[int]]) -> InclusionData:
    """Inclusion data for the sublattice of L spanned by basis_M (rows)."""
    k = L.rank
    gram_M = [[sum(basis_M[i][r] * L.gram[r][c] * basis_M[j][c]
                   for r in range(k) for c in range(k))
               for j in range(k)] for i in range(k)]
    M = IntegralLattice(gram_M)
    big, gens_M = M.disc_module()
    small, gens_L = L.disc_module()
    Binv = _rational_inverse(basis_M)

    def to_L_coords(vec_M):
        # vec in M-basis coords -> lattice(L)-basis coords
        return [sum(Fraction(vec_M[i]) * basis_M[i][r] for i in range(k))
                for r in range(k)]

    proj = {}
    lm = []
    for x in big.elements():
        dual_M = [sum(Fraction(x[i]) * gens_M[i][r] for i in range(len(gens_M)))
                  for r in range(k)]
        dual_L_coords = to_L_coords(dual_M)
        # x lies in L'/M iff the dual vector pairs integrally with L,
        # i.e. G_L * v integral.
        pair = [sum(L.gram[r][c] * dual_L_coords[c] for c in range(k))
                for r in range(k)]
        if all(p.denominator == 1 for p in pair):
            bar = L.dual_coords_to_class(dual_L_coords, small, gens_L)
            proj[x] = bar
            if all(f.denominator == 1 for f in dual_L_coords):
                lm.append(x)
    return InclusionData(big, small, proj, lm).validate()


def res_map(components: Dict[Tuple[int, ...], FracSeries],
            data: InclusionData) -> Dict[Tuple[int, ...], FracSeries]:
    """Restriction: (f_M)_mu = f_{proj(mu)} on L'/M, zero elsewhere."""
    out = {}
    for mu in data.big.elements():
        if mu in data.proj:
            bar = data.proj[mu]
            if bar in components:
                out[mu] = components[bar]
    return out


def tr_map(components: Dict[Tuple[int, ...], FracSeries],
           data: InclusionData) -> Dict[Tuple[int, ...], FracSeries]:
    """Trace: (g^L)_bar = sum over the fiber of bar in L'/M of g."""
    fibers: Dict[Tuple[int, ...], list] = {}
    for mu, bar in data.proj.items():
        fibers.setdefault(bar, []).append(mu)
    out: Dict[Tuple[int, ...], FracSeries] = {}
    for bar, fiber in fibers.items():
        total = None
        for mu in fiber:
            if mu in components:
                total = components[mu] if total is None else total + components[mu]
        if total is not None:
            out[bar] = total
    return out


def pairing_ct(f: Dict, g: Dict, module: FiniteQuadModule):
    """<f, g> summed over common components (series or plain rationals)."""
    total = None
    for mu, val in f.items():
        if mu in g:
            term = val * g[mu]
            total = term if total is None else total + term
    return total
