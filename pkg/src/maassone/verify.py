"""End-to-end verification of the factorization of CM values.

The analytic side evaluates R_m(H_23(z_23)) by resultants against the
exact minimal cubic (never touching the cycle formulas); the arithmetic
side predicts the prime support and exponent via Diff/nu/rho (never
touching floating point).  The pipeline pins the one effective constant
relating the two and checks every identity exactly.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import mpmath

from .cycles import cycle_multiplicity
from .heegner import CMContext, CMEvaluator, HeegnerCache, minpoly_cm
from .localinv import diff_set
from .qseries import IPoly, RFunc, poly_resultant
from .quadfield import kronecker_chi
from .whforms23 import Level23, PrincipalPartTable, tensor_principal_part


class PoleHit(ArithmeticError):
    """R_m has a pole or zero on the evaluation divisor (improper)."""


ZeroDenominator = PoleHit


class FactorizationTimeout(ArithmeticError):
    """Factorization gave up on a residual (reported partially)."""


@dataclass
class VerifyConfig:
    """Pipeline configuration (CLI and config-file surface)."""

    discriminant: int = -23
    m_min: int = 2
    m_max: int = 30
    order: int = 90
    precision_bits: int = 256
    cache_dir: Optional[str] = None
    convention: str = "auto"  # auto | double | single

    @classmethod
    def from_file(cls, path: str) -> "VerifyConfig":
        kwargs = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or "=" not in line:
                    continue
                key, val = (s.strip() for s in line.split("=", 1))
                if key in ("discriminant", "m_min", "m_max", "order",
                           "precision_bits"):
                    kwargs[key] = int(val)
                elif key in ("cache_dir", "convention"):
                    kwargs[key] = val
        return cls(**kwargs)


@dataclass
class VerificationRecord:
    """Outcome of the factorization check for one scalar index m."""

    m: int
    diff: Tuple[int, ...]
    norm_num: int
    norm_den: int
    factorization: Dict[int, int]
    predicted: Dict[int, int]
    coefficient_values: List[str]
    checks: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "diff": list(self.diff),
            "norm_num": str(self.norm_num),
            "norm_den": str(self.norm_den),
            "factorization": {str(p): e for p, e in sorted(self.factorization.items())},
            "predicted": {str(p): e for p, e in sorted(self.predicted.items())},
            "coeffs": self.coefficient_values,
            "checks": self.checks,
        }


def _trial_division(n: int, bound: int = 10 ** 6) -> Tuple[Dict[int, int], int]:
    n = abs(n)
    out: Dict[int, int] = {}
    for p in range(2, bound):
        if p * p > n:
            break
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    return out, n


def _pollard_rho(n: int) -> int:
    if n % 2 == 0:
        return 2
    while True:
        x = random.randrange(2, n)
        y, c, d = x, random.randrange(1, n), 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = _gcd(abs(x - y), n)
        if d != n:
            return d


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factor_integer(n: int, rho_rounds: int = 64) -> Dict[int, int]:
    """Trial division to 10^6 plus Pollard rho for residuals."""
    if n in (0,):
        raise ValueError("cannot factor zero")
    fac, rest = _trial_division(n)
    stack = [rest] if rest > 1 else []
    rounds = 0
    while stack:
        v = stack.pop()
        if v == 1:
            continue
        if _is_probable_prime(v):
            fac[v] = fac.get(v, 0) + 1
            continue
        rounds += 1
        if rounds > rho_rounds:
            raise FactorizationTimeout(f"residual {v} unfactored")
        d = _pollard_rho(v)
        stack.extend([d, v // d])
    return fac


class VerificationPipeline:
    """Assembles R_m, computes its exact norm, and compares both sides."""

    def __init__(self, config: VerifyConfig, ctx23: Optional[Level23] = None):
        if config.discriminant != -23:
            raise ValueError("the Borcherds pipeline is specific to D = -23")
        self.config = config
        self.ctx23 = ctx23 or Level23(order=config.order,
                                      cache_dir=config.cache_dir)
        self.cm = CMContext(precision=config.precision_bits,
                            cache_dir=config.cache_dir,
                            double_self_paired=(config.convention == "double"))
        self.evaluator = CMEvaluator(self.ctx23, self.cm)
        self.cache = HeegnerCache(self.evaluator)
        self._minpoly: Optional[IPoly] = None
        self._roots = None
        self._pinned: Dict[str, Optional[int]] = {"ramified": None, "inert": None}
        self._mu_convention: Optional[str] = None

    # -- shared exact objects ------------------------------------------------

    def minpoly(self):
        if self._minpoly is None:
            self._minpoly, self._roots = minpoly_cm(self.cache)
        return self._minpoly, self._roots

    def valid_indices(self) -> List[int]:
        return [m for m in range(self.config.m_min, self.config.m_max + 1)
                if kronecker_chi(-23, m) != 1]

    def table(self, m: int) -> PrincipalPartTable:
        return tensor_principal_part(self.ctx23.form(m, "plus"), self.ctx23)

    # -- divisor assembly ------------------------------------------------------

    def assemble_exponents(self, m: int,
                           table: Optional[PrincipalPartTable] = None
                           ) -> Dict[Tuple[int, int], int]:
        """Exponents of R_m on primitive Heegner divisors (d0, residue pair).

        Each table row (coefficient C at exponent -d/92, components +-mu)
        contributes C to every primitive descendant: for each s with
        s^2 | d, each single residue nu with s nu = mu mod 46 and
        nu^2 = -d/s^2 mod 92 counts with weight 2 when nu = -nu.  The total
        is halved at the end (the polynomial P_{d0} vanishes doubly along
        its divisor on X_0(23)).
        """
        table = table or self.table(m)
        acc: Dict[Tuple[int, int], Fraction] = {}
        for (d, mu_c), coeff in table.entries.items():
            singles = {mu_c % 46, (-mu_c) % 46}
            s = 1
            while s * s <= d:
                if d % (s * s) == 0:
                    d0 = d // (s * s)
                    for mu in singles:
                        for nu in range(46):
                            if (s * nu - mu) % 46:
                                continue
                            if (nu * nu + d0) % 92:
                                continue
                            kappa = 2 if nu in (0, 23) else 1
                            key = (d0, min(nu, (46 - nu) % 46))
                            acc[key] = acc.get(key, Fraction(0)) + coeff * kappa
                s += 1
        out: Dict[Tuple[int, int], int] = {}
        for key, val in acc.items():
            half = val / 2
            if half.denominator != 1:
                raise ValueError(f"non-integral assembled exponent at {key}")
            if half:
                out[key] = int(half)
        if self.cm.double_self_paired:
            # alternative convention: self-paired divisors doubled inside P_d
            out = {k: (v if k[1] not in (0, 23) else _exact_half(v, k))
                   for k, v in out.items()}
        return out

    def compute_Rm(self, m: int) -> Tuple[RFunc, Dict[Tuple[int, int], int]]:
        exps = self.assemble_exponents(m)
        if exps.get((23, 23), 0) != 0:
            raise PoleHit(f"R_{m} has order {exps[(23, 23)]} along the "
                          "evaluation divisor")
        exps = {k: v for k, v in exps.items() if k != (23, 23)}
        factors = {self.cache.polynomial(d0, r): e
                   for (d0, r), e in sorted(exps.items())}
        return RFunc(factors), exps

    # -- the two sides ----------------------------------------------------------

    def norm_Rm(self, m: int, exps: Optional[Dict[Tuple[int, int], int]] = None) -> Fraction:
        """N_m = prod over roots x of Pmin of R_m(x), exact via resultants."""
        if exps is None:
            _, exps = self.compute_Rm(m)
        pmin, _ = self.minpoly()
        total = Fraction(1)
        for (d0, r), e in sorted(exps.items()):
            res = poly_resultant(pmin, self.cache.polynomial(d0, r))
            if res == 0:
                raise PoleHit(f"P_{d0} shares a root with the minimal cubic")
            total *= Fraction(res) ** e
        return total

    def coefficient_values(self, m: int,
                           exps: Optional[Dict[Tuple[int, int], int]] = None):
        """-(1/12) log |R_m(x_i)| at the three cubic roots (mpmath reals)."""
        if exps is None:
            _, exps = self.compute_Rm(m)
        _, roots = self.minpoly()
        prec = self.config.precision_bits
        vals = []
        with mpmath.workprec(prec + 64):
            for x in roots:
                acc = mpmath.mpf(0)
                for (d0, r), e in sorted(exps.items()):
                    pd = self.cache.polynomial(d0, r)
                    v = pd(x)
                    if v == 0:
                        raise PoleHit(f"x_i is a root of P_{d0}")
                    acc += e * mpmath.log(abs(v))
                vals.append(-acc / 12)
        return vals

    def predicted_support(self, m: int):
        return diff_set(Fraction(m, 23), -23)

    def predicted_cycle_sum(self, m: int) -> Fraction:
        group = self.ctx23.group
        principal = group.principal
        return sum((cycle_multiplicity(Fraction(m, 23), principal, b)
                    for b in group.classes()), Fraction(0))

    def _pin_constant(self, kind: str, candidate: int) -> bool:
        if self._pinned[kind] is None:
            self._pinned[kind] = candidate
            return True
        return self._pinned[kind] == candidate

    # -- record assembly -----------------------------------------------------------

    def factor_and_compare(self, m: int) -> VerificationRecord:
        diff = self.predicted_support(m)
        _, exps = self.compute_Rm(m)
        norm = self.norm_Rm(m, exps)
        fac_num = factor_integer(norm.numerator) if abs(norm.numerator) != 1 else {}
        fac_den = factor_integer(norm.denominator) if norm.denominator != 1 else {}
        fac = dict(fac_num)
        for p, e in fac_den.items():
            fac[p] = fac.get(p, 0) - e
        fac = {p: e for p, e in fac.items() if e}
        checks: Dict[str, bool] = {}
        predicted: Dict[int, int] = {}
        if len(diff) == 1:
            p = diff.sole_prime()
            checks["support"] = set(fac) <= {p}
            cycle_sum = self.predicted_cycle_sum(m)
            kind = "ramified" if kronecker_chi(-23, p) == 0 else "inert"
            e_obs = fac.get(p, 0)
            if cycle_sum:
                ratio = Fraction(e_obs) / cycle_sum
                ok = ratio.denominator == 1 and self._pin_constant(kind, int(ratio))
                checks["exponent"] = ok and e_obs == self._pinned[kind] * cycle_sum
                predicted[p] = int(self._pinned[kind] * cycle_sum) \
                    if self._pinned[kind] is not None else 0
            else:
                checks["exponent"] = e_obs == 0
                predicted[p] = 0
        else:
            checks["support"] = not fac
            checks["exponent"] = abs(norm) == 1
        vals = self.coefficient_values(m, exps)
        prec = self.config.precision_bits
        with mpmath.workprec(prec + 64):
            tol = mpmath.mpf(2) ** (-(prec // 2))
            checks["conjugate_agreement"] = bool(abs(vals[1] - vals[2]) < tol)
            total = vals[0] + vals[1] + vals[2]
            lognorm = (mpmath.log(abs(mpmath.mpf(norm.numerator)))
                       - mpmath.log(abs(mpmath.mpf(norm.denominator))))
            checks["log_norm_agreement"] = bool(
                abs(total + lognorm / 12) < mpmath.mpf(2) ** (-(prec // 4)))
        checks["degree_identity"] = self.degree_identity_check(m, fac, vals)
        with mpmath.workprec(prec):
            coeff_strs = [mpmath.nstr(v, 40) for v in vals]
        return VerificationRecord(
            m=m, diff=tuple(diff), norm_num=norm.numerator,
            norm_den=norm.denominator, factorization=fac,
            predicted=predicted, coefficient_values=coeff_strs, checks=checks)

    def degree_identity_check(self, m: int, fac: Dict[int, int], vals) -> bool:
        """sum_i -(1/12) log|R_m(x_i)| = -w_k deg-hat Z(m/23), both exactly
        (integer exponents) and numerically to 2^-64."""
        diff = self.predicted_support(m)
        if len(diff) != 1:
            return abs(Fraction(1)) == 1 if not fac else False
        p = diff.sole_prime()
        kind = "ramified" if kronecker_chi(-23, p) == 0 else "inert"
        if self._pinned[kind] is None:
            return False
        cycle_sum = self.predicted_cycle_sum(m)
        e_exact = self._pinned[kind] * cycle_sum
        if Fraction(e_exact).denominator != 1 or fac.get(p, 0) != e_exact:
            return False
        # numeric side: sum of values = -(1/12) e log p = -w f_p (sum Z) log p
        f_p = Fraction(self._pinned[kind], 24)
        with mpmath.workprec(self.config.precision_bits + 64):
            lhs = vals[0] + vals[1] + vals[2]
            rhs = -2 * f_p * cycle_sum * mpmath.log(p)
            return bool(abs(lhs - rhs) < mpmath.mpf(2) ** -64)

    # -- orchestration ------------------------------------------------------------

    def run(self, indices: Optional[List[int]] = None) -> List[VerificationRecord]:
        out = []
        for m in indices or self.valid_indices():
            out.append(self.factor_and_compare(m))
        return out

    def pinned(self) -> dict:
        base = [v for v in self._pinned.values() if v is not None]
        constant = None
        for c in (24,):
            if all(v % c == 0 for v in base) and base:
                constant = c
        return {
            "f_ramified": (self._pinned["ramified"] or 0) // 24 or None,
            "f_inert": (self._pinned["inert"] or 0) // 24 or None,
            "K_ramified": self._pinned["ramified"],
            "K_inert": self._pinned["inert"],
            "constant": constant,
            "mu_convention": "double" if self.cm.double_self_paired else "single",
        }

    def report(self, indices: Optional[List[int]] = None) -> dict:
        records = self.run(indices)
        return {
            "config": {
                "discriminant": self.config.discriminant,
                "m_min": self.config.m_min,
                "m_max": self.config.m_max,
                "order": self.config.order,
                "precision_bits": self.config.precision_bits,
                "convention": self.config.convention,
            },
            "pinned": self.pinned(),
            "records": [r.to_dict() for r in records],
        }


def _exact_half(v: int, key) -> int:
    if v % 2:
        raise ValueError(f"cannot halve odd exponent at {key}")
    return v // 2


def report_files(report: dict, json_path: str, csv_path: str):
    """Write the report as JSON and a flat CSV table."""
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    import csv as _csv
    with open(csv_path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["m", "diff", "norm_num_digits", "factorization",
                    "predicted", "support", "exponent", "degree_identity",
                    "conjugate_agreement"])
        for r in report["records"]:
            w.writerow([
                r["m"], ";".join(map(str, r["diff"])),
                len(r["norm_num"].lstrip("-")),
                ";".join(f"{p}^{e}" for p, e in r["factorization"].items()),
                ";".join(f"{p}^{e}" for p, e in r["predicted"].items()),
                r["checks"].get("support"), r["checks"].get("exponent"),
                r["checks"].get("degree_identity"),
                r["checks"].get("conjugate_agreement"),
            ])
