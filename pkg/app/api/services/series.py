# app/api/services/series.py
"""Exact Laurent-series arithmetic over Kähler exponent vectors.

Coefficients are ``fractions.Fraction``; every series carries an explicit
per-variable box and never stores an exponent outside of it.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import ceil, floor
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import sympy

from app.core.config import settings
from app.core.errors import InsufficientBoxError, PoleError, SeriesError

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Interval = Tuple[int, int]
Box = Tuple[Interval, ...]


# ---------------------------------------------------------------------------
# shifted factorial ratio
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1 << 18)
def _sfr(x: Fraction, a: int) -> Fraction:
    if a >= 0:
        value = Fraction(1)
        for l in range(1, a + 1):
            value *= x + l
        return value
    denominator = Fraction(1)
    for l in range(a + 1, 1):
        denominator *= x + l
    if denominator == 0:
        raise PoleError(f"sfr({x}, {a}) divides by zero", x=x, a=a)
    return 1 / denominator


def sfr(x, a: int) -> Fraction:
    """prod_{l<=a}(x+l) / prod_{l<=0}(x+l) for an integer ``a``.

    Raises PoleError when ``a < 0`` and one of the denominator factors vanishes.
    """
    return _sfr(Fraction(x), int(a))


@lru_cache(maxsize=1 << 18)
def _inv_sfr(x: Fraction, a: int) -> Fraction:
    if a <= 0:
        value = Fraction(1)
        for l in range(a + 1, 1):
            value *= x + l
        return value
    numerator = Fraction(1)
    for l in range(1, a + 1):
        numerator *= x + l
    if numerator == 0:
        raise PoleError(f"1/sfr({x}, {a}) divides by zero", x=x, a=a)
    return 1 / numerator


def inv_sfr(x, a: int) -> Fraction:
    """Reciprocal 1/sfr(x, a); exact zero when a vanishing factor sits in the denominator of sfr."""
    return _inv_sfr(Fraction(x), int(a))


def binomial(e, n: int) -> Fraction:
    """Generalized binomial coefficient binom(e, n) for rational ``e``."""
    e = Fraction(e)
    value = Fraction(1)
    for j in range(n):
        value = value * (e - j) / (j + 1)
    return value


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: Any) -> Fraction:
    try:
        return Fraction(text)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SeriesError(f"Invalid rational coefficient {text!r}") from exc


# ---------------------------------------------------------------------------
# boxes
# ---------------------------------------------------------------------------

def normalize_box(box: Sequence[Sequence[int]]) -> Box:
    out = []
    for interval in box:
        lo, hi = (int(interval[0]), int(interval[1]))
        if lo > hi:
            raise SeriesError(f"Empty box interval [{lo}, {hi}]")
        out.append((lo, hi))
    return tuple(out)


def box_contains(box: Box, e: Sequence[int]) -> bool:
    for (lo, hi), v in zip(box, e):
        if v < lo or v > hi:
            return False
    return True


def box_subset(inner: Box, outer: Box) -> bool:
    return all(o_lo <= i_lo and i_hi <= o_hi for (i_lo, i_hi), (o_lo, o_hi) in zip(inner, outer))


def widen_box(box: Box, amount: int) -> Box:
    return tuple((lo - amount, hi + amount) for lo, hi in box)


def oriented_box(orientation: Sequence[int], radius: int) -> Box:
    """[0,R] for +1, [-R,0] for -1 and [-R,R] for 0."""
    out = []
    for sign in orientation:
        if sign > 0:
            out.append((0, radius))
        elif sign < 0:
            out.append((-radius, 0))
        else:
            out.append((-radius, radius))
    return tuple(out)


# ---------------------------------------------------------------------------
# Laurent series
# ---------------------------------------------------------------------------

class LaurentSeries:
    """Truncated multivariate Laurent series with exact rational coefficients."""

    __slots__ = ("vars", "box", "terms")

    def __init__(
        self,
        vars: Sequence[str],
        box: Sequence[Sequence[int]],
        terms: Optional[Mapping[Sequence[int], Any]] = None,
    ):
        self.vars = tuple(vars)
        self.box = normalize_box(box)
        if len(self.box) != len(self.vars):
            raise SeriesError("Box and variable list differ in length")
        cleaned: Dict[Exponent, Fraction] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != len(self.vars):
                raise SeriesError(f"Exponent {e} has the wrong length")
            if not box_contains(self.box, e):
                raise SeriesError(f"Exponent {e} lies outside the box {self.box}")
            c = Fraction(c)
            if c:
                cleaned[e] = cleaned.get(e, Fraction(0)) + c
        self.terms = {e: c for e, c in cleaned.items() if c}

    @classmethod
    def _raw(cls, vars: Tuple[str, ...], box: Box, terms: Dict[Exponent, Fraction]) -> "LaurentSeries":
        series = cls.__new__(cls)
        series.vars = vars
        series.box = box
        series.terms = terms
        return series

    @classmethod
    def zero(cls, vars: Sequence[str], box: Sequence[Sequence[int]]) -> "LaurentSeries":
        return cls(vars, box)

    @classmethod
    def one(cls, vars: Sequence[str], box: Sequence[Sequence[int]]) -> "LaurentSeries":
        return cls.monomial(vars, box, (0,) * len(vars))

    @classmethod
    def monomial(cls, vars, box, exponent: Sequence[int], coeff=1) -> "LaurentSeries":
        box = normalize_box(box)
        exponent = tuple(int(v) for v in exponent)
        terms = {exponent: Fraction(coeff)} if box_contains(box, exponent) else {}
        return cls(vars, box, terms)

    def coefficient(self, exponent: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exponent), Fraction(0))

    __getitem__ = coefficient

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def _check_compatible(self, other: "LaurentSeries") -> None:
        if self.vars != other.vars or self.box != other.box:
            raise SeriesError(
                f"Series mismatch: {self.vars}{self.box} vs {other.vars}{other.box}"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.vars == other.vars and self.box == other.box and self.terms == other.terms

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        self._check_compatible(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return LaurentSeries._raw(self.vars, self.box, {e: c for e, c in out.items() if c})

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries._raw(self.vars, self.box, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        return mul(self, other)

    def scale(self, factor) -> "LaurentSeries":
        factor = Fraction(factor)
        if not factor:
            return LaurentSeries._raw(self.vars, self.box, {})
        return LaurentSeries._raw(self.vars, self.box, {e: c * factor for e, c in self.terms.items()})

    def restrict(self, box: Sequence[Sequence[int]]) -> "LaurentSeries":
        """Drop every term outside ``box``; ``box`` must sit inside the current box."""
        box = normalize_box(box)
        if not box_subset(box, self.box):
            raise SeriesError(f"Cannot restrict {self.box} to the larger box {box}")
        return LaurentSeries._raw(
            self.vars, box, {e: c for e, c in self.terms.items() if box_contains(box, e)}
        )

    def first_difference(self, other: "LaurentSeries") -> Optional[Tuple[Exponent, Fraction, Fraction]]:
        """Lexicographically first exponent where the coefficients differ."""
        self._check_compatible(other)
        for e in sorted(set(self.terms) | set(other.terms)):
            a, b = self.coefficient(e), other.coefficient(e)
            if a != b:
                return e, a, b
        return None

    def to_json(self) -> Dict[str, Any]:
        return {
            "vars": list(self.vars),
            "box": [[lo, hi] for lo, hi in self.box],
            "terms": [
                {"e": list(e), "c": format_fraction(self.terms[e])} for e in sorted(self.terms)
            ],
        }

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "LaurentSeries":
        try:
            terms = {tuple(t["e"]): parse_fraction(t["c"]) for t in payload.get("terms", [])}
            return cls(payload["vars"], payload["box"], terms)
        except (KeyError, TypeError) as exc:
            raise SeriesError(f"Malformed series payload: {exc}") from exc

    def __repr__(self) -> str:
        return f"LaurentSeries(vars={self.vars}, box={self.box}, terms={len(self.terms)})"


def _exponent_span(s: LaurentSeries) -> List[Interval]:
    if not s.terms:
        return [(0, 0)] * len(s.vars)
    return [(min(e[v] for e in s.terms), max(e[v] for e in s.terms)) for v in range(len(s.vars))]


def mul(*factors: LaurentSeries, box: Optional[Sequence[Sequence[int]]] = None) -> LaurentSeries:
    """Exact product of ``factors``, truncated once to ``box`` (default: their common box).

    Intermediate products keep every term that the remaining factors can still
    carry back into the box, so ``mul(a, b, c)`` is associative for any box.
    Nested binary products truncate at each step; they agree with the flat
    product when every box interval is one-signed.
    """
    if not factors:
        raise SeriesError("mul needs at least one factor")
    first = factors[0]
    for other in factors[1:]:
        first._check_compatible(other)
    target = normalize_box(box) if box is not None else first.box
    if len(target) != len(first.vars) or not box_subset(target, first.box):
        raise SeriesError(f"Product box {target} must sit inside the factor box {first.box}")
    if any(f.is_zero() for f in factors):
        return LaurentSeries._raw(first.vars, target, {})

    # reach[i][v]: exponent range the factors after position i can add in variable v
    spans = [_exponent_span(f) for f in factors]
    reach: List[List[Interval]] = [[(0, 0)] * len(first.vars) for _ in factors]
    for i in range(len(factors) - 2, -1, -1):
        reach[i] = [
            (lo + s_lo, hi + s_hi)
            for (lo, hi), (s_lo, s_hi) in zip(reach[i + 1], spans[i + 1])
        ]

    def alive(e: Exponent, i: int) -> bool:
        return all(
            x + r_lo <= hi and x + r_hi >= lo
            for x, (lo, hi), (r_lo, r_hi) in zip(e, target, reach[i])
        )

    current = {e: c for e, c in first.terms.items() if alive(e, 0)}
    for i, f in enumerate(factors[1:], start=1):
        nxt: Dict[Exponent, Fraction] = {}
        for e1, c1 in current.items():
            for e2, c2 in f.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                if alive(e, i):
                    nxt[e] = nxt.get(e, Fraction(0)) + c1 * c2
        current = {e: c for e, c in nxt.items() if c}
    return LaurentSeries._raw(first.vars, target, current)


# ---------------------------------------------------------------------------
# Kähler maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinomialUnit:
    """u = 1 + sign * q_var, with ``var`` indexing the target variables of a map."""

    var: int
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise SeriesError(f"Unit sign must be +1 or -1, got {self.sign}")

    def label(self, names: Sequence[str]) -> str:
        op = "+" if self.sign > 0 else "-"
        return f"(1{op}{names[self.var]})"


def _as_fraction(value) -> Fraction:
    return Fraction(int(value.p), int(value.q))


@dataclass(frozen=True)
class KahlerMap:
    """Substitution of each source variable by a signed monomial times binomial units.

    ``source[i] -> signs[i] * prod_c target[c]**exponents[i][c] * prod_u units[u]**unit_powers[i][u]``
    """

    source: Tuple[str, ...]
    target: Tuple[str, ...]
    signs: Tuple[int, ...]
    exponents: Tuple[Tuple[int, ...], ...]
    units: Tuple[BinomialUnit, ...] = ()
    unit_powers: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        object.__setattr__(self, "exponents", tuple(tuple(int(e) for e in row) for row in self.exponents))
        object.__setattr__(self, "units", tuple(self.units))
        powers = self.unit_powers or tuple((0,) * len(self.units) for _ in self.source)
        object.__setattr__(self, "unit_powers", tuple(tuple(int(p) for p in row) for row in powers))

        n = len(self.source)
        if len(self.target) != n:
            raise SeriesError("Kähler maps must be square")
        if len(self.signs) != n or len(self.exponents) != n or len(self.unit_powers) != n:
            raise SeriesError("Kähler map rows do not match the source variables")
        if any(s not in (1, -1) for s in self.signs):
            raise SeriesError("Kähler map signs must be +1 or -1")
        if any(len(row) != n for row in self.exponents):
            raise SeriesError("Exponent rows must cover every target variable")
        if any(len(row) != len(self.units) for row in self.unit_powers):
            raise SeriesError("Unit power rows must cover every unit")
        if any(u.var >= n for u in self.units):
            raise SeriesError("Unit variable out of range")
        if n and sympy.Matrix(self.exponents).det() == 0:
            raise SeriesError("Kähler map exponent matrix is singular")

    # -- construction --------------------------------------------------------

    @classmethod
    def identity(cls, names: Sequence[str], target: Optional[Sequence[str]] = None) -> "KahlerMap":
        n = len(names)
        rows = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
        return cls(tuple(names), tuple(target or names), (1,) * n, rows)

    @classmethod
    def from_rows(
        cls,
        source: Sequence[str],
        target: Sequence[str],
        rows: Sequence[Mapping[str, int]],
        signs: Optional[Sequence[int]] = None,
        units: Sequence[Tuple[str, int]] = (),
        unit_powers: Optional[Sequence[Sequence[int]]] = None,
    ) -> "KahlerMap":
        """Build from per-source dicts {target name: exponent}; units given as (target name, sign)."""
        index = {name: i for i, name in enumerate(target)}
        exponents = []
        for row in rows:
            vec = [0] * len(target)
            for name, e in row.items():
                vec[index[name]] += int(e)
            exponents.append(tuple(vec))
        return cls(
            tuple(source),
            tuple(target),
            tuple(signs or (1,) * len(source)),
            tuple(exponents),
            tuple(BinomialUnit(index[name], sign) for name, sign in units),
            tuple(tuple(r) for r in unit_powers) if unit_powers is not None else (),
        )

    # -- queries ---------------------------------------------------------------

    @property
    def is_unit_free(self) -> bool:
        return not any(any(row) for row in self.unit_powers)

    @property
    def unit_variables(self) -> Tuple[int, ...]:
        used = set()
        for u, unit in enumerate(self.units):
            if any(row[u] for row in self.unit_powers):
                used.add(unit.var)
        return tuple(sorted(used))

    def image(self, v: Sequence[int]) -> Tuple[int, Exponent, Tuple[int, ...]]:
        """Sign, target exponent and unit powers of the monomial prod source**v."""
        sign = 1
        w = [0] * len(self.target)
        t = [0] * len(self.units)
        for i, vi in enumerate(v):
            if not vi:
                continue
            if self.signs[i] < 0 and vi % 2:
                sign = -sign
            for c, e in enumerate(self.exponents[i]):
                if e:
                    w[c] += vi * e
            for u, p in enumerate(self.unit_powers[i]):
                if p:
                    t[u] += vi * p
        return sign, tuple(w), tuple(t)

    # -- algebra ---------------------------------------------------------------

    def then(self, outer: "KahlerMap") -> "KahlerMap":
        """Substitute the target variables of ``self`` by the expressions of ``outer``."""
        if self.target != outer.source:
            raise SeriesError(f"Cannot compose {self.target} with a map from {outer.source}")
        units: List[BinomialUnit] = list(outer.units)
        index = {u: i for i, u in enumerate(units)}
        translated = []
        for unit in self.units:
            if any(outer.unit_powers[unit.var]):
                raise SeriesError("Binomial unit over a variable that itself carries units")
            nonzero = [(c, e) for c, e in enumerate(outer.exponents[unit.var]) if e]
            if len(nonzero) != 1 or abs(nonzero[0][1]) != 1:
                raise SeriesError("Binomial unit over a composite monomial")
            c, e = nonzero[0]
            s = unit.sign * outer.signs[unit.var]
            new_unit = BinomialUnit(c, s)
            if new_unit not in index:
                index[new_unit] = len(units)
                units.append(new_unit)
            # 1 + s/q = s q^-1 (1 + s q)
            translated.append((index[new_unit], s, None if e == 1 else c))

        signs, exponents, powers = [], [], []
        for i in range(len(self.source)):
            sign, w, t = outer.image(self.exponents[i])
            sign *= self.signs[i]
            w = list(w)
            t = list(t) + [0] * (len(units) - len(t))
            for j, p in enumerate(self.unit_powers[i]):
                if not p:
                    continue
                slot, s, inverted_var = translated[j]
                t[slot] += p
                if inverted_var is not None:
                    if s < 0 and p % 2:
                        sign = -sign
                    w[inverted_var] -= p
            signs.append(sign)
            exponents.append(tuple(w))
            powers.append(t)

        keep = [u for u in range(len(units)) if any(row[u] for row in powers)]
        return KahlerMap(
            self.source,
            outer.target,
            tuple(signs),
            tuple(exponents),
            tuple(units[u] for u in keep),
            tuple(tuple(row[u] for u in keep) for row in powers),
        )

    def inverse(self) -> "KahlerMap":
        if not self.is_unit_free:
            raise SeriesError("Only unit-free Kähler maps can be inverted")
        inv = sympy.Matrix(self.exponents).inv()
        rows = []
        for c in range(len(self.target)):
            row = []
            for i in range(len(self.source)):
                entry = inv[c, i]
                if not entry.is_integer:
                    raise SeriesError("Exponent matrix is not unimodular")
                row.append(int(entry))
            rows.append(tuple(row))
        signs = []
        for row in rows:
            sign = 1
            for i, f in enumerate(row):
                if self.signs[i] < 0 and f % 2:
                    sign = -sign
            signs.append(sign)
        return KahlerMap(self.target, self.source, tuple(signs), tuple(rows))

    def normalized(self) -> Tuple[Any, ...]:
        """Representation independent of unit ordering, for equality tests."""
        rows = []
        for i in range(len(self.source)):
            units = tuple(
                sorted((u.var, u.sign, p) for u, p in zip(self.units, self.unit_powers[i]) if p)
            )
            rows.append((self.signs[i], self.exponents[i], units))
        return (self.source, self.target, tuple(rows))

    def equivalent(self, other: "KahlerMap") -> bool:
        return self.normalized() == other.normalized()

    @property
    def is_identity(self) -> bool:
        return self.equivalent(KahlerMap.identity(self.source, self.target))

    def relabel(self, source: Sequence[str], target: Sequence[str]) -> "KahlerMap":
        return KahlerMap(tuple(source), tuple(target), self.signs, self.exponents, self.units, self.unit_powers)

    def preimage_box(self, target_box: Sequence[Sequence[int]], slack: int = 0) -> Box:
        """Smallest box of source exponents whose image can reach ``target_box``.

        Unit expansions only raise exponents, so the lower bound of every unit
        variable is relaxed by ``slack``.
        """
        target_box = normalize_box(target_box)
        relaxed = list(target_box)
        for c in self.unit_variables:
            lo, hi = relaxed[c]
            relaxed[c] = (lo - slack, hi)
        # source exponents v satisfy E^T v = w
        g = sympy.Matrix(self.exponents).T.inv()
        box = []
        for i in range(len(self.source)):
            lo = hi = Fraction(0)
            for c, (w_lo, w_hi) in enumerate(relaxed):
                coeff = _as_fraction(g[i, c])
                a, b = coeff * w_lo, coeff * w_hi
                lo += min(a, b)
                hi += max(a, b)
            box.append((floor(lo), ceil(hi)))
        return tuple(box)

    # -- presentation ----------------------------------------------------------

    def expression(self, i: int) -> str:
        parts = []
        if self.signs[i] < 0:
            parts.append("-1")
        for u, p in enumerate(self.unit_powers[i]):
            if p:
                label = self.units[u].label(self.target)
                parts.append(label if p == 1 else f"{label}^{p}")
        for c, e in enumerate(self.exponents[i]):
            if e:
                parts.append(self.target[c] if e == 1 else f"{self.target[c]}^{e}")
        return "*".join(parts) if parts else "1"

    def describe(self) -> List[str]:
        return [f"{name} = {self.expression(i)}" for i, name in enumerate(self.source)]

    def to_json(self) -> Dict[str, Any]:
        return {
            "source": list(self.source),
            "target": list(self.target),
            "signs": list(self.signs),
            "exponents": [list(row) for row in self.exponents],
            "units": [{"var": self.target[u.var], "sign": u.sign} for u in self.units],
            "unit_powers": [list(row) for row in self.unit_powers],
            "expressions": self.describe(),
        }


# ---------------------------------------------------------------------------
# prefactors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineForm:
    """Rational constant plus a rational combination of equivariant parameters."""

    constant: Fraction = Fraction(0)
    coefficients: Tuple[Tuple[str, Fraction], ...] = ()

    @classmethod
    def of(cls, constant=0, coefficients: Optional[Mapping[str, Any]] = None) -> "AffineForm":
        merged: Dict[str, Fraction] = {}
        for name, c in (coefficients or {}).items():
            merged[name] = merged.get(name, Fraction(0)) + Fraction(c)
        return cls(Fraction(constant), tuple(sorted((n, c) for n, c in merged.items() if c)))

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        total = self.constant
        for name, c in self.coefficients:
            if name not in values:
                raise SeriesError(f"Parameter {name} is not assigned")
            total += c * Fraction(values[name])
        return total

    def __str__(self) -> str:
        parts = []
        for name, c in self.coefficients:
            if c == 1:
                parts.append(f"+{name}")
            elif c == -1:
                parts.append(f"-{name}")
            else:
                parts.append(f"{'+' if c > 0 else '-'}{abs(c)}*{name}")
        if self.constant or not parts:
            parts.append(f"{'+' if self.constant >= 0 else '-'}{abs(self.constant)}")
        text = "".join(parts)
        return text[1:] if text.startswith("+") else text


@dataclass(frozen=True)
class Prefactor:
    """prod exp(c q_k) * prod (1 + s q_k)^E over Kähler variables of the compared series."""

    exp_terms: Tuple[Tuple[Fraction, int], ...] = ()
    unit_terms: Tuple[Tuple[BinomialUnit, AffineForm], ...] = ()

    @property
    def is_trivial(self) -> bool:
        return not self.exp_terms and not self.unit_terms

    def describe(self, names: Sequence[str]) -> str:
        parts = [f"exp({c}*{names[k]})" for c, k in self.exp_terms]
        parts += [f"{u.label(names)}^({e})" for u, e in self.unit_terms]
        return "*".join(parts) if parts else "1"


def _parameter_values(at) -> Mapping[str, Fraction]:
    return at.as_dict() if hasattr(at, "as_dict") else at


def _univariate(coeffs: Sequence[Fraction], k: int, vars: Tuple[str, ...], box: Box) -> LaurentSeries:
    terms = {}
    lo, hi = box[k]
    for n, c in enumerate(coeffs):
        if c and lo <= n <= hi:
            e = [0] * len(vars)
            e[k] = n
            terms[tuple(e)] = Fraction(c)
    return LaurentSeries._raw(vars, box, terms)


def expand_prefactor(p: Prefactor, at, box: Sequence[Sequence[int]], vars: Sequence[str]) -> LaurentSeries:
    """Expand a prefactor into a truncated series at the given parameter values."""
    vars = tuple(vars)
    box = normalize_box(box)
    if not box_contains(box, (0,) * len(vars)):
        raise SeriesError("Prefactor expansion needs the zero exponent inside the box")
    values = _parameter_values(at)
    factors = [LaurentSeries.one(vars, box)]
    for c, k in p.exp_terms:
        c = Fraction(c)
        coeffs, term = [], Fraction(1)
        for n in range(box[k][1] + 1):
            if n:
                term = term * c / n
            coeffs.append(term)
        factors.append(_univariate(coeffs, k, vars, box))
    for unit, exponent in p.unit_terms:
        e = exponent.evaluate(values)
        coeffs = [binomial(e, n) * (unit.sign ** n) for n in range(box[unit.var][1] + 1)]
        factors.append(_univariate(coeffs, unit.var, vars, box))
    return mul(*factors)


# ---------------------------------------------------------------------------
# substitution
# ---------------------------------------------------------------------------

def _unit_expansions(
    units: Sequence[BinomialUnit], t: Sequence[int], w: Sequence[int], box: Box
) -> Optional[List[Tuple[int, List[Fraction]]]]:
    per_var: Dict[int, List[Fraction]] = {}
    for unit, power in zip(units, t):
        if not power:
            continue
        reach = box[unit.var][1] - w[unit.var]
        if reach < 0:
            return None
        series = [binomial(power, n) * (unit.sign ** n) for n in range(reach + 1)]
        if unit.var in per_var:
            prev = per_var[unit.var]
            per_var[unit.var] = [
                sum((prev[j] * series[n - j] for j in range(n + 1)), Fraction(0))
                for n in range(reach + 1)
            ]
        else:
            per_var[unit.var] = series
    return sorted(per_var.items())


def substitute(
    s: LaurentSeries, m: KahlerMap, target_box: Sequence[Sequence[int]], slack: Optional[int] = None
) -> LaurentSeries:
    """Apply ``m`` to every monomial of ``s`` and truncate to ``target_box``.

    A unit expansion carries source terms from below the target box into it.
    Terms whose image lies more than ``slack`` (default ``UNIT_SLACK``) below
    the box in a unit variable are treated as absent; the source box has to
    cover everything above that, otherwise InsufficientBoxError is raised.
    """
    if s.vars != m.source:
        raise SeriesError(f"Series variables {s.vars} do not match map source {m.source}")
    if slack is None:
        slack = settings.UNIT_SLACK
    tbox = normalize_box(target_box)
    required = m.preimage_box(tbox, slack)
    if not box_subset(required, s.box):
        raise InsufficientBoxError(
            f"Substitution into {tbox} needs source box {required}, series has {s.box}",
            required=required,
            available=s.box,
        )
    out: Dict[Exponent, Fraction] = {}
    for v, c in s.terms.items():
        sign, w, t = m.image(v)
        coeff = c if sign > 0 else -c
        if not any(t):
            if box_contains(tbox, w):
                out[w] = out.get(w, Fraction(0)) + coeff
            continue
        expansions = _unit_expansions(m.units, t, w, tbox)
        if expansions is None:
            continue
        ranges = [range(len(coeffs)) for _, coeffs in expansions]
        for shifts in product(*ranges):
            e = list(w)
            value = coeff
            for (var, coeffs), n in zip(expansions, shifts):
                e[var] += n
                value *= coeffs[n]
            if value and box_contains(tbox, e):
                key = tuple(e)
                out[key] = out.get(key, Fraction(0)) + value
    return LaurentSeries._raw(m.target, tbox, {e: c for e, c in out.items() if c})
