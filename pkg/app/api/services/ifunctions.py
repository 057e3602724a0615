# app/api/services/ifunctions.py
"""Truncated quasimap I-functions restricted to torus-fixed points (u = 1).

A degree assigns an integer n^i_a to every Chern-root slot of every gauge node;
frame slots carry degree 0.  The term of a degree is

    prod_{i, a != b} sfr(x^i_a - x^i_b, n^i_a - n^i_b)
    * prod_{arrows i->j} 1/sfr(x^i_a - x^j_b, n^i_a - n^j_b)
    * prod_{cutting weights (i, j)} sfr(x^i_a - x^j_b, n^i_a - n^j_b)

times the monomial prod_i q_i^{sum_a n^i_a}.  An arrow factor whose two slots
restrict to the same parameter vanishes unless n^i_a >= n^j_b; these matched
pairs drive the enumeration bounds.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import inf
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import structural_rank

from app.api.services.catalogue import FamilyModel, check_block_ranks, family_model, validate_ranks
from app.api.services.fixed_points import FixedPoint, enumerate_fixed_points, generic_point, is_fixed_point, point_from_json
from app.api.services.quiver import Quiver
from app.api.services.series import (
    Box,
    KahlerMap,
    LaurentSeries,
    box_contains,
    format_fraction,
    inv_sfr,
    normalize_box,
    oriented_box,
    sfr,
    widen_box,
)
from app.core.config import settings
from app.core.errors import DomainError, FamilyError, PoleError, SeriesError, UsageError

logger = logging.getLogger(__name__)

DegreeVector = Dict[int, Tuple[int, ...]]

MAX_PROPAGATION_ROUNDS = 200


def _values(at) -> Mapping[str, Fraction]:
    return at.as_dict() if hasattr(at, "as_dict") else at


def _value(values: Mapping[str, Fraction], name: str) -> Fraction:
    try:
        return Fraction(values[name])
    except KeyError:
        raise DomainError(f"Equivariant parameter {name} has no value") from None


# ---------------------------------------------------------------------------
# layout of slots and factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorSpec:
    """One pairwise factor; its degree argument is n[plus] - n[minus] (frame slots count 0)."""

    kind: str
    plus_name: str
    minus_name: str
    plus: Optional[int]
    minus: Optional[int]

    @property
    def matched(self) -> bool:
        return self.plus_name == self.minus_name


@dataclass(frozen=True)
class WindowConstraint:
    """lo <= sum_v coefficients[v] * T_v <= hi over the node totals T of a series."""

    coefficients: Tuple[int, ...]
    lo: int
    hi: int

    def widened(self, amount: int) -> "WindowConstraint":
        return WindowConstraint(self.coefficients, self.lo - amount, self.hi + amount)

    def holds(self, totals: Sequence[int]) -> bool:
        value = sum(c * t for c, t in zip(self.coefficients, totals))
        return self.lo <= value <= self.hi


def window_constraints(kmap: KahlerMap, target_box: Sequence[Sequence[int]], slack: int) -> Tuple[WindowConstraint, ...]:
    """Keep the source terms whose image under ``kmap`` can land in ``target_box``.

    Unit expansions only raise the exponent of their variable, so those targets
    admit images up to ``slack`` below the box.
    """
    target_box = normalize_box(target_box)
    unit_vars = set(kmap.unit_variables)
    out = []
    for c, (lo, hi) in enumerate(target_box):
        coefficients = tuple(row[c] for row in kmap.exponents)
        out.append(WindowConstraint(coefficients, lo - (slack if c in unit_vars else 0), hi))
    return tuple(out)


class Layout:
    """Slots in enumeration order together with the factor and constraint structure."""

    def __init__(self, model: FamilyModel, point: FixedPoint):
        self.model = model
        self.point = point
        self.variables = model.variables
        var_index = {node: i for i, node in enumerate(model.gauge_ids)}
        self.slots: List[Tuple[int, int, str]] = []
        self.node_slots: Dict[int, List[int]] = {node: [] for node in model.gauge_ids}
        for node in model.order:
            for a, label in enumerate(point.subset(node)):
                self.node_slots[node].append(len(self.slots))
                self.slots.append((node, a, f"lambda{label}"))
        self.slot_var = [var_index[node] for node, _, _ in self.slots]

        self.factors: List[FactorSpec] = []
        for node in model.gauge_ids:
            for s in self.node_slots[node]:
                for t in self.node_slots[node]:
                    if s != t:
                        self.factors.append(FactorSpec("root", self.slots[s][2], self.slots[t][2], s, t))
        for kind, pairs in (("arrow", model.arrows), ("lefschetz", model.lefschetz)):
            for i, j in pairs:
                for s, s_name in self._endpoints(i):
                    for t, t_name in self._endpoints(j):
                        if s is None and t is None:
                            continue
                        self.factors.append(FactorSpec(kind, s_name, t_name, s, t))

        # n[plus] - n[minus] >= 0 for matched arrows
        self.diffs = [(f.plus, f.minus) for f in self.factors if f.kind == "arrow" and f.matched]
        self.attached: List[List[int]] = [[] for _ in self.slots]
        for index, f in enumerate(self.factors):
            pos = max(p for p in (f.plus, f.minus) if p is not None)
            self.attached[pos].append(index)
        self.partners: List[List[Tuple[Optional[int], int]]] = [[] for _ in self.slots]
        for plus, minus in self.diffs:
            if plus is not None:
                self.partners[plus].append((minus, 1))
            if minus is not None:
                self.partners[minus].append((plus, -1))

    def _endpoints(self, node: int) -> List[Tuple[Optional[int], str]]:
        if self.model.is_frame(node):
            return [(None, name) for name in self.model.frame_params(node)]
        return [(s, self.slots[s][2]) for s in self.node_slots[node]]

    def slots_of_var(self, v: int) -> List[int]:
        return self.node_slots[self.model.gauge_ids[v]]

    def degree_vector(self, n: Sequence[int]) -> DegreeVector:
        return {node: tuple(n[s] for s in slots) for node, slots in self.node_slots.items()}

    def flatten(self, degrees: Mapping[int, Sequence[int]]) -> List[int]:
        n = [0] * len(self.slots)
        for node, slots in self.node_slots.items():
            values = tuple(degrees.get(node, (0,) * len(slots)))
            if len(values) != len(slots):
                raise SeriesError(f"Degree for node {node} needs {len(slots)} entries, got {len(values)}")
            for s, v in zip(slots, values):
                n[s] = int(v)
        return n

    def bind(self, at) -> List[Tuple[str, Fraction, Optional[int], Optional[int]]]:
        values = _values(at)
        return [
            (f.kind, _value(values, f.plus_name) - _value(values, f.minus_name), f.plus, f.minus)
            for f in self.factors
        ]


def _factor_value(kind: str, x: Fraction, plus: Optional[int], minus: Optional[int], n: Sequence[int]) -> Fraction:
    a = (n[plus] if plus is not None else 0) - (n[minus] if minus is not None else 0)
    return inv_sfr(x, a) if kind == "arrow" else sfr(x, a)


# ---------------------------------------------------------------------------
# interval propagation
# ---------------------------------------------------------------------------

Linear = Tuple[Tuple[Tuple[int, int], ...], float, float]


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _propagate(constraints: Sequence[Linear], lower: List[float], upper: List[float]) -> bool:
    """Tighten slot bounds to a fixpoint; False when the system is infeasible."""
    for _ in range(MAX_PROPAGATION_ROUNDS):
        changed = False
        for terms, lo, hi in constraints:
            mins = [min(a * lower[s], a * upper[s]) for s, a in terms]
            maxs = [max(a * lower[s], a * upper[s]) for s, a in terms]
            total_min, total_max = sum(mins), sum(maxs)
            for k, (s, a) in enumerate(terms):
                rest_min = total_min - mins[k] if mins[k] != -inf else sum(m for j, m in enumerate(mins) if j != k)
                rest_max = total_max - maxs[k] if maxs[k] != inf else sum(m for j, m in enumerate(maxs) if j != k)
                if hi != inf and rest_min != -inf:
                    bound = int(hi - rest_min)
                    if a > 0:
                        new = bound // a
                        if new < upper[s]:
                            upper[s], changed = new, True
                    else:
                        new = _ceil_div(bound, a)
                        if new > lower[s]:
                            lower[s], changed = new, True
                if lo != -inf and rest_max != inf:
                    bound = int(lo - rest_max)
                    if a > 0:
                        new = _ceil_div(bound, a)
                        if new > lower[s]:
                            lower[s], changed = new, True
                    else:
                        new = bound // a
                        if new < upper[s]:
                            upper[s], changed = new, True
                if lower[s] > upper[s]:
                    return False
        if not changed:
            return True
    return True


def _diff_constraints(layout: Layout) -> List[Linear]:
    out = []
    for plus, minus in layout.diffs:
        terms = tuple((s, a) for s, a in ((plus, 1), (minus, -1)) if s is not None)
        out.append((terms, 0, inf))
    return out


def _total_constraints(layout: Layout, box: Box, windows: Sequence[WindowConstraint]) -> List[Linear]:
    out = []
    for v, (lo, hi) in enumerate(box):
        terms = tuple((s, 1) for s in layout.slots_of_var(v))
        if terms:
            out.append((terms, lo, hi))
    for w in windows:
        terms = tuple((s, w.coefficients[layout.slot_var[s]]) for s in range(len(layout.slots)) if w.coefficients[layout.slot_var[s]])
        if terms:
            out.append((terms, w.lo, w.hi))
    return out


def orientation(point: FixedPoint) -> Tuple[int, ...]:
    """Sign forced on each node's degrees by the matched arrows alone: +1, -1 or 0."""
    model = family_model(point.family, point.ranks)
    layout = Layout(model, point)
    lower = [-inf] * len(layout.slots)
    upper = [inf] * len(layout.slots)
    _propagate(_diff_constraints(layout), lower, upper)
    out = []
    for v in range(len(layout.variables)):
        slots = layout.slots_of_var(v)
        if all(lower[s] >= 0 for s in slots):
            out.append(1)
        elif all(upper[s] <= 0 for s in slots):
            out.append(-1)
        else:
            out.append(0)
    return tuple(out)


def default_box(point: FixedPoint, radius: Optional[int] = None) -> Box:
    return oriented_box(orientation(point), settings.DEFAULT_BOX if radius is None else radius)


# ---------------------------------------------------------------------------
# effectivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectivityBlock:
    """Matrix of entries sign * (n[row] - n[col]) between a node and its containers."""

    node: int
    rows: Tuple[int, ...]
    columns: Tuple[Optional[int], ...]
    signs: Tuple[int, ...]


@dataclass(frozen=True)
class EffectivityFilter:
    """Per gauge node, the degree matrix against the nodes containing its labels.

    Condition (1): every row holds an entry >= 0.  Condition (2): the pattern of
    entries >= 0 has full structural rank.
    """

    blocks: Tuple[EffectivityBlock, ...]

    @classmethod
    def for_layout(cls, layout: Layout) -> "EffectivityFilter":
        model = layout.model
        arrows = set(model.arrows)
        blocks = []
        for node in model.gauge_ids:
            rows = tuple(layout.node_slots[node])
            if not rows:
                continue
            columns: List[Optional[int]] = []
            signs: List[int] = []
            for parent in model.parents_of(node):
                if (node, parent) in arrows:
                    sign = 1
                elif (parent, node) in arrows:
                    sign = -1
                else:
                    continue
                if model.is_frame(parent):
                    width = len(model.frame_params(parent))
                    columns.extend([None] * width)
                    signs.extend([sign] * width)
                else:
                    columns.extend(layout.node_slots[parent])
                    signs.extend([sign] * layout.model.rank(parent))
            if columns:
                blocks.append(EffectivityBlock(node, rows, tuple(columns), tuple(signs)))
        return cls(tuple(blocks))

    def matrix(self, block: EffectivityBlock, n: Sequence[int]) -> np.ndarray:
        row_vals = np.array([n[s] for s in block.rows], dtype=np.int64)
        col_vals = np.array([n[c] if c is not None else 0 for c in block.columns], dtype=np.int64)
        signs = np.array(block.signs, dtype=np.int64)
        return (row_vals[:, None] - col_vals[None, :]) * signs[None, :]

    def accepts(self, n: Sequence[int]) -> bool:
        for block in self.blocks:
            pattern = self.matrix(block, n) >= 0
            if not pattern.any(axis=1).all():
                return False
            rank = structural_rank(csr_matrix(pattern.astype(np.int8)))
            if rank < min(pattern.shape):
                return False
        return True


def effectivity_prune(degrees: Sequence[int], f: EffectivityFilter) -> bool:
    """True when the flattened degree passes every block of ``f``."""
    return f.accepts(degrees)


# ---------------------------------------------------------------------------
# restricted I-function
# ---------------------------------------------------------------------------

def _model_for(point: FixedPoint, quiver: Optional[Quiver]) -> FamilyModel:
    if quiver is not None and quiver.family and quiver.family != point.family:
        raise FamilyError(f"Point of {point.family} does not belong to a {quiver.family} quiver")
    if not is_fixed_point(point):
        raise FamilyError(f"{point.labels} is not a fixed point of {point.family}")
    return family_model(point.family, point.ranks)


def term_value(point: FixedPoint, at, degrees: Mapping[int, Sequence[int]]) -> Fraction:
    """Coefficient contributed by one degree vector."""
    layout = Layout(family_model(point.family, point.ranks), point)
    n = layout.flatten(degrees)
    value = Fraction(1)
    for kind, x, plus, minus in layout.bind(at):
        value *= _factor_value(kind, x, plus, minus, n)
        if not value:
            break
    return value


def lefschetz_factor(point: FixedPoint, at, degrees: Mapping[int, Sequence[int]]) -> Fraction:
    """Product of the cutting-weight factors of ``point``'s family at one degree."""
    model = family_model(point.family, point.ranks)
    layout = Layout(model, point)
    n = layout.flatten(degrees)
    value = Fraction(1)
    for kind, x, plus, minus in layout.bind(at):
        if kind == "lefschetz":
            value *= _factor_value(kind, x, plus, minus, n)
    return value


def restricted_quiver_I(
    point: FixedPoint,
    at,
    box: Optional[Sequence[Sequence[int]]] = None,
    *,
    quiver: Optional[Quiver] = None,
    prune: bool = True,
    window: Sequence[WindowConstraint] = (),
    widen: int = 0,
) -> LaurentSeries:
    """Restricted I-function of ``point`` at the parameter values ``at``, truncated to ``box``.

    ``window`` drops degrees whose node totals fall outside the given linear
    windows; ``widen`` enlarges both the box and the windows.  ``prune=False``
    drops the matched-arrow bounds and the effectivity filter, walking one
    layer past the propagated slot bounds, so vanishing terms are evaluated.
    """
    model = _model_for(point, quiver)
    layout = Layout(model, point)
    box = default_box(point) if box is None else normalize_box(box)
    if len(box) != len(layout.variables):
        raise SeriesError(f"Box has {len(box)} intervals, {point.family} has {len(layout.variables)} variables")
    if widen:
        box = widen_box(box, widen)
        window = tuple(w.widened(widen) for w in window)
    window = tuple(window)
    factors = layout.bind(at)
    k = len(layout.slots)
    nvars = len(layout.variables)

    for v, (lo, hi) in enumerate(box):
        if not layout.slots_of_var(v) and not lo <= 0 <= hi:
            return LaurentSeries(layout.variables, box)

    lower = [-inf] * k
    upper = [inf] * k
    if not _propagate(_diff_constraints(layout) + _total_constraints(layout, box, window), lower, upper):
        logger.debug(f"{point.family} {point.labels}: enumeration domain is empty")
        return LaurentSeries(layout.variables, box)
    unbounded = [layout.slots[s] for s in range(k) if lower[s] == -inf or upper[s] == inf]
    if unbounded:
        raise DomainError(
            f"Degrees of {point.family} at {point.labels} are unbounded in {box} for slots {unbounded}",
            family=point.family,
            box=box,
        )
    lower = [int(v) for v in lower]
    upper = [int(v) for v in upper]
    if not prune:
        # one layer past both the propagated bounds and the box
        for s in range(k):
            lo, hi = box[layout.slot_var[s]]
            lower[s] = min(lower[s], lo) - 1
            upper[s] = max(upper[s], hi) + 1
    logger.debug(f"{point.family} {point.labels}: slot bounds {list(zip(lower, upper))}")

    effectivity = EffectivityFilter.for_layout(layout)
    tot_lo = [max(box[v][0], sum(lower[s] for s in layout.slots_of_var(v))) for v in range(nvars)]
    tot_hi = [min(box[v][1], sum(upper[s] for s in layout.slots_of_var(v))) for v in range(nvars)]
    suffix_lo = [0] * k
    suffix_hi = [0] * k
    closes: List[Optional[int]] = [None] * k
    for v in range(nvars):
        slots = layout.slots_of_var(v)
        run_lo = run_hi = 0
        for s in reversed(slots):
            suffix_lo[s], suffix_hi[s] = run_lo, run_hi
            run_lo += lower[s]
            run_hi += upper[s]
        if slots:
            closes[slots[-1]] = v
    completed = [not layout.slots_of_var(v) for v in range(nvars)]
    debug = logger.isEnabledFor(logging.DEBUG)

    n = [0] * k
    totals = [0] * nvars
    terms: Dict[Tuple[int, ...], Fraction] = {}

    def window_feasible() -> bool:
        for w in window:
            low = high = 0
            for v, c in enumerate(w.coefficients):
                if not c:
                    continue
                if completed[v]:
                    low += c * totals[v]
                    high += c * totals[v]
                else:
                    low += min(c * tot_lo[v], c * tot_hi[v])
                    high += max(c * tot_lo[v], c * tot_hi[v])
            if low > w.hi or high < w.lo:
                return False
        return True

    def leaf(value: Optional[Fraction]) -> None:
        e = tuple(totals)
        if not box_contains(box, e) or not all(w.holds(e) for w in window):
            return
        if prune and not effectivity_prune(n, effectivity):
            return
        if value is None:
            raise PoleError(f"{point.family} degree {layout.degree_vector(n)} hits a pole", degree=list(n))
        if debug:
            logger.debug(f"{point.family} degree {layout.degree_vector(n)} -> {format_fraction(value)}")
        if value:
            terms[e] = terms.get(e, Fraction(0)) + value

    def unpruned_product(partial: Optional[Fraction], pos: int) -> Optional[Fraction]:
        # None marks a pending pole; an exact zero factor absorbs it
        current = partial
        for index in layout.attached[pos]:
            if current == 0:
                break
            kind, x, plus, minus = factors[index]
            try:
                value = _factor_value(kind, x, plus, minus, n)
            except PoleError:
                current = None
                continue
            if current is not None or value == 0:
                current = value if current is None else current * value
        return current

    def walk(pos: int, partial: Optional[Fraction]) -> None:
        if pos == k:
            leaf(partial)
            return
        v = layout.slot_var[pos]
        lo, hi = lower[pos], upper[pos]
        if prune:
            for other, role in layout.partners[pos]:
                if other is not None and other < pos:
                    if role > 0:
                        lo = max(lo, n[other])
                    else:
                        hi = min(hi, n[other])
        lo = max(lo, box[v][0] - totals[v] - suffix_hi[pos])
        hi = min(hi, box[v][1] - totals[v] - suffix_lo[pos])
        for value in range(lo, hi + 1):
            n[pos] = value
            totals[v] += value
            if prune:
                current = partial
                for index in layout.attached[pos]:
                    kind, x, plus, minus = factors[index]
                    current *= _factor_value(kind, x, plus, minus, n)
                    if not current:
                        break
            else:
                current = unpruned_product(partial, pos)
            if current or not prune:
                closing = closes[pos]
                if closing is not None:
                    completed[closing] = True
                if not (prune and closing is not None and not window_feasible()):
                    walk(pos + 1, current)
                if closing is not None:
                    completed[closing] = False
            totals[v] -= value
        n[pos] = 0

    walk(0, Fraction(1))
    return LaurentSeries._raw(layout.variables, box, {e: c for e, c in terms.items() if c})


# ---------------------------------------------------------------------------
# building block, explicit formulas
# ---------------------------------------------------------------------------

def fiber_factor(lam: Fraction, etas: Sequence[Fraction], d: int) -> Fraction:
    """prod_A prod_{l=0}^{d-1} (eta_A - lam - l), the numerator of the S^m fiber."""
    value = Fraction(1)
    for eta in etas:
        value *= inv_sfr(Fraction(eta) - Fraction(lam), -d)
    return value


def _compositions(length: int, total_lo: int, total_hi: int, sign: int):
    """Vectors of the given sign (componentwise) whose sum lies in the window."""
    if length == 0:
        if total_lo <= 0 <= total_hi:
            yield ()
        return
    reach = max(abs(total_lo), abs(total_hi))
    values = range(0, reach + 1) if sign > 0 else range(-reach, 1)
    for d in product(values, repeat=length):
        if total_lo <= sum(d) <= total_hi:
            yield d


def _block_parameters(family: str, r: int, n: int, m: int, point: FixedPoint, at):
    if point.family != family:
        raise FamilyError(f"Point of {point.family} is not a {family} point")
    values = _values(at)
    lambdas = [_value(values, f"lambda{f}") for f in range(1, n + 1)]
    etas = [_value(values, f"eta{a}") for a in range(1, m + 1)]
    roots = [_value(values, f"lambda{label}") for label in point.subset(1)]
    return lambdas, etas, roots


def _root_factor(roots: Sequence[Fraction], d: Sequence[int]) -> Fraction:
    value = Fraction(1)
    for i, x in enumerate(roots):
        for j, y in enumerate(roots):
            if i != j:
                value *= sfr(x - y, d[i] - d[j])
    return value


def building_block_I(r: int, n: int, m: int, point: FixedPoint, at, box) -> LaurentSeries:
    """Primal block S^m -> Gr(r, n), summed over d in Z^r_{>=0}."""
    check_block_ranks((r, n, m))
    lambdas, etas, roots = _block_parameters("GrBlock", r, n, m, point, at)
    box = normalize_box(box)
    terms: Dict[Tuple[int, ...], Fraction] = {}
    for d in _compositions(r, max(box[0][0], 0), box[0][1], 1):
        value = _root_factor(roots, d)
        for x, di in zip(roots, d):
            value *= fiber_factor(x, etas, di)
            for lam in lambdas:
                value *= inv_sfr(x - lam, di)
        if value:
            e = (sum(d),)
            terms[e] = terms.get(e, Fraction(0)) + value
    return LaurentSeries(("q1",), box, terms)


def building_block_I_dual(r: int, n: int, m: int, point: FixedPoint, at, box) -> LaurentSeries:
    """Dual block (S^vee)^m -> Gr(n - r, n), summed over d in Z^{n-r}_{<=0}."""
    check_block_ranks((r, n, m))
    lambdas, etas, roots = _block_parameters("GrBlockDual", r, n, m, point, at)
    box = normalize_box(box)
    terms: Dict[Tuple[int, ...], Fraction] = {}
    for d in _compositions(n - r, box[0][0], min(box[0][1], 0), -1):
        value = _root_factor(roots, d)
        for y, di in zip(roots, d):
            for eta in etas:
                value *= sfr(eta - y, -di)
            for lam in lambdas:
                value *= inv_sfr(lam - y, -di)
        if value:
            e = (sum(d),)
            terms[e] = terms.get(e, Fraction(0)) + value
    return LaurentSeries(("q1",), box, terms)


def series_payload(point: FixedPoint, at, series: LaurentSeries) -> Dict[str, Any]:
    return {
        "point": point.to_json(),
        "parameters": at.to_json() if hasattr(at, "to_json") else {k: format_fraction(Fraction(v)) for k, v in at.items()},
        "series": series.to_json(),
    }


def select_point(family: str, ranks: Sequence[int], index: int = 0, subsets: Optional[Sequence[Sequence[int]]] = None) -> FixedPoint:
    ranks = validate_ranks(family, ranks)
    if subsets is not None:
        return point_from_json({"family": family, "ranks": list(ranks), "subsets": [list(s) for s in subsets]})
    points = enumerate_fixed_points(family, ranks)
    if not 0 <= index < len(points):
        raise UsageError(f"Point index {index} out of range; {family} at {list(ranks)} has {len(points)} fixed points")
    return points[index]


def restricted_series(
    family: str,
    ranks: Sequence[int],
    index: int = 0,
    subsets: Optional[Sequence[Sequence[int]]] = None,
    radius: Optional[int] = None,
    seed: Optional[int] = None,
    prune: bool = True,
) -> Dict[str, Any]:
    """Restricted series of one selected fixed point at a seeded generic point."""
    point = select_point(family, ranks, index, subsets)
    radius = settings.DEFAULT_BOX if radius is None else radius
    seed = settings.DEFAULT_SEED if seed is None else seed
    at = generic_point(family_model(family, point.ranks).parameter_names(), seed, radius)
    series = restricted_quiver_I(point, at, default_box(point, radius), prune=prune)
    return series_payload(point, at, series)
