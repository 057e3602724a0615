# app/api/services/fixed_points.py
"""Torus-fixed points of the catalogued families, the bijections between dual
pairs, and generic evaluation points for the equivariant parameters."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Any, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.api.services.catalogue import (
    D3_CHAIN,
    REVERSE_TRANSITIONS,
    TRANSITIONS,
    FamilyModel,
    check_block_ranks,
    check_d3_ranks,
    check_star_ranks,
    d3_family_ranks,
    family_model,
    validate_ranks,
)
from app.api.services.series import format_fraction, parse_fraction
from app.core.config import settings
from app.core.errors import CatalogueError, DomainError, FamilyError

logger = logging.getLogger(__name__)

Subsets = Tuple[Tuple[int, Tuple[int, ...]], ...]

# gauge node -> nodes whose labels it must avoid, on top of the parent containment
EXCLUSIONS: Dict[str, Dict[int, Tuple[int, ...]]] = {
    "Z1": {1: (3,), 2: (3,)},
    "Z2": {2: (3,)},
    "Z3": {1: (3,), 2: (3,)},
    "Zs": {5: (3, 4)},
}

# dual pairs beyond the mutation transitions
EXTRA_PAIRS = {("X9", "X0")}


def _label(name: str) -> Optional[int]:
    return int(name[len("lambda"):]) if name.startswith("lambda") else None


def frame_labels(model: FamilyModel, node: int) -> Tuple[int, ...]:
    labels = (_label(name) for name in model.frame_params(node))
    return tuple(label for label in labels if label is not None)


@dataclass(frozen=True)
class FixedPoint:
    """A torus-fixed point: one sorted label subset per gauge node.

    Slot ``a`` of node ``i`` carries the Chern root x^i_a, which restricts to
    the parameter ``lambda{label}``.
    """

    family: str
    ranks: Tuple[int, ...]
    subsets: Subsets

    @classmethod
    def make(cls, family: str, ranks: Sequence[int], subsets: Mapping[int, Sequence[int]]) -> "FixedPoint":
        return cls(
            family,
            tuple(int(r) for r in ranks),
            tuple((node, tuple(sorted(int(v) for v in labels))) for node, labels in sorted(subsets.items())),
        )

    def subset(self, node: int) -> Tuple[int, ...]:
        for n, labels in self.subsets:
            if n == node:
                return labels
        raise FamilyError(f"{self.family} point has no gauge node {node}")

    def as_sets(self) -> Dict[int, FrozenSet[int]]:
        return {node: frozenset(labels) for node, labels in self.subsets}

    @property
    def labels(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(labels for _, labels in self.subsets)

    def chern_assignment(self) -> Dict[Tuple[int, int], str]:
        return {
            (node, slot): f"lambda{label}"
            for node, labels in self.subsets
            for slot, label in enumerate(labels)
        }

    def to_json(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "ranks": list(self.ranks),
            "subsets": [list(labels) for _, labels in self.subsets],
        }


def point_from_json(payload: Mapping[str, Any]) -> FixedPoint:
    family, ranks = payload["family"], payload["ranks"]
    model = family_model(family, ranks)
    subsets = payload["subsets"]
    if len(subsets) != len(model.gauge_ids):
        raise FamilyError(f"{family} points have {len(model.gauge_ids)} subsets, got {len(subsets)}")
    point = FixedPoint.make(family, ranks, dict(zip(model.gauge_ids, subsets)))
    if not is_fixed_point(point):
        raise FamilyError(f"{point.labels} is not a fixed point of {family}")
    return point


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _allowed(model: FamilyModel, node: int, chosen: Mapping[int, Tuple[int, ...]]) -> Tuple[int, ...]:
    pool = set()
    for parent in model.parents_of(node):
        pool.update(frame_labels(model, parent) if model.is_frame(parent) else chosen[parent])
    for other in EXCLUSIONS.get(model.name, {}).get(node, ()):
        pool.difference_update(chosen[other])
    return tuple(sorted(pool))


def iter_fixed_points(family: str, ranks: Sequence[int]) -> Iterator[FixedPoint]:
    """Fixed points in lexicographic order of the enumeration order's subsets."""
    model = family_model(family, ranks)
    order = model.order

    def walk(depth: int, chosen: Dict[int, Tuple[int, ...]]) -> Iterator[FixedPoint]:
        if depth == len(order):
            yield FixedPoint.make(family, model.ranks, chosen)
            return
        node = order[depth]
        for labels in combinations(_allowed(model, node, chosen), model.rank(node)):
            chosen[node] = labels
            yield from walk(depth + 1, chosen)
        chosen.pop(node, None)

    yield from walk(0, {})


def enumerate_fixed_points(family: str, ranks: Sequence[int]) -> List[FixedPoint]:
    points = list(iter_fixed_points(family, ranks))
    logger.debug(f"Enumerated {len(points)} fixed points of {family} at ranks {list(ranks)}")
    return points


def is_fixed_point(point: FixedPoint) -> bool:
    """Independent re-check of the set-builder constraints."""
    model = family_model(point.family, point.ranks)
    sets = point.as_sets()
    if set(sets) != set(model.gauge_ids):
        return False
    for node in model.gauge_ids:
        labels = sets[node]
        if len(labels) != model.rank(node) or len(point.subset(node)) != len(labels):
            return False
        container = set()
        for parent in model.parents_of(node):
            container |= set(frame_labels(model, parent)) if model.is_frame(parent) else sets[parent]
        if not labels <= container:
            return False
    for node, others in EXCLUSIONS.get(point.family, {}).items():
        if any(sets[node] & sets[other] for other in others):
            return False
    return True


def distinguished_point(family: str, ranks: Sequence[int]) -> FixedPoint:
    """Fixed point built from the leading labels of every container."""
    try:
        return next(iter_fixed_points(family, ranks))
    except StopIteration:
        raise FamilyError(f"{family} has no fixed points at ranks {list(ranks)}") from None


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def closed_form_count(family: str, ranks: Sequence[int]) -> int:
    if family in ("Z1", "Z3"):
        n1, n2, n3, n4 = check_d3_ranks(ranks)
        r1, r2, _ = d3_family_ranks(family, ranks)
        return comb(n4, n4 - n3) * comb(n3, r1) * comb(n3, r2)
    if family == "Z2":
        n1, n2, n3, n4 = check_d3_ranks(ranks)
        return comb(n4, n2) * comb(n2, n4 - n3) * comb(n3, n2)
    if family in D3_CHAIN:
        n4 = check_d3_ranks(ranks)[3]
        r1, r2, r3 = d3_family_ranks(family, ranks)
        return comb(n4, r3) * comb(r3, r1) * comb(r3, r2)
    if family in ("Xs", "Zs"):
        n = (0,) + check_star_ranks(ranks)
        top = comb(n[8], n[6]) * comb(n[9], n[7])
        legs = comb(n[5], n[3]) * comb(n[5], n[4]) * comb(n[3], n[1]) * comb(n[4], n[2])
        centre = n[5] if family == "Xs" else n[6] + n[7] - n[5]
        return top * comb(n[6] + n[7], centre) * legs
    if family in ("GrBlock", "GrBlockDual"):
        r, n, _ = check_block_ranks(ranks)
        return comb(n, r)
    raise CatalogueError(f"Unknown family {family!r}")


def dual_family(family: str) -> str:
    for (src, _), dst in TRANSITIONS.items():
        if src == family:
            return dst
    if family == "X9":
        return "X0"
    for (src, _), dst in REVERSE_TRANSITIONS.items():
        if src == family:
            return dst
    raise CatalogueError(f"{family} has no catalogued dual")


@dataclass(frozen=True)
class CardinalityReport:
    family: str
    ranks: Tuple[int, ...]
    enumerated: int
    closed_form: int
    dual_family: str
    dual_enumerated: int

    @property
    def ok(self) -> bool:
        return self.enumerated == self.closed_form == self.dual_enumerated

    def to_json(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "ranks": list(self.ranks),
            "enumerated": self.enumerated,
            "closed_form": self.closed_form,
            "dual_family": self.dual_family,
            "dual_enumerated": self.dual_enumerated,
            "ok": self.ok,
        }


def cardinality_check(family: str, ranks: Sequence[int]) -> CardinalityReport:
    dual = dual_family(family)
    report = CardinalityReport(
        family,
        tuple(ranks),
        sum(1 for _ in iter_fixed_points(family, ranks)),
        closed_form_count(family, ranks),
        dual,
        sum(1 for _ in iter_fixed_points(dual, ranks)),
    )
    if not report.ok:
        logger.warning(f"Cardinality mismatch for {family} at {list(ranks)}: {report.to_json()}")
    return report


# ---------------------------------------------------------------------------
# bijections between dual pairs
# ---------------------------------------------------------------------------

def _sorted(labels) -> Tuple[int, ...]:
    return tuple(sorted(labels))


def _d3_iota(src: str, dst: str, s: Mapping[int, FrozenSet[int]], full: FrozenSet[int]) -> Dict[int, Tuple[int, ...]]:
    l1, l2, l3 = s[1], s[2], s[3]
    if (src, dst) in {("X0", "Z1"), ("Z1", "X0"), ("Z3", "X4"), ("X4", "Z3")}:
        return {1: _sorted(l1), 2: _sorted(l2), 3: _sorted(full - l3)}
    if (src, dst) in {("Z1", "Z2"), ("Z2", "Z1")}:
        return {1: _sorted(full - l1), 2: _sorted(l2), 3: _sorted(l3)}
    if (src, dst) == ("Z2", "Z3"):
        return {1: _sorted(l2), 2: _sorted(full - l1), 3: _sorted(l3)}
    if (src, dst) == ("Z3", "Z2"):
        return {1: _sorted(full - l2), 2: _sorted(l1), 3: _sorted(l3)}
    if (src, dst) in {("X4", "X5"), ("X5", "X4"), ("X7", "X8"), ("X8", "X7")}:
        return {1: _sorted(l3 - l1), 2: _sorted(l2), 3: _sorted(l3)}
    if (src, dst) in {("X5", "X6"), ("X6", "X5"), ("X8", "X9"), ("X9", "X8")}:
        return {1: _sorted(l1), 2: _sorted(l3 - l2), 3: _sorted(l3)}
    if (src, dst) in {("X6", "X7"), ("X7", "X6")}:
        return {1: _sorted(l1), 2: _sorted(l2), 3: _sorted(l3)}
    if (src, dst) in {("X9", "X0"), ("X0", "X9")}:
        return {1: _sorted(l2), 2: _sorted(l1), 3: _sorted(l3)}
    raise CatalogueError(f"No fixed-point bijection from {src} to {dst}")


def is_dual_pair(src: str, dst: str) -> bool:
    pairs = set(TRANSITIONS.items()) | set(REVERSE_TRANSITIONS.items())
    known = {(a, b) for (a, _), b in pairs} | EXTRA_PAIRS | {(b, a) for a, b in EXTRA_PAIRS}
    return (src, dst) in known


def iota(pair: Tuple[str, str], point: FixedPoint) -> FixedPoint:
    """Canonical bijection from the fixed points of ``pair[0]`` to those of ``pair[1]``."""
    src, dst = pair
    if point.family != src:
        raise FamilyError(f"Point belongs to {point.family}, not {src}")
    if not is_dual_pair(src, dst):
        raise CatalogueError(f"{src} and {dst} are not a catalogued dual pair")
    if not is_fixed_point(point):
        raise FamilyError(f"{point.labels} is not a fixed point of {src}")
    s = point.as_sets()
    if src in D3_CHAIN:
        full = frozenset(range(1, check_d3_ranks(point.ranks)[3] + 1))
        image = _d3_iota(src, dst, s, full)
    elif src in ("Xs", "Zs"):
        image = {node: _sorted(labels) for node, labels in s.items()}
        image[5] = _sorted((s[6] | s[7]) - s[5])
    else:
        n = check_block_ranks(point.ranks)[1]
        image = {1: _sorted(frozenset(range(1, n + 1)) - s[1])}
    return FixedPoint.make(dst, point.ranks, image)


def iota_inverse(pair: Tuple[str, str], point: FixedPoint) -> FixedPoint:
    return iota((pair[1], pair[0]), point)


# ---------------------------------------------------------------------------
# generic evaluation points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquivariantPoint:
    """Exact rational values of the equivariant parameters, with their seed."""

    names: Tuple[str, ...]
    values: Tuple[Fraction, ...]
    seed: Optional[int] = None

    def as_dict(self) -> Dict[str, Fraction]:
        return dict(zip(self.names, self.values))

    def negated(self) -> "EquivariantPoint":
        return EquivariantPoint(self.names, tuple(-v for v in self.values), self.seed)

    def to_json(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "values": {name: format_fraction(v) for name, v in zip(self.names, self.values)},
        }

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "EquivariantPoint":
        values = payload.get("values", {})
        names = tuple(values)
        return cls(names, tuple(parse_fraction(values[n]) for n in names), payload.get("seed"))


def satisfies_window(values: Sequence[Fraction], truncation: int) -> bool:
    """No two values coincide or differ by an integer of magnitude at most 2*truncation."""
    bound = 2 * truncation
    for a, b in combinations(values, 2):
        diff = a - b
        if diff == 0 or (diff.denominator == 1 and abs(diff) <= bound):
            return False
    return True


def generic_point(
    names: Sequence[str],
    seed: int,
    truncation: int = 0,
    denominator: Optional[int] = None,
    spread: Optional[int] = None,
    max_draws: int = 64,
) -> EquivariantPoint:
    """Deterministic rationals (residue + denominator*k)/denominator, one per name.

    Residues are distinct and nonzero modulo the denominator, so no two values
    differ by an integer; the window check guards custom settings.
    """
    if truncation < 0:
        raise DomainError(f"Truncation must be nonnegative, got {truncation}")
    names = tuple(names)
    denominator = denominator or settings.GENERIC_DENOMINATOR
    spread = settings.GENERIC_SPREAD if spread is None else spread
    if len(names) >= denominator:
        raise DomainError(f"{len(names)} parameters exceed the {denominator - 1} available residues")
    rng = np.random.default_rng(seed)
    for _ in range(max_draws):
        residues = rng.choice(np.arange(1, denominator), size=len(names), replace=False)
        shifts = rng.integers(-spread, spread + 1, size=len(names))
        values = tuple(
            Fraction(int(r) + denominator * int(k), denominator) for r, k in zip(residues, shifts)
        )
        if satisfies_window(values, truncation):
            return EquivariantPoint(names, values, seed)
    raise DomainError(f"No generic point within {max_draws} draws for seed {seed}")


def parameter_names(family: str, ranks: Sequence[int]) -> Tuple[str, ...]:
    return family_model(family, ranks).parameter_names()


def fixed_point_listing(family: str, ranks: Sequence[int]) -> Dict[str, Any]:
    """Enumerated points with the distinguished one first, plus the cardinality check."""
    ranks = validate_ranks(family, ranks)
    points = enumerate_fixed_points(family, ranks)
    return {
        "family": family,
        "ranks": list(ranks),
        "points": [[list(labels) for labels in p.labels] for p in points],
        "distinguished": [list(labels) for labels in points[0].labels] if points else None,
        "cardinality": cardinality_check(family, ranks).to_json(),
    }
