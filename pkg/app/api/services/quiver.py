# app/api/services/quiver.py
"""Cluster quivers with ranks and potentials, and their mutation."""
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import ValidationError

from app.api.services.series import BinomialUnit, KahlerMap
from app.core.errors import (
    CatalogueError,
    PotentialReductionError,
    QuiverError,
    QuiverFileError,
)

logger = logging.getLogger(__name__)

# (src, dst, copy index among the parallel arrows src -> dst)
ArrowRef = Tuple[int, int, int]
Path = Tuple[ArrowRef, ...]


@dataclass(frozen=True)
class Node:
    id: int
    rank: int
    framed: bool = False


@dataclass(frozen=True)
class Arrow:
    src: int
    dst: int
    mult: int = 1


def canonical_rotation(path: Sequence[ArrowRef]) -> Path:
    path = tuple(path)
    if not path:
        return path
    return min(path[i:] + path[:i] for i in range(len(path)))


def rotate_to(path: Path, ref: ArrowRef) -> Path:
    i = path.index(ref)
    return path[i:] + path[:i]


@dataclass(frozen=True)
class CycleWord:
    coeff: Fraction
    path: Path

    @classmethod
    def make(cls, coeff, path: Sequence[ArrowRef]) -> "CycleWord":
        return cls(Fraction(coeff), canonical_rotation(tuple(tuple(r) for r in path)))


def canonical_potential(terms: Iterable[CycleWord]) -> Tuple[CycleWord, ...]:
    """Merge words equal up to rotation and sort them."""
    merged: Dict[Path, Fraction] = {}
    for word in terms:
        path = canonical_rotation(word.path)
        merged[path] = merged.get(path, Fraction(0)) + Fraction(word.coeff)
    return tuple(CycleWord(c, p) for p, c in sorted(merged.items()) if c)


class KahlerCase(str, Enum):
    OUT_GT_IN = "OUT_GT_IN"
    OUT_EQ_IN_PLUS1 = "OUT_EQ_IN_PLUS1"
    OUT_EQ_IN = "OUT_EQ_IN"
    IN_GT_OUT = "IN_GT_OUT"

    @classmethod
    def classify(cls, n_out: int, n_in: int) -> "KahlerCase":
        if n_out > n_in + 1:
            return cls.OUT_GT_IN
        if n_out == n_in + 1:
            return cls.OUT_EQ_IN_PLUS1
        if n_out == n_in:
            return cls.OUT_EQ_IN
        return cls.IN_GT_OUT


@dataclass(frozen=True)
class Quiver:
    nodes: Tuple[Node, ...]
    arrows: Tuple[Arrow, ...]
    potential: Tuple[CycleWord, ...] = ()
    meta: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "arrows", tuple(sorted(self.arrows, key=lambda a: (a.src, a.dst))))
        object.__setattr__(self, "potential", canonical_potential(self.potential))
        object.__setattr__(self, "meta", dict(self.meta or {}))
        self._validate()

    def _validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise QuiverError("Node ids must be unique")
        for n in self.nodes:
            if n.rank < 0:
                raise QuiverError(f"Node {n.id} has negative rank {n.rank}", code="NEGATIVE_RANK")
        known = set(ids)
        framed = {n.id for n in self.nodes if n.framed}
        seen = set()
        for a in self.arrows:
            if a.src not in known or a.dst not in known:
                raise QuiverError(f"Arrow {a.src}->{a.dst} uses an unknown node", code="UNKNOWN_NODE")
            if a.src == a.dst:
                raise QuiverError(f"Node {a.src} carries a 1-cycle")
            if a.mult < 1:
                raise QuiverError(f"Arrow {a.src}->{a.dst} has multiplicity {a.mult}")
            if (a.src, a.dst) in seen:
                raise QuiverError(f"Duplicate arrow record {a.src}->{a.dst}")
            if (a.dst, a.src) in seen:
                raise QuiverError(f"Nodes {a.src} and {a.dst} form a 2-cycle")
            if a.src in framed and a.dst in framed:
                raise QuiverError(f"Arrow {a.src}->{a.dst} joins two framed nodes")
            seen.add((a.src, a.dst))
        mult = self.multiplicities
        for word in self.potential:
            if not word.path:
                raise QuiverError("Empty cycle word in potential")
            for ref in word.path:
                if len(ref) != 3 or ref[2] >= mult.get((ref[0], ref[1]), 0) or ref[2] < 0:
                    raise QuiverError(f"Potential uses a missing arrow {ref}")
            for a, b in zip(word.path, word.path[1:] + word.path[:1]):
                if a[1] != b[0]:
                    raise QuiverError(f"Cycle word {word.path} does not compose")

    # -- lookups -------------------------------------------------------------

    @property
    def multiplicities(self) -> Dict[Tuple[int, int], int]:
        return {(a.src, a.dst): a.mult for a in self.arrows}

    @property
    def ids(self) -> Tuple[int, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def gauge_ids(self) -> Tuple[int, ...]:
        return tuple(n.id for n in self.nodes if not n.framed)

    @property
    def framed_ids(self) -> Tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.framed)

    @property
    def family(self) -> Optional[str]:
        return self.meta.get("family")

    def node(self, k: int) -> Node:
        for n in self.nodes:
            if n.id == k:
                return n
        raise QuiverError(f"Unknown node {k}", code="UNKNOWN_NODE")

    def rank(self, k: int) -> int:
        return self.node(k).rank

    def ranks(self) -> Dict[int, int]:
        return {n.id: n.rank for n in self.nodes}

    def mult(self, i: int, j: int) -> int:
        return self.multiplicities.get((i, j), 0)

    def b(self, i: int, j: int) -> int:
        return self.mult(i, j) - self.mult(j, i)

    def b_matrix(self) -> np.ndarray:
        """Skew-symmetric exchange matrix in node-id order."""
        index = {k: i for i, k in enumerate(self.ids)}
        matrix = np.zeros((len(self.ids), len(self.ids)), dtype=int)
        for a in self.arrows:
            matrix[index[a.src], index[a.dst]] += a.mult
            matrix[index[a.dst], index[a.src]] -= a.mult
        return matrix

    def variables(self) -> Tuple[str, ...]:
        return tuple(f"q{k}" for k in self.gauge_ids)

    def with_ranks(self, ranks: Dict[int, int]) -> "Quiver":
        nodes = tuple(replace(n, rank=ranks.get(n.id, n.rank)) for n in self.nodes)
        return Quiver(nodes, self.arrows, self.potential, self.meta)


def outgoing(q: Quiver, k: int) -> int:
    """N_f(k): sum of [b_ki]_+ N_i."""
    q.node(k)
    return sum(a.mult * q.rank(a.dst) for a in q.arrows if a.src == k)


def incoming(q: Quiver, k: int) -> int:
    """N_a(k): sum of [b_ik]_+ N_i."""
    q.node(k)
    return sum(a.mult * q.rank(a.src) for a in q.arrows if a.dst == k)


def matrix_mutation(matrix: np.ndarray, k: int) -> np.ndarray:
    """Fomin-Zelevinsky mutation of a skew-symmetric matrix at index k."""
    b = np.array(matrix, dtype=int)
    out = b.copy()
    n = b.shape[0]
    for i in range(n):
        for j in range(n):
            if i == k or j == k:
                out[i, j] = -b[i, j]
            elif b[i, k] * b[k, j] > 0:
                sign = 1 if b[i, k] > 0 else -1
                out[i, j] = int(b[i, j] + sign * b[i, k] * b[k, j])
    return out


# ---------------------------------------------------------------------------
# mutation
# ---------------------------------------------------------------------------

@dataclass
class MutationBookkeeping:
    """Arrow references created by steps 1 and 2 of a mutation at ``node``."""

    node: int
    composites: Dict[Tuple[ArrowRef, ArrowRef], ArrowRef]
    reversed_refs: Dict[ArrowRef, ArrowRef]
    multiplicities: Dict[Tuple[int, int], int]
    cancellations: Dict[Tuple[int, int], int]


@dataclass(frozen=True)
class PotentialRewrite:
    potential: Tuple[CycleWord, ...]
    removed: FrozenSet[ArrowRef]
    sign_flipped: bool = False


@dataclass(frozen=True)
class MutationResult:
    quiver: Quiver
    source: Quiver
    node: int
    annihilated: Dict[Tuple[int, int], int]
    kahler_case: KahlerCase
    outgoing: int
    incoming: int
    sign_flipped: bool = False

    def to_json(self) -> Dict[str, Any]:
        return {
            "node": self.node,
            "new_rank": self.quiver.rank(self.node),
            "kahler_case": self.kahler_case.value,
            "outgoing": self.outgoing,
            "incoming": self.incoming,
            "annihilated": [[i, j, c] for (i, j), c in sorted(self.annihilated.items())],
            "potential_sign_flipped": self.sign_flipped,
        }


def _rewrite_path(path: Path, k: int, book: MutationBookkeeping) -> Path:
    """Replace each i->k->j segment by the composite arrow i->j."""
    start = next((i for i, ref in enumerate(path) if ref[0] != k), None)
    if start is None:
        raise PotentialReductionError(f"Cycle word {path} never leaves node {k}")
    rotated = path[start:] + path[:start]
    out: List[ArrowRef] = []
    i = 0
    while i < len(rotated):
        ref = rotated[i]
        if ref[1] == k:
            pair = (ref, rotated[i + 1])
            if pair not in book.composites:
                raise PotentialReductionError(f"No composite arrow for the path {pair}")
            out.append(book.composites[pair])
            i += 2
        else:
            out.append(ref)
            i += 1
    return tuple(out)


def _pair_key(path: Path) -> Tuple[int, int]:
    a = path[0]
    return (min(a[0], a[1]), max(a[0], a[1]))


def mutate_potential(
    w: Sequence[CycleWord], q: Quiver, k: int, book: MutationBookkeeping
) -> PotentialRewrite:
    """Rewrite ``w`` along a mutation at ``k`` and integrate out quadratic pairs.

    Only quadratic pairs whose partners appear linearly elsewhere are reduced;
    any other pattern raises PotentialReductionError.
    """
    terms: Dict[Path, Fraction] = {}

    def add(path: Path, coeff: Fraction) -> None:
        path = canonical_rotation(path)
        terms[path] = terms.get(path, Fraction(0)) + coeff
        if not terms[path]:
            del terms[path]

    for word in w:
        add(_rewrite_path(word.path, k, book), word.coeff)
    for (a, b), new_ref in sorted(book.composites.items(), key=lambda item: item[1]):
        add((new_ref, book.reversed_refs[b], book.reversed_refs[a]), Fraction(1))

    pending = dict(book.cancellations)
    removed: Set[ArrowRef] = set()
    while True:
        quadratic = next(
            (p for p in sorted(terms) if len(p) == 2 and pending.get(_pair_key(p), 0) > 0),
            None,
        )
        if quadratic is None:
            break
        x, y = quadratic
        c0 = terms.pop(quadratic)
        with_x: List[Tuple[Path, Fraction]] = []
        with_y: List[Tuple[Path, Fraction]] = []
        kept: Dict[Path, Fraction] = {}
        for path, c in terms.items():
            nx, ny = path.count(x), path.count(y)
            if (nx and ny) or nx > 1 or ny > 1:
                raise PotentialReductionError(
                    f"Quadratic pair {x},{y} enters the term {path} non-linearly"
                )
            if nx:
                with_x.append((rotate_to(path, x)[1:], c))
            elif ny:
                with_y.append((rotate_to(path, y)[1:], c))
            else:
                kept[path] = c
        terms = kept
        for r_path, c_r in with_y:
            for p_path, c_p in with_x:
                add(r_path + p_path, -c_r * c_p / c0)
        removed.update((x, y))
        pending[_pair_key(quadratic)] -= 1
        logger.debug(f"Integrated out the quadratic pair {x}, {y}")

    used = {ref for path in terms for ref in path}
    for (i, j), count in sorted(pending.items()):
        for _ in range(count):
            chosen = []
            for src, dst in ((i, j), (j, i)):
                free = [
                    (src, dst, c)
                    for c in reversed(range(book.multiplicities.get((src, dst), 0)))
                    if (src, dst, c) not in removed and (src, dst, c) not in used
                ]
                if not free:
                    raise PotentialReductionError(
                        f"2-cycle between {i} and {j} has no quadratic term to integrate out"
                    )
                chosen.append(free[0])
            removed.update(chosen)

    potential = canonical_potential(CycleWord(c, p) for p, c in terms.items())
    flipped = bool(potential) and potential[0].coeff < 0
    if flipped:
        potential = tuple(CycleWord(-t.coeff, t.path) for t in potential)
        logger.warning(f"Potential sign flipped to canonical form after mutation at node {k}")
    return PotentialRewrite(potential, frozenset(removed), flipped)


def mutate(q: Quiver, k: int, track_potential: bool = True) -> MutationResult:
    """Quiver mutation at the gauge node ``k``."""
    node = q.node(k)
    if node.framed:
        raise QuiverError(f"Node {k} is framed and cannot be mutated", code="FRAMED_NODE")
    n_out, n_in = outgoing(q, k), incoming(q, k)
    new_rank = max(n_out, n_in) - node.rank
    if new_rank < 0:
        raise QuiverError(
            f"Mutation at {k} gives negative rank {new_rank}", code="NEGATIVE_RANK"
        )

    framed = set(q.framed_ids)
    into = sorted((a.src, a.mult) for a in q.arrows if a.dst == k)
    out_of = sorted((a.dst, a.mult) for a in q.arrows if a.src == k)
    mult = {pair: m for pair, m in q.multiplicities.items() if k not in pair}

    # step 1: composite arrows for each path i -> k -> j
    composites: Dict[Tuple[ArrowRef, ArrowRef], ArrowRef] = {}
    for i, mi in into:
        for j, mj in out_of:
            if i in framed and j in framed:
                continue
            copy = mult.get((i, j), 0)
            for c1 in range(mi):
                for c2 in range(mj):
                    composites[((i, k, c1), (k, j, c2))] = (i, j, copy)
                    copy += 1
            mult[(i, j)] = copy

    # step 2: reverse the arrows at k
    reversed_refs: Dict[ArrowRef, ArrowRef] = {}
    for i, mi in into:
        mult[(k, i)] = mi
        for c in range(mi):
            reversed_refs[(i, k, c)] = (k, i, c)
    for j, mj in out_of:
        mult[(j, k)] = mj
        for c in range(mj):
            reversed_refs[(k, j, c)] = (j, k, c)

    # step 4: opposite pairs
    cancellations: Dict[Tuple[int, int], int] = {}
    for (i, j), m in mult.items():
        if i < j and mult.get((j, i), 0):
            cancellations[(i, j)] = min(m, mult[(j, i)])

    book = MutationBookkeeping(k, composites, reversed_refs, dict(mult), cancellations)
    if track_potential:
        rewrite = mutate_potential(q.potential, q, k, book)
    else:
        removed = set()
        for (i, j), count in cancellations.items():
            for src, dst in ((i, j), (j, i)):
                top = mult[(src, dst)]
                removed.update((src, dst, c) for c in range(top - count, top))
        rewrite = PotentialRewrite((), frozenset(removed))

    remap: Dict[ArrowRef, ArrowRef] = {}
    arrows = []
    for (src, dst), m in sorted(mult.items()):
        survivors = [c for c in range(m) if (src, dst, c) not in rewrite.removed]
        for new_c, old_c in enumerate(survivors):
            remap[(src, dst, old_c)] = (src, dst, new_c)
        if survivors:
            arrows.append(Arrow(src, dst, len(survivors)))
    potential = tuple(
        CycleWord.make(word.coeff, tuple(remap[ref] for ref in word.path)) for word in rewrite.potential
    )

    nodes = tuple(replace(n, rank=new_rank) if n.id == k else n for n in q.nodes)
    meta = dict(q.meta)
    if meta.get("family"):
        from app.api.services.catalogue import successor_family

        successor = successor_family(meta["family"], k)
        meta["family"] = successor.name if successor else None
        if successor:
            meta["phase"] = list(successor.phase)
        else:
            meta.pop("phase", None)
    mutated = Quiver(nodes, tuple(arrows), potential, meta)

    expected = matrix_mutation(q.b_matrix(), q.ids.index(k))
    frozen = [i for i, nid in enumerate(q.ids) if nid in framed]
    got = mutated.b_matrix()
    mask = np.ones_like(expected, dtype=bool)
    for i in frozen:
        for j in frozen:
            mask[i, j] = False
    if not np.array_equal(expected[mask], got[mask]):
        raise QuiverError(f"Mutation at {k} disagrees with the exchange-matrix rule")

    annihilated = {pair: c for pair, c in cancellations.items() if c}
    case = KahlerCase.classify(n_out, n_in)
    logger.info(
        f"Mutated node {k}: rank {node.rank} -> {new_rank}, case {case.value}, "
        f"annihilated {annihilated or 'none'}"
    )
    return MutationResult(mutated, q, k, annihilated, case, n_out, n_in, rewrite.sign_flipped)


def mutate_sequence(q: Quiver, sequence: Sequence[int], track_potential: bool = True) -> List[MutationResult]:
    results = []
    for k in sequence:
        result = mutate(q, k, track_potential)
        results.append(result)
        q = result.quiver
    return results


# ---------------------------------------------------------------------------
# Kähler variable maps
# ---------------------------------------------------------------------------

def _parity(n: int) -> int:
    return -1 if n % 2 else 1


def conjecture_kahler_map(result: MutationResult) -> KahlerMap:
    """Three-branch variable map with e^{pi i N} read as (-1)^N."""
    before, after, k = result.source, result.quiver, result.node
    names = before.variables()
    index = {nid: i for i, nid in enumerate(before.gauge_ids)}
    new_rank = after.rank(k)
    s_k = _parity(new_rank)
    case = result.kahler_case
    branch = "in" if case == KahlerCase.IN_GT_OUT else ("eq" if case == KahlerCase.OUT_EQ_IN else "out")
    unit_sign = s_k

    signs, rows, powers = [], [], []
    for j in before.gauge_ids:
        row = [0] * len(names)
        if j == k:
            row[index[k]] = -1
            signs.append(1)
            rows.append(tuple(row))
            powers.append((0,))
            continue
        row[index[j]] = 1
        b = before.b(k, j)
        bp, bm = max(b, 0), max(-b, 0)
        sign = _parity(outgoing(before, j) - outgoing(after, j))
        for (a, c), count in result.annihilated.items():
            if j in (a, c):
                other = c if a == j else a
                if other != k:
                    sign *= _parity(before.rank(other) * count)
        power = 0
        if branch == "out":
            sign *= s_k ** (bp + bm)
            row[index[k]] += bp
        elif branch == "eq":
            sign *= s_k ** (bp + bm)
            row[index[k]] += bp
            power = bm - bp
        else:
            sign *= s_k ** bp
            sign *= _parity((outgoing(before, k) - before.rank(k)) * bm)
            row[index[k]] -= bm
        signs.append(sign)
        rows.append(tuple(row))
        powers.append((power,))

    if branch == "eq":
        return KahlerMap(names, names, tuple(signs), tuple(rows), (BinomialUnit(index[k], unit_sign),), tuple(powers))
    return KahlerMap(names, names, tuple(signs), tuple(rows))


def kahler_map_for(result: MutationResult, rule: str = "paper") -> KahlerMap:
    """Kähler substitution attached to a mutation.

    ``rule="paper"`` returns the proved map for catalogued steps and raises
    CatalogueError otherwise; ``rule="conjecture"`` applies the general rule.
    """
    if rule == "conjecture":
        return conjecture_kahler_map(result)
    if rule != "paper":
        raise CatalogueError(f"Unknown Kähler rule {rule!r}")
    from app.api.services.catalogue import paper_kahler_map

    family = result.source.family
    if not family:
        raise CatalogueError("Quiver carries no catalogue family; rule='paper' needs one")
    return paper_kahler_map(family, result.node, result.source)


# ---------------------------------------------------------------------------
# quiver files
# ---------------------------------------------------------------------------

def _coeff_json(c: Fraction):
    return c.numerator if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def quiver_to_json(q: Quiver) -> Dict[str, Any]:
    return {
        "nodes": [{"id": n.id, "rank": n.rank, "framed": n.framed} for n in q.nodes],
        "arrows": [{"src": a.src, "dst": a.dst, "mult": a.mult} for a in q.arrows],
        "potential": [
            {
                "coeff": _coeff_json(w.coeff),
                "cycle": [[s, d] if c == 0 else [s, d, c] for s, d, c in w.path],
            }
            for w in q.potential
        ],
        "meta": dict(q.meta),
    }


def emit_quiver(q: Quiver) -> str:
    """Canonical pretty-printed quiver file."""
    return json.dumps(quiver_to_json(q), indent=2, sort_keys=True) + "\n"


def quiver_from_model(model) -> Quiver:
    nodes = tuple(Node(n.id, n.rank, n.framed) for n in model.nodes)
    arrows = tuple(Arrow(a.src, a.dst, a.mult) for a in model.arrows)
    potential = tuple(
        CycleWord.make(
            Fraction(term.coeff),
            tuple((ref[0], ref[1], ref[2] if len(ref) > 2 else 0) for ref in term.cycle),
        )
        for term in model.potential
    )
    return Quiver(nodes, arrows, potential, dict(model.meta))


def parse_quiver(text: str) -> Quiver:
    """Parse a quiver file; JSON and schema errors carry line/column information."""
    from app.api.models.schemas import QuiverFile

    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QuiverFileError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    try:
        model = QuiverFile.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise QuiverFileError(f"{where}: {first['msg']}") from exc
    return quiver_from_model(model)
