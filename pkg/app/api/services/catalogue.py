# app/api/services/catalogue.py
"""Catalogued quiver families, their phases, and the proved mutation steps.

Families are keyed by tag: the D3 chain X0, Z1, Z2, Z3, X4..X9 (ranks N1,N2,N3,N4),
the star pair Xs/Zs (ranks N1..N7 | N8,N9) and the Grassmannian building block
GrBlock/GrBlockDual (r, n, m).
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from app.api.services.quiver import Arrow, Node, Quiver, mutate
from app.api.services.series import KahlerMap
from app.core.errors import CatalogueError, RankConstraintError, UsageError

logger = logging.getLogger(__name__)

D3_CHAIN = ("X0", "Z1", "Z2", "Z3", "X4", "X5", "X6", "X7", "X8", "X9")
D3_SEQUENCE = (3, 1, 2, 3, 1, 2, 3, 1, 2)
STAR_FAMILIES = ("Xs", "Zs")
BLOCK_FAMILIES = ("GrBlock", "GrBlockDual")
FAMILIES = D3_CHAIN + STAR_FAMILIES + BLOCK_FAMILIES

D3_VARS = ("q1", "q2", "q3")
STAR_VARS = tuple(f"q{i}" for i in range(1, 8))
BLOCK_VARS = ("q1",)

PHASES: Dict[str, Tuple[str, ...]] = {
    "X0": ("s1>0", "s2>0", "s3>0"),
    "Z1": ("s1>0", "s2>0", "s3<0"),
    "Z2": ("s1<0", "s2>0", "s3<0"),
    "Z3": ("s1<0", "s2<0", "s3>0"),
    "X4": ("s1<0", "s2<0", "s3<0"),
    "X5": ("s1>0", "s2<0", "s3<0", "(N3-N2)s1+s3<0"),
    "X6": ("s1>0", "s2>0", "s3<0", "(N3-N2)s1+(N3-N1)s2+s3<0"),
    "X7": ("s1<0", "s2<0", "s3>0", "(N3-N2)s1+(N3-N1)s2+s3>0"),
    "X8": ("s1>0", "s2<0", "s3>0", "(N3-N1)s2+s3>0"),
    "X9": ("s1>0", "s2>0", "s3>0"),
    "Xs": tuple(f"s{i}>0" for i in range(1, 8)),
    "Zs": ("s1>0", "s2>0", "s3>0", "s4>0", "s5<0", "s6>0", "s7>0", "N5's5+s6>0", "N5's5+s7>0"),
    "GrBlock": ("s1>0",),
    "GrBlockDual": ("s1<0",),
}

# (family, mutated node) -> family reached
TRANSITIONS: Dict[Tuple[str, int], str] = {
    (D3_CHAIN[i], node): D3_CHAIN[i + 1] for i, node in enumerate(D3_SEQUENCE)
}
TRANSITIONS[("Xs", 5)] = "Zs"
TRANSITIONS[("GrBlock", 1)] = "GrBlockDual"
REVERSE_TRANSITIONS: Dict[Tuple[str, int], str] = {(dst, node): src for (src, node), dst in TRANSITIONS.items()}


def _sign(n: int) -> int:
    return -1 if n % 2 else 1


# ---------------------------------------------------------------------------
# rank data
# ---------------------------------------------------------------------------

def check_d3_ranks(ranks: Sequence[int]) -> Tuple[int, int, int, int]:
    if len(ranks) != 4:
        raise RankConstraintError(f"D3 ranks need four entries N1,N2,N3,N4, got {list(ranks)}")
    n1, n2, n3, n4 = (int(r) for r in ranks)
    if n1 < 1 or n2 < 1:
        raise RankConstraintError("D3 ranks need N1 >= 1 and N2 >= 1")
    if n4 != n1 + n2:
        raise RankConstraintError(f"D3 ranks need N4 = N1 + N2, got {n4} != {n1 + n2}")
    if not (n4 > n3 and n3 > n1 and n3 > n2):
        raise RankConstraintError(f"D3 ranks need N4 > N3 > max(N1, N2), got {list(ranks)}")
    return n1, n2, n3, n4


def check_star_ranks(ranks: Sequence[int]) -> Tuple[int, ...]:
    if len(ranks) != 9:
        raise RankConstraintError(f"Star ranks need nine entries N1..N7 | N8,N9, got {list(ranks)}")
    n = (0,) + tuple(int(r) for r in ranks)
    if any(v < 1 for v in n[1:]):
        raise RankConstraintError("Star ranks must all be positive")
    for i, j in ((1, 3), (2, 4), (3, 5), (4, 5), (6, 8), (7, 9)):
        if n[j] < n[i]:
            raise RankConstraintError(f"Star ranks need N{j} >= N{i} along the arrow {i}->{j}")
    if n[6] + n[7] <= n[5]:
        raise RankConstraintError("Star ranks need N6 + N7 > N5")
    return n[1:]


def check_block_ranks(ranks: Sequence[int]) -> Tuple[int, int, int]:
    if len(ranks) != 3:
        raise RankConstraintError(f"Building block needs (r, n, m), got {list(ranks)}")
    r, n, m = (int(v) for v in ranks)
    if not 0 < r < n:
        raise RankConstraintError(f"Building block needs 0 < r < n, got r={r}, n={n}")
    if m < 0:
        raise RankConstraintError(f"Building block needs m >= 0, got m={m}")
    return r, n, m


def parse_int_list(text: Union[str, Sequence[int]], what: str = "ranks") -> Tuple[int, ...]:
    """Comma-separated integers such as "2,2,3,4"; sequences pass through."""
    if not isinstance(text, str):
        return tuple(int(v) for v in text)
    try:
        values = tuple(int(part) for part in text.replace(" ", "").split(",") if part)
    except ValueError as exc:
        raise UsageError(f"Cannot read {what} from {text!r}; expected comma-separated integers") from exc
    if not values:
        raise UsageError(f"No {what} given")
    return values


def validate_ranks(family: str, ranks: Sequence[int]) -> Tuple[int, ...]:
    if family in D3_CHAIN:
        return check_d3_ranks(ranks)
    if family in STAR_FAMILIES:
        return check_star_ranks(ranks)
    if family in BLOCK_FAMILIES:
        return check_block_ranks(ranks)
    raise CatalogueError(f"Unknown family {family!r}; catalogued families are {', '.join(FAMILIES)}")


# ---------------------------------------------------------------------------
# family models used by enumeration and I-functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyModel:
    """Ambient description of one catalogued family at fixed ranks.

    ``arrows`` are the arrows entering the I-function; ``lefschetz`` lists the
    cutting weights x^i - x^j of the complete-intersection equations; ``parents``
    gives, for each gauge node, the nodes whose labels contain its labels.
    """

    name: str
    ranks: Tuple[int, ...]
    gauge: Tuple[Tuple[int, int], ...]
    frames: Tuple[Tuple[int, Tuple[str, ...]], ...]
    arrows: Tuple[Tuple[int, int], ...]
    lefschetz: Tuple[Tuple[int, int], ...]
    parents: Tuple[Tuple[int, Tuple[int, ...]], ...]
    phase: Tuple[str, ...]

    @property
    def gauge_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(node for node, _ in self.gauge))

    @property
    def order(self) -> Tuple[int, ...]:
        return tuple(node for node, _ in self.gauge)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(f"q{node}" for node in self.gauge_ids)

    def rank(self, node: int) -> int:
        for n, r in self.gauge:
            if n == node:
                return r
        for n, params in self.frames:
            if n == node:
                return len(params)
        raise CatalogueError(f"Family {self.name} has no node {node}")

    def is_frame(self, node: int) -> bool:
        return any(n == node for n, _ in self.frames)

    def frame_params(self, node: int) -> Tuple[str, ...]:
        for n, params in self.frames:
            if n == node:
                return params
        raise CatalogueError(f"Node {node} of {self.name} is not a frame")

    def parameter_names(self) -> Tuple[str, ...]:
        names: List[str] = []
        for _, params in self.frames:
            names.extend(params)
        return tuple(names)

    def parents_of(self, node: int) -> Tuple[int, ...]:
        return dict(self.parents).get(node, ())


def lambda_names(labels: Sequence[int]) -> Tuple[str, ...]:
    return tuple(f"lambda{label}" for label in labels)


def d3_family_ranks(family: str, ranks: Sequence[int]) -> Tuple[int, int, int]:
    n1, n2, n3, n4 = check_d3_ranks(ranks)
    n3p = n4 - n3
    return {
        "X0": (n1, n2, n3),
        "Z1": (n1, n2, n3p),
        "Z2": (n2, n2, n3p),
        "Z3": (n2, n1, n3p),
        "X4": (n2, n1, n3),
        "X5": (n3 - n2, n1, n3),
        "X6": (n3 - n2, n3 - n1, n3),
        "X7": (n3 - n2, n3 - n1, n3),
        "X8": (n2, n3 - n1, n3),
        "X9": (n2, n1, n3),
    }[family]


_D3_AMBIENT: Dict[str, Tuple[Tuple[Tuple[int, int], ...], Tuple[Tuple[int, int], ...], Dict[int, Tuple[int, ...]], Tuple[int, ...]]] = {
    # family: (arrows, cutting weights, parents, enumeration order)
    "X0": (((1, 3), (2, 3), (3, 4)), (), {1: (3,), 2: (3,), 3: (4,)}, (3, 1, 2)),
    "Z1": (((1, 4), (2, 4), (4, 3)), ((1, 3), (2, 3)), {1: (4,), 2: (4,), 3: (4,)}, (3, 1, 2)),
    "Z2": (((4, 1), (1, 3), (2, 4)), ((2, 3),), {1: (4,), 2: (4,), 3: (1,)}, (1, 3, 2)),
    "Z3": (((4, 1), (4, 2), (3, 4)), ((3, 1), (3, 2)), {1: (4,), 2: (4,), 3: (4,)}, (3, 1, 2)),
    "X4": (((3, 1), (3, 2), (4, 3)), (), {1: (3,), 2: (3,), 3: (4,)}, (3, 1, 2)),
    "X5": (((1, 3), (3, 2), (4, 3)), (), {1: (3,), 2: (3,), 3: (4,)}, (3, 1, 2)),
    "X6": (((1, 3), (2, 3), (4, 3)), (), {1: (3,), 2: (3,), 3: (4,)}, (3, 1, 2)),
    "X7": (((3, 1), (3, 2), (3, 4)), (), {1: (3,), 2: (3,), 3: (4,)}, (3, 1, 2)),
    "X8": (((1, 3), (3, 2), (3, 4)), (), {1: (3,), 2: (3,), 3: (4,)}, (3, 1, 2)),
    "X9": (((1, 3), (2, 3), (3, 4)), (), {1: (3,), 2: (3,), 3: (4,)}, (3, 1, 2)),
}


def family_model(family: str, ranks: Sequence[int]) -> FamilyModel:
    """Ambient model of ``family`` at the given input ranks."""
    if family in D3_CHAIN:
        n4 = check_d3_ranks(ranks)[3]
        node_ranks = dict(zip((1, 2, 3), d3_family_ranks(family, ranks)))
        arrows, lefschetz, parents, order = _D3_AMBIENT[family]
        return FamilyModel(
            family,
            tuple(ranks),
            tuple((node, node_ranks[node]) for node in order),
            ((4, lambda_names(range(1, n4 + 1))),),
            arrows,
            lefschetz,
            tuple(sorted(parents.items())),
            PHASES[family],
        )
    if family in STAR_FAMILIES:
        n = (0,) + check_star_ranks(ranks)
        frames = (
            (8, lambda_names(range(1, n[8] + 1))),
            (9, lambda_names(range(n[8] + 1, n[8] + n[9] + 1))),
        )
        if family == "Xs":
            node_ranks = {i: n[i] for i in range(1, 8)}
            arrows = ((1, 3), (2, 4), (3, 5), (4, 5), (5, 6), (5, 7), (6, 8), (7, 9))
            lefschetz: Tuple[Tuple[int, int], ...] = ()
            parents = {1: (3,), 2: (4,), 3: (5,), 4: (5,), 5: (6, 7), 6: (8,), 7: (9,)}
            order = (6, 7, 5, 3, 4, 1, 2)
        else:
            node_ranks = {i: n[i] for i in range(1, 8)}
            node_ranks[5] = n[6] + n[7] - n[5]
            arrows = ((1, 3), (2, 4), (3, 6), (3, 7), (4, 6), (4, 7), (6, 5), (7, 5), (6, 8), (7, 9))
            lefschetz = ((3, 5), (4, 5))
            parents = {1: (3,), 2: (4,), 3: (6, 7), 4: (6, 7), 5: (6, 7), 6: (8,), 7: (9,)}
            order = (6, 7, 3, 4, 1, 2, 5)
        return FamilyModel(
            family,
            tuple(ranks),
            tuple((node, node_ranks[node]) for node in order),
            frames,
            arrows,
            lefschetz,
            tuple(sorted(parents.items())),
            PHASES[family],
        )
    if family in BLOCK_FAMILIES:
        r, n, m = check_block_ranks(ranks)
        frames = ((2, lambda_names(range(1, n + 1))), (3, tuple(f"eta{a}" for a in range(1, m + 1))))
        if family == "GrBlock":
            return FamilyModel(family, (r, n, m), ((1, r),), frames, ((3, 1), (1, 2)), (), ((1, (2,)),), PHASES[family])
        return FamilyModel(family, (r, n, m), ((1, n - r),), frames, ((2, 1),), ((3, 1),), ((1, (2,)),), PHASES[family])
    raise CatalogueError(f"Unknown family {family!r}; catalogued families are {', '.join(FAMILIES)}")


# ---------------------------------------------------------------------------
# catalogued quivers
# ---------------------------------------------------------------------------

def d3_quiver(ranks: Sequence[int]) -> Quiver:
    """The D3 quiver X0: 1->3, 2->3, 3->4 with frame 4."""
    n1, n2, n3, n4 = check_d3_ranks(ranks)
    nodes = (Node(1, n1), Node(2, n2), Node(3, n3), Node(4, n4, framed=True))
    arrows = (Arrow(1, 3), Arrow(2, 3), Arrow(3, 4))
    return Quiver(nodes, arrows, (), {"family": "X0", "phase": list(PHASES["X0"])})


def star_quiver(ranks: Sequence[int]) -> Quiver:
    n = (0,) + check_star_ranks(ranks)
    nodes = tuple(Node(i, n[i]) for i in range(1, 8)) + (Node(8, n[8], True), Node(9, n[9], True))
    arrows = tuple(Arrow(i, j) for i, j in ((1, 3), (2, 4), (3, 5), (4, 5), (5, 6), (5, 7), (6, 8), (7, 9)))
    return Quiver(nodes, arrows, (), {"family": "Xs", "phase": list(PHASES["Xs"])})


def block_quiver(ranks: Sequence[int]) -> Quiver:
    """S^m over Gr(r, n): eta frame 3 -> gauge 1 -> lambda frame 2."""
    r, n, m = check_block_ranks(ranks)
    nodes = (Node(1, r), Node(2, n, True), Node(3, m, True))
    arrows = (Arrow(1, 2),) + ((Arrow(3, 1),) if m else ())
    return Quiver(nodes, arrows, (), {"family": "GrBlock", "phase": list(PHASES["GrBlock"])})


def catalogue_quiver(family: str, ranks: Sequence[int]) -> Quiver:
    """Catalogued quiver with potential, reached from its seed by the catalogued mutations."""
    if family in D3_CHAIN:
        q = d3_quiver(ranks)
        for node in D3_SEQUENCE[: D3_CHAIN.index(family)]:
            q = mutate(q, node).quiver
        return q
    if family in STAR_FAMILIES:
        q = star_quiver(ranks)
        return q if family == "Xs" else mutate(q, 5).quiver
    if family in BLOCK_FAMILIES:
        q = block_quiver(ranks)
        if family == "GrBlock":
            return q
        r, n, m = check_block_ranks(ranks)
        if m > n:
            raise CatalogueError("The dual building block needs n >= m")
        return mutate(q, 1).quiver
    raise CatalogueError(f"Unknown family {family!r}; catalogued families are {', '.join(FAMILIES)}")


@dataclass(frozen=True)
class FamilyInfo:
    name: str
    phase: Tuple[str, ...]


def successor_family(family: str, node: int) -> Optional[FamilyInfo]:
    name = TRANSITIONS.get((family, node)) or REVERSE_TRANSITIONS.get((family, node))
    return FamilyInfo(name, PHASES[name]) if name else None


# ---------------------------------------------------------------------------
# proved Kähler maps and prefactors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitPrefactorRule:
    """(1 + sign*q_var)^E with E = sum of Chern roots of plus_nodes - those of minus_nodes
    + parameters of plus_frames - parameters of minus_frames + constant."""

    var: int
    sign: int
    plus_nodes: Tuple[int, ...] = ()
    minus_nodes: Tuple[int, ...] = ()
    plus_frames: Tuple[int, ...] = ()
    minus_frames: Tuple[int, ...] = ()
    constant: int = 0


@dataclass(frozen=True)
class ExpPrefactorRule:
    var: int
    coeff: int


PrefactorRule = Union[UnitPrefactorRule, ExpPrefactorRule, None]


def _d3_map(rows, unit_sign: Optional[int] = None, unit_powers=None) -> KahlerMap:
    units = (("q3", unit_sign),) if unit_sign is not None else ()
    return KahlerMap.from_rows(D3_VARS, D3_VARS, rows, units=units, unit_powers=unit_powers)


@dataclass(frozen=True)
class StepDefinition:
    """One proved identity I^lhs(q) = prefactor * I^rhs(q') with q' given by the map."""

    id: str
    lhs: str
    rhs: str
    node: Optional[int]
    negate: bool
    build_map: Callable[[Tuple[int, ...]], KahlerMap]
    build_prefactor: Callable[[Tuple[int, ...]], PrefactorRule]
    stated_reverse: bool = False


def _n3p(ranks) -> int:
    return ranks[3] - ranks[2]


D3_STEPS: Tuple[StepDefinition, ...] = (
    StepDefinition(
        "X0->Z1", "X0", "Z1", 3, False,
        lambda N: _d3_map(({"q1": 1}, {"q2": 1}, {"q3": -1}), _sign(_n3p(N)), ((1,), (1,), (0,))),
        lambda N: UnitPrefactorRule(2, _sign(_n3p(N)), plus_nodes=(1, 2), minus_frames=(4,), constant=_n3p(N)),
    ),
    StepDefinition(
        "Z1->Z2", "Z1", "Z2", 1, False,
        lambda N: _d3_map(({"q1": -1}, {"q2": 1}, {"q3": 1})),
        lambda N: None,
    ),
    StepDefinition(
        "Z2->Z3", "Z2", "Z3", 2, True,
        lambda N: _d3_map(({"q2": -1}, {"q1": 1}, {"q3": -1})),
        lambda N: None,
    ),
    StepDefinition(
        "Z3->X4", "Z3", "X4", 3, False,
        lambda N: _d3_map(({"q1": 1}, {"q2": 1}, {"q3": -1}), _sign(_n3p(N)), ((1,), (1,), (0,))),
        lambda N: UnitPrefactorRule(2, _sign(_n3p(N)), plus_nodes=(1, 2), minus_frames=(4,), constant=-_n3p(N)),
    ),
    StepDefinition(
        "X4->X5", "X4", "X5", 1, False,
        lambda N: _d3_map(({"q1": -1}, {"q2": 1}, {"q3": 1, "q1": 1})),
        lambda N: None,
    ),
    StepDefinition(
        "X5->X6", "X5", "X6", 2, False,
        lambda N: _d3_map(({"q1": 1}, {"q2": -1}, {"q3": 1, "q2": 1})),
        lambda N: None,
        stated_reverse=True,
    ),
    StepDefinition(
        "X6->X7", "X6", "X7", 3, True,
        lambda N: _d3_map(({"q1": -1}, {"q2": -1}, {"q3": -1})),
        lambda N: None,
    ),
    StepDefinition(
        "X7->X8", "X7", "X8", 1, False,
        lambda N: _d3_map(({"q1": -1}, {"q2": 1}, {"q3": 1, "q1": 1})),
        lambda N: None,
        stated_reverse=True,
    ),
    StepDefinition(
        "X8->X9", "X8", "X9", 2, False,
        lambda N: _d3_map(({"q1": 1}, {"q2": -1}, {"q3": 1, "q2": 1})),
        lambda N: None,
        stated_reverse=True,
    ),
    StepDefinition(
        "X9->X0", "X9", "X0", None, False,
        lambda N: _d3_map(({"q2": 1}, {"q1": 1}, {"q3": 1})),
        lambda N: None,
        stated_reverse=True,
    ),
)
D3_STEP_IDS = tuple(step.id for step in D3_STEPS)


def d3_step(step_id: str) -> StepDefinition:
    aliases = {"corollary": "X0->Z1"}
    step_id = aliases.get(step_id, step_id).replace("→", "->")
    for step in D3_STEPS:
        if step.id == step_id:
            return step
    raise CatalogueError(f"Unknown D3 step {step_id!r}; steps are {', '.join(D3_STEP_IDS)}")


def star_case(ranks: Sequence[int]) -> str:
    n = (0,) + check_star_ranks(ranks)
    outgoing, incoming = n[6] + n[7], n[3] + n[4]
    if outgoing >= incoming + 2:
        return "a"
    if outgoing == incoming + 1:
        return "b"
    if outgoing == incoming:
        return "c"
    raise CatalogueError(
        f"Star mutation with N6+N7 < N3+N4 ({outgoing} < {incoming}) is not a proved case"
    )


def star_kahler_map(ranks: Sequence[int]) -> KahlerMap:
    n = (0,) + check_star_ranks(ranks)
    case = star_case(ranks)
    s = _sign(n[6] + n[7] - n[5])
    rows = [{f"q{i}": 1} for i in range(1, 8)]
    rows[4] = {"q5": -1}
    rows[5] = {"q6": 1, "q5": 1}
    rows[6] = {"q7": 1, "q5": 1}
    if case != "c":
        return KahlerMap.from_rows(STAR_VARS, STAR_VARS, rows)
    powers = [(0,), (0,), (1,), (1,), (0,), (-1,), (-1,)]
    return KahlerMap.from_rows(STAR_VARS, STAR_VARS, rows, units=(("q5", s),), unit_powers=powers)


def star_prefactor(ranks: Sequence[int]) -> PrefactorRule:
    n = (0,) + check_star_ranks(ranks)
    case = star_case(ranks)
    n5p = n[6] + n[7] - n[5]
    if case == "b":
        return ExpPrefactorRule(4, _sign(n5p))
    if case == "c":
        return UnitPrefactorRule(4, _sign(n5p), plus_nodes=(3, 4), minus_nodes=(6, 7), constant=n5p)
    return None


def block_case(ranks: Sequence[int]) -> int:
    r, n, m = check_block_ranks(ranks)
    if n >= m + 2:
        return 1
    if n == m + 1:
        return 2
    if n == m:
        return 3
    raise CatalogueError(f"Building block with m > n (m={m}, n={n}) is not a proved case")


def block_kahler_map(ranks: Sequence[int]) -> KahlerMap:
    check_block_ranks(ranks)
    return KahlerMap.from_rows(BLOCK_VARS, BLOCK_VARS, ({"q1": -1},))


def block_prefactor(ranks: Sequence[int]) -> PrefactorRule:
    r, n, m = check_block_ranks(ranks)
    case = block_case(ranks)
    if case == 2:
        return ExpPrefactorRule(0, _sign(n - r))
    if case == 3:
        return UnitPrefactorRule(0, _sign(n - r), plus_frames=(3,), minus_frames=(2,), constant=n - r)
    return None


def d3_base_ranks(family: str, q: Quiver) -> Tuple[int, int, int, int]:
    """Recover (N1, N2, N3, N4) from the node ranks of a D3-chain quiver."""
    r1, r2, r3, n4 = q.rank(1), q.rank(2), q.rank(3), q.rank(4)
    if family == "X0":
        base = (r1, r2, r3)
    elif family == "Z1":
        base = (r1, r2, n4 - r3)
    elif family == "Z2":
        base = (n4 - r2, r2, n4 - r3)
    elif family == "Z3":
        base = (r2, r1, n4 - r3)
    elif family in ("X4", "X9"):
        base = (r2, r1, r3)
    elif family == "X5":
        base = (r2, r3 - r1, r3)
    elif family in ("X6", "X7"):
        base = (r3 - r2, r3 - r1, r3)
    elif family == "X8":
        base = (r3 - r2, r1, r3)
    else:
        raise CatalogueError(f"{family} is not a D3-chain family")
    return check_d3_ranks(base + (n4,))


def star_base_ranks(family: str, q: Quiver) -> Tuple[int, ...]:
    ranks = [q.rank(i) for i in range(1, 10)]
    if family == "Zs":
        ranks[4] = ranks[5] + ranks[6] - ranks[4]
    return check_star_ranks(ranks)


def block_base_ranks(family: str, q: Quiver) -> Tuple[int, int, int]:
    n, m = q.rank(2), q.rank(3)
    r = q.rank(1) if family == "GrBlock" else n - q.rank(1)
    return check_block_ranks((r, n, m))


def paper_kahler_map(family: str, node: int, q: Quiver) -> KahlerMap:
    """Proved variable map for the mutation of the catalogued ``family`` at ``node``."""
    forward = TRANSITIONS.get((family, node))
    backward = REVERSE_TRANSITIONS.get((family, node))
    if forward is None and backward is None:
        raise CatalogueError(f"Mutation of {family} at node {node} is not catalogued")
    lhs = family if forward else backward
    if lhs in D3_CHAIN:
        base = d3_base_ranks(family, q)
        kmap = next(step for step in D3_STEPS if step.lhs == lhs and step.node == node).build_map(base)
    elif lhs == "Xs":
        kmap = star_kahler_map(star_base_ranks(family, q))
    else:
        kmap = block_kahler_map(block_base_ranks(family, q))
    if forward:
        return kmap
    if not kmap.is_unit_free:
        raise CatalogueError(
            f"The reverse of {lhs} -> {family} carries binomial units and is not catalogued"
        )
    return kmap.inverse()


# ---------------------------------------------------------------------------
# Cumulative variable maps along the D3 chain, in X0 variables
# ---------------------------------------------------------------------------

def chain_map_table(ranks: Sequence[int]) -> List[Tuple[Optional[int], str, KahlerMap]]:
    """(mutated node, family, map from the family's variables to X0 variables)."""
    n1, n2, n3, n4 = check_d3_ranks(ranks)
    s = _sign(n4 - n3)
    u = (("q3", s),)

    def row(exps, powers=None):
        if powers is None:
            return KahlerMap.from_rows(D3_VARS, D3_VARS, exps)
        return KahlerMap.from_rows(D3_VARS, D3_VARS, exps, units=u, unit_powers=powers)

    return [
        (None, "X0", row(({"q1": 1}, {"q2": 1}, {"q3": 1}))),
        (3, "Z1", row(({"q1": 1}, {"q2": 1}, {"q3": -1}), ((1,), (1,), (0,)))),
        (1, "Z2", row(({"q1": -1}, {"q2": 1}, {"q3": -1}), ((-1,), (1,), (0,)))),
        (2, "Z3", row(({"q2": -1}, {"q1": -1}, {"q3": 1}), ((-1,), (-1,), (0,)))),
        (3, "X4", row(({"q2": -1}, {"q1": -1}, {"q3": -1}))),
        (1, "X5", row(({"q2": 1}, {"q1": -1}, {"q3": -1, "q2": -1}))),
        (2, "X6", row(({"q2": 1}, {"q1": 1}, {"q3": -1, "q2": -1, "q1": -1}))),
        (3, "X7", row(({"q2": -1}, {"q1": -1}, {"q1": 1, "q2": 1, "q3": 1}))),
        (1, "X8", row(({"q2": 1}, {"q1": -1}, {"q1": 1, "q3": 1}))),
        (2, "X9", row(({"q2": 1}, {"q1": 1}, {"q3": 1}))),
    ]


def catalogue_summary() -> List[Dict[str, object]]:
    return [
        {
            "family": name,
            "phase": list(PHASES[name]),
            "ranks": "N1,N2,N3,N4" if name in D3_CHAIN else ("N1..N7,N8,N9" if name in STAR_FAMILIES else "r,n,m"),
        }
        for name in FAMILIES
    ]
