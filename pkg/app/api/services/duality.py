# app/api/services/duality.py
"""Coefficient-by-coefficient verification of the duality identities.

Every identity has the shape I^lhs(q) = prefactor(q) * I^rhs(q'(q)) at each
pair (P, iota(P)) of fixed points: the left side is computed directly in q, the
right side in q' on the preimage of the comparison box, pulled back through the
Kähler map and multiplied by the expanded prefactor.
"""
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.api.services.catalogue import (
    D3_STEP_IDS,
    D3_VARS,
    ExpPrefactorRule,
    PrefactorRule,
    UnitPrefactorRule,
    block_case,
    block_kahler_map,
    block_prefactor,
    catalogue_quiver,
    check_block_ranks,
    check_d3_ranks,
    check_star_ranks,
    d3_step,
    family_model,
    star_case,
    star_kahler_map,
    star_prefactor,
    chain_map_table,
)
from app.api.services.fixed_points import (
    EquivariantPoint,
    FixedPoint,
    enumerate_fixed_points,
    generic_point,
    iota,
)
from app.api.services.ifunctions import default_box, restricted_quiver_I, window_constraints
from app.api.services.quiver import conjecture_kahler_map, mutate
from app.api.services.series import (
    AffineForm,
    BinomialUnit,
    KahlerMap,
    LaurentSeries,
    Prefactor,
    expand_prefactor,
    format_fraction,
    mul,
    substitute,
)
from app.core.config import settings
from app.core.errors import CatalogueError, EngineError, PoleError, UsageError

logger = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"

BLOCK_IDS = ("building-block", "block")
STAR_IDS = ("star",)
CYCLE_IDS = ("d3-cycle", "cycle")
# steps whose prefactor-free form is asserted without a local proof
AMBIGUOUS_STEPS = ("X4->X5", "X5->X6")
MAX_POLE_RETRIES = 3


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Identity:
    id: str
    lhs: str
    rhs: str
    ranks: Tuple[int, ...]
    kmap: KahlerMap
    prefactor_rule: PrefactorRule = None
    negate: bool = False
    case: Optional[str] = None
    node: Optional[int] = None
    reverse: bool = False

    def prefactor(self, lhs_point: FixedPoint) -> Prefactor:
        rule = self.prefactor_rule
        if rule is None:
            return Prefactor()
        if isinstance(rule, ExpPrefactorRule):
            return Prefactor(exp_terms=((Fraction(rule.coeff), rule.var),))
        model = family_model(self.lhs, self.ranks)
        coefficients: Dict[str, int] = {}
        for nodes, sign in ((rule.plus_nodes, 1), (rule.minus_nodes, -1)):
            for node in nodes:
                for label in lhs_point.subset(node):
                    name = f"lambda{label}"
                    coefficients[name] = coefficients.get(name, 0) + sign
        for frames, sign in ((rule.plus_frames, 1), (rule.minus_frames, -1)):
            for frame in frames:
                for name in model.frame_params(frame):
                    coefficients[name] = coefficients.get(name, 0) + sign
        form = AffineForm.of(rule.constant, coefficients)
        return Prefactor(unit_terms=((BinomialUnit(rule.var, rule.sign), form),))

    def describe_prefactor(self) -> str:
        rule = self.prefactor_rule
        names = family_model(self.lhs, self.ranks).variables
        if rule is None:
            return "1"
        if isinstance(rule, ExpPrefactorRule):
            return f"exp({rule.coeff}*{names[rule.var]})"
        op = "+" if rule.sign > 0 else "-"
        parts = [f"+sum(x{i})" for i in rule.plus_nodes] + [f"-sum(x{i})" for i in rule.minus_nodes]
        parts += [f"+sum(params{f})" for f in rule.plus_frames] + [f"-sum(params{f})" for f in rule.minus_frames]
        parts.append(f"{rule.constant:+d}")
        exponent = "".join(parts).lstrip("+")
        return f"(1{op}{names[rule.var]})^({exponent})"


def _normalize_id(identity_id: str) -> str:
    text = identity_id.strip().replace("→", "->")
    if text in ("corollary", "d3-corollary"):
        return "X0->Z1"
    return text


def build_identity(identity_id: str, ranks: Sequence[int], reverse: bool = False) -> Identity:
    """Catalogued identity by id: ``building-block``, ``star`` or a D3 step such as ``X0->Z1``."""
    key = _normalize_id(identity_id)
    ranks = tuple(int(r) for r in ranks)
    if key in BLOCK_IDS:
        check_block_ranks(ranks)
        identity = Identity(
            "building-block", "GrBlock", "GrBlockDual", ranks,
            block_kahler_map(ranks), block_prefactor(ranks), case=f"case {block_case(ranks)}", node=1,
        )
    elif key in STAR_IDS:
        check_star_ranks(ranks)
        identity = Identity(
            "star", "Xs", "Zs", ranks,
            star_kahler_map(ranks), star_prefactor(ranks), case=f"case ({star_case(ranks)})", node=5,
        )
    elif key in D3_STEP_IDS:
        check_d3_ranks(ranks)
        step = d3_step(key)
        identity = Identity(
            step.id, step.lhs, step.rhs, ranks,
            step.build_map(ranks), step.build_prefactor(ranks), negate=step.negate, node=step.node,
        )
    else:
        raise CatalogueError(
            f"Unknown identity {identity_id!r}; use building-block, star, d3-cycle or one of {', '.join(D3_STEP_IDS)}"
        )
    if not reverse:
        return identity
    if identity.prefactor_rule is not None or not identity.kmap.is_unit_free:
        raise UsageError(f"{identity.id} carries a prefactor or binomial units and cannot be reversed")
    return Identity(
        identity.id, identity.rhs, identity.lhs, ranks,
        identity.kmap.inverse(), None, identity.negate, identity.case, identity.node, True,
    )


def conjecture_agreement(identity: Identity) -> str:
    """Whether the general three-branch rule reproduces the proved map of ``identity``."""
    if identity.reverse or identity.node is None:
        return "n/a"
    try:
        result = mutate(catalogue_quiver(identity.lhs, identity.ranks), identity.node)
        agrees = conjecture_kahler_map(result).equivalent(identity.kmap)
    except EngineError as exc:
        logger.debug(f"Conjecture rule unavailable for {identity.id}: {exc}")
        return "n/a"
    return "agrees" if agrees else "differs"


# ---------------------------------------------------------------------------
# check configuration and selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckSpec:
    identity: str
    ranks: Tuple[int, ...]
    box: int = field(default_factory=lambda: settings.DEFAULT_BOX)
    trials: int = field(default_factory=lambda: settings.DEFAULT_TRIALS)
    seed: int = field(default_factory=lambda: settings.DEFAULT_SEED)
    selection: str = "all"
    jobs: int = field(default_factory=lambda: settings.JOBS)
    reverse: bool = False
    slack: int = field(default_factory=lambda: settings.UNIT_SLACK)
    audit: bool = field(default_factory=lambda: settings.SLACK_AUDIT)

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if self.box < 1:
            raise UsageError(f"Box radius must be at least 1, got {self.box}")
        if self.trials < 1:
            raise UsageError(f"Trials must be at least 1, got {self.trials}")
        if self.jobs < 1:
            raise UsageError(f"Jobs must be at least 1, got {self.jobs}")
        if self.slack < 0:
            raise UsageError(f"Unit slack must be nonnegative, got {self.slack}")
        parse_selection(self.selection)

    def to_json(self) -> Dict[str, Any]:
        return {
            "identity": self.identity,
            "ranks": list(self.ranks),
            "box": self.box,
            "trials": self.trials,
            "seed": self.seed,
            "selection": self.selection,
            "reverse": self.reverse,
            "slack": self.slack,
            "audit": self.audit,
        }


_SAMPLE = re.compile(r"^sample[\s:=]*(\d+)$")


def parse_selection(selection: str) -> Tuple[str, int]:
    text = selection.strip().lower()
    if text in ("all", "distinguished"):
        return text, 0
    match = _SAMPLE.match(text)
    if match:
        return "sample", int(match.group(1))
    raise UsageError(f"Unknown fixed-point selection {selection!r}; use all, distinguished or 'sample k'")


def select_points(points: Sequence[FixedPoint], selection: str, seed: int) -> List[FixedPoint]:
    """Selected points; the distinguished (first) point always leads."""
    mode, k = parse_selection(selection)
    if mode == "all":
        return list(points)
    if mode == "distinguished" or not points:
        return list(points[:1])
    rest = list(points[1:])
    rng = np.random.default_rng(seed)
    chosen = sorted(int(i) for i in rng.choice(len(rest), size=min(k, len(rest)), replace=False)) if rest else []
    return [points[0]] + [rest[i] for i in chosen]


def trial_seeds(seed: int, trials: int) -> List[int]:
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(trials)]


# ---------------------------------------------------------------------------
# pair comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairVerdict:
    lhs_point: Tuple[Tuple[int, ...], ...]
    rhs_point: Tuple[Tuple[int, ...], ...]
    trial: int
    seed: int
    verdict: str
    terms: int
    mismatch: Optional[Dict[str, Any]] = None
    audit: Optional[str] = None
    error: Optional[Dict[str, Any]] = None

    def to_json(self) -> Dict[str, Any]:
        payload = {
            "trial": self.trial,
            "seed": self.seed,
            "verdict": self.verdict,
            "terms": self.terms,
            "mismatch": self.mismatch,
            "audit": self.audit,
        }
        if self.error:
            payload["error"] = self.error
        return payload


def compare_sides(
    identity: Identity,
    lhs_point: FixedPoint,
    at: EquivariantPoint,
    radius: int,
    slack: int,
    force_trivial_prefactor: bool = False,
    audit: bool = False,
) -> Tuple[LaurentSeries, LaurentSeries, Optional[bool]]:
    """Both sides of the identity in the q variables, plus the boundary-slack audit result."""
    box = default_box(lhs_point, radius)
    lhs = restricted_quiver_I(lhs_point, at, box)
    rhs_point = iota((identity.lhs, identity.rhs), lhs_point)
    rhs_at = at.negated() if identity.negate else at
    rhs_box = identity.kmap.preimage_box(box, slack)
    windows = window_constraints(identity.kmap, box, slack)
    logger.debug(f"{identity.id}: q' preimage box {rhs_box} for comparison box {box}")
    rhs = restricted_quiver_I(rhs_point, rhs_at, rhs_box, window=windows)
    pulled = substitute(rhs, identity.kmap, box, slack)
    prefactor = Prefactor() if force_trivial_prefactor else identity.prefactor(lhs_point)
    right = pulled if prefactor.is_trivial else mul(expand_prefactor(prefactor, at, box, lhs.vars), pulled)

    audited = None
    if audit:
        wider = restricted_quiver_I(rhs_point, rhs_at, rhs_box, window=windows, widen=1)
        audited = substitute(wider, identity.kmap, box, slack) == pulled
    return lhs, right, audited


def _generic_for(identity: Identity, seed: int, truncation: int) -> EquivariantPoint:
    names = family_model(identity.lhs, identity.ranks).parameter_names()
    return generic_point(names, seed, truncation)


def check_pair(
    identity: Identity,
    lhs_point: FixedPoint,
    trial: int,
    seed: int,
    radius: int,
    slack: int,
    audit: bool = False,
    force_trivial_prefactor: bool = False,
) -> PairVerdict:
    rhs_point = iota((identity.lhs, identity.rhs), lhs_point)
    effective_seed = seed
    for attempt in range(MAX_POLE_RETRIES + 1):
        at = _generic_for(identity, effective_seed, radius + slack)
        try:
            lhs, right, audited = compare_sides(
                identity, lhs_point, at, radius, slack, force_trivial_prefactor, audit
            )
            break
        except PoleError as exc:
            logger.warning(f"{identity.id}: pole at seed {effective_seed} ({exc}); re-randomizing")
            effective_seed = int(np.random.SeedSequence([seed, attempt + 1]).generate_state(1)[0])
        except EngineError as exc:
            return PairVerdict(lhs_point.labels, rhs_point.labels, trial, effective_seed, FAIL, 0, error=exc.to_dict())
    else:
        return PairVerdict(
            lhs_point.labels, rhs_point.labels, trial, effective_seed, FAIL, 0,
            error={"code": PoleError.code, "message": "no pole-free generic point"},
        )

    diff = lhs.first_difference(right)
    mismatch = None
    if diff is not None:
        e, a, b = diff
        mismatch = {
            "exponent": list(e),
            "lhs": format_fraction(a),
            "rhs": format_fraction(b),
            "parameters": at.to_json()["values"],
        }
    audit_state = None if audited is None else (PASS if audited else FAIL)
    verdict = PASS if diff is None and audit_state != FAIL else FAIL
    return PairVerdict(
        lhs_point.labels, rhs_point.labels, trial, effective_seed, verdict, len(lhs.terms), mismatch, audit_state
    )


# ---------------------------------------------------------------------------
# parallel jobs
# ---------------------------------------------------------------------------

def _run_job(job: Dict[str, Any]) -> Dict[str, Any]:
    """Worker entry point; jobs carry only plain data so they pickle across processes."""
    identity = build_identity(job["identity"], job["ranks"], job["reverse"])
    model = family_model(identity.lhs, identity.ranks)
    point = FixedPoint.make(identity.lhs, identity.ranks, dict(zip(model.gauge_ids, job["point"])))
    verdict = check_pair(
        identity, point, job["trial"], job["seed"], job["radius"], job["slack"], job["audit"], job["force"]
    )
    return {"key": job["key"], "verdict": verdict}


def _run_jobs(jobs: List[Dict[str, Any]], workers: int) -> Dict[Tuple[int, int], PairVerdict]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]
    return {tuple(r["key"]): r["verdict"] for r in sorted(results, key=lambda r: tuple(r["key"]))}


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

def run_identity(identity: Identity, spec: CheckSpec) -> Dict[str, Any]:
    """Check ``identity`` over the selected fixed-point pairs and trials."""
    points = select_points(enumerate_fixed_points(identity.lhs, identity.ranks), spec.selection, spec.seed)
    seeds = trial_seeds(spec.seed, spec.trials)
    jobs = []
    for p, point in enumerate(points):
        for t, seed in enumerate(seeds):
            jobs.append({
                "key": (p, t),
                "identity": identity.id,
                "ranks": identity.ranks,
                "reverse": identity.reverse,
                "point": point.labels,
                "trial": t,
                "seed": seed,
                "radius": spec.box,
                "slack": spec.slack,
                "audit": spec.audit and t == 0,
                "force": False,
            })
    verdicts = _run_jobs(jobs, spec.jobs)

    pairs = []
    for p, point in enumerate(points):
        trials = [verdicts[(p, t)] for t in range(len(seeds))]
        pair_verdict = PASS if all(v.verdict == PASS for v in trials) else FAIL
        pairs.append({
            "lhs_point": [list(labels) for labels in point.labels],
            "rhs_point": [list(labels) for labels in trials[0].rhs_point],
            "verdict": pair_verdict,
            "trials": [v.to_json() for v in trials],
        })
    verdict = PASS if pairs and all(pair["verdict"] == PASS for pair in pairs) else FAIL
    audits = [v.audit for v in verdicts.values() if v.audit is not None]

    notes: List[str] = []
    guard = "not applicable"
    if identity.prefactor_rule is not None and points:
        forced = check_pair(identity, points[0], 0, seeds[0], spec.box, spec.slack, force_trivial_prefactor=True)
        guard = "fails as required" if forced.verdict == FAIL else "vacuous"
        if forced.verdict == PASS:
            verdict = FAIL
            notes.append("Comparison box is too small to see the prefactor; enlarge the box.")
    independent = len({pair["verdict"] for pair in pairs}) <= 1
    if verdict == FAIL and identity.id in AMBIGUOUS_STEPS:
        notes.append("Prefactor-free form of this step is asserted without a local proof; ambiguity candidate.")
        logger.warning(f"{identity.id} failed; flagged as an ambiguity candidate")

    report = {
        "identity": identity.id,
        "lhs": identity.lhs,
        "rhs": identity.rhs,
        "ranks": list(identity.ranks),
        "case": identity.case,
        "reverse": identity.reverse,
        "parameters_negated": identity.negate,
        "kahler_map": identity.kmap.describe(),
        "prefactor": identity.describe_prefactor(),
        "conjecture_rule": conjecture_agreement(identity),
        "config": spec.to_json(),
        "trial_seeds": seeds,
        "pairs": pairs,
        "pair_count": len(pairs),
        "fixed_point_independent": independent,
        "audit": (PASS if all(a == PASS for a in audits) else FAIL) if audits else "skipped",
        "prefactor_guard": guard,
        "verdict": verdict,
        "notes": notes,
    }
    logger.info(
        f"Checked {identity.id} ({identity.case or 'no case'}) on {len(pairs)} pairs x {len(seeds)} trials: {verdict}"
    )
    return report


def check_building_block(r: int, n: int, m: int, spec: CheckSpec) -> Dict[str, Any]:
    return run_identity(build_identity("building-block", (r, n, m), spec.reverse), spec)


def check_star(ranks: Sequence[int], spec: CheckSpec) -> Dict[str, Any]:
    return run_identity(build_identity("star", ranks, spec.reverse), spec)


def check_d3_step(step_id: str, ranks: Sequence[int], spec: CheckSpec) -> Dict[str, Any]:
    return run_identity(build_identity(step_id, ranks, spec.reverse), spec)


def cumulative_maps(ranks: Sequence[int]) -> List[KahlerMap]:
    """Maps from each chain family's variables to X0 variables, X0 first and X0 again last."""
    current = KahlerMap.identity(D3_VARS)
    maps = [current]
    for step_id in D3_STEP_IDS:
        current = d3_step(step_id).build_map(tuple(ranks)).then(current)
        maps.append(current)
    return maps


def check_cycle(ranks: Sequence[int], spec: CheckSpec) -> Dict[str, Any]:
    """Table rows, the closed nine-step composition, and every step's identity."""
    ranks = check_d3_ranks(ranks)
    maps = cumulative_maps(ranks)
    rows = []
    for (node, family, expected), computed in zip(chain_map_table(ranks), maps):
        rows.append({
            "node": node,
            "family": family,
            "expected": expected.describe(),
            "computed": computed.describe(),
            "match": computed.equivalent(expected),
        })
    closed = maps[-1].is_identity
    steps = [check_d3_step(step_id, ranks, replace(spec, identity=step_id, reverse=False)) for step_id in D3_STEP_IDS]
    verdict = PASS if closed and all(r["match"] for r in rows) and all(s["verdict"] == PASS for s in steps) else FAIL
    logger.info(f"Checked d3-cycle at {list(ranks)}: {verdict}")
    return {
        "identity": "d3-cycle",
        "ranks": list(ranks),
        "config": spec.to_json(),
        "table": rows,
        "composition_is_identity": closed,
        "composition": maps[-1].describe(),
        "steps": steps,
        "verdict": verdict,
    }


def run_check(spec: CheckSpec) -> Dict[str, Any]:
    """Dispatch a check by identity id."""
    key = _normalize_id(spec.identity)
    if key in CYCLE_IDS:
        return check_cycle(spec.ranks, spec)
    return run_identity(build_identity(key, spec.ranks, spec.reverse), spec)


def timed_check(spec: CheckSpec) -> Tuple[Dict[str, Any], float]:
    started = time.perf_counter()
    report = run_check(spec)
    return report, time.perf_counter() - started


def report_name(report: Dict[str, Any]) -> str:
    identity = report["identity"].replace("->", "-to-")
    ranks = "-".join(str(r) for r in report["ranks"])
    suffix = "-reverse" if report.get("reverse") else ""
    return f"{identity}_{ranks}{suffix}"
