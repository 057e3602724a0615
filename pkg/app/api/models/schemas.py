# models/schemas.py
from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Any, Dict, List, Optional, Union

# small submodels
class NodeModel(BaseModel):
    id: int
    rank: int
    framed: bool = False


class ArrowModel(BaseModel):
    src: int
    dst: int
    mult: int = Field(default=1, ge=1)


class PotentialTerm(BaseModel):
    coeff: Union[int, str] = 1   # integer or "p/q"
    cycle: List[List[int]]       # [src, dst] or [src, dst, copy]

    @field_validator("cycle")
    @classmethod
    def check_refs(cls, v):
        if not v:
            raise ValueError("cycle must not be empty")
        for ref in v:
            if len(ref) not in (2, 3):
                raise ValueError(f"arrow reference {ref} must be [src, dst] or [src, dst, copy]")
        return v


# Quiver file, the on-disk exchange format
class QuiverFile(BaseModel):
    nodes: List[NodeModel]
    arrows: List[ArrowModel] = []
    potential: List[PotentialTerm] = []
    meta: Dict[str, Any] = {}


class SeriesTerm(BaseModel):
    e: List[int]
    c: str


class SeriesFile(BaseModel):
    vars: List[str]
    box: List[List[int]]
    terms: List[SeriesTerm] = []


class FixedPointModel(BaseModel):
    family: str
    ranks: List[int]
    subsets: List[List[int]]


# Requests
class MutateRequest(BaseModel):
    quiver: QuiverFile
    sequence: List[int] = Field(..., min_length=1)
    rule: str = "paper"   # "paper", "conjecture" or "none"
    track_potential: bool = True


class MutationStep(BaseModel):
    node: int
    quiver: Dict[str, Any]
    mutation: Dict[str, Any]
    kahler_map: Optional[Dict[str, Any]] = None
    kahler_error: Optional[str] = None


class MutateResponse(BaseModel):
    steps: List[MutationStep]


class IFunctionRequest(BaseModel):
    ranks: List[int]
    point: Optional[int] = Field(default=0, ge=0)    # index into the enumeration
    subsets: Optional[List[List[int]]] = None        # explicit point, overrides the index
    box: Optional[int] = Field(default=None, ge=0)
    seed: Optional[int] = None
    prune: bool = True


class CheckRequest(BaseModel):
    identity: str
    ranks: List[int]
    box: Optional[int] = Field(default=None, ge=1)
    trials: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None
    selection: str = "all"
    jobs: Optional[int] = Field(default=None, ge=1)
    reverse: bool = False
    audit: Optional[bool] = None

    def to_spec(self):
        from app.api.services.duality import CheckSpec

        overrides = {
            k: v
            for k, v in {
                "box": self.box,
                "trials": self.trials,
                "seed": self.seed,
                "jobs": self.jobs,
                "audit": self.audit,
            }.items()
            if v is not None
        }
        return CheckSpec(
            identity=self.identity,
            ranks=tuple(self.ranks),
            selection=self.selection,
            reverse=self.reverse,
            **overrides,
        )


# Responses
class RunConfig(BaseModel):
    identity: str
    ranks: List[int]
    box: int
    trials: int
    seed: int
    selection: str
    reverse: bool
    slack: int
    audit: bool


class Mismatch(BaseModel):
    model_config = ConfigDict(extra="allow")

    exponent: List[int]
    lhs: str
    rhs: str


class TrialVerdict(BaseModel):
    model_config = ConfigDict(extra="allow")

    trial: int
    seed: int
    verdict: str
    terms: int
    mismatch: Optional[Mismatch] = None
    audit: Optional[str] = None


class PairVerdict(BaseModel):
    lhs_point: List[List[int]]
    rhs_point: List[List[int]]
    verdict: str
    trials: List[TrialVerdict] = []


class CheckReport(BaseModel):
    model_config = ConfigDict(extra="allow")

    identity: str
    ranks: List[int]
    config: RunConfig
    verdict: str
    pairs: List[PairVerdict] = []


class CheckResponse(BaseModel):
    name: str
    seconds: float
    report: CheckReport


class SummaryRow(BaseModel):
    identity: str
    ranks: str
    case: str
    verdict: str
    pairs: int
    trials: Optional[int] = None
    seed: Optional[int] = None
    audit: str
    prefactor_guard: str
    seconds: float


class RunSummary(BaseModel):
    project: str
    version: str
    total: int
    passed: int
    failed: int
    seeds: List[int]
    total_seconds: float
    checks: List[SummaryRow]
    timings: Dict[str, float] = {}
