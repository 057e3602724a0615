import asyncio
import logging
from typing import Any, Dict, List

from fastapi import APIRouter, HTTPException, Query

from app.api.models.schemas import MutateRequest, MutateResponse, MutationStep, QuiverFile
from app.api.services.catalogue import FAMILIES, catalogue_quiver, catalogue_summary, parse_int_list
from app.api.services.quiver import kahler_map_for, mutate_sequence, quiver_from_model, quiver_to_json
from app.core.errors import EngineError

logger = logging.getLogger(__name__)

router = APIRouter()


@router.get("/catalogue")
async def list_catalogue() -> List[Dict[str, Any]]:
    return catalogue_summary()


@router.get("/catalogue/{family}", response_model=QuiverFile)
async def get_catalogue_quiver(family: str, ranks: str = Query(..., description="comma-separated ranks, e.g. 2,2,3,4")):
    if family not in FAMILIES:
        raise HTTPException(status_code=404, detail=f"Unknown family {family}")
    q = await asyncio.to_thread(catalogue_quiver, family, parse_int_list(ranks))
    return quiver_to_json(q)


def _mutate(request: MutateRequest) -> MutateResponse:
    q = quiver_from_model(request.quiver)
    steps = []
    for result in mutate_sequence(q, request.sequence, request.track_potential):
        kmap, error = None, None
        if request.rule != "none":
            try:
                kmap = kahler_map_for(result, request.rule).to_json()
            except EngineError as exc:
                error = exc.message
        steps.append(MutationStep(
            node=result.node,
            quiver=quiver_to_json(result.quiver),
            mutation=result.to_json(),
            kahler_map=kmap,
            kahler_error=error,
        ))
    return MutateResponse(steps=steps)


@router.post("/mutate", response_model=MutateResponse)
async def mutate_quiver(request: MutateRequest):
    """
    Mutate a quiver along a node sequence.

    Every step carries the mutated quiver file, the mutation bookkeeping and,
    unless ``rule`` is "none", the attached Kähler substitution.
    """
    return await asyncio.to_thread(_mutate, request)
