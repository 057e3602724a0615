import asyncio
from typing import Any, Dict

from fastapi import APIRouter

from app.api.models.schemas import IFunctionRequest
from app.api.services.ifunctions import restricted_series

router = APIRouter()


@router.post("/{family}")
async def compute_ifunction(family: str, request: IFunctionRequest) -> Dict[str, Any]:
    return await asyncio.to_thread(
        restricted_series,
        family,
        request.ranks,
        request.point or 0,
        request.subsets,
        request.box,
        request.seed,
        request.prune,
    )
