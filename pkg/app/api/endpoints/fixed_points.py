import asyncio
from typing import Any, Dict

from fastapi import APIRouter, Query

from app.api.services.catalogue import parse_int_list
from app.api.services.fixed_points import fixed_point_listing

router = APIRouter()


@router.get("/{family}")
async def list_fixed_points(family: str, ranks: str = Query(..., description="comma-separated ranks")) -> Dict[str, Any]:
    """Torus-fixed points of a catalogued family, with closed-form and dual counts."""
    return await asyncio.to_thread(fixed_point_listing, family, parse_int_list(ranks))
