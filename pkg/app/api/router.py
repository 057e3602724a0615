from fastapi import APIRouter
from app.api.endpoints import checks, fixed_points, ifunctions, quivers
api_router = APIRouter()

api_router.include_router(quivers.router, prefix="/quivers", tags=["Quivers"])
api_router.include_router(fixed_points.router, prefix="/fixed-points", tags=["Fixed Points"])
api_router.include_router(ifunctions.router, prefix="/ifunctions", tags=["I-functions"])
api_router.include_router(checks.router, prefix="/checks", tags=["Identity Checks"])
