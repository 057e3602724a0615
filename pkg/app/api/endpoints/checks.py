import asyncio
import logging
from typing import List

from fastapi import APIRouter, HTTPException, Response

from app.api.crud import report_crud
from app.api.models.schemas import CheckRequest, CheckResponse, RunSummary
from app.api.services.duality import timed_check
from app.api.services.reports import pdf_service
from app.core.store import report_store

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("", response_model=CheckResponse)
async def run_check(request: CheckRequest):
    """
    Run one identity check and persist its report.

    The report body carries no wall-clock data; the elapsed time is returned
    alongside it and recorded in the run summary.
    """
    spec = request.to_spec()
    report, seconds = await asyncio.to_thread(timed_check, spec)
    name = await asyncio.to_thread(report_crud.save_report, report_store, report, seconds)
    return {"name": name, "seconds": round(seconds, 3), "report": report}


@router.get("/reports")
async def list_reports() -> List[str]:
    return report_crud.list_reports(report_store)


@router.get("/reports/{name}")
async def get_report(name: str):
    try:
        return report_crud.get_report(report_store, name)
    except FileNotFoundError:
        raise HTTPException(status_code=404, detail=f"No report named {name}")


@router.get("/summary", response_model=RunSummary)
async def get_summary():
    return await asyncio.to_thread(report_crud.get_summary, report_store)


@router.get("/summary.pdf")
async def get_summary_pdf():
    summary = await asyncio.to_thread(report_crud.get_summary, report_store)
    pdf_bytes = await asyncio.to_thread(pdf_service.summary_pdf, summary)
    return Response(content=pdf_bytes, media_type="application/pdf")
