# app/api/services/reports.py
import io
import logging
from typing import Any, Dict, List, Sequence

import pandas as pd
from reportlab.lib import colors
from reportlab.lib.pagesizes import letter
from reportlab.lib.styles import getSampleStyleSheet
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from app.core.config import settings

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["identity", "ranks", "case", "verdict", "pairs", "trials", "seed", "audit", "prefactor_guard", "seconds"]


def _row(report: Dict[str, Any], seconds: float) -> Dict[str, Any]:
    config = report.get("config", {})
    if "steps" in report:
        pairs = sum(step.get("pair_count", 0) for step in report["steps"])
        audits = {step.get("audit") for step in report["steps"]}
        audit = "FAIL" if "FAIL" in audits else ("PASS" if "PASS" in audits else "skipped")
        guard = "; ".join(sorted({step.get("prefactor_guard", "") for step in report["steps"]}))
    else:
        pairs = report.get("pair_count", 0)
        audit = report.get("audit", "skipped")
        guard = report.get("prefactor_guard", "not applicable")
    return {
        "identity": report["identity"],
        "ranks": ",".join(str(r) for r in report.get("ranks", [])),
        "case": report.get("case") or "",
        "verdict": report["verdict"],
        "pairs": pairs,
        "trials": config.get("trials"),
        "seed": config.get("seed"),
        "audit": audit,
        "prefactor_guard": guard,
        "seconds": round(float(seconds), 3),
    }


def reports_to_df(entries: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """One row per check; ``entries`` hold ``report`` and ``seconds``."""
    if not entries:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    return pd.DataFrame([_row(e["report"], e.get("seconds", 0.0)) for e in entries], columns=SUMMARY_COLUMNS)


def build_summary(entries: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    df = reports_to_df(entries)
    counts = df["verdict"].value_counts().to_dict() if not df.empty else {}
    return {
        "project": settings.PROJECT_NAME,
        "version": settings.VERSION,
        "total": int(len(df)),
        "passed": int(counts.get("PASS", 0)),
        "failed": int(counts.get("FAIL", 0)),
        "seeds": sorted({int(s) for s in df["seed"].dropna()}) if not df.empty else [],
        "total_seconds": round(float(df["seconds"].sum()), 3) if not df.empty else 0.0,
        "checks": df.to_dict(orient="records"),
    }


class PDFService:
    """Renders run summaries with reportlab."""

    def summary_pdf(self, summary: Dict[str, Any]) -> bytes:
        buffer = io.BytesIO()
        doc = SimpleDocTemplate(buffer, pagesize=letter)
        styles = getSampleStyleSheet()
        story: List[Any] = []

        story.append(Paragraph(f"{summary.get('project', settings.PROJECT_NAME)} run summary", styles["Title"]))
        story.append(Spacer(1, 12))
        overview = f"""
        <b>Overview:</b><br/>
        Checks: {summary.get('total', 0)}<br/>
        Passed: {summary.get('passed', 0)}<br/>
        Failed: {summary.get('failed', 0)}<br/>
        Seeds: {', '.join(str(s) for s in summary.get('seeds', [])) or 'none'}<br/>
        Wall-clock seconds: {summary.get('total_seconds', 0)}<br/>
        """
        story.append(Paragraph(overview, styles["Normal"]))
        story.append(Spacer(1, 12))

        checks = summary.get("checks", [])
        if checks:
            header = ["identity", "ranks", "case", "verdict", "pairs", "seconds"]
            rows = [header] + [[str(c.get(h, "")) for h in header] for c in checks]
            table = Table(rows, repeatRows=1)
            table.setStyle(TableStyle([
                ("BACKGROUND", (0, 0), (-1, 0), colors.lightgrey),
                ("GRID", (0, 0), (-1, -1), 0.5, colors.grey),
                ("FONTSIZE", (0, 0), (-1, -1), 8),
            ]))
            for i, c in enumerate(checks, start=1):
                if c.get("verdict") == "FAIL":
                    table.setStyle(TableStyle([("TEXTCOLOR", (3, i), (3, i), colors.red)]))
            story.append(table)

        doc.build(story)
        logger.info(f"Rendered summary PDF for {len(checks)} checks")
        return buffer.getvalue()


# Singleton instance
pdf_service = PDFService()
