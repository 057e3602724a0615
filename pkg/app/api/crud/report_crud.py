# crud/report_crud.py
from typing import Any, Dict, List, Optional

from app.api.services.duality import report_name
from app.api.services.reports import build_summary
from app.core.store import ReportStore

SUMMARY_NAME = "summary"

# The store is passed in by the caller (the API uses the module singleton)


def list_reports(store: ReportStore) -> List[str]:
    return [name for name in store.list_reports() if name != SUMMARY_NAME]


def get_report(store: ReportStore, name: str) -> Dict[str, Any]:
    if name == SUMMARY_NAME:
        raise FileNotFoundError(f"No report named {name}")
    return store.read_json(name)


def _timings(store: ReportStore) -> Dict[str, float]:
    try:
        return dict(store.read_json(SUMMARY_NAME).get("timings", {}))
    except FileNotFoundError:
        return {}


# rebuild summary.json from every stored report plus the recorded wall-clock times
def save_summary(store: ReportStore, timings: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    timings = _timings(store) if timings is None else timings
    entries = [
        {"report": store.read_json(name), "seconds": timings.get(name, 0.0)}
        for name in list_reports(store)
    ]
    summary = build_summary(entries)
    summary["timings"] = {name: timings[name] for name in sorted(timings) if name in list_reports(store)}
    store.write_json(SUMMARY_NAME, summary)
    return summary


def get_summary(store: ReportStore) -> Dict[str, Any]:
    try:
        return store.read_json(SUMMARY_NAME)
    except FileNotFoundError:
        return save_summary(store, {})


# write one report (no wall-clock data inside) and record its time in the summary
def save_report(store: ReportStore, report: Dict[str, Any], seconds: float) -> str:
    name = report_name(report)
    store.write_json(name, report)
    timings = _timings(store)
    timings[name] = round(float(seconds), 3)
    save_summary(store, timings)
    return name
