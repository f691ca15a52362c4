from typing import Any, Dict, Optional

import pandas as pd

from app.varnorm.service import EstimateReport

REPORT_NAME = "report.json"
HISTORY_NAME = "iterations.csv"
HISTORY_COLUMNS = ["iteration", "residual", "mass", "atoms", "lam"]


def report_to_record(report: EstimateReport, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    record = report.model_dump(exclude={"history"})
    if extra:
        record.update(extra)
    return record


def history_frame(report: EstimateReport) -> pd.DataFrame:
    return pd.DataFrame([item.model_dump() for item in report.history], columns=HISTORY_COLUMNS)


def save_estimate_report(store, report: EstimateReport, extra: Optional[Dict[str, Any]] = None) -> None:
    """Report JSON plus the per-iteration CSV"""
    store.write_json(REPORT_NAME, report_to_record(report, extra))
    store.write_csv(HISTORY_NAME, history_frame(report))


def load_estimate_report(store) -> EstimateReport:
    record = store.read_json(REPORT_NAME)
    known = set(EstimateReport.model_fields)
    history = store.read_csv(HISTORY_NAME).to_dict(orient="records")
    return EstimateReport(**{k: v for k, v in record.items() if k in known}, history=history)
