from typing import Any, Dict

from app.greedy.service import RateSeries

SERIES_NAME = "rate_series.csv"
SUMMARY_NAME = "rate_summary.json"


def rate_summary(series: RateSeries, mass: float, norm_bound: float) -> Dict[str, Any]:
    below = all(m <= b for m, b in zip(series.mean_errors, series.bounds))
    return {
        "mass": mass,
        "norm_bound": norm_bound,
        "slope": series.slope,
        "intercept": series.intercept,
        "points_used": series.fit.points_used if series.fit else 0,
        "truncated": series.fit.truncated if series.fit else False,
        "below_bound": below,
    }


def save_rate_series(store, series: RateSeries, mass: float, norm_bound: float) -> Dict[str, Any]:
    """CSV with n, mean_error, std_error, bound (+ greedy_error, slope, intercept) and a JSON summary"""
    store.write_csv(SERIES_NAME, series.to_frame())
    summary = rate_summary(series, mass, norm_bound)
    store.write_json(SUMMARY_NAME, summary)
    return summary
