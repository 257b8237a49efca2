"""
Report serialization: canonical JSON, or a CSV mirror chosen by file extension.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from hrcache_sim.engine.simulator import ComparisonReport, SimReport, overhead_counters

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 6

Report = Union[SimReport, ComparisonReport, Dict[str, Any]]


def round_floats(value: Any) -> Any:
    """Round every float in a nested structure to six significant digits."""
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {k: round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v) for v in value]
    return value


def report_dict(report: Report, include_timing: bool = False) -> Dict[str, Any]:
    if isinstance(report, SimReport):
        data = report.to_dict(include_timing)
        data["overhead"] = overhead_counters(report)
        return data
    if isinstance(report, ComparisonReport):
        return report.to_dict(include_timing)
    return dict(report)


def to_json(report: Report, include_timing: bool = False) -> str:
    return json.dumps(round_floats(report_dict(report, include_timing)), sort_keys=True, indent=2) + "\n"


def _sim_rows(report: Report, include_timing: bool) -> List[Dict[str, Any]]:
    if isinstance(report, SimReport):
        return [report.to_dict(include_timing)]
    if isinstance(report, ComparisonReport):
        rows = []
        for sim in report.reports:
            row = sim.to_dict(include_timing)
            row["traffic_reduction_vs_lru"] = report.traffic_reduction_vs_lru[sim.policy][str(sim.capacity)]
            rows.append(row)
        return rows
    return [dict(report)]


def to_csv(report: Report, include_timing: bool = False) -> str:
    rows = [round_floats(row) for row in _sim_rows(report, include_timing)]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def write_report(report: Report, path: Union[str, Path], include_timing: bool = False) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        text = to_csv(report, include_timing)
    else:
        text = to_json(report, include_timing)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Saved report to {path}")
