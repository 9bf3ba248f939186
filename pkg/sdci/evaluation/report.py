"""Render metric JSON files into aligned text tables."""

import json
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

from pydantic import TypeAdapter

from sdci.schemas.metrics import MetricReport

_REPORTS = TypeAdapter(List[MetricReport])
COLUMN_SPLITS = ("train", "test")


def load_reports(paths: Iterable[Union[str, Path]]) -> List[MetricReport]:
    """Each file holds one report object or a list of them."""
    reports: List[MetricReport] = []
    for path in paths:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(raw, list):
            reports.extend(_REPORTS.validate_python(raw))
        else:
            reports.append(MetricReport.model_validate(raw))
    return reports


def _group(reports: Sequence[MetricReport]) -> "OrderedDict[str, Dict[str, MetricReport]]":
    grouped: "OrderedDict[str, Dict[str, MetricReport]]" = OrderedDict()
    for report in reports:
        grouped.setdefault(report.label, {})[report.split] = report
    return grouped


def _cells(report: MetricReport | None) -> List[str]:
    if report is None:
        return ["-", "-", "-", "-"]
    return [
        report.edge_accuracy.format(digits=2),
        report.reconstruction_mse.format(digits=2, scientific=True),
        f"{report.world_param_distance:.2e}" if report.world_param_distance is not None else "-",
        f"{report.state_accuracy:.2f}" if report.has_state_metrics else "-",
    ]


def render_table(reports: Sequence[MetricReport], splits: Sequence[str] = COLUMN_SPLITS) -> str:
    """One row per run label; edge accuracy (%), MSE, world distance and state accuracy per split."""
    metrics = ["Edge acc. (%)", "MSE", "Dist. to world", "State acc. (%)"]
    header = ["Run"] + [f"{name} [{split}]" for split in splits for name in metrics]
    rows = [header]
    for label, by_split in _group(reports).items():
        row = [label]
        for split in splits:
            row.extend(_cells(by_split.get(split)))
        rows.append(row)

    # drop metric columns that are empty for every run
    keep = [0] + [
        col for col in range(1, len(header)) if any(row[col] != "-" for row in rows[1:])
    ]
    rows = [[row[col] for col in keep] for row in rows]
    widths = [max(len(row[col]) for row in rows) for col in range(len(keep))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * width for width in widths))
    return "\n".join(lines)
