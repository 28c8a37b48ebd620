"""Text/CSV tables and SVG bar charts built from CvReport objects."""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable
from xml.sax.saxutils import escape

from .baselines import KPIS, LABEL as BASELINE_LABEL, METHODS, baseline_table
from .models import FAMILIES, FAMILY_ORDER
from .pipeline import CvReport

BEST_MARK = "*"


def fmt(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    return f"{value:.4g}"


def row_label(family: str, scheme: str) -> str:
    label = FAMILIES[family].label if family in FAMILIES else family.upper()
    return label + ("*" if scheme == "nested" else "")


def result_rows(reports: Iterable[CvReport], metric: str, kpis=KPIS) -> list[tuple[str, list]]:
    """Rows in table order: each family's non-nested row, then its nested row."""
    by_key = {}
    for rep in reports:
        for fam, cells in rep.results.items():
            by_key[(fam, rep.scheme)] = [None if cells is None else cells[k][metric] for k in kpis]
    families = [f for f in FAMILY_ORDER if any((f, s) in by_key for s in ("non-nested", "nested"))]
    families += sorted({f for f, _ in by_key} - set(families))
    rows = []
    for fam in families:
        for scheme in ("non-nested", "nested"):
            if (fam, scheme) in by_key:
                rows.append((row_label(fam, scheme), by_key[(fam, scheme)]))
    return rows


def best_per_column(rows) -> list[int | None]:
    best = []
    for j in range(len(rows[0][1]) if rows else 0):
        vals = [(r[1][j], i) for i, r in enumerate(rows) if r[1][j] is not None]
        best.append(min(vals)[1] if vals else None)
    return best


def format_table(rows, metric: str, kpis=KPIS) -> str:
    """Fixed-width table; the lowest value per column carries a trailing '*'."""
    best = best_per_column(rows)
    header = [f"{metric.upper()} (%)", *kpis]
    body = []
    for i, (label, values) in enumerate(rows):
        cells = [fmt(v) + (BEST_MARK if best[j] == i else "") for j, v in enumerate(values)]
        body.append([label, *cells])
    widths = [max(len(r[c]) for r in [header, *body]) for c in range(len(header))]
    lines = ["  ".join(h.ljust(w) if c == 0 else h.rjust(w) for c, (h, w) in enumerate(zip(r, widths)))
             for r in [header, *body]]
    return "\n".join(lines) + "\n"


def table_csv(rows, kpis=KPIS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", *kpis])
    for label, values in rows:
        w.writerow([label, *("" if v is None else repr(float(v)) for v in values)])
    return buf.getvalue()


def _baseline_value(label: str, kpi: str, table) -> float | None:
    nested = label.endswith("*")
    method = label.rstrip("*")
    return table.get((method, "nested" if nested else "non-nested", kpi))


def baseline_rows(metric: str) -> list[tuple[str, list]]:
    table = baseline_table(metric)
    return [(m + suffix, [table[(m, variant, k)] for k in KPIS])
            for m in METHODS for suffix, variant in (("", "non-nested"), ("*", "nested"))]


def format_comparison(rows, metric: str) -> str:
    """Our value next to the published one for every row label and KPI."""
    table = baseline_table(metric)
    ours = dict(rows)
    labels = [label for label, _ in baseline_rows(metric)]
    labels += [label for label, _ in rows if label not in labels]
    header = [f"{metric.upper()} (%)"]
    for k in KPIS:
        header += [f"{k} ours", f"{k} paper"]
    body = []
    for label in labels:
        line = [label]
        for j, k in enumerate(KPIS):
            line += [fmt(ours[label][j]) if label in ours else "-", fmt(_baseline_value(label, k, table))]
        body.append(line)
    widths = [max(len(r[c]) for r in [header, *body]) for c in range(len(header))]
    out = [f"paper columns: {BASELINE_LABEL}"]
    out += ["  ".join(h.ljust(w) if c == 0 else h.rjust(w) for c, (h, w) in enumerate(zip(r, widths)))
            for r in [header, *body]]
    return "\n".join(out) + "\n"


def best_per_kpi(rows, kpis=KPIS) -> dict[str, tuple[str, float]]:
    best = best_per_column(rows)
    return {k: (rows[i][0], rows[i][1][j]) for j, (k, i) in enumerate(zip(kpis, best)) if i is not None}


def render_svg(best: dict, metric: str, baseline: dict | None = None) -> str:
    """Bar chart with one group per KPI: the best method's error (log scale),
    optionally beside the best published value."""
    width, height = 120 + 110 * len(best), 420
    top, bottom, left = 60, 340, 70
    values = [v for _, v in best.values()] + ([v for _, v in baseline.values()] if baseline else [])
    positive = [v for v in values if v and v > 0] or [1.0]
    lo = math.floor(math.log10(min(positive))) - 1
    hi = math.ceil(math.log10(max(positive)))
    hi = hi if hi > lo else lo + 1

    def y_of(v):
        v = max(v, 10.0 ** lo)
        return bottom - (math.log10(v) - lo) / (hi - lo) * (bottom - top)

    title = f"Best performing method for each output ({metric.upper()}, %)"
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{width - 20}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for e in range(lo, hi + 1):
        y = y_of(10.0 ** e)
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{width - 20}" y2="{y:.1f}" stroke="#ddd"/>')
    bar_w = 36 if baseline else 60
    for g, (kpi, (label, value)) in enumerate(best.items()):
        x0 = left + 20 + g * 110
        series = [("ours", label, value, "#3b6ea5")]
        if baseline and kpi in baseline:
            series.append(("paper", *baseline[kpi], "#bbbbbb"))
        for s, (kind, lab, val, color) in enumerate(series):
            x = x0 + s * (bar_w + 4)
            y = y_of(val)
            parts.append(f'<rect class="bar {kind}" x="{x}" y="{y:.1f}" width="{bar_w}" '
                         f'height="{bottom - y:.1f}" fill="{color}"><title>{escape(lab)}: {fmt(val)}</title></rect>')
            parts.append(f'<text x="{x + bar_w / 2:.1f}" y="{y - 16:.1f}" text-anchor="middle">{escape(lab)}</text>')
            parts.append(f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle">{fmt(val)}</text>')
        parts.append(f'<text x="{x0 + (len(series) * (bar_w + 4)) / 2:.1f}" y="{bottom + 18}" '
                     f'text-anchor="middle" font-weight="bold">{escape(kpi)}</text>')
    if baseline:
        parts.append(f'<rect x="{left}" y="{height - 40}" width="12" height="12" fill="#3b6ea5"/>')
        parts.append(f'<text x="{left + 18}" y="{height - 30}">this run</text>')
        parts.append(f'<rect x="{left + 110}" y="{height - 40}" width="12" height="12" fill="#bbbbbb"/>')
        parts.append(f'<text x="{left + 128}" y="{height - 30}">{escape(BASELINE_LABEL)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
