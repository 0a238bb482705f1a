"""Deviation report tables (CSV / text) and SVG deviation plots."""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyReport, EmptySeries, ParseError, ValidationError
from .sync import GROUP_KEYS, DeviationReport, DeviationStats, ReportRow

REPORT_COLUMNS = ("joint", "exercise", "median_deg", "average_deg", "maximum_deg", "samples", "gaps")
REPORT_FORMATS = ("csv", "text")


def _cells(row: ReportRow, group_by: Sequence[str]) -> list[str]:
    s = row.stats
    groups = dict(row.groups)
    return [
        row.channel, row.exercise,
        f"{s.median:.2f}", f"{s.average:.2f}", f"{s.maximum:.2f}",
        str(s.samples), str(s.gaps),
    ] + [str(groups.get(k, "")) for k in group_by]


def emit_report(report: DeviationReport, fmt: str = "csv") -> bytes:
    """Serialize a report with two decimals per statistic.

    CSV has the fixed columns ``joint,exercise,median_deg,average_deg,
    maximum_deg,samples,gaps``; grouping keys, if any, follow as extra
    columns. The text table starts with ``key: value`` header lines.
    """
    if fmt not in REPORT_FORMATS:
        raise ValidationError(f"report format must be one of {REPORT_FORMATS}, got {fmt!r}")
    if not report.rows:
        raise EmptyReport("report has no rows")
    columns = list(REPORT_COLUMNS) + list(report.group_by)
    body = [_cells(r, report.group_by) for r in report.rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows(body)
        return buf.getvalue().encode("utf-8")

    lines = [f"mode: {report.mode}"]
    lines += [f"{k}: {v}" for k, v in report.header.items()]
    lines.append("")
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(columns)]
    numeric = set(range(2, 7))

    def fmt_line(cells):
        return "  ".join(
            c.rjust(w) if i in numeric else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths))
        ).rstrip()

    lines.append(fmt_line(columns))
    lines.append("  ".join("-" * w for w in widths))
    lines += [fmt_line(b) for b in body]
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_report_csv(data: bytes | str, mode: str = "cross-system") -> DeviationReport:
    """Read back a CSV produced by :func:`emit_report` (values at 2 decimals)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise EmptyReport("report file is empty")
    header = rows[0]
    if tuple(header[: len(REPORT_COLUMNS)]) != REPORT_COLUMNS:
        raise ParseError(1, f"report columns must start with {','.join(REPORT_COLUMNS)}")
    group_by = tuple(header[len(REPORT_COLUMNS):])
    if any(k not in GROUP_KEYS for k in group_by):
        raise ParseError(1, f"unknown grouping columns {group_by}")
    out = []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise ParseError(line, f"row has {len(r)} fields, header has {len(header)}")
        try:
            stats = DeviationStats(float(r[2]), float(r[3]), float(r[4]), int(r[5]), int(r[6]))
        except ValueError as exc:
            raise ParseError(line, str(exc)) from None
        groups = tuple(zip(group_by, r[len(REPORT_COLUMNS):]))
        out.append(ReportRow(r[0], r[1], stats, groups))
    if not out:
        raise EmptyReport("report has no rows")
    return DeviationReport(tuple(out), mode, group_by)


# ---------------------------------------------------------------------------
# SVG plot
# ---------------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
SVG_NS = "http://www.w3.org/2000/svg"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = mag * min((m for m in (1, 2, 5, 10) if m * mag >= raw), default=10)
    return np.arange(np.ceil(lo / step) * step, hi + step * 1e-9, step)


def emit_plot(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path=None,
    title: str = "",
    width: int = 800,
    height: int = 400,
) -> bytes:
    """SVG line plot of deviation over time, one polyline per channel.

    ``series`` maps channel name to ``(times_s, deviations_deg)``. The legend
    uses colored squares, so the document has exactly one ``polyline`` per
    channel. Written to ``path`` when given; the bytes are returned either way.
    """
    data = {}
    for name, (t, d) in series.items():
        t = np.asarray(t, dtype=float).reshape(-1)
        d = np.asarray(d, dtype=float).reshape(-1)
        if t.size == 0 or t.size != d.size:
            raise EmptySeries(f"{name}: nothing to plot")
        data[name] = (t, d)
    if not data:
        raise EmptySeries("no series to plot")

    left, right, top, bottom = 70, 160, 30 if title else 15, 50
    pw, ph = width - left - right, height - top - bottom
    t_all = np.concatenate([t for t, _ in data.values()])
    d_all = np.concatenate([d for _, d in data.values()])
    t0, t1 = float(t_all.min()), float(t_all.max())
    if t1 <= t0:
        t1 = t0 + 1.0
    y0, y1 = min(0.0, float(d_all.min())), float(d_all.max())
    if y1 <= y0:
        y1 = y0 + 1.0

    def sx(t):
        return left + (np.asarray(t) - t0) / (t1 - t0) * pw

    def sy(v):
        return top + ph - (np.asarray(v) - y0) / (y1 - y0) * ph

    ET.register_namespace("", SVG_NS)
    svg = ET.Element("svg", xmlns=SVG_NS, width=str(width), height=str(height),
                     viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    if title:
        el = ET.SubElement(svg, "text", x=str(left + pw / 2), y="20", attrib={"text-anchor": "middle"})
        el.text = title

    axes = ET.SubElement(svg, "g", id="axes", stroke="black", attrib={"font-size": "11"})
    ET.SubElement(axes, "line", x1=str(left), y1=str(top + ph), x2=str(left + pw), y2=str(top + ph))
    ET.SubElement(axes, "line", x1=str(left), y1=str(top), x2=str(left), y2=str(top + ph))
    for tick in _nice_ticks(t0, t1):
        x = float(sx(tick))
        ET.SubElement(axes, "line", x1=f"{x:.2f}", y1=str(top + ph), x2=f"{x:.2f}", y2=str(top + ph + 4))
        el = ET.SubElement(axes, "text", x=f"{x:.2f}", y=str(top + ph + 16), stroke="none",
                           attrib={"text-anchor": "middle"})
        el.text = f"{tick:g}"
    for tick in _nice_ticks(y0, y1):
        y = float(sy(tick))
        ET.SubElement(axes, "line", x1=str(left - 4), y1=f"{y:.2f}", x2=str(left), y2=f"{y:.2f}")
        el = ET.SubElement(axes, "text", x=str(left - 6), y=f"{y + 4:.2f}", stroke="none",
                           attrib={"text-anchor": "end"})
        el.text = f"{tick:g}"
    el = ET.SubElement(svg, "text", x=str(left + pw / 2), y=str(height - 10), id="xlabel",
                       attrib={"text-anchor": "middle"})
    el.text = "time [s]"
    el = ET.SubElement(svg, "text", x="16", y=str(top + ph / 2), id="ylabel",
                       transform=f"rotate(-90 16 {top + ph / 2})", attrib={"text-anchor": "middle"})
    el.text = "deviation [°]"

    plot = ET.SubElement(svg, "g", id="series", fill="none", attrib={"stroke-width": "1.5"})
    legend = ET.SubElement(svg, "g", id="legend", attrib={"font-size": "12"})
    for k, (name, (t, d)) in enumerate(data.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(sx(t).tolist(), sy(d).tolist()))
        ET.SubElement(plot, "polyline", points=pts, stroke=color, attrib={"data-channel": name})
        ly = top + 10 + 18 * k
        entry = ET.SubElement(legend, "g", attrib={"class": "legend-entry"})
        ET.SubElement(entry, "rect", x=str(left + pw + 15), y=str(ly - 9), width="10", height="10", fill=color)
        el = ET.SubElement(entry, "text", x=str(left + pw + 31), y=str(ly))
        el.text = name

    out = ET.tostring(svg, encoding="utf-8", xml_declaration=True)
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(out)
    return out
