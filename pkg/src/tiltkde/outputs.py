"""CSV / JSON / SVG writers and the plain-text data reader."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import IO, Iterable, List, Sequence

import numpy as np

from .errors import InvalidInputError
from .rate_lab import RateReport


def fmt(value) -> str:
    """17 significant digits for floats; ints and strings unchanged."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text(text: str, path: str | None, stdout: IO[str]) -> None:
    """Write to ``path``, or to ``stdout`` when path is None or '-'."""
    if path is None or path == "-":
        stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_data_file(path: str) -> np.ndarray:
    """One decimal per line; blank lines and ``#`` comments ignored."""
    values: List[float] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                v = float(text)
            except ValueError:
                raise InvalidInputError(f"{path}:{lineno}: not a number: {text!r}") from None
            if not math.isfinite(v):
                raise InvalidInputError(f"{path}:{lineno}: value must be finite")
            values.append(v)
    if not values:
        raise InvalidInputError(f"{path}: no data values found")
    return np.array(values)


# ---------------------------------------------------------------------------
# rate reports
# ---------------------------------------------------------------------------

ROW_FIELDS = ("n", "x", "h", "truth", "error", "mc_se", "valid_reps", "overflow_reps")


def report_rows_csv(report: RateReport) -> str:
    return csv_text(ROW_FIELDS, ([getattr(r, f) for f in ROW_FIELDS] for r in report.rows))


def report_dict(report: RateReport, config: dict | None = None) -> dict:
    out = {
        "fitted_slope": report.fitted_slope,
        "slope_stderr": report.slope_stderr,
        "theoretical_slope": report.theoretical_slope,
        "tolerance": report.tolerance,
        "pass": report.passed,
        "point_slopes": [
            {"x": x, "slope": slope, "stderr": se} for x, slope, se in report.point_slopes
        ],
        "flags": list(report.flags),
        "rows": [{f: getattr(r, f) for f in ROW_FIELDS} for r in report.rows],
    }
    if config is not None:
        out["config"] = config
    return out


def report_json(report: RateReport, config: dict | None = None) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(report_dict(report, config), indent=2, allow_nan=False) + "\n"


def pooled_errors(report: RateReport):
    """Geometric mean of the per-point error statistic for each n."""
    ns = sorted({r.n for r in report.rows})
    pooled = []
    for n in ns:
        errs = [r.error for r in report.rows if r.n == n]
        pooled.append(math.exp(math.fsum(math.log(e) for e in errs) / len(errs)))
    return ns, pooled


def report_svg(report: RateReport, title: str = "") -> str:
    """Log-log chart of pooled error against n with fitted and theoretical lines."""
    ns, errs = pooled_errors(report)
    lx = [math.log10(n) for n in ns]
    ly = [math.log10(e) for e in errs]
    cx, cy = sum(lx) / len(lx), sum(ly) / len(ly)

    def line(slope):
        return [(x, cy + slope * (x - cx)) for x in (lx[0], lx[-1])]

    fit_line, theory_line = line(report.fitted_slope), line(report.theoretical_slope)
    all_y = ly + [p[1] for p in fit_line + theory_line]
    x0, x1 = lx[0] - 0.1, lx[-1] + 0.1
    y0, y1 = min(all_y) - 0.1, max(all_y) + 0.1
    width, height, left, right, top, bottom = 640, 420, 70, 20, 40, 50

    def px(x):
        return left + (x - x0) / (x1 - x0) * (width - left - right)

    def py(y):
        return top + (y1 - y) / (y1 - y0) * (height - top - bottom)

    def c(v):
        return f"{v:.3f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" style="fill:#ffffff"/>',
        f'<text x="{width / 2}" y="22" style="font:14px sans-serif;text-anchor:middle">'
        f"{_escape(title or 'error vs n (log-log)')}</text>",
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" '
        'style="stroke:#000;stroke-width:1"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" '
        'style="stroke:#000;stroke-width:1"/>',
    ]
    for n, x in zip(ns, lx):
        parts.append(
            f'<text x="{c(px(x))}" y="{height - bottom + 16}" '
            f'style="font:10px sans-serif;text-anchor:middle">{n}</text>'
        )
    for k in range(5):
        y = y0 + (y1 - y0) * k / 4
        parts.append(
            f'<text x="{left - 6}" y="{c(py(y))}" style="font:10px sans-serif;text-anchor:end">'
            f"{10 ** y:.2e}</text>"
        )
    for pts, cls, colour, dash, label in (
        (fit_line, "fit", "#1f77b4", "", f"fitted slope {report.fitted_slope:.3f}"),
        (theory_line, "theory", "#d62728", "stroke-dasharray:6,4;",
         f"theory {report.theoretical_slope:.3f}"),
    ):
        (ax, ay), (bx, by) = pts
        parts.append(
            f'<line class="{cls}" x1="{c(px(ax))}" '
            f'y1="{c(py(ay))}" x2="{c(px(bx))}" y2="{c(py(by))}" '
            f'style="stroke:{colour};stroke-width:1.5;{dash}"><title>{label}</title></line>'
        )
    for x, y, n, e in zip(lx, ly, ns, errs):
        parts.append(
            f'<circle class="marker" cx="{c(px(x))}" cy="{c(py(y))}" r="4" '
            f'style="fill:#1f77b4;stroke:#000;stroke-width:0.5"><title>n={n} error={e:.4g}</title></circle>'
        )
    parts.append(
        f'<text x="{width / 2}" y="{height - 10}" style="font:12px sans-serif;text-anchor:middle">'
        f"n (fitted {report.fitted_slope:.3f}, theory {report.theoretical_slope:.3f})</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
