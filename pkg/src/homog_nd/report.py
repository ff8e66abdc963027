"""Serialization of rate reports: JSON, CSV and standalone SVG plots.

All three formats are deterministic functions of the report, so re-running
a sweep reproduces the files byte for byte.  Wall-clock timings are kept
out of them and written to a separate run log by the CLI.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .rates import RateReport, key

SVG_W, SVG_H = 560, 420
MARGIN = dict(left=80, right=30, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _header_lines(report: RateReport) -> list[str]:
    return [
        f"homog_nd {report.provenance.get('version', '?')}",
        "config " + json.dumps(report.config, sort_keys=True),
        "provenance " + json.dumps(report.provenance, sort_keys=True),
    ]


def to_json(report: RateReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"


def to_csv(report: RateReport) -> str:
    buf = io.StringIO()
    for line in _header_lines(report):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "functional", "p", "value"])
    for s in report.samples:
        for name, value in s.values.items():
            fn, _, rest = name.partition("[")
            w.writerow([repr(s.epsilon), fn, rest[:-1] if rest else "", repr(value)])
    return buf.getvalue()


def _series(report: RateReport, functional: str):
    """``[(label, eps array, values array, fit or None)]`` for one functional."""
    out = []
    ps = report.config.get("ps", [])
    per_p = any(f"{functional}[" in k for s in report.samples for k in s.values)
    for p in (ps if per_p else [None]):
        kk = key(functional, p)
        eps = np.array([s.epsilon for s in report.samples if kk in s.values])
        vals = np.array([s.values[kk] for s in report.samples if kk in s.values])
        fit = next((f for f in report.fits if f.functional == functional and f.p == (None if p is None else float(p))), None)
        out.append((kk, eps, vals, fit))
    return out


def _ticks(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def to_svg(report: RateReport, functional: str) -> str:
    """Log-log plot of one functional with fitted lines and slope labels."""
    series = _series(report, functional)
    pos = [(e, v) for _, es, vs, _ in series for e, v in zip(es, vs) if v > 0]
    if not pos:
        raise ValueError(f"no positive values to plot for {functional}")
    lx = np.log10([e for e, _ in pos])
    ly = np.log10([v for _, v in pos])
    x0, x1 = math.floor(lx.min() * 2) / 2, math.ceil(lx.max() * 2) / 2
    y0, y1 = math.floor(ly.min()), math.ceil(ly.max())
    if x1 == x0:
        x1 += 0.5
    if y1 == y0:
        y1 += 1
    pw = SVG_W - MARGIN["left"] - MARGIN["right"]
    ph = SVG_H - MARGIN["top"] - MARGIN["bottom"]

    def X(lxv):
        return MARGIN["left"] + (lxv - x0) / (x1 - x0) * pw

    def Y(lyv):
        return MARGIN["top"] + (y1 - lyv) / (y1 - y0) * ph

    o = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
         f'viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">']
    for line in _header_lines(report):
        o.append(f"<!-- {line.replace('--', '- -')} -->")
    o.append(f'<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>')
    o.append(f'<text x="{SVG_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
             f'{functional}: {report.config["coefficient"]}, {report.config["rhs"]}</text>')
    o.append(f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
             'fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        if x0 <= t <= x1:
            o.append(f'<line x1="{X(t):.1f}" y1="{MARGIN["top"] + ph}" x2="{X(t):.1f}" '
                     f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            o.append(f'<text x="{X(t):.1f}" y="{MARGIN["top"] + ph + 20}" text-anchor="middle">1e{t}</text>')
    for t in _ticks(y0, y1):
        o.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y(t):.1f}" x2="{MARGIN["left"]}" '
                 f'y2="{Y(t):.1f}" stroke="black"/>')
        o.append(f'<text x="{MARGIN["left"] - 8}" y="{Y(t) + 4:.1f}" text-anchor="end">1e{t}</text>')
    o.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{SVG_H - 15}" text-anchor="middle">epsilon</text>')

    for n, (label, es, vs, fit) in enumerate(series):
        color = COLORS[n % len(COLORS)]
        for e, v in zip(es, vs):
            if v > 0:
                o.append(f'<circle cx="{X(math.log10(e)):.1f}" cy="{Y(math.log10(v)):.1f}" r="3.5" fill="{color}"/>')
        text = label
        if fit is not None:
            a, b = math.log10(min(fit.points_used)), math.log10(max(fit.points_used))
            ya = (fit.slope * math.log(10 ** a) + fit.intercept) / math.log(10)
            yb = (fit.slope * math.log(10 ** b) + fit.intercept) / math.log(10)
            o.append(f'<line x1="{X(a):.1f}" y1="{Y(ya):.1f}" x2="{X(b):.1f}" y2="{Y(yb):.1f}" '
                     f'stroke="{color}" stroke-width="1.5"/>')
            text += f"  slope {fit.slope:.3f}"
        o.append(f'<text x="{MARGIN["left"] + 10}" y="{MARGIN["top"] + 18 + 16 * n}" fill="{color}">{text}</text>')
    o.append("</svg>")
    return "\n".join(o) + "\n"


def plotted_functionals(report: RateReport) -> list[str]:
    names = []
    for s in report.samples:
        for k in s.values:
            fn = k.partition("[")[0]
            if fn not in names:
                names.append(fn)
    return names


def write_report(report: RateReport, outdir, stem: str) -> list[Path]:
    """Write ``stem.json``, ``stem.csv`` and one ``stem-<functional>.svg`` per functional."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix, text in ((".json", to_json(report)), (".csv", to_csv(report))):
        path = outdir / f"{stem}{suffix}"
        path.write_text(text)
        written.append(path)
    for fn in plotted_functionals(report):
        if not any(v > 0 for s in report.samples for k, v in s.values.items() if k.partition("[")[0] == fn):
            continue
        path = outdir / f"{stem}-{fn}.svg"
        path.write_text(to_svg(report, fn))
        written.append(path)
    return written
