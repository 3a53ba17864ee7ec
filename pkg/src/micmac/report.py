"""Report files: summary and curve CSVs, rankings, an SVG chart and PNG figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from micmac.crossval import ExperimentReport
from micmac.stats import TukeyPair

SUMMARY_FIELDS = ("scheme", "best_acc", "best_acc_std", "best_k", "top12_acc", "top12_std")
SVG_WIDTH, SVG_HEIGHT = 800, 500
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
            "#7f7f7f", "#bcbd22")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def safe_name(scheme: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in scheme)


def curves_svg(curves: Mapping[str, tuple]) -> str:
    """Line chart of accuracy against k: one polyline per scheme, legend labels
    equal to the scheme names."""
    if not curves:
        raise ValueError("no results")
    left, right, top, bottom = 70, 210, 30, 60
    pw, ph = SVG_WIDTH - left - right, SVG_HEIGHT - top - bottom
    k_max = max(int(np.max(k)) for k, *_ in curves.values())
    k_max = max(k_max, 2)

    def px(k):
        return left + (k - 1) / (k_max - 1) * pw

    def py(a):
        return top + (1.0 - a) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" '
        f'width="{SVG_WIDTH}" height="{SVG_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for a in np.linspace(0, 1, 6):
        y = py(a)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{a:.1f}</text>')
    step = max(1, int(np.ceil(k_max / 10)))
    for k in range(1, k_max + 1, step):
        x = px(k)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{k}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{SVG_HEIGHT - 15}" text-anchor="middle">number of features</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.2f})">subject-level accuracy</text>')
    for i, (name, (k, mean, *_)) in enumerate(curves.items()):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(kk):.2f},{py(a):.2f}" for kk, a in zip(np.asarray(k), np.asarray(mean)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 10 + 20 * i
        lx = left + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(r: ExperimentReport, out_dir, figures: bool = True) -> list[Path]:
    """Write every report file for ``r`` into ``out_dir``; returns the paths written."""
    if not r.results or any(res.accuracy.size == 0 for res in r.results.values()):
        raise ValueError("no results")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    rows = r.summary_rows()
    p = out / "report.csv"
    _write_csv(p, SUMMARY_FIELDS, ([_fmt(row[f]) if f != "scheme" else row[f] for f in SUMMARY_FIELDS]
                                   for row in rows))
    written.append(p)

    curves = {}
    for name, res in r.results.items():
        p = out / f"curve_{safe_name(name)}.csv"
        _write_csv(p, ("k", "mean_acc", "std_acc"),
                   ([int(k), _fmt(m), _fmt(s)] for k, m, s in zip(res.k_values, res.curve_mean, res.curve_std)))
        written.append(p)
        curves[name] = (res.k_values, res.curve_mean, res.curve_std)
        for o in range(r.n_outer):
            p = out / f"ranking_{safe_name(name)}_fold{o}.csv"
            _write_csv(p, ("repeat", "rank", "feature_name"),
                       ([rep, i + 1, f] for rep in range(r.n_repeats)
                        for i, f in enumerate(res.rankings[rep][o])))
            written.append(p)

    p = out / "experiments.csv"
    exp_rows = []
    for name, res in r.results.items():
        best = res.experiment_accuracies(res.best_k)
        top12 = res.experiment_accuracies(12)
        exp_rows += [[name, rep, _fmt(best[rep]), _fmt(top12[rep])] for rep in range(r.n_repeats)]
    _write_csv(p, ("scheme", "repeat", "best_acc", "top12_acc"), exp_rows)
    written.append(p)

    meta = {
        "n_repeats": r.n_repeats,
        "n_outer": r.n_outer,
        "n_inner": r.n_inner,
        "base_seed": r.base_seed,
        "schemes": {
            name: {
                "spec": res.scheme.spec,
                "approximate": res.approximate,
                "best_k": res.best_k,
                "curve_length": int(res.accuracy.shape[-1]),
                "confusion_at_best_k": dict(zip(("tp", "fp", "tn", "fn"),
                                                map(int, res.confusion_at(res.best_k)))),
            }
            for name, res in r.results.items()
        },
    }
    p = out / "report.json"
    p.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)

    written += render_figures(curves, rows, out, figures)
    return written


def render_figures(curves: Mapping[str, tuple], rows: Sequence[dict], out_dir, png: bool = True) -> list[Path]:
    out = Path(out_dir)
    p = out / "curves.svg"
    p.write_text(curves_svg(curves), encoding="utf-8")
    written = [p]
    if png:
        from micmac.plotting import plot_accuracy_curves, plot_summary_bars

        plot_accuracy_curves(curves, out / "curves.png")
        plot_summary_bars(rows, out / "summary.png")
        written += [out / "curves.png", out / "summary.png"]
    return written


def read_summary(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for f in ("best_acc", "best_acc_std", "top12_acc", "top12_std"):
            row[f] = float(row[f])
        row["best_k"] = int(row["best_k"])
    return rows


def read_curves(out_dir, schemes: Sequence[str]) -> dict:
    curves = {}
    for name in schemes:
        with (Path(out_dir) / f"curve_{safe_name(name)}.csv").open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        curves[name] = (np.array([int(r["k"]) for r in rows]),
                        np.array([float(r["mean_acc"]) for r in rows]),
                        np.array([float(r["std_acc"]) for r in rows]))
    return curves


def read_experiments(path) -> dict[str, dict[str, list[float]]]:
    """scheme -> {"best_acc": [...], "top12_acc": [...]} ordered by repeat."""
    by_scheme: dict = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            by_scheme.setdefault(row["scheme"], []).append(row)
    out = {}
    for scheme, rows in by_scheme.items():
        rows.sort(key=lambda r: int(r["repeat"]))
        out[scheme] = {f: [float(r[f]) for r in rows] for f in ("best_acc", "top12_acc")}
    return out


def write_tukey(pairs: Sequence[TukeyPair], path) -> None:
    _write_csv(Path(path), ("group_a", "group_b", "q", "p"),
               ([t.group_a, t.group_b, _fmt(t.q), _fmt(t.p)] for t in pairs))
