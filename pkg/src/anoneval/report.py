"""Aggregation of per-subset results, trade-off sweeps and report rendering."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyInput, InputError, OutOfDomain, ZeroWeightSum
from .metrics import putr

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (0.1, 0.3, 0.5, 0.7, 0.9)

# metrics aggregated with subset weights; everything else is a plain mean
WEIGHTED_METRICS = {"eer", "f0corr"}
PERCENT_METRICS = {"eer", "wer"}
METRIC_TITLES = {"eer": "EER [%]", "wer": "WER [%]", "f0corr": "Pitch correlation"}
DISPLAY_DECIMALS = {"eer": 2, "wer": 2, "f0corr": 2, "putr": 4}


def aggregate_weighted(rows: Iterable[tuple[float, float]]) -> float:
    """``sum(w * v) / sum(w)`` over ``(value, weight)`` pairs."""
    num = den = 0.0
    for value, weight in rows:
        if weight < 0:
            raise InputError(f"negative weight {weight}")
        num += weight * value
        den += weight
    if den == 0:
        raise ZeroWeightSum("weights sum to zero")
    return num / den


def aggregate_mean(values: Iterable[float]) -> float:
    values = list(values)
    if not values:
        raise EmptyInput("nothing to average")
    return sum(values) / len(values)


@dataclass(frozen=True)
class SweepPoint:
    split: str
    lam: float
    system: str
    putr: float


def clamp_rate(value: float, num_trials: int | None, name: str = "rate") -> float:
    """Lift a zero rate to ``1 / (2 * num_trials)`` so the trade-off stays defined."""
    if value > 0:
        return value
    if not num_trials:
        raise OutOfDomain(f"{name} is {value}; pass the trial count to clamp it")
    floor = 1.0 / (2 * num_trials)
    log.warning("%s = %g is outside (0, 1]; clamped to %g", name, value, floor)
    return max(value, floor)


def putr_sweep(
    systems: Sequence[tuple[str, float, float]],
    baseline: tuple[float, float],
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    split: str = "",
) -> list[SweepPoint]:
    """Trade-off value for every (system, lambda); rates are fractions.

    ``systems`` holds ``(name, wer1, eer1)``, ``baseline`` is ``(wer0, eer0)``.
    """
    wer0, eer0 = baseline
    return [
        SweepPoint(split, float(lam), name, putr(wer0, wer1, eer0, eer1, lam))
        for name, wer1, eer1 in systems
        for lam in lambdas
    ]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricRow:
    metric: str
    system: str
    split: str
    subset: str
    gender: str
    weight: float
    value: float


@dataclass(frozen=True)
class AggregateRow:
    metric: str
    system: str
    split: str
    value: float
    weighted: bool


@dataclass
class EvalReport:
    rows: list[MetricRow]
    aggregates: list[AggregateRow]
    sweep: list[SweepPoint]
    lambdas: tuple[float, ...]
    metadata: dict = field(default_factory=dict)

    def aggregate(self, metric: str, system: str, split: str) -> float:
        for a in self.aggregates:
            if (a.metric, a.system, a.split) == (metric, system, split):
                return a.value
        raise KeyError((metric, system, split))

    def sweep_table(self, split: str) -> dict[str, dict[float, float]]:
        out: dict[str, dict[float, float]] = {}
        for p in self.sweep:
            if p.split == split:
                out.setdefault(p.system, {})[p.lam] = p.putr
        return out


def _unique(seq):
    return list(dict.fromkeys(seq))


def config_hash(rows: Sequence[MetricRow], lambdas: Sequence[float], baseline: str) -> str:
    payload = json.dumps(
        {"rows": [asdict(r) for r in rows], "lambdas": list(lambdas), "baseline": baseline},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def apply_weights(rows: Sequence[MetricRow], weights) -> list[MetricRow]:
    """Replace row weights by ``(subset, gender)`` lookup into a weights table."""
    table = {(w.name, w.gender): w.weight for w in weights}
    out = []
    for r in rows:
        w = table.get((r.subset, r.gender), r.weight) if r.metric in WEIGHTED_METRICS else r.weight
        out.append(MetricRow(r.metric, r.system, r.split, r.subset, r.gender, w, r.value))
    return out


def build_report(
    rows: Sequence[MetricRow],
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    baseline: str = "Orig",
    num_trials: int | None = None,
    seed: int | None = None,
    timestamp: str | None = None,
) -> EvalReport:
    """Aggregate per-subset rows and sweep the trade-off against ``baseline``.

    EER and pitch-correlation rows are weight-averaged, WER rows are plain
    means. EER and WER values are percentages.
    """
    rows = list(rows)
    aggregates = []
    for metric in _unique(r.metric for r in rows):
        for split in _unique(r.split for r in rows if r.metric == metric):
            for system in _unique(r.system for r in rows if r.metric == metric and r.split == split):
                group = [r for r in rows if (r.metric, r.split, r.system) == (metric, split, system)]
                if metric in WEIGHTED_METRICS:
                    value = aggregate_weighted((r.value, r.weight) for r in group)
                else:
                    value = aggregate_mean(r.value for r in group)
                aggregates.append(AggregateRow(metric, system, split, value, metric in WEIGHTED_METRICS))

    agg = {(a.metric, a.system, a.split): a.value for a in aggregates}
    sweep: list[SweepPoint] = []
    for split in _unique(a.split for a in aggregates):
        if ("wer", baseline, split) not in agg or ("eer", baseline, split) not in agg:
            continue
        systems = []
        for system in _unique(a.system for a in aggregates if a.split == split):
            if ("wer", system, split) in agg and ("eer", system, split) in agg:
                systems.append(
                    (
                        system,
                        clamp_rate(agg["wer", system, split] / 100, num_trials, f"WER {system} {split}"),
                        clamp_rate(agg["eer", system, split] / 100, num_trials, f"EER {system} {split}"),
                    )
                )
        base = agg["wer", baseline, split] / 100, agg["eer", baseline, split] / 100
        base = (
            clamp_rate(base[0], num_trials, f"WER {baseline} {split}"),
            clamp_rate(base[1], num_trials, f"EER {baseline} {split}"),
        )
        sweep.extend(putr_sweep(systems, base, lambdas, split))

    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    metadata = {
        "seed": seed,
        "config_hash": config_hash(rows, lambdas, baseline),
        "timestamp": timestamp,
        "baseline": baseline,
    }
    return EvalReport(rows, aggregates, sweep, tuple(float(x) for x in lambdas), metadata)


# ---------------------------------------------------------------------------
# CSV

ROW_FIELDS = ["metric", "system", "split", "subset", "gender", "weight", "value"]
SWEEP_FIELDS = ["split", "lambda", "system", "putr"]


def rows_to_csv(rows: Iterable[MetricRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([r.metric, r.system, r.split, r.subset, r.gender, repr(r.weight), repr(r.value)])
    return buf.getvalue()


def read_rows_csv(path) -> list[MetricRow]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ROW_FIELDS:
        raise InputError(f"{path}: header must be {','.join(ROW_FIELDS)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        try:
            rows.append(
                MetricRow(
                    rec["metric"], rec["system"], rec["split"], rec["subset"], rec["gender"],
                    float(rec["weight"]), float(rec["value"]),
                )
            )
        except (TypeError, ValueError):
            raise InputError(f"{path}:{lineno}: malformed row") from None
    return rows


def sweep_to_csv(sweep: Iterable[SweepPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for p in sweep:
        w.writerow([p.split, repr(p.lam), p.system, repr(p.putr)])
    return buf.getvalue()


def read_sweep_csv(path) -> list[SweepPoint]:
    reader = csv.DictReader(io.StringIO(Path(path).read_text(encoding="utf-8")))
    return [SweepPoint(r["split"], float(r["lambda"]), r["system"], float(r["putr"])) for r in reader]


# ---------------------------------------------------------------------------
# markdown


def _fmt(value: float, metric: str) -> str:
    return f"{value:.{DISPLAY_DECIMALS.get(metric, 4)}f}"


def _md_table(header: list[str], body: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return lines


def render_markdown(report: EvalReport) -> str:
    md = report.metadata
    out = [
        "# Anonymization evaluation report",
        "",
        f"- baseline: {md.get('baseline')}",
        f"- seed: {md.get('seed')}",
        f"- config hash: {md.get('config_hash')}",
        f"- timestamp: {md.get('timestamp')}",
    ]
    for metric in _unique(r.metric for r in report.rows):
        rows = [r for r in report.rows if r.metric == metric]
        systems = _unique(r.system for r in rows)
        weighted = metric in WEIGHTED_METRICS
        header = ["Split", "Set", "Gender"] + (["Weight"] if weighted else []) + systems
        body = []
        for split in _unique(r.split for r in rows):
            keys = _unique((r.subset, r.gender) for r in rows if r.split == split)
            for subset, gender in keys:
                cells = {r.system: r for r in rows if (r.split, r.subset, r.gender) == (split, subset, gender)}
                first = next(iter(cells.values()))
                line = [split, subset, gender] + ([f"{first.weight:g}"] if weighted else [])
                line += [_fmt(cells[s].value, metric) if s in cells else "" for s in systems]
                body.append(line)
            label = "**Avg^W**" if weighted else "**Avg**"
            line = [split, label, ""] + ([""] if weighted else [])
            for s in systems:
                try:
                    line.append(_fmt(report.aggregate(metric, s, split), metric))
                except KeyError:
                    line.append("")
            body.append(line)
        out += ["", f"## {METRIC_TITLES.get(metric, metric)}", ""] + _md_table(header, body)

    if report.sweep:
        out += ["", "## Privacy-to-utility trade-off (lower is better)", ""]
        for split in _unique(p.split for p in report.sweep):
            table = report.sweep_table(split)
            systems = list(table)
            lams = _unique(p.lam for p in report.sweep if p.split == split)
            body = [
                [split, f"{lam:g}"] + [_fmt(table[s][lam], "putr") for s in systems] for lam in lams
            ]
            out += _md_table(["Split", "lambda"] + systems, body) + [""]
        out.pop()
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# SVG

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def render_svg(report: EvalReport) -> str:
    """Line chart of the trade-off against lambda; one panel per split."""
    splits = _unique(p.split for p in report.sweep)
    systems = _unique(p.system for p in report.sweep)
    pw, ph, ml, mr, mt, mb = 360, 260, 50, 20, 30, 40
    width = len(splits) * (pw + ml + mr) + 140
    height = ph + mt + mb
    lo = min(min(p.putr for p in report.sweep), 0.0)
    hi = max(max(p.putr for p in report.sweep), 0.0)
    pad = 0.05 * (hi - lo or 1.0)
    lo, hi = lo - pad, hi + pad

    def y(v):
        return mt + ph * (hi - v) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for k, split in enumerate(splits):
        x0 = k * (pw + ml + mr) + ml

        def x(lam):
            return x0 + pw * lam

        parts.append(f'<text x="{x0 + pw / 2:.1f}" y="18" text-anchor="middle">{split}</text>')
        parts.append(f'<rect x="{x0}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
        parts.append(
            f'<line x1="{x0}" y1="{y(0.0):.2f}" x2="{x0 + pw}" y2="{y(0.0):.2f}" stroke="#bbb" stroke-dasharray="4 3"/>'
        )
        for lam in report.lambdas:
            parts.append(f'<text x="{x(lam):.2f}" y="{mt + ph + 15}" text-anchor="middle">{lam:g}</text>')
        for tick in (lo + pad, 0.0, hi - pad):
            parts.append(f'<text x="{x0 - 5}" y="{y(tick) + 4:.2f}" text-anchor="end">{tick:.2f}</text>')
        parts.append(f'<text x="{x0 + pw / 2:.1f}" y="{height - 5}" text-anchor="middle">lambda</text>')
        for i, system in enumerate(systems):
            pts = sorted((p.lam, p.putr) for p in report.sweep if p.split == split and p.system == system)
            if not pts:
                continue
            coords = " ".join(f"{x(l):.2f},{y(v):.2f}" for l, v in pts)
            color = _PALETTE[i % len(_PALETTE)]
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
    lx = len(splits) * (pw + ml + mr) + 10
    for i, system in enumerate(systems):
        color = _PALETTE[i % len(_PALETTE)]
        yy = mt + 16 * i + 8
        parts.append(f'<line x1="{lx}" y1="{yy}" x2="{lx + 20}" y2="{yy}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 25}" y="{yy + 4}">{system}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


FORMATS = ("markdown", "csv", "svg")


def render_report(report: EvalReport, out_dir, formats: Iterable[str] = FORMATS) -> dict[str, Path]:
    """Write the requested formats into ``out_dir``; the SVG is skipped for an empty sweep."""
    out_dir = Path(out_dir)
    formats = list(formats)
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise InputError(f"unknown format(s): {', '.join(sorted(unknown))}")
    try:
        return _write_outputs(report, out_dir, formats)
    except OSError as exc:
        raise InputError(f"cannot write report to {out_dir}: {exc}") from exc


def _write_outputs(report: EvalReport, out_dir: Path, formats: list[str]) -> dict[str, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if "markdown" in formats:
        written["markdown"] = out_dir / "report.md"
        written["markdown"].write_text(render_markdown(report), encoding="utf-8")
    if "csv" in formats:
        written["csv"] = out_dir / "rows.csv"
        written["csv"].write_text(rows_to_csv(report.rows), encoding="utf-8")
        if report.sweep:
            written["sweep_csv"] = out_dir / "putr_sweep.csv"
            written["sweep_csv"].write_text(sweep_to_csv(report.sweep), encoding="utf-8")
    if "svg" in formats and report.sweep:
        written["svg"] = out_dir / "putr_sweep.svg"
        written["svg"].write_text(render_svg(report), encoding="utf-8")
    return written
