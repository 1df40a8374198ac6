"""Real-data pipeline: CSV ingestion, log differences, analysis reports."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import kernel_variance as kv
from .bootstrap import BootstrapConfig, bootstrap_from_fit
from .errors import InvalidInputError, OutputError, ParseError, TransformError, UsageError
from .jb_test import JbResult, Method, corrected_statistic, test_corrected, test_standard
from .montecarlo import parse_test
from .series_model import Series, fit_ar

SCHEMA_VERSION = 1
DATE_COLUMNS = ("DATE", "date", "observation_date", "Date")
MAX_AUTO_ORDER = 8


def parse_date(text):
    """ISO 8601 (``YYYY-MM-DD``) or FRED-style ``MM/DD/YYYY``; nothing else."""
    text = text.strip()
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    try:
        return datetime.strptime(text, "%m/%d/%Y").date()
    except ValueError:
        raise ValueError(f"unrecognised date {text!r}") from None


def ingest_csv(path, value_column=None, date_column=None):
    """Read one numeric column (and optionally a date column) from a CSV file.

    When ``value_column`` is omitted the file must have exactly one column besides
    the date column.  When ``date_column`` is omitted a column named ``DATE``,
    ``date`` or ``observation_date`` is used if present.  Rows are sorted by date
    when dates are available.  Row numbers in errors are file line numbers.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8-sig")
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file", "missing-file") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}", "missing-file") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if date_column is None:
            date_column = next((c for c in DATE_COLUMNS if c in header), None)
        elif date_column not in header:
            raise ParseError(f"{path}: no column named {date_column!r}", "missing-column")
        if value_column is None:
            rest = [c for c in header if c != date_column]
            if len(rest) != 1:
                raise ParseError(
                    f"{path}: cannot infer the value column from {header}; pass one explicitly",
                    "missing-column",
                )
            value_column = rest[0]
        elif value_column not in header:
            raise ParseError(f"{path}: no column named {value_column!r}", "missing-column")

        values, dates = [], []
        for row in reader:
            line = reader.line_num
            cell = (row.get(value_column) or "").strip()
            if not cell:
                raise ParseError(f"{path}: row {line}: blank value", "non-numeric", line)
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}: row {line}: non-numeric value {cell!r}", "non-numeric", line) from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: row {line}: non-finite value {cell!r}", "non-numeric", line)
            values.append(v)
            if date_column is not None:
                try:
                    dates.append(parse_date(row.get(date_column) or ""))
                except ValueError as exc:
                    raise ParseError(f"{path}: row {line}: {exc}", "bad-date", line) from None

    if not values:
        raise ParseError(f"{path}: no data rows", "non-numeric")
    if date_column is None:
        return Series(np.array(values), label=value_column)
    order = sorted(range(len(dates)), key=dates.__getitem__)
    for a, b in zip(order, order[1:]):
        if dates[a] == dates[b]:
            raise ParseError(f"{path}: duplicate date {dates[a].isoformat()}", "duplicate-date")
    ts = np.array([dates[i].isoformat() for i in order], dtype="datetime64[D]")
    return Series(np.array(values)[order], label=value_column, timestamps=ts)


def transform_logdiff(series):
    """``100 * log(v_t / v_{t-1})``, dated at the later period."""
    v = series.values
    if v.size < 2:
        raise TransformError("log differences need at least two observations")
    bad = np.flatnonzero(~(v > 0))
    if bad.size:
        raise TransformError(f"value at row {bad[0] + 1} is not positive", row=int(bad[0]) + 1)
    y = 100.0 * np.log(v[1:] / v[:-1])
    ts = None if series.timestamps is None else series.timestamps[1:]
    return Series(y, label=f"dlog({series.label})", timestamps=ts)


def select_order_aic(series, max_order=MAX_AUTO_ORDER):
    """AR order in ``0..max_order`` minimising AIC on a common estimation sample."""
    n = len(series)
    top = min(max_order, (n - 1) // 5)
    common = n - top
    aic = {}
    for p in range(top + 1):
        fit = fit_ar(series, p)
        sigma2 = float(np.mean(np.square(fit.residuals[-common:])))
        aic[p] = common * math.log(sigma2) + 2.0 * p
    return min(aic, key=lambda p: (aic[p], p)), aic


@dataclass
class AnalysisReport:
    input: dict
    transform: Optional[str]
    order: int
    omega_hat: float
    theta_hat: list
    tests: list
    variance_path: dict
    master_seed: int
    version: str = __version__
    aic: Optional[dict] = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "version": self.version,
            "input": self.input,
            "transform": self.transform,
            "order": self.order,
            "aic": None if self.aic is None else {str(k): v for k, v in self.aic.items()},
            "omega_hat": self.omega_hat,
            "theta_hat": list(self.theta_hat),
            "master_seed": self.master_seed,
            "tests": [t.to_dict() for t in self.tests],
            "variance_path": self.variance_path,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise InvalidInputError(f"unsupported report schema {d.get('schema_version')!r}")
        aic = d.get("aic")
        return cls(
            input=d["input"], transform=d["transform"], order=d["order"],
            omega_hat=d["omega_hat"], theta_hat=list(d["theta_hat"]),
            tests=[JbResult.from_dict(t) for t in d["tests"]],
            variance_path=d["variance_path"], master_seed=d["master_seed"],
            version=d["version"], aic=None if aic is None else {int(k): v for k, v in aic.items()},
        )

    def result(self, method):
        method = Method(method)
        return next(t for t in self.tests if t.method is method)


def run_analysis(series, p="auto", tests=("T_st", "T_cv", "T_boot"), *, gamma=1.0,
                 replicates=499, seed=0, cv_rule=None, jobs=1, transform=None, source=None):
    """Fit mean and AR(p), run each requested test on the residuals, and attach
    the cross-validated variance path."""
    if not tests:
        raise UsageError("no tests requested")
    specs = [parse_test(t, default_gamma=gamma) if isinstance(t, str) else t for t in tests]
    cv_rule = kv.CvRule() if cv_rule is None else cv_rule
    aic = None
    if p == "auto":
        p, aic = select_order_aic(series)
    fit = fit_ar(series, int(p))

    results = []
    for spec in specs:
        if spec.method is Method.ST:
            res = test_standard(fit.residuals)
        elif spec.method in (Method.CV, Method.F):
            res = test_corrected(fit.residuals, spec.rule(cv_rule))
        else:
            cfg = BootstrapConfig(replicates, spec.rule(cv_rule), seed, parallel=jobs != 1, jobs=jobs)
            res = bootstrap_from_fit(fit, cfg)
        results.append(res)

    _, path = corrected_statistic(fit.residuals, cv_rule)
    start = fit.order
    dates = (
        [None] * fit.m if series.timestamps is None
        else [str(d) for d in series.timestamps[start:]]
    )
    vp = {
        "bandwidth": path.bandwidth,
        "kernel": path.kernel,
        "index": list(range(start + 1, series.values.size + 1)),
        "date": dates,
        "value": series.values[start:].tolist(),
        "h_hat": path.h.tolist(),
    }
    return AnalysisReport(
        input={"label": series.label, "n": len(series), "source": source},
        transform=transform, order=fit.order, omega_hat=fit.omega_hat,
        theta_hat=fit.theta_hat.tolist(), tests=results, variance_path=vp,
        master_seed=seed, aic=aic,
    )


def format_text(report):
    inp = report.input
    lines = [
        f"series: {inp['label']} (n={inp['n']})" + (f" from {inp['source']}" if inp.get("source") else ""),
        f"transform: {report.transform or 'none'}",
        f"AR order: {report.order}   mean: {report.omega_hat:.6g}   "
        f"theta: [{', '.join(f'{t:.6g}' for t in report.theta_hat)}]",
        f"seed: {report.master_seed}",
        "",
        f"{'test':<10}{'Q':>12}{'skew':>12}{'kurt':>12}{'p-value %':>12}{'bandwidth':>12}{'B':>6}",
    ]
    for t in report.tests:
        bw = "" if t.bandwidth is None else f"{t.bandwidth:.4g}"
        reps = "" if t.replicates is None else str(t.replicates)
        lines.append(
            f"{str(t.method):<10}{t.statistic:12.4f}{t.skew_component:12.4f}"
            f"{t.kurt_component:12.4f}{100 * t.p_value:12.2f}{bw:>12}{reps:>6}".rstrip()
        )
    vp = report.variance_path
    lines.append("")
    lines.append(f"variance path: {len(vp['h_hat'])} points, CV bandwidth {vp['bandwidth']:.4g}")
    return "\n".join(lines) + "\n"


def format_plotdata(report):
    vp = report.variance_path
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "date", "value", "h_hat"])
    for row in zip(vp["index"], vp["date"], vp["value"], vp["h_hat"]):
        w.writerow([row[0], row[1] or "", repr(row[2]), repr(row[3])])
    return buf.getvalue()


def format_json(report):
    return json.dumps(report.to_dict(), indent=2) + "\n"


FORMATTERS = {"text": format_text, "json": format_json, "csv-plotdata": format_plotdata}


def emit_report(report, format="text", destination=None):
    """Write ``report`` to ``destination`` (path, writable stream or ``None`` for stdout)."""
    try:
        text = FORMATTERS[format](report)
    except KeyError:
        raise UsageError(f"unknown format {format!r}") from None
    write_text(text, destination)


def write_text(text, destination=None):
    if destination is None or destination == "-":
        sys.stdout.write(text)
        return
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        Path(destination).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {destination}: {exc.strerror}") from exc
