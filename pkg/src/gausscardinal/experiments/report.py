"""Error reports and their CSV/JSON serialization.

CSV output is in long format, one line per ``(h, metric)``; summary values
use an empty ``h`` field.  JSON output is the full nested report with sorted
keys.  Floats are written with ``repr`` so both formats round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

CSV_HEADER = ("kind", "target", "p", "k", "h", "metric", "value")


@dataclass(frozen=True)
class ReportRow:
    """One spacing of a sweep: error, target norm and normalized ratio."""

    h: float
    error: float
    norm: float
    ratio: float


@dataclass
class ErrorReport:
    """Result of a sweep or stability run.

    Attributes
    ----------
    kind : str
        ``convergence``, ``logfactor``, ``quasi``, ``stability`` or ``verify``.
    target_id : str
    p : float
    k : int
    rows : list of ReportRow
        Ordered by strictly decreasing ``h``.
    fitted_order : float or None
        ``None`` for degenerate sweeps (some error is exactly zero).
    q_factors : list of (h, Q) pairs
    config : dict
        Everything needed to re-run the experiment.
    seed : int
    version : str
    extras : dict
        Run-specific diagnostics (envelope checks, flags, verify results).
    """

    kind: str
    target_id: str
    p: float
    k: int
    rows: list = field(default_factory=list)
    fitted_order: float | None = None
    q_factors: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int = 0
    version: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def h(self) -> list:
        return [r.h for r in self.rows]

    @property
    def errors(self) -> list:
        return [r.error for r in self.rows]

    @property
    def degenerate(self) -> bool:
        return bool(self.extras.get("degenerate", False))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = _p_text(self.p)
        d["rows"] = [asdict(r) for r in self.rows]
        d["q_factors"] = [[float(h), float(q)] for h, q in self.q_factors]
        return d


def _p_text(p) -> str:
    return "inf" if p == math.inf else repr(float(p))


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, (int, float)):
        return repr(float(x))
    return str(x)


def _csv_lines(report: ErrorReport):
    head = (report.kind, report.target_id, _p_text(report.p), str(report.k))
    for r in report.rows:
        for metric in ("error", "norm", "ratio"):
            yield head + (_num(r.h), metric, _num(getattr(r, metric)))
    for h, q in report.q_factors:
        yield head + (_num(h), "q_factor", _num(q))
    yield head + ("", "fitted_order", _num(report.fitted_order))
    yield head + ("", "seed", str(report.seed))
    yield head + ("", "version", report.version)
    for key in sorted(report.extras):
        val = report.extras[key]
        if isinstance(val, (int, float, bool, str)) or val is None:
            yield head + ("", key, _num(val))


def _render(report: ErrorReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(_csv_lines(report))
    return buf.getvalue()


def emit_report(report: ErrorReport, fmt: str = "csv", path=None) -> str:
    """Serialize ``report``; write it to ``path`` when given.

    Returns the serialized text.  Unwritable paths raise :class:`OSError`.
    """
    text = _render(report, fmt)
    if path is not None and str(path) != "-":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_report_csv(source) -> ErrorReport:
    """Rebuild an :class:`ErrorReport` from CSV text or a file path.

    ``config`` is not part of the CSV format and comes back empty.
    """
    text = source
    if "\n" not in str(source):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.DictReader(io.StringIO(text))
    per_h: dict[float, dict] = {}
    q, extras = [], {}
    first = None
    fitted, seed, version = None, 0, ""
    for rec in reader:
        first = first or rec
        metric, val = rec["metric"], rec["value"]
        if rec["h"]:
            h = float(rec["h"])
            if metric == "q_factor":
                q.append((h, float(val)))
            else:
                per_h.setdefault(h, {})[metric] = float(val)
        elif metric == "fitted_order":
            fitted = float(val) if val else None
        elif metric == "seed":
            seed = int(val)
        elif metric == "version":
            version = val
        else:
            extras[metric] = _parse_scalar(val)
    if first is None:
        raise ValueError("empty report")
    rows = [ReportRow(h, d["error"], d["norm"], d["ratio"])
            for h, d in sorted(per_h.items(), reverse=True)]
    p = math.inf if first["p"] == "inf" else float(first["p"])
    return ErrorReport(first["kind"], first["target"], p, int(first["k"]), rows, fitted,
                       q, {}, seed, version, extras)


def _parse_scalar(val: str):
    if val in ("True", "False"):
        return val == "True"
    if val == "":
        return None
    try:
        return float(val)
    except ValueError:
        return val
