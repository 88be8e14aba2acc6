"""Report serialization: fixed-width tables, JSON, and comma-separated plot data."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from .errors import InvalidArgumentError

ENTRY_FIELDS = ("name", "linear", "db", "db_ref", "target", "tolerance", "scale", "lo", "hi", "pass", "note")
PLOT_COLUMNS = ("sweep_value", "quantity", "linear", "db")


def entry_dict(e) -> dict:
    return {
        "name": e.name, "linear": e.linear, "db": e.db, "db_ref": e.db_ref,
        "target": e.target, "tolerance": e.tolerance, "scale": e.scale,
        "lo": e.lo, "hi": e.hi, "pass": e.passed, "note": e.note,
    }


def _setup_dict(setup) -> dict:
    if setup is None:
        return {}
    out = {}
    for which in ("epr1", "epr2"):
        spec = getattr(setup, which)
        out[which] = asdict(spec) if spec is not None else None
    t = setup.teleporter
    out["teleporter"] = {"g_x": t.g_x, "g_p": t.g_p, "jitter_rms": t.jitter_rms, "eta_out": t.eta_out}
    return out


def report_dict(report) -> dict:
    return {
        "scenario": report.name,
        "kind": report.kind,
        "all_pass": report.all_pass,
        "entries": [entry_dict(e) for e in report.entries],
        "calibrations": [
            {
                "free_params": list(c.free_params),
                "parameters": c.parameter_values(),
                "targets": [{"observable": t.observable, "db": t.db, "db_ref": t.v_ref} for t in c.targets],
                "model_db": list(c.model_db),
                "residual_db": c.residual,
                "iterations": c.iterations,
            }
            for c in report.calibrations
        ],
        "setup": _setup_dict(report.setup),
    }


def to_structured(reports) -> str:
    """JSON text at full float precision; identical input gives identical bytes."""
    if not isinstance(reports, (list, tuple)):
        payload = report_dict(reports)
    else:
        payload = {"reports": [report_dict(r) for r in reports]}
    return json.dumps(payload, indent=2) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return f"{v:.4g}"


def to_table(report) -> str:
    """Human-readable table, 4 significant digits."""
    rows = [("quantity", "linear", "dB", "ref", "target", "window", "pass")]
    for e in report.entries:
        if e.lo is not None or e.hi is not None:
            window = f"[{_fmt(e.lo)}, {_fmt(e.hi)}]"
        elif e.tolerance is not None:
            window = f"+-{_fmt(e.tolerance)}" + (" dB" if e.scale == "db" else "")
        else:
            window = ""
        status = "" if e.passed is None else ("PASS" if e.passed else "FAIL")
        rows.append((e.name, _fmt(e.linear), _fmt(e.db), _fmt(e.db_ref),
                     "" if e.target is None else _fmt(e.target), window, status))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = [f"# {report.name} ({report.kind})"]
    for k, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    notes = [(e.name, e.note) for e in report.entries if e.note]
    if notes:
        lines.append("")
        lines.extend(f"  {n}: {t}" for n, t in notes)
    lines.append(f"result: {'all checks pass' if report.all_pass else f'{len(report.failures())} check(s) failed'}")
    return "\n".join(lines) + "\n"


def plot_rows(results, quantities: Sequence[str] = None) -> list:
    """Rows of (sweep value, quantity, linear, dB).

    ``results`` is a single report or a sequence of ``(value, report)``;
    ``quantities`` keeps only the named entries.
    """
    if results is None:
        raise InvalidArgumentError("no results to emit")
    if hasattr(results, "entries"):
        results = [(None, results)]
    results = list(results)
    if not results:
        raise InvalidArgumentError("no results to emit")
    rows = []
    for value, rep in results:
        for e in rep.entries:
            if quantities is not None and e.name not in quantities:
                continue
            rows.append((value, e.name, e.linear, e.db))
    if not rows:
        raise InvalidArgumentError("no results to emit")
    return rows


def plot_csv(results, quantities: Sequence[str] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_COLUMNS)
    for value, name, linear, db in plot_rows(results, quantities):
        w.writerow(["" if value is None else repr(float(value)), name, repr(linear), "" if db is None else repr(db)])
    return buf.getvalue()


def emit_plot_data(results, path, quantities: Sequence[str] = None) -> Path:
    """Write comma-separated plot data; raises OSError if ``path`` is unwritable."""
    text = plot_csv(results, quantities)
    path = Path(path)
    path.write_text(text)
    return path
