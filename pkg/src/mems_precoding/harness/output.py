"""CSV and plot emission for sweep records."""

import csv
import io
import os
from collections import defaultdict

import numpy as np

from .experiments import RAW_COLUMNS, sort_records

__all__ = ["emit_outputs", "raw_csv_text", "aggregate_rows", "read_raw_csv", "AGG_COLUMNS"]

_GROUP = ("method", "w_c", "w_s", "snr_db", "N_s")
_STATS = ("R_sec", "R_s", "objective", "weighted_rate", "iters_outer", "iters_fp", "iters_sca", "wall_ms")
AGG_COLUMNS = _GROUP + ("trials", "converged_frac") + tuple(f"{s}_{k}" for s in _STATS for k in ("mean", "std"))


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def raw_csv_text(records):
    """Raw CSV as a string; ``wall_ms`` cells are left empty so reruns are byte-identical."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RAW_COLUMNS)
    for rec in sort_records(records):
        row = [_fmt(getattr(rec, col)) for col in RAW_COLUMNS[:-1]]
        writer.writerow(row + [""])
    return buf.getvalue()


def aggregate_rows(records):
    """Mean and population std of every numeric field per (method, weights, SNR, N_s)."""
    groups = defaultdict(list)
    for rec in records:
        groups[tuple(getattr(rec, k) for k in _GROUP)].append(rec)
    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[3], k[4])):
        recs = groups[key]
        row = dict(zip(_GROUP, key))
        row["trials"] = len(recs)
        row["converged_frac"] = float(np.mean([r.converged for r in recs]))
        for stat in _STATS:
            vals = np.array([float(getattr(r, stat)) for r in recs])
            row[f"{stat}_mean"] = float(vals.mean())
            row[f"{stat}_std"] = float(vals.std())
        rows.append(row)
    return rows


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _plot(rows, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    by_curve = defaultdict(list)
    for row in rows:
        by_curve[(row["method"], row["snr_db"])].append(row)
    for (method, snr), pts in sorted(by_curve.items()):
        pts = sorted(pts, key=lambda r: r["w_c"])
        x = [r["R_s_mean"] for r in pts]
        y = [r["R_sec_mean"] for r in pts]
        style = "o" if method in ("gsvd", "sub") else "-o"
        ax.plot(x, y, style, ms=3, label=f"{method} ({snr:g} dB)")
    ax.set_xlabel("sensing rate R_s [bit/use]")
    ax.set_ylabel("secrecy rate R_sec [bit/use]")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_outputs(records, out_dir, prefix="sweep", plot=False):
    """Write ``<prefix>_raw.csv``, ``<prefix>_agg.csv`` and optionally ``<prefix>.svg``.

    Returns a dict of the written paths.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    paths = {"raw": os.path.join(out_dir, f"{prefix}_raw.csv"), "agg": os.path.join(out_dir, f"{prefix}_agg.csv")}
    _write(paths["raw"], raw_csv_text(records))

    rows = aggregate_rows(records)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGG_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[col]) for col in AGG_COLUMNS])
    _write(paths["agg"], buf.getvalue())

    if plot and rows:
        paths["plot"] = os.path.join(out_dir, f"{prefix}.svg")
        _plot(rows, paths["plot"])
    return paths


def read_raw_csv(path):
    """Parse a raw CSV back into dicts with typed values (``wall_ms`` may be ``None``)."""
    ints = {"trial_seed", "N_s", "iters_outer", "iters_fp", "iters_sca"}
    floats = {"w_c", "w_s", "snr_db", "R_sec", "R_s", "objective"}
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, value in row.items():
                if key in ints:
                    parsed[key] = int(value)
                elif key in floats:
                    parsed[key] = float(value)
                elif key == "converged":
                    parsed[key] = value == "true"
                elif key == "wall_ms":
                    parsed[key] = float(value) if value else None
                else:
                    parsed[key] = value
            out.append(parsed)
    return out
