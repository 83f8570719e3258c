"""Summaries of sweep records: time-sharing dominance and per-weight margins."""

from collections import defaultdict

import numpy as np

__all__ = ["mean_points", "time_sharing_level", "dominance_report"]


def mean_points(records):
    """Trial-averaged ``(R_sec, R_s, weighted_rate)`` keyed by ``(method, snr_db, w_c)``."""
    acc = defaultdict(list)
    for rec in records:
        acc[(rec.method, rec.snr_db, rec.w_c)].append((rec.R_sec, rec.R_s, rec.weighted_rate))
    return {key: tuple(np.mean(np.array(vals), axis=0)) for key, vals in acc.items()}


def time_sharing_level(R_s, secrecy_pt, sensing_pt):
    """Largest secrecy rate time sharing reaches while keeping sensing rate >= ``R_s``.

    Mixtures ``theta * a + (1 - theta) * b`` with ``theta`` in [0, 1] are
    searched; the objective is linear in ``theta`` so only the ends of the
    feasible interval matter. Returns ``-inf`` when ``R_s`` exceeds both
    endpoints.
    """
    (a_sec, a_s), (b_sec, b_s) = secrecy_pt, sensing_pt
    lo, hi = 0.0, 1.0
    slope = a_s - b_s
    # feasibility: b_s + theta * slope >= R_s
    if slope > 0:
        lo = max(lo, (R_s - b_s) / slope)
    elif slope < 0:
        hi = min(hi, (R_s - b_s) / slope)
    elif b_s < R_s:
        return -np.inf
    if lo > hi:
        return -np.inf
    return max(t * a_sec + (1.0 - t) * b_sec for t in (lo, hi))


def dominance_report(records, tol_line=1e-3, tol_tie=1e-9):
    """Check the proposed method against time-sharing and every baseline, per SNR and weight.

    Returns a list of dicts, one per (snr_db, w_c), with ``line_gap``
    (proposed secrecy minus the time-sharing level at its sensing rate),
    ``margins`` (proposed mean weighted rate minus each baseline's), and the
    pass flags ``on_line`` and ``dominates``.
    """
    means = mean_points(records)
    out = []
    keys = sorted({(snr, w_c) for (m, snr, w_c) in means if m == "proposed"})
    for snr, w_c in keys:
        prop = means[("proposed", snr, w_c)]
        row = {"snr_db": snr, "w_c": w_c, "R_sec": prop[0], "R_s": prop[1], "margins": {}}
        g = means.get(("gsvd", snr, w_c))
        s = means.get(("sub", snr, w_c))
        if g is not None and s is not None:
            level = time_sharing_level(prop[1], (g[0], g[1]), (s[0], s[1]))
            row["line_gap"] = prop[0] - level
            row["on_line"] = bool(row["line_gap"] >= -tol_line)
        for method in ("gsvd", "agnostic", "sub", "time-sharing"):
            other = means.get((method, snr, w_c))
            if other is not None:
                row["margins"][method] = prop[2] - other[2]
        row["dominates"] = all(m >= -tol_tie for m in row["margins"].values())
        out.append(row)
    return out
