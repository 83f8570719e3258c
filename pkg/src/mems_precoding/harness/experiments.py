"""Monte-Carlo drivers: Pareto sweeps, sum rate versus SNR, subspace reports."""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..baselines import gsvd_secrecy_precoder, secrecy_agnostic_precoder, sensing_upper_bound, time_sharing_point
from ..baselines import OperatingPoint
from ..channel import SUBSPACE_LABELS, rayleigh_channel_set, structured_channel_set
from ..errors import ConfigError
from ..precoder import OptimizerConfig, solve
from ..rates import Weights, rate_breakdown
from ..subspace import decompose, dof_table
from .config import worker_count

__all__ = ["SweepRecord", "run_pareto", "run_sumrate_vs_snr", "run_decompose", "RAW_COLUMNS", "sort_records"]

RAW_COLUMNS = (
    "trial_seed",
    "method",
    "w_c",
    "w_s",
    "snr_db",
    "N_s",
    "R_sec",
    "R_s",
    "objective",
    "iters_outer",
    "iters_fp",
    "iters_sca",
    "converged",
    "wall_ms",
)


@dataclass
class SweepRecord:
    """One evaluated operating point; ``objective`` is the unclamped weighted rate."""

    trial_seed: int
    method: str
    w_c: float
    w_s: float
    snr_db: float
    N_s: int
    R_sec: float
    R_s: float
    objective: float
    iters_outer: int = 0
    iters_fp: int = 0
    iters_sca: int = 0
    converged: bool = True
    wall_ms: float = 0.0

    def __post_init__(self):
        for name in ("R_sec", "R_s", "objective"):
            if not np.isfinite(getattr(self, name)):
                raise ArithmeticError(f"{name} is not finite in {self.method} record")
        if self.R_sec < 0 or self.R_s < 0:
            raise ArithmeticError("rates must be nonnegative")

    @property
    def weighted_rate(self):
        """``w_c R_sec + w_s R_s`` with the clamped secrecy rate."""
        return self.w_c * self.R_sec + self.w_s * self.R_s

    def key(self):
        return (self.method, self.w_c, self.snr_db, self.trial_seed)


def sort_records(records):
    return sorted(records, key=SweepRecord.key)


def _weights(w_c):
    w_c = float(w_c)
    return Weights(w_c, 1.0 - w_c)


def _evaluate(ch, F, w):
    R_c, R_e, R_s = rate_breakdown(ch, F)
    R_sec = max(0.0, R_c - R_e)
    return R_sec, R_s, w.w_c * (R_c - R_e) + w.w_s * R_s


def _opt_config(cfg, P, w):
    return OptimizerConfig(N_s=cfg.streams, P_tot=P, w=w, tol=cfg.tolerance, **cfg.caps)


def _trial_channels(cfg, seed):
    return rayleigh_channel_set(cfg.n_t, cfg.n_c, cfg.n_e, seed, N_s=cfg.streams, T=cfg.T)


def _run_cell(cfg, trial, snr_db, weights):
    """All methods and weights for one (trial, SNR) pair."""
    seed = cfg.seed(trial)
    ch = _trial_channels(cfg, seed)
    P = 10.0 ** (snr_db / 10.0)
    N_s = cfg.streams
    methods = set(cfg.methods)
    out = []

    def record(method, w, R_sec, R_s, obj, wall, iters=(0, 0, 0), converged=True):
        out.append(
            SweepRecord(seed, method, w.w_c, w.w_s, snr_db, N_s, R_sec, R_s, obj, *iters, converged, wall)
        )

    need_ts = "time-sharing" in methods
    if "gsvd" in methods or need_ts:
        t0 = time.perf_counter()
        g_prec = gsvd_secrecy_precoder(ch.H_c, ch.H_e, P, N_s, ridge=cfg.gsvd_ridge, cfg_kwargs=cfg.caps)
        g_wall = 1e3 * (time.perf_counter() - t0)
    if "sub" in methods or need_ts:
        t0 = time.perf_counter()
        sub = sensing_upper_bound(ch.H_s, P, max_streams=N_s)
        s_wall = 1e3 * (time.perf_counter() - t0)

    for w_c in weights:
        w = _weights(w_c)
        if "proposed" in methods:
            res = solve(ch, _opt_config(cfg, P, w))
            record("proposed", w, *_evaluate(ch, res.precoder.F, w), res.wall_ms, res.iters, res.converged)
        if "agnostic" in methods:
            res = secrecy_agnostic_precoder(ch, _opt_config(cfg, P, w), return_result=True)
            record("agnostic", w, *_evaluate(ch, res.precoder.F, w), res.wall_ms, res.iters, res.converged)
        if "gsvd" in methods or need_ts:
            g_eval = _evaluate(ch, g_prec.F, w)
            if "gsvd" in methods:
                record("gsvd", w, *g_eval, g_wall)
        if "sub" in methods or need_ts:
            s_eval = _evaluate(ch, sub.precoder.F, w)
            if "sub" in methods:
                record("sub", w, *s_eval, s_wall)
        if need_ts:
            # theta = w_c weights the secrecy-only end of the segment
            pt = time_sharing_point(
                OperatingPoint(g_eval[0], g_eval[1]), OperatingPoint(s_eval[0], s_eval[1]), w.w_c
            )
            obj = w.w_c * g_eval[2] + (1.0 - w.w_c) * s_eval[2]
            record("time-sharing", w, pt.R_sec, pt.R_s, obj, g_wall + s_wall)
    return out


def _cell_star(args):
    return _run_cell(*args)


def _run_cells(cfg, jobs, workers=None):
    workers = worker_count() if workers is None else int(workers)
    if workers <= 1 or len(jobs) <= 1:
        parts = [_cell_star(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_cell_star, jobs))
    return sort_records([rec for part in parts for rec in part])


def run_pareto(cfg, workers=None):
    """Sweep ``cfg.weights`` for every trial and SNR; one record per method and weight."""
    weights = [float(w) for w in cfg.weights]
    if not weights:
        return []
    jobs = [(cfg, trial, snr, weights) for trial in range(cfg.trials) for snr in cfg.snr_list]
    return _run_cells(cfg, jobs, workers)


def run_sumrate_vs_snr(cfg, workers=None):
    """Weighted rate at ``w_c = cfg.sumrate_w_c`` for each SNR in ``cfg.snr_db``."""
    snrs = cfg.snr_list
    if not snrs:
        raise ConfigError("snr_db must list at least one value")
    jobs = [(cfg, trial, snr, [float(cfg.sumrate_w_c)]) for trial in range(cfg.trials) for snr in snrs]
    return _run_cells(cfg, jobs, workers)


def run_decompose(cfg):
    """Subspace dimensions and DoF bookkeeping for the first trial's channels.

    ``cfg.structure`` (label -> dimension) selects a structured fixture
    instead of Rayleigh channels. Returns a dict with ``dims``, and per
    weight ``d_max``, ``useful_dim`` and the DoF weight table.
    """
    seed = cfg.seed(0)
    if cfg.structure:
        ch = structured_channel_set(cfg.structure, seed)
    else:
        ch = _trial_channels(cfg, seed)
    dec = decompose(ch, cfg.tolerance)
    rows = []
    for w_c in cfg.weights:
        rep = dof_table(dec, _weights(w_c))
        rows.append({"w_c": float(w_c), "d_max": rep.d_max, "useful_dim": rep.useful_dim, "weights": rep.weights})
    return {"seed": seed, "n_t": ch.n_t, "dims": dict(dec.dims), "labels": SUBSPACE_LABELS, "dof": rows}
