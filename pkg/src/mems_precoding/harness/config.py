"""Experiment configuration: a YAML file plus command-line overrides."""

import os
from dataclasses import dataclass, field, fields, replace

import numpy as np
import yaml

from ..channel import SystemDims
from ..errors import ConfigError
from ..numerics import TolerancePolicy

__all__ = ["ExperimentConfig", "load_config", "default_weights", "worker_count", "METHODS"]

METHODS = ("proposed", "gsvd", "agnostic", "sub", "time-sharing")

_TOL_KEYS = ("rank_rel_tol", "fp_tol", "sca_tol", "outer_tol")
_CAP_KEYS = ("max_outer", "max_fp", "max_sca", "max_pg")


def default_weights():
    """21-point sweep ``w_c = 0, 0.05, ..., 1``."""
    return [round(0.05 * k, 10) for k in range(21)]


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte-Carlo experiment description.

    ``N_s = None`` means ``n_t // 2``. ``snr_db`` may be a scalar or a list;
    the linear power is ``10 ** (snr_db / 10)`` with unit noise.
    """

    n_t: int = 16
    n_c: int = 16
    n_e: int = 16
    n_s: int = 16
    N_s: int = None
    T: int = 1
    snr_db: object = 0.0
    weights: list = field(default_factory=default_weights)
    sumrate_w_c: float = 0.5
    trials: int = 20
    base_seed: int = 0
    methods: tuple = METHODS
    out_dir: str = "results"
    prefix: str = None
    plot: bool = False
    tol: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)
    gsvd_ridge: float = 1e-9
    structure: dict = None

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        for w_c in self.weights:
            if not 0.0 <= float(w_c) <= 1.0:
                raise ConfigError(f"weight {w_c} outside [0, 1]")
        if not 0.0 <= float(self.sumrate_w_c) <= 1.0:
            raise ConfigError("sumrate_w_c outside [0, 1]")
        if self.n_s != self.n_t:
            raise ConfigError("the sensing channel is square: n_s must equal n_t")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}")
        if set(self.tol) - set(_TOL_KEYS):
            raise ConfigError(f"unknown tolerance keys {sorted(set(self.tol) - set(_TOL_KEYS))}")
        if set(self.caps) - set(_CAP_KEYS):
            raise ConfigError(f"unknown cap keys {sorted(set(self.caps) - set(_CAP_KEYS))}")
        for key, value in self.caps.items():
            if int(value) < 1:
                raise ConfigError(f"{key} must be >= 1")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        try:
            self.dims
            self.tolerance
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def streams(self):
        return int(self.N_s) if self.N_s is not None else max(1, self.n_t // 2)

    @property
    def dims(self):
        return SystemDims(self.n_t, self.n_c, self.n_e, self.n_s, self.streams, self.T)

    @property
    def tolerance(self):
        return TolerancePolicy(**self.tol)

    @property
    def snr_list(self):
        return [float(x) for x in np.atleast_1d(self.snr_db)]

    def seed(self, trial):
        return int(self.base_seed) + int(trial)

    def with_overrides(self, **kwargs):
        """Return a copy with every non-``None`` keyword applied."""
        changes = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **changes)


def load_config(path=None, **overrides):
    """Read a YAML config (nested ``dims``/``tol``/``caps`` sections allowed) and apply overrides."""
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a mapping")
    flat = dict(data)
    dims = flat.pop("dims", None) or {}
    flat.update(dims)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(flat) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "methods" in flat:
        flat["methods"] = tuple(flat["methods"])
    try:
        cfg = ExperimentConfig(**flat)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.with_overrides(**overrides)


def worker_count():
    """Worker cap from ``MEMS_THREADS`` (0 or unset: one per CPU)."""
    raw = os.environ.get("MEMS_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"MEMS_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError("MEMS_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)
