"""Raw and effective channel construction.

The effective channels fold the noise levels (and, for sensing, the target
covariance and blocklength) into the matrices so that communication,
eavesdropping and sensing rates all share the same log-det form.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .numerics import as_matrix, cholesky_factor

__all__ = [
    "SystemDims",
    "ChannelSet",
    "sample_rayleigh",
    "sample_sensing_covariance",
    "build_effective_channels",
    "rayleigh_channel_set",
    "structured_channel_set",
    "SUBSPACE_LABELS",
]

SUBSPACE_LABELS = ("n", "c", "s", "e", "cs", "ce", "se", "cse")

# channels that see each label (complement of the null spaces containing it)
_VISIBLE = {
    "c": ("c", "cs", "ce", "cse"),
    "s": ("s", "cs", "se", "cse"),
    "e": ("e", "ce", "se", "cse"),
}


@dataclass(frozen=True)
class SystemDims:
    n_t: int
    n_c: int
    n_e: int
    n_s: int
    N_s: int = 1
    T: int = 1

    def __post_init__(self):
        for name in ("n_t", "n_c", "n_e", "n_s", "N_s", "T"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be >= 1")
        if self.N_s > self.n_t:
            raise InvalidInputError(f"N_s={self.N_s} exceeds n_t={self.n_t}")


@dataclass(frozen=True)
class ChannelSet:
    """Effective channels ``H_c`` (n_c x n_t), ``H_e`` (n_e x n_t), ``H_s`` (n_t x n_t)."""

    H_c: np.ndarray
    H_e: np.ndarray
    H_s: np.ndarray
    dims: SystemDims = field(default=None)

    def __post_init__(self):
        H_c = as_matrix(self.H_c, "H_c")
        H_e = as_matrix(self.H_e, "H_e")
        H_s = as_matrix(self.H_s, "H_s")
        n_t = H_c.shape[1]
        if H_e.shape[1] != n_t or H_s.shape[1] != n_t:
            raise InvalidInputError(
                f"channel column counts differ: {H_c.shape[1]}, {H_e.shape[1]}, {H_s.shape[1]}"
            )
        object.__setattr__(self, "H_c", H_c)
        object.__setattr__(self, "H_e", H_e)
        object.__setattr__(self, "H_s", H_s)
        if self.dims is None:
            dims = SystemDims(n_t=n_t, n_c=H_c.shape[0], n_e=H_e.shape[0], n_s=H_s.shape[0])
            object.__setattr__(self, "dims", dims)

    @property
    def n_t(self):
        return self.H_c.shape[1]

    def spectral_norms(self):
        """``(||H_c||_2, ||H_e||_2, ||H_s||_2)``, computed once per instance."""
        cached = self.__dict__.get("_norms")
        if cached is None:
            cached = tuple(float(np.linalg.norm(H, 2)) for H in (self.H_c, self.H_e, self.H_s))
            object.__setattr__(self, "_norms", cached)
        return cached

    def grams(self):
        """Return the Gram matrices ``(H_c^H H_c, H_e^H H_e, H_s^H H_s)``."""
        return tuple(H.conj().T @ H for H in (self.H_c, self.H_e, self.H_s))

    def replace(self, **kwargs):
        values = {"H_c": self.H_c, "H_e": self.H_e, "H_s": self.H_s, "dims": self.dims}
        values.update(kwargs)
        return ChannelSet(**values)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_rayleigh(rows, cols, seed):
    """i.i.d. CN(0, 1) matrix; real and imaginary parts each have variance 1/2.

    ``seed`` is an integer or an existing ``numpy.random.Generator``.
    """
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"dimensions must be >= 1, got ({rows}, {cols})")
    rng = _rng(seed)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def sample_sensing_covariance(n_t, seed, ridge=1e-6):
    """Generic full-rank target covariance ``A A^H / n_t + ridge * I``."""
    A = sample_rayleigh(n_t, n_t, seed)
    R = A @ A.conj().T / n_t + ridge * np.eye(n_t)
    return 0.5 * (R + R.conj().T)


def build_effective_channels(raw_c, raw_e, R_sensing, sigma_c=1.0, sigma_e=1.0, sigma_s=1.0, T=1, N_s=1):
    """Normalise raw channels by noise and factor the scaled sensing covariance."""
    raw_c = as_matrix(raw_c, "raw_c")
    raw_e = as_matrix(raw_e, "raw_e")
    R = as_matrix(R_sensing, "R_sensing")
    n_t = raw_c.shape[1]
    if raw_e.shape[1] != n_t or R.shape != (n_t, n_t):
        raise InvalidInputError("inconsistent channel / covariance dimensions")
    for name, value in (("sigma_c", sigma_c), ("sigma_e", sigma_e), ("sigma_s", sigma_s)):
        if not value > 0:
            raise InvalidInputError(f"{name} must be positive")
    if T < 1:
        raise InvalidInputError("blocklength T must be >= 1")
    H_s = cholesky_factor((T / sigma_s**2) * R)
    dims = SystemDims(n_t=n_t, n_c=raw_c.shape[0], n_e=raw_e.shape[0], n_s=n_t, N_s=N_s, T=T)
    return ChannelSet(H_c=raw_c / sigma_c, H_e=raw_e / sigma_e, H_s=H_s, dims=dims)


def rayleigh_channel_set(n_t, n_c, n_e, seed, N_s=1, T=1, ridge=1e-6):
    """Experiment default: Rayleigh H_c, H_e and a sampled sensing covariance, unit noise."""
    rng = _rng(seed)
    raw_c = sample_rayleigh(n_c, n_t, rng)
    raw_e = sample_rayleigh(n_e, n_t, rng)
    R = sample_sensing_covariance(n_t, rng, ridge=ridge)
    return build_effective_channels(raw_c, raw_e, R, T=T, N_s=N_s)


def structured_channel_set(subspace_dims, seed, n_c=None, n_e=None, n_s=None, N_s=1):
    """Rank-deficient channels with a prescribed eight-subspace layout.

    A random invertible matrix ``U`` is split column-wise into blocks of the
    requested sizes (labels as in :data:`SUBSPACE_LABELS`). Each channel is
    the thin-factor product ``A_i @ Uinv[visible rows]``, so its null space is
    exactly the span of the blocks it does not see.

    Parameters
    ----------
    subspace_dims : dict
        label -> dimension; missing labels count as 0. The total is n_t.
    """
    rng = _rng(seed)
    k = {label: int(subspace_dims.get(label, 0)) for label in SUBSPACE_LABELS}
    if any(v < 0 for v in k.values()):
        raise InvalidInputError("subspace dimensions must be nonnegative")
    n_t = sum(k.values())
    if n_t < 1:
        raise InvalidInputError("subspace dimensions sum to zero")
    U = sample_rayleigh(n_t, n_t, rng)
    Uinv = np.linalg.inv(U)
    offsets = np.cumsum([0] + [k[label] for label in SUBSPACE_LABELS])
    rows = {label: np.arange(offsets[i], offsets[i + 1]) for i, label in enumerate(SUBSPACE_LABELS)}

    def make(which, n_rx):
        idx = np.concatenate([rows[label] for label in _VISIBLE[which]]).astype(int)
        n_rx = n_rx or n_t
        if idx.size == 0:
            return np.zeros((n_rx, n_t), dtype=complex)
        A = sample_rayleigh(n_rx, idx.size, rng)
        return A @ Uinv[idx]

    H_c = make("c", n_c)
    H_s = make("s", n_s)
    H_e = make("e", n_e)
    dims = SystemDims(n_t=n_t, n_c=H_c.shape[0], n_e=H_e.shape[0], n_s=H_s.shape[0], N_s=min(N_s, n_t))
    return ChannelSet(H_c=H_c, H_e=H_e, H_s=H_s, dims=dims)
