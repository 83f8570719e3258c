"""Log-det rate functionals and the weighted secrecy + sensing objective."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .numerics import as_matrix

__all__ = [
    "Weights",
    "Precoder",
    "link_rate",
    "secrecy_rate",
    "weighted_objective",
    "marginal_gains",
    "logdet2_psd",
    "rate_breakdown",
]


@dataclass(frozen=True)
class Weights:
    """Trade-off weights; ``w_c`` multiplies secrecy, ``w_s`` multiplies sensing."""

    w_c: float
    w_s: float

    def __post_init__(self):
        if self.w_c < 0 or self.w_s < 0 or abs(self.w_c + self.w_s - 1.0) > 1e-12:
            raise InvalidInputError(f"weights must be nonnegative and sum to one, got ({self.w_c}, {self.w_s})")

    @classmethod
    def from_wc(cls, w_c):
        w_c = float(w_c)
        return cls(w_c, 1.0 - w_c)


@dataclass
class Precoder:
    """``F = W diag(sqrt(p))`` with semi-unitary ``W`` and nonnegative powers ``p``."""

    W: np.ndarray
    p: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        self.W = as_matrix(self.W, "W")
        self.p = np.asarray(self.p, dtype=float).reshape(-1)
        if self.p.size != self.W.shape[1]:
            raise InvalidInputError(f"power vector length {self.p.size} != basis width {self.W.shape[1]}")
        if np.any(~np.isfinite(self.p)) or np.any(self.p < -1e-12):
            raise InvalidInputError("powers must be finite and nonnegative")
        self.p = np.maximum(self.p, 0.0)

    @property
    def F(self):
        return self.W * np.sqrt(self.p)[np.newaxis, :]

    @property
    def N_s(self):
        return self.W.shape[1]

    def total_power(self):
        return float(self.p.sum())

    def active(self, rel=1e-10):
        """Mask of streams carrying more than ``rel`` times the total power."""
        total = self.p.sum()
        return self.p > rel * total if total > 0 else np.zeros(self.p.size, dtype=bool)

    @classmethod
    def zero(cls, n_t, N_s=1):
        W = np.eye(n_t, N_s, dtype=complex)
        return cls(W, np.zeros(N_s), degenerate=True)


def logdet2_psd(X):
    """``log2 det(I + X)`` for a Hermitian PSD ``X`` via its eigenvalues."""
    if X.size == 0:
        return 0.0
    lam = np.linalg.eigvalsh(0.5 * (X + X.conj().T))
    return float(np.sum(np.log1p(np.maximum(lam, 0.0))) / np.log(2.0))


def link_rate(H, F):
    """``log2 det(I + F^H H^H H F)`` in bits per channel use."""
    H = as_matrix(H, "H")
    F = as_matrix(F, "F")
    if H.shape[1] != F.shape[0]:
        raise InvalidInputError(f"cannot apply {H.shape} channel to {F.shape} precoder")
    HF = H @ F
    return logdet2_psd(HF.conj().T @ HF)


def secrecy_rate(H_c, H_e, F):
    return max(0.0, link_rate(H_c, F) - link_rate(H_e, F))


def rate_breakdown(ch, F):
    """Return ``(R_c, R_e, R_s)`` for precoder matrix ``F``."""
    return link_rate(ch.H_c, F), link_rate(ch.H_e, F), link_rate(ch.H_s, F)


def weighted_objective(ch, F, w, clamp=True):
    """Weighted secrecy + sensing rate.

    With ``clamp=True`` the secrecy term is ``[R_c - R_e]^+`` (the reported
    figure of merit); with ``clamp=False`` it is the raw difference, which is
    the smooth surrogate the optimiser works on.
    """
    R_c, R_e, R_s = rate_breakdown(ch, F)
    sec = max(0.0, R_c - R_e) if clamp else R_c - R_e
    return w.w_c * sec + w.w_s * R_s


def marginal_gains(ch, W, p, w):
    """Per-stream net gains of the sequential rate decomposition.

    Stream ``n`` is credited with
    ``w_c log2(1 + p_n g_c) - w_c log2(1 + p_n g_e) + w_s log2(1 + p_n g_s)``
    where ``g_i = w_n^H G_i w_n`` and ``G_i = H_i^H T_i^{-1} H_i`` accounts for
    the streams before it. The gains add up to the unclamped objective.
    """
    W = as_matrix(W, "W")
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != W.shape[1]:
        raise InvalidInputError("power vector and basis width differ")
    if W.shape[0] != ch.n_t:
        raise InvalidInputError("basis rows must equal n_t")
    coeffs = {"c": w.w_c, "e": -w.w_c, "s": w.w_s}
    gains = np.zeros(p.size)
    for key, H in (("c", ch.H_c), ("e", ch.H_e), ("s", ch.H_s)):
        m = H.shape[0]
        T = np.eye(m, dtype=complex)
        for n in range(p.size):
            h = H @ W[:, n]
            g = float(np.real(h.conj() @ np.linalg.solve(T, h)))
            gains[n] += coeffs[key] * np.log2(1.0 + p[n] * max(g, 0.0))
            T = T + p[n] * np.outer(h, h.conj())
    return gains
