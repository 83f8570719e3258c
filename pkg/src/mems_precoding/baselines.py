"""Reference operating points for the secrecy / sensing trade-off."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelSet
from .errors import InvalidInputError
from .numerics import as_matrix, fix_phase
from .oracle import waterfilling
from .precoder import OptimizerConfig, power_allocation, solve
from .rates import Precoder, Weights, link_rate, secrecy_rate

__all__ = [
    "OperatingPoint",
    "gsvd_secrecy_precoder",
    "secrecy_agnostic_precoder",
    "sensing_upper_bound",
    "time_sharing_curve",
    "time_sharing_point",
    "operating_point",
]


@dataclass
class OperatingPoint:
    R_sec: float
    R_s: float
    label: str = ""
    precoder: Precoder = None

    def __post_init__(self):
        if not (self.R_sec >= 0 and self.R_s >= 0):
            raise InvalidInputError(f"rates must be nonnegative, got ({self.R_sec}, {self.R_s})")


def operating_point(ch, precoder, label=""):
    """Evaluate ``(R_sec, R_s)`` of a precoder on the true channels."""
    F = precoder.F
    return OperatingPoint(
        R_sec=secrecy_rate(ch.H_c, ch.H_e, F),
        R_s=link_rate(ch.H_s, F),
        label=label,
        precoder=precoder,
    )


def gsvd_secrecy_precoder(H_c, H_e, P_tot, N_s, ridge=1e-9, cfg_kwargs=None):
    """Secrecy precoder on the directions where the receiver beats the eavesdropper.

    Directions are the generalized eigenvectors of the pencil
    ``(H_c^H H_c, H_e^H H_e + delta I)`` with ``delta = ridge * ||H_e||_2^2``.
    Up to ``N_s`` of them with eigenvalue above one are kept, orthonormalized
    by Gram-Schmidt in decreasing eigenvalue order, and given powers by the
    SCA stage at ``w = (1, 0)``. Returns the
    zero-power precoder (flagged degenerate) when no eigenvalue exceeds one.
    """
    H_c = as_matrix(H_c, "H_c")
    H_e = as_matrix(H_e, "H_e")
    if not P_tot > 0:
        raise InvalidInputError("P_tot must be positive")
    n_t = H_c.shape[1]
    if H_e.shape[1] != n_t:
        raise InvalidInputError("H_c and H_e column counts differ")
    if not 1 <= N_s <= n_t:
        raise InvalidInputError("N_s must lie in [1, n_t]")
    G_c = H_c.conj().T @ H_c
    G_e = H_e.conj().T @ H_e
    delta = ridge * np.linalg.norm(H_e, 2) ** 2
    if delta == 0:
        # no eavesdropper: any positive scale keeps the pencil definite
        delta = ridge * max(np.linalg.norm(H_c, 2) ** 2, 1.0)
    B = G_e + delta * np.eye(n_t)
    lam, V = scipy.linalg.eigh(0.5 * (G_c + G_c.conj().T), 0.5 * (B + B.conj().T))
    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    keep = np.flatnonzero(lam > 1.0)[:N_s]
    if keep.size == 0:
        return Precoder(np.eye(n_t, 1, dtype=complex), np.zeros(1), degenerate=True)
    # Gram-Schmidt in eigenvalue order keeps the strongest directions intact
    W = fix_phase(np.linalg.qr(V[:, keep])[0])
    cfg = OptimizerConfig(N_s=W.shape[1], P_tot=P_tot, w=Weights(1.0, 0.0), **(cfg_kwargs or {}))
    p0 = np.full(W.shape[1], P_tot / W.shape[1])
    secrecy_only = ChannelSet(H_c, H_e, np.zeros((1, n_t), dtype=complex))
    p = power_allocation(secrecy_only, W, cfg, p0)
    return Precoder(W, p)


def secrecy_agnostic_precoder(ch, cfg, return_result=False):
    """Solve the eavesdropper-free problem; the caller evaluates it on the true channels.

    With ``return_result`` the full :class:`SolveResult` is returned.
    """
    blind = ch.replace(H_e=np.zeros_like(ch.H_e))
    res = solve(blind, cfg)
    return res if return_result else res.precoder


def sensing_upper_bound(H_s, P_tot, max_streams=None):
    """Sensing-only optimum: waterfilling over the squared singular values of ``H_s``.

    ``max_streams`` caps the number of eigenmodes (the precoder width);
    ``None`` allows all of them.
    """
    H_s = as_matrix(H_s, "H_s")
    if not P_tot > 0:
        raise InvalidInputError("P_tot must be positive")
    n_t = H_s.shape[1]
    _, s, Vh = np.linalg.svd(H_s, full_matrices=True)
    gains = np.zeros(n_t)
    gains[: s.size] = s**2
    k = n_t if max_streams is None else int(max_streams)
    if not 1 <= k <= n_t:
        raise InvalidInputError("max_streams must lie in [1, n_t]")
    V = fix_phase(Vh.conj().T[:, :k])
    g = gains[:k]
    if not np.any(g > 0):
        return OperatingPoint(0.0, 0.0, "SUB", Precoder(V, np.zeros(k)))
    p = waterfilling(g, P_tot)
    R_s = float(np.sum(np.log2(1.0 + g * p)))
    return OperatingPoint(0.0, R_s, "SUB", Precoder(V, p))


def time_sharing_point(pt_a, pt_b, theta):
    """``theta * pt_a + (1 - theta) * pt_b``; the endpoints are returned exactly."""
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise InvalidInputError("theta must lie in [0, 1]")
    if theta == 0.0:
        R_sec, R_s = pt_b.R_sec, pt_b.R_s
    elif theta == 1.0:
        R_sec, R_s = pt_a.R_sec, pt_a.R_s
    else:
        R_sec = theta * pt_a.R_sec + (1.0 - theta) * pt_b.R_sec
        R_s = theta * pt_a.R_s + (1.0 - theta) * pt_b.R_s
    return OperatingPoint(float(R_sec), float(R_s), f"TS({theta:.4g})")


def time_sharing_curve(pt_a, pt_b, samples):
    """Time-sharing points for ``theta`` on a uniform grid over [0, 1]."""
    if int(samples) < 2:
        raise InvalidInputError("samples must be >= 2")
    return [time_sharing_point(pt_a, pt_b, theta) for theta in np.linspace(0.0, 1.0, int(samples))]
