"""Brute-force and closed-form references used to check the optimisers.

Nothing in here calls into :mod:`mems_precoding.precoder`; the algorithms are
validated against these routines, never the other way round.
"""

import numpy as np
from scipy.stats import qmc

from .errors import InvalidInputError

__all__ = [
    "waterfilling",
    "grid_search_rank1",
    "generalized_kkt_bisect",
    "diagonal_surrogate_optimum",
    "capacity",
]

_LN2 = np.log(2.0)


def waterfilling(lambdas, P_tot):
    """Classic water-filling ``p_k = [mu - 1/lambda_k]^+`` with ``sum p = P_tot``.

    Modes with zero gain receive zero power. Returns zeros when every gain
    is zero.
    """
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if np.any(lam < 0) or not P_tot > 0:
        raise InvalidInputError("gains must be >= 0 and P_tot > 0")
    p = np.zeros_like(lam)
    pos = np.flatnonzero(lam > np.finfo(float).tiny)
    if pos.size == 0:
        return p
    order = pos[np.argsort(-lam[pos])]
    inv = 1.0 / lam[order]
    # mode m joins once the budget fills every stronger mode up to 1/lambda_m;
    # differences of inverse gains avoid cancellation when they are huge
    m = 1
    while m < order.size and P_tot > np.sum(inv[m] - inv[:m]):
        m += 1
    p_active = (P_tot - np.array([np.sum(inv[k] - inv[:m]) for k in range(m)])) / m
    p[order[:m]] = np.maximum(p_active, 0.0)
    return p


def capacity(gains, P_tot):
    """``sum log2(1 + lambda_k p_k)`` at the water-filling allocation."""
    lam = np.asarray(gains, dtype=float).reshape(-1)
    p = waterfilling(lam, P_tot)
    return float(np.sum(np.log2(1.0 + lam * p)))


def generalized_kkt_bisect(lc, ls, w, nu, tol=1e-12):
    """Solve ``w_c lc/(1 + lc p) + w_s ls/(1 + ls p) = nu`` for ``p >= 0``.

    The left side decreases in ``p``; returns 0 when it already sits at or
    below ``nu`` at ``p = 0``.
    """
    if not nu > 0:
        raise InvalidInputError("nu must be positive")

    def lhs(p):
        return w.w_c * lc / (1.0 + lc * p) + w.w_s * ls / (1.0 + ls * p)

    if lhs(0.0) <= nu:
        return 0.0
    lo, hi = 0.0, (w.w_c + w.w_s) / nu
    while lhs(hi) > nu:
        hi *= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if lhs(mid) > nu:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def diagonal_surrogate_optimum(lc, ls, penalty, w, P_tot):
    """Maximise the power-allocation surrogate for diagonal gain matrices.

    Objective: ``sum_k w_c log2(1 + lc_k p_k) + w_s log2(1 + ls_k p_k) - penalty_k p_k``
    over ``p >= 0, sum p <= P_tot``. Each coordinate is solved by
    :func:`generalized_kkt_bisect` and the multiplier by an outer bisection.
    """
    lc = np.asarray(lc, dtype=float)
    ls = np.asarray(ls, dtype=float)
    penalty = np.zeros_like(lc) if penalty is None else np.asarray(penalty, dtype=float)

    def alloc(nu):
        # d/dp of the log2 terms is (1/ln2) * lhs; match against nu + penalty
        out = np.zeros_like(lc)
        for k in range(lc.size):
            target = _LN2 * (nu + penalty[k])
            if target <= 0:
                out[k] = np.inf
            else:
                out[k] = generalized_kkt_bisect(lc[k], ls[k], w, target)
        return out

    p0 = alloc(0.0)
    if np.all(np.isfinite(p0)) and p0.sum() <= P_tot:
        return p0
    lo, hi = 0.0, 1.0
    while alloc(hi).sum() > P_tot:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if alloc(mid).sum() > P_tot:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return alloc(hi)


def _unit_vectors(n_t, grid):
    if n_t == 2:
        m = int(np.ceil(np.sqrt(grid)))
        # cos^2(theta) uniform -> uniform measure on the complex projective line
        u = np.linspace(0.0, 1.0, m)
        theta = np.arccos(np.sqrt(u))
        phi = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
        T, P = np.meshgrid(theta, phi, indexing="ij")
        f = np.stack([np.cos(T).ravel(), (np.sin(T) * np.exp(1j * P)).ravel()], axis=0)
        return f.astype(complex)
    if n_t == 3:
        sampler = qmc.Halton(d=6, scramble=False)
        pts = sampler.random(grid + 1)[1:]
        pts = np.clip(pts, 1e-12, 1 - 1e-12)
        from scipy.special import ndtri

        g = ndtri(pts)
        z = g[:, :3] + 1j * g[:, 3:]
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        basis = np.eye(3, dtype=complex)
        return np.concatenate([z.T, basis], axis=1)
    raise InvalidInputError("grid search supports n_t in {2, 3} only")


def grid_search_rank1(ch, w, P_tot, grid=10_000, return_all=False):
    """Best rank-one precoder ``sqrt(P_tot) f`` over a deterministic direction grid.

    Returns ``(f_best, objective_best)`` using the unclamped objective, plus
    the objective at every grid point when ``return_all`` is set.
    """
    if grid < 10_000:
        raise InvalidInputError("grid must hold at least 1e4 points")
    f = _unit_vectors(ch.n_t, grid)
    G_c, G_e, G_s = ch.grams()

    def quad(G):
        return np.real(np.einsum("ik,ij,jk->k", f.conj(), G, f))

    obj = (
        w.w_c * np.log2(1.0 + P_tot * quad(G_c))
        - w.w_c * np.log2(1.0 + P_tot * quad(G_e))
        + w.w_s * np.log2(1.0 + P_tot * quad(G_s))
    )
    k = int(np.argmax(obj))
    if return_all:
        return f[:, k].copy(), float(obj[k]), obj
    return f[:, k].copy(), float(obj[k])
