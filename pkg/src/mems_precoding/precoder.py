"""Two-stage precoder optimisation.

Stage 1 builds the semi-unitary basis one column at a time. Each column is
the fixed point of the stationarity condition of its marginal rate, taken in
the orthogonal complement of the columns already placed; the projected gain
matrices are carried forward with a rank-one update. Stage 2 allocates power
on the fixed basis by successive convex approximation: the eavesdropper
log-det is linearised and the remaining concave program is solved by
projected gradient ascent. The two stages alternate until the objective
settles.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, InvalidInputError
from .numerics import DEFAULT_TOL, TolerancePolicy, as_matrix, fix_phase, hermitian_eig, null_space_basis
from .rates import Precoder, Weights

__all__ = [
    "OptimizerConfig",
    "GainState",
    "SolveResult",
    "basis_update",
    "gain_update",
    "power_allocation",
    "convex_subproblem",
    "solve",
    "low_snr_precoder",
    "composite_matrix",
    "project_capped_simplex",
    "kkt_residual",
    "surrogate_value",
    "surrogate_gradient",
    "dc_objective",
    "fixed_point_residual",
]

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class OptimizerConfig:
    """Inputs of :func:`solve`.

    ``kkt_tol`` is the stopping threshold of the projected-gradient solver;
    it sits below the 1e-6 acceptance level so the returned points clear it
    with margin.
    """

    N_s: int
    P_tot: float
    w: Weights
    tol: TolerancePolicy = DEFAULT_TOL
    max_outer: int = 50
    max_fp: int = 500
    max_sca: int = 100
    max_pg: int = 2000
    kkt_tol: float = 1e-7
    seed_basis: np.ndarray = None

    def __post_init__(self):
        if int(self.N_s) < 1:
            raise InvalidInputError("N_s must be >= 1")
        if not (np.isfinite(self.P_tot) and self.P_tot > 0):
            raise InvalidInputError("P_tot must be positive and finite")
        for name in ("max_outer", "max_fp", "max_sca", "max_pg"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be >= 1")
        if not self.kkt_tol > 0:
            raise InvalidInputError("kkt_tol must be positive")

    def check_dims(self, n_t):
        if self.N_s > n_t:
            raise InvalidInputError(f"N_s={self.N_s} exceeds n_t={n_t}")


@dataclass
class GainState:
    """Projector onto the unused directions and the projected gain matrices."""

    Pi: np.ndarray
    Gt_c: np.ndarray
    Gt_e: np.ndarray
    Gt_s: np.ndarray

    @classmethod
    def initial(cls, ch):
        G_c, G_e, G_s = ch.grams()
        return cls(np.eye(ch.n_t, dtype=complex), G_c, G_e, G_s)

    def gains(self):
        return self.Gt_c, self.Gt_e, self.Gt_s


@dataclass
class SolveResult:
    precoder: Precoder
    objective_trace: np.ndarray
    iters: tuple
    converged: bool
    wall_ms: float
    initial_objective: float = 0.0
    rejected_outer: int = 0
    info: dict = field(default_factory=dict)


def composite_matrix(ch, w):
    """``M = w_c H_c^H H_c - w_c H_e^H H_e + w_s H_s^H H_s``."""
    G_c, G_e, G_s = ch.grams()
    return w.w_c * G_c - w.w_c * G_e + w.w_s * G_s


# ---------------------------------------------------------------- stage 1


def _hermitize(A):
    return 0.5 * (A + A.conj().T)


def gain_update(state, w_n, p_n):
    """Fold stream ``w_n`` with power ``p_n`` into the projected gains.

    Uses ``G' = Pi'(G - p (G w)(G w)^H / (1 + p w^H G w))Pi'`` which is the
    Sherman-Morrison step written without ``1/p``, so ``p_n = 0`` leaves
    only the projection.

    Raises
    ------
    ContractViolationError
        If ``w_n`` is not inside the range of ``state.Pi``.
    """
    w_n = as_matrix(w_n, "w_n").reshape(-1)
    p_n = float(p_n)
    if not (np.isfinite(p_n) and p_n >= 0):
        raise InvalidInputError("p_n must be finite and nonnegative")
    if np.linalg.norm(state.Pi @ w_n - w_n) > 1e-8:
        raise ContractViolationError("w_n lies outside the range of the current projector")
    Pi_new = state.Pi - np.outer(w_n, w_n.conj())
    out = []
    for G in state.gains():
        g = G @ w_n
        q = float(np.real(w_n.conj() @ g))
        G_new = G - (p_n / (1.0 + p_n * q)) * np.outer(g, g.conj())
        out.append(_hermitize(Pi_new @ G_new @ Pi_new))
    return GainState(_hermitize(Pi_new), *out)


def _pin_phase(x, Q):
    """Rotate ``x`` so that ``Q x`` follows the package phase convention."""
    f = Q @ x
    k = int(np.argmax(np.abs(f)))
    mag = abs(f[k])
    if mag == 0:
        return x
    return x * (f[k].conj() / mag)


def _fixed_point(A_c, A_e, A_s, w, x0, fp_tol, max_fp, Q):
    """Iterate ``x <- C(x)^{-1} B(x) x`` in reduced coordinates.

    In the coordinates of ``range(Pi)`` the projector is the identity, so
    ``C`` is positive definite and its pseudoinverse is a plain solve.
    """
    x = _pin_phase(x0 / np.linalg.norm(x0), Q)
    it = 0
    for it in range(1, max_fp + 1):
        qc = np.real(x.conj() @ A_c @ x)
        qe = np.real(x.conj() @ A_e @ x)
        qs = np.real(x.conj() @ A_s @ x)
        Bx = (w.w_c / qc) * (A_c @ x) + (w.w_s / qs) * (A_s @ x)
        C = (w.w_c / qe) * A_e + w.w_s * np.eye(x.size)
        y = np.linalg.solve(C, Bx)
        y = _pin_phase(y / np.linalg.norm(y), Q)
        step = np.linalg.norm(y - x)
        x = y
        if step < fp_tol:
            break
    return x, it


def fixed_point_residual(A_c, A_e, A_s, Pi, w, f):
    """Relative stationarity residual ``||Pi (B(f) - C(f)) f|| / ||B(f) f||``."""
    qc = np.real(f.conj() @ A_c @ f)
    qe = np.real(f.conj() @ A_e @ f)
    qs = np.real(f.conj() @ A_s @ f)
    qi = np.real(f.conj() @ Pi @ f)
    Bf = (w.w_c / qc) * (A_c @ f) + (w.w_s / qs) * (A_s @ f)
    Cf = (w.w_c / qe) * (A_e @ f) + (w.w_s / qi) * (Pi @ f)
    return float(np.linalg.norm(Pi @ (Bf - Cf)) / max(np.linalg.norm(Bf), 1e-300))


def basis_update(ch, p, cfg, W_prev, return_info=False):
    """Sequentially rebuild the semi-unitary basis for fixed powers ``p``.

    Column ``n`` maximises its marginal contribution inside the orthogonal
    complement of columns ``1..n-1``. The fixed-point iteration starts from
    the projection of ``W_prev[:, n]``; when that projection vanishes the
    leading eigenvector of the projected composite matrix is used instead.

    Returns
    -------
    W : ndarray, shape (n_t, N_s)
    info : dict, only with ``return_info``
        ``fp_iters`` (total fixed-point iterations) and ``residuals``
        (stationarity residual per column).
    """
    n_t = ch.n_t
    N_s = cfg.N_s
    cfg.check_dims(n_t)
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != N_s or not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidInputError("p must hold N_s finite nonnegative values")
    W_prev = as_matrix(W_prev, "W_prev")
    if W_prev.shape != (n_t, N_s):
        raise InvalidInputError(f"W_prev must be {n_t}x{N_s}")
    w = cfg.w
    tol = cfg.tol

    state = GainState.initial(ch)
    Q = np.eye(n_t, dtype=complex)
    W = np.zeros((n_t, N_s), dtype=complex)
    total_fp = 0
    residuals = []
    for n in range(N_s):
        m = Q.shape[1]
        Gr = [Q.conj().T @ G @ Q for G in state.gains()]
        A_c, A_e, A_s = (np.eye(m) + p[n] * _hermitize(G) for G in Gr)
        x0 = Q.conj().T @ W_prev[:, n]
        if np.linalg.norm(x0) < 1e-12:
            M = w.w_c * Gr[0] - w.w_c * Gr[1] + w.w_s * Gr[2]
            _, V = hermitian_eig(_hermitize(M))
            x0 = V[:, 0]
        x, it = _fixed_point(A_c, A_e, A_s, w, x0, tol.fp_tol, cfg.max_fp, Q)
        total_fp += it
        if return_info:
            residuals.append(fixed_point_residual(A_c, A_e, A_s, np.eye(m), w, x))
        f = Q @ x
        f /= np.linalg.norm(f)
        W[:, n] = f
        state = gain_update(state, f, p[n])
        if n + 1 < N_s:
            # orthonormal basis of the complement of x inside span(Q)
            Q = Q @ null_space_basis(x.conj().reshape(1, -1), tol)
    if return_info:
        return W, {"fp_iters": total_fp, "residuals": residuals}
    return W


# ---------------------------------------------------------------- stage 2


def project_capped_simplex(v, P_tot):
    """Euclidean projection onto ``{p >= 0, sum(p) <= P_tot}``."""
    v = np.asarray(v, dtype=float)
    clipped = np.maximum(v, 0.0)
    if clipped.sum() <= P_tot:
        return clipped
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - P_tot
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _logdet2(K, p):
    """``log2 det(I + K diag(p))`` through the Hermitian form ``I + D K D``."""
    d = np.sqrt(np.maximum(p, 0.0))
    X = np.eye(p.size) + (d[:, None] * K) * d[None, :]
    lam = np.linalg.eigvalsh(_hermitize(X))
    return float(np.sum(np.log(np.maximum(lam, 1e-300))) / _LN2)


def _logdet2_grad(K, p):
    """``(1/ln2) diag((I + K diag(p))^{-1} K)``."""
    X = np.eye(p.size) + K * p[None, :]
    return np.real(np.diag(np.linalg.solve(X, K))) / _LN2


def surrogate_value(K_c, K_s, k_e, w, p):
    return w.w_c * _logdet2(K_c, p) + w.w_s * _logdet2(K_s, p) - w.w_c * float(k_e @ p)


def surrogate_gradient(K_c, K_s, k_e, w, p):
    return w.w_c * _logdet2_grad(K_c, p) + w.w_s * _logdet2_grad(K_s, p) - w.w_c * k_e


def dc_objective(K_c, K_e, K_s, w, p):
    """Unclamped weighted objective for basis gains ``K_i`` and powers ``p``."""
    return w.w_c * (_logdet2(K_c, p) - _logdet2(K_e, p)) + w.w_s * _logdet2(K_s, p)


def kkt_residual(grad, p, P_tot, active_tol=1e-10):
    """KKT residual of ``max phi(p)`` over ``{p >= 0, sum p <= P_tot}``.

    Returns ``(residual, nu)``. Active coordinates must share the gradient
    value ``nu`` (to ``max(1, |nu|)`` relative accuracy); inactive ones may
    not exceed it. ``nu`` is forced to zero when the budget is slack.
    """
    grad = np.asarray(grad, dtype=float)
    p = np.asarray(p, dtype=float)
    active = p > active_tol
    tight = p.sum() >= P_tot * (1.0 - 1e-9)
    if tight and np.any(active):
        nu = max(0.0, 0.5 * (grad[active].max() + grad[active].min()))
    else:
        nu = 0.0
    scale = max(1.0, abs(nu))
    r_act = np.max(np.abs(grad[active] - nu), initial=0.0) / scale
    r_inact = np.max(grad[~active] - nu, initial=0.0)
    return float(max(r_act, r_inact)), nu


def _logdet2_hess(K, p):
    """Hessian of ``log2 det(I + K diag(p))``: ``-(1/ln2) |M_ij|^2``, ``M = (I + K P)^{-1} K``."""
    X = np.eye(p.size) + K * p[None, :]
    M = np.linalg.solve(X, K)
    return -(np.abs(M) ** 2) / _LN2


def _newton_direction(K_c, K_s, w, p, g, nu, P_tot):
    """Newton step on the coordinates that are positive or want to grow.

    The budget is kept as an equality when it is tight with a positive
    multiplier. Returns ``None`` when the reduced system is singular.
    """
    free = (p > 0) | (g > nu)
    if not np.any(free):
        return None
    H = w.w_c * _logdet2_hess(K_c, p) + w.w_s * _logdet2_hess(K_s, p)
    Hf = -H[np.ix_(free, free)]
    Hf += 1e-12 * max(1.0, np.trace(Hf)) * np.eye(Hf.shape[0])
    gf = g[free]
    tight = nu > 0 and p.sum() >= P_tot * (1.0 - 1e-9)
    try:
        if tight:
            m = gf.size
            A = np.zeros((m + 1, m + 1))
            A[:m, :m] = Hf
            A[:m, m] = 1.0
            A[m, :m] = 1.0
            rhs = np.concatenate([gf, [P_tot - p.sum()]])
            step = np.linalg.solve(A, rhs)[:m]
        else:
            step = np.linalg.solve(Hf, gf)
    except np.linalg.LinAlgError:
        return None
    d = np.zeros_like(p)
    d[free] = step
    return d


def convex_subproblem(K_c, K_s, k_e, w, P_tot, p_init, tol=1e-7, max_pg=2000, return_info=False):
    """Maximise the concave power surrogate over ``{p >= 0, sum p <= P_tot}``.

    Projected gradient ascent with Barzilai-Borwein steps and a monotone
    Armijo backtrack. Every iteration first tries a projected Newton step on
    the free coordinates and keeps it when it passes the same Armijo test,
    which removes the slow tail of plain gradient steps on ill-conditioned
    instances. The surrogate never decreases from ``p_init``.

    Returns
    -------
    p : ndarray
    info : dict, only with ``return_info``
        ``iters``, ``kkt`` (final residual), ``nu`` and ``ok`` (False after a
        line-search failure or when the cap is hit above ``tol``).
    """
    K_c = _hermitize(as_matrix(K_c, "K_c"))
    K_s = _hermitize(as_matrix(K_s, "K_s"))
    k_e = np.asarray(k_e, dtype=float).reshape(-1)
    p = project_capped_simplex(np.asarray(p_init, dtype=float).reshape(-1), P_tot)

    def phi(q):
        return surrogate_value(K_c, K_s, k_e, w, q)

    def grad(q):
        return surrogate_gradient(K_c, K_s, k_e, w, q)

    f = phi(p)
    g = grad(p)
    alpha = 1.0 / max(np.max(np.abs(g)), 1e-12)
    ok = True
    res, nu = kkt_residual(g, p, P_tot)
    it = 0
    while res >= tol and it < max_pg:
        it += 1
        q = None
        d = _newton_direction(K_c, K_s, w, p, g, nu, P_tot)
        if d is not None:
            t = 1.0
            for _ in range(8):
                cand = project_capped_simplex(p + t * d, P_tot)
                if not np.any(cand != p):
                    break
                fc = phi(cand)
                if fc >= f + 1e-4 * float(g @ (cand - p)) and fc >= f:
                    q = cand
                    break
                t *= 0.5
        if q is None:
            d = project_capped_simplex(p + alpha * g, P_tot) - p
            slope = float(g @ d)
            if slope <= 0:
                # the projected step is numerically null; shrink and retry
                alpha *= 0.1
                if alpha < 1e-30:
                    ok = False
                    break
                continue
            t = 1.0
            for _ in range(60):
                q = p + t * d
                if phi(q) >= f + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                ok = False
                break
            q = project_capped_simplex(q, P_tot)
        gq = grad(q)
        s = q - p
        y = gq - g
        sy = -float(s @ y)
        alpha = float(s @ s) / sy if sy > 1e-300 else 1e10
        alpha = min(max(alpha, 1e-12), 1e12)
        p, f, g = q, phi(q), gq
        res, nu = kkt_residual(g, p, P_tot)
    ok = ok and res < tol
    if return_info:
        return p, {"iters": it, "kkt": res, "nu": nu, "ok": ok}
    return p


def _basis_gains(ch, W):
    K = []
    for H in (ch.H_c, ch.H_e, ch.H_s):
        HW = H @ W
        K.append(_hermitize(HW.conj().T @ HW))
    return K


def power_allocation(ch, W, cfg, p_prev, return_info=False):
    """SCA power allocation on a fixed basis ``W``.

    Each step linearises ``R_e`` at the current powers and maximises the
    resulting concave surrogate. Because ``R_e`` is concave in ``p`` its
    linearisation is an upper bound, so the true objective cannot drop.
    The loop stops once successive allocations differ by less than
    ``sca_tol * max(1, P_tot)``.

    Returns
    -------
    p : ndarray
    info : dict, only with ``return_info``
        ``sca_iters``, ``trace`` (true objective from ``p_prev`` on),
        ``kkt`` (last surrogate residual), ``ok``, ``k_e`` (last gradient).
    """
    W = as_matrix(W, "W")
    P = cfg.P_tot
    w = cfg.w
    K_c, K_e, K_s = _basis_gains(ch, W)
    p = project_capped_simplex(np.asarray(p_prev, dtype=float).reshape(-1), P)
    if p.size != W.shape[1]:
        raise InvalidInputError("p_prev length must match the basis width")
    trace = [dc_objective(K_c, K_e, K_s, w, p)]
    ok = True
    kkt = np.inf
    k_e = np.zeros(p.size)
    it = 0
    stop = cfg.tol.sca_tol * max(1.0, P)
    for it in range(1, cfg.max_sca + 1):
        k_e = _logdet2_grad(K_e, p)
        p_new, info = convex_subproblem(K_c, K_s, k_e, w, P, p, tol=cfg.kkt_tol, max_pg=cfg.max_pg, return_info=True)
        ok = ok and info["ok"]
        kkt = info["kkt"]
        step = np.linalg.norm(p_new - p)
        p = p_new
        trace.append(dc_objective(K_c, K_e, K_s, w, p))
        if step < stop or w.w_c == 0.0:
            # without the eavesdropper term the surrogate is exact
            break
    if return_info:
        return p, {"sca_iters": it, "trace": np.array(trace), "kkt": kkt, "ok": ok, "k_e": k_e}
    return p


# ---------------------------------------------------------------- driver


def _objective(ch, W, p, w):
    K_c, K_e, K_s = _basis_gains(ch, W)
    return dc_objective(K_c, K_e, K_s, w, p)


def solve(ch, cfg):
    """Alternate basis construction and power allocation until the objective settles.

    The basis starts from the ``N_s`` leading eigenvectors of the composite
    matrix (or ``cfg.seed_basis``) with uniform power. An outer iteration
    whose objective falls below the incumbent by more than 1e-7 is rejected
    and the loop stops at the incumbent, so ``objective_trace`` never
    decreases.
    """
    t0 = time.perf_counter()
    n_t = ch.n_t
    cfg.check_dims(n_t)
    w = cfg.w
    N_s = cfg.N_s
    if cfg.seed_basis is not None:
        W = as_matrix(cfg.seed_basis, "seed_basis")
        if W.shape != (n_t, N_s):
            raise InvalidInputError("seed_basis must be n_t x N_s")
    else:
        _, V = hermitian_eig(_hermitize(composite_matrix(ch, w)))
        W = V[:, :N_s]
    p = np.full(N_s, cfg.P_tot / N_s)
    R = _objective(ch, W, p, w)
    R_init = R
    trace = []
    fp_total = sca_total = 0
    converged = False
    inner_ok = True
    rejected = 0
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        W_new, binfo = basis_update(ch, p, cfg, W, return_info=True)
        p_new, pinfo = power_allocation(ch, W_new, cfg, p, return_info=True)
        fp_total += binfo["fp_iters"]
        sca_total += pinfo["sca_iters"]
        inner_ok = inner_ok and pinfo["ok"]
        R_new = _objective(ch, W_new, p_new, w)
        if R_new < R - 1e-7:
            rejected += 1
            trace.append(R)
            converged = True
            break
        delta = abs(R_new - R)
        W, p, R = W_new, p_new, R_new
        trace.append(R)
        if delta < cfg.tol.outer_tol:
            converged = True
            break
    if not np.isfinite(R):
        raise ArithmeticError("solver produced a non-finite objective")
    wall_ms = 1e3 * (time.perf_counter() - t0)
    return SolveResult(
        precoder=Precoder(W, p),
        objective_trace=np.array(trace),
        iters=(outer, fp_total, sca_total),
        converged=bool(converged and inner_ok),
        wall_ms=wall_ms,
        initial_objective=R_init,
        rejected_outer=rejected,
    )


def low_snr_precoder(ch, w, P_tot):
    """All power on the principal eigenvector of the composite matrix.

    Returns the zero-power precoder (flagged degenerate) when the largest
    eigenvalue is not positive.
    """
    if not P_tot > 0:
        raise InvalidInputError("P_tot must be positive")
    lam, V = hermitian_eig(_hermitize(composite_matrix(ch, w)))
    if lam[0] <= 0:
        return Precoder(V[:, :1], np.zeros(1), degenerate=True)
    return Precoder(V[:, :1], np.array([float(P_tot)]))
