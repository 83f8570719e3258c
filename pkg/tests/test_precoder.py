import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_complex
from mems_precoding.channel import ChannelSet, rayleigh_channel_set
from mems_precoding.errors import ContractViolationError, InvalidInputError
from mems_precoding.numerics import hermitian_eig
from mems_precoding.oracle import capacity, diagonal_surrogate_optimum, waterfilling
from mems_precoding.precoder import (
    GainState,
    OptimizerConfig,
    basis_update,
    composite_matrix,
    convex_subproblem,
    dc_objective,
    gain_update,
    kkt_residual,
    low_snr_precoder,
    power_allocation,
    project_capped_simplex,
    solve,
    surrogate_gradient,
)
from mems_precoding.rates import Weights, link_rate, weighted_objective


def _random_channels(rng, n_t, rows=None):
    rows = rows or n_t
    return ChannelSet(*(random_complex(rng, rows, n_t) for _ in range(3)))


def _orthonormal(rng, n, k):
    Q, _ = np.linalg.qr(random_complex(rng, n, k))
    return Q


def _direct_gains(H, W, p, Pi):
    """Projected gain through the full inverse ``(I + H W P W^H H^H)^{-1}``."""
    HW = H @ W
    T = np.eye(H.shape[0]) + HW @ np.diag(p) @ HW.conj().T
    return Pi @ H.conj().T @ np.linalg.solve(T, H) @ Pi


def _fixed_gains(K_c, K_e, K_s):
    """Channel set and identity basis whose basis gains are ``K_c, K_e, K_s``."""
    return ChannelSet(*(scipy.linalg.sqrtm(K).astype(complex) for K in (K_c, K_e, K_s))), np.eye(K_c.shape[0])


# ------------------------------------------------------------------ config


@pytest.mark.parametrize(
    "kw",
    [dict(N_s=0, P_tot=1.0), dict(N_s=1, P_tot=0.0), dict(N_s=1, P_tot=np.inf), dict(N_s=1, P_tot=1.0, max_fp=0)],
)
def test_config_rejects_bad_values(kw):
    with pytest.raises(InvalidInputError):
        OptimizerConfig(w=Weights(0.5, 0.5), **kw)


def test_config_rejects_too_many_streams(rng):
    ch = _random_channels(rng, 3)
    with pytest.raises(InvalidInputError):
        solve(ch, OptimizerConfig(N_s=4, P_tot=1.0, w=Weights(0.5, 0.5)))


# ------------------------------------------------------------------ gain_update


def test_gain_update_zero_power_is_projection(rng):
    ch = _random_channels(rng, 5)
    state = GainState.initial(ch)
    w_n = _orthonormal(rng, 5, 1)[:, 0]
    new = gain_update(state, w_n, 0.0)
    Pi = np.eye(5) - np.outer(w_n, w_n.conj())
    for G, Gn in zip(state.gains(), new.gains()):
        np.testing.assert_allclose(Gn, Pi @ G @ Pi, atol=1e-12)


def test_gain_update_zero_gain_stays_zero(rng):
    z = np.zeros((4, 4), dtype=complex)
    state = GainState(np.eye(4, dtype=complex), z, z, z)
    new = gain_update(state, _orthonormal(rng, 4, 1)[:, 0], 3.0)
    for G in new.gains():
        assert np.all(G == 0)


def test_gain_update_rejects_direction_outside_range(rng):
    ch = _random_channels(rng, 4)
    w1 = np.eye(4)[:, 0].astype(complex)
    state = gain_update(GainState.initial(ch), w1, 1.0)
    with pytest.raises(ContractViolationError):
        gain_update(state, w1, 1.0)
    with pytest.raises(InvalidInputError):
        gain_update(GainState.initial(ch), w1, -1.0)


@pytest.mark.parametrize("seed", range(5))
def test_gain_update_matches_direct_inverse(seed):
    rng = np.random.default_rng(seed)
    ch = _random_channels(rng, 6)
    W = _orthonormal(rng, 6, 3)
    p = rng.uniform(0.0, 5.0, 3)
    state = GainState.initial(ch)
    for n in range(3):
        state = gain_update(state, W[:, n], p[n])
        Pi = np.eye(6) - W[:, : n + 1] @ W[:, : n + 1].conj().T
        np.testing.assert_allclose(state.Pi, Pi, atol=1e-12)
        for H, G in zip((ch.H_c, ch.H_e, ch.H_s), state.gains()):
            direct = _direct_gains(H, W[:, : n + 1], p[: n + 1], Pi)
            assert np.max(np.abs(G - direct)) < 1e-8


def test_gain_state_invariants(rng):
    ch = _random_channels(rng, 5)
    state = GainState.initial(ch)
    W = _orthonormal(rng, 5, 2)
    for n in range(2):
        state = gain_update(state, W[:, n], 2.0)
    Pi = state.Pi
    assert np.max(np.abs(Pi @ Pi - Pi)) < 1e-8
    for G in state.gains():
        assert np.max(np.abs(G - G.conj().T)) < 1e-8
        assert np.linalg.eigvalsh(G).min() > -1e-8
        assert np.max(np.abs(Pi @ G @ Pi - G)) < 1e-8


# ------------------------------------------------------------------ basis_update


@pytest.mark.parametrize("seed", range(4))
def test_basis_secrecy_only_is_generalized_eigenvector(seed):
    rng = np.random.default_rng(seed)
    n_t = 4
    ch = ChannelSet(random_complex(rng, 4, n_t), random_complex(rng, 4, n_t), np.zeros((4, n_t)))
    p = np.array([2.5])
    cfg = OptimizerConfig(N_s=1, P_tot=10.0, w=Weights(1.0, 0.0))
    W = basis_update(ch, p, cfg, _orthonormal(rng, n_t, 1))
    G_c, G_e, _ = ch.grams()
    _, V = scipy.linalg.eigh(np.eye(n_t) + p[0] * G_c, np.eye(n_t) + p[0] * G_e)
    v = V[:, -1] / np.linalg.norm(V[:, -1])
    assert abs(np.vdot(v, W[:, 0])) > 1 - 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_basis_sensing_only_is_principal_eigenvector(seed):
    rng = np.random.default_rng(seed)
    ch = _random_channels(rng, 4)
    cfg = OptimizerConfig(N_s=1, P_tot=1.0, w=Weights(0.0, 1.0), max_fp=20_000)
    W = basis_update(ch, np.array([0.1]), cfg, _orthonormal(rng, 4, 1))
    _, V = hermitian_eig(ch.grams()[2])
    assert abs(np.vdot(V[:, 0], W[:, 0])) > 1 - 1e-6


def test_basis_zero_channels_full_width():
    z = np.zeros((3, 3))
    cfg = OptimizerConfig(N_s=3, P_tot=1.0, w=Weights(0.5, 0.5))
    W = basis_update(ChannelSet(z, z, z), np.ones(3), cfg, np.eye(3))
    np.testing.assert_allclose(W.conj().T @ W, np.eye(3), atol=1e-8)


def test_basis_falls_back_when_warm_start_vanishes(rng):
    ch = _random_channels(rng, 4)
    cfg = OptimizerConfig(N_s=2, P_tot=1.0, w=Weights(0.5, 0.5))
    # both warm-start columns equal: the second is annihilated by the projector
    e = np.zeros((4, 2), dtype=complex)
    e[0, :] = 1.0
    W = basis_update(ch, np.ones(2), cfg, e)
    np.testing.assert_allclose(W.conj().T @ W, np.eye(2), atol=1e-8)


def test_basis_rejects_bad_powers(rng):
    ch = _random_channels(rng, 3)
    cfg = OptimizerConfig(N_s=2, P_tot=1.0, w=Weights(0.5, 0.5))
    for p in (np.array([1.0, np.nan]), np.array([1.0, -1.0]), np.ones(3)):
        with pytest.raises(InvalidInputError):
            basis_update(ch, p, cfg, np.eye(3)[:, :2])


@given(seed=st.integers(0, 2**32 - 1), n_t=st.integers(2, 6), w_c=st.floats(0.0, 1.0))
def test_basis_orthonormal_and_stationary(seed, n_t, w_c):
    rng = np.random.default_rng(seed)
    ch = _random_channels(rng, n_t)
    N_s = int(rng.integers(1, n_t + 1))
    p = rng.uniform(0.1, 10.0, N_s)
    cfg = OptimizerConfig(N_s=N_s, P_tot=float(p.sum()), w=Weights(w_c, 1.0 - w_c), max_fp=5000)
    W, info = basis_update(ch, p, cfg, _orthonormal(rng, n_t, N_s), return_info=True)
    assert np.max(np.abs(W.conj().T @ W - np.eye(N_s))) < 1e-8
    assert max(info["residuals"]) < 1e-5


# ------------------------------------------------------------------ simplex projection


@given(v=st.lists(st.floats(-10, 10), min_size=1, max_size=8), P=st.floats(0.01, 20))
def test_capped_simplex_projection_is_optimal(v, P):
    v = np.array(v)
    x = project_capped_simplex(v, P)
    assert np.all(x >= 0) and x.sum() <= P * (1 + 1e-12)
    # variational inequality: (v - x) . (y - x) <= 0 for feasible y
    rng = np.random.default_rng(0)
    for _ in range(20):
        y = rng.dirichlet(np.ones(v.size)) * P * rng.uniform()
        assert float((v - x) @ (y - x)) <= 1e-9


# ------------------------------------------------------------------ convex_subproblem


def test_subproblem_decreasing_objective_gives_zero():
    z = np.zeros((3, 3))
    p = convex_subproblem(z, z, np.ones(3), Weights(0.5, 0.5), 5.0, np.ones(3))
    np.testing.assert_allclose(p, 0.0, atol=1e-12)


@pytest.mark.parametrize("c", [0.05, 0.1, 0.3])
def test_subproblem_scalar_interior_optimum(c):
    p = convex_subproblem(np.array([[2.0]]), np.zeros((1, 1)), np.array([c]), Weights(1.0, 0.0), 1e3, [1.0], tol=1e-10)
    assert p[0] == pytest.approx(1.0 / (c * np.log(2.0)) - 0.5, abs=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_subproblem_diagonal_matches_bisection(seed):
    rng = np.random.default_rng(seed)
    n = 4
    lc, ls = rng.uniform(0.1, 5, n), rng.uniform(0.1, 5, n)
    k_e = rng.uniform(0.0, 0.3, n)
    w = Weights.from_wc(float(rng.uniform()))
    P = float(rng.uniform(0.5, 10))
    p = convex_subproblem(np.diag(lc), np.diag(ls), k_e, w, P, np.full(n, P / n), tol=1e-10)
    ref = diagonal_surrogate_optimum(lc, ls, w.w_c * k_e, w, P)
    np.testing.assert_allclose(p, ref, atol=1e-6)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), w_c=st.floats(0, 1), P=st.floats(0.01, 1e3))
def test_subproblem_kkt(seed, n, w_c, P):
    rng = np.random.default_rng(seed)
    A, B = random_complex(rng, n, n), random_complex(rng, n, n)
    K_c, K_s = A.conj().T @ A, B.conj().T @ B
    k_e = rng.uniform(0, 1, n)
    w = Weights(w_c, 1 - w_c)
    p, info = convex_subproblem(K_c, K_s, k_e, w, P, np.zeros(n), return_info=True)
    assert np.all(p >= -1e-12) and p.sum() <= P * (1 + 1e-9)
    res, nu = kkt_residual(surrogate_gradient(K_c, K_s, k_e, w, p), p, P)
    assert info["ok"] and res < 1e-6 and nu >= 0


# ------------------------------------------------------------------ power_allocation


def test_power_single_stream_uses_full_budget():
    ch, W = _fixed_gains(np.eye(1), np.zeros((1, 1)), np.eye(1))
    p = power_allocation(ch, W, OptimizerConfig(N_s=1, P_tot=1.0, w=Weights(0.5, 0.5)), [0.2])
    assert p[0] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("P", [0.3, 2.0, 25.0])
def test_power_sensing_only_is_waterfilling(P):
    lam = np.array([3.0, 1.0, 0.4, 0.05])
    ch, W = _fixed_gains(np.zeros((4, 4)), np.zeros((4, 4)), np.diag(lam))
    p = power_allocation(ch, W, OptimizerConfig(N_s=4, P_tot=P, w=Weights(0.0, 1.0)), np.full(4, P / 4))
    np.testing.assert_allclose(p, waterfilling(lam, P), atol=1e-6)


def test_power_identical_links_give_zero_objective(rng):
    H = random_complex(rng, 4, 4)
    ch = ChannelSet(H, H, np.zeros((4, 4)))
    W = _orthonormal(rng, 4, 2)
    cfg = OptimizerConfig(N_s=2, P_tot=5.0, w=Weights(1.0, 0.0))
    p, info = power_allocation(ch, W, cfg, [2.5, 2.5], return_info=True)
    assert abs(info["trace"][-1]) < 1e-9
    assert abs(weighted_objective(ch, W * np.sqrt(p), Weights(1.0, 0.0), clamp=False)) < 1e-9


def test_power_leaves_full_budget_when_leakage_dominates():
    # stream sees a weak legitimate link and a strong eavesdropper: best power is zero
    ch, W = _fixed_gains(np.array([[0.0166]]), np.array([[0.2106]]), np.array([[0.2088]]))
    p, info = power_allocation(ch, W, OptimizerConfig(N_s=1, P_tot=1.0, w=Weights(1.0, 0.0)), [1.0], return_info=True)
    assert p[0] == pytest.approx(0.0, abs=1e-9)
    assert info["kkt"] < 1e-6


def test_convex_subproblem_moves_off_budget_when_gradient_negative():
    K = np.array([[0.0166]])
    p, info = convex_subproblem(K, np.zeros((1, 1)), np.array([0.25]), Weights(1.0, 0.0), 1.0, [1.0], return_info=True)
    assert p[0] == 0.0
    assert info["ok"]


@given(seed=st.integers(0, 2**32 - 1), n_t=st.integers(1, 5), w_c=st.floats(0, 1), snr=st.floats(-10, 30))
def test_power_monotone_and_feasible(seed, n_t, w_c, snr):
    rng = np.random.default_rng(seed)
    ch = _random_channels(rng, n_t)
    N_s = int(rng.integers(1, n_t + 1))
    P = 10 ** (snr / 10)
    W = _orthonormal(rng, n_t, N_s)
    cfg = OptimizerConfig(N_s=N_s, P_tot=P, w=Weights(w_c, 1 - w_c))
    p0 = rng.dirichlet(np.ones(N_s)) * P
    p, info = power_allocation(ch, W, cfg, p0, return_info=True)
    assert np.all(np.diff(info["trace"]) >= -1e-9)
    assert np.all(p >= -1e-12) and p.sum() <= P * (1 + 1e-9)
    assert info["kkt"] < 1e-6


# ------------------------------------------------------------------ solve


@pytest.mark.parametrize("seed", range(4))
def test_solve_sensing_only_reaches_capacity(seed):
    rng = np.random.default_rng(seed)
    ch = _random_channels(rng, 4)
    P = 10.0
    res = solve(ch, OptimizerConfig(N_s=4, P_tot=P, w=Weights(0.0, 1.0)))
    sv = np.linalg.svd(ch.H_s, compute_uv=False)
    assert res.objective_trace[-1] == pytest.approx(capacity(sv**2, P), abs=1e-4)


def test_solve_low_snr_concentrates_power(rng):
    ch = _random_channels(rng, 6)
    w = Weights(0.5, 0.5)
    res = solve(ch, OptimizerConfig(N_s=2, P_tot=1e-4, w=w))
    p = res.precoder.p
    assert p.min() / p.max() < 0.05
    _, V = hermitian_eig(composite_matrix(ch, w))
    k = int(np.argmax(p))
    assert abs(np.vdot(V[:, 0], res.precoder.W[:, k])) > 0.99


def test_solve_zero_channels():
    z = np.zeros((3, 3))
    res = solve(ChannelSet(z, z, z), OptimizerConfig(N_s=2, P_tot=1.0, w=Weights(0.5, 0.5)))
    assert res.iters[0] == 1 and res.converged
    assert res.objective_trace[-1] == 0.0


def test_solve_is_deterministic():
    ch = rayleigh_channel_set(6, 6, 6, seed=5)
    cfg = OptimizerConfig(N_s=3, P_tot=10.0, w=Weights(0.6, 0.4))
    a, b = solve(ch, cfg), solve(ch, cfg)
    assert np.array_equal(a.precoder.F, b.precoder.F)
    assert np.array_equal(a.objective_trace, b.objective_trace)


def test_solve_seed_basis_shape_checked(rng):
    ch = _random_channels(rng, 4)
    with pytest.raises(InvalidInputError):
        solve(ch, OptimizerConfig(N_s=2, P_tot=1.0, w=Weights(0.5, 0.5), seed_basis=np.eye(4)))


@given(seed=st.integers(0, 2**32 - 1), n_t=st.integers(1, 5), w_c=st.floats(0, 1), snr=st.floats(-10, 25))
def test_solve_invariants(seed, n_t, w_c, snr):
    rng = np.random.default_rng(seed)
    ch = _random_channels(rng, n_t)
    N_s = int(rng.integers(1, n_t + 1))
    P = 10 ** (snr / 10)
    w = Weights(w_c, 1 - w_c)
    res = solve(ch, OptimizerConfig(N_s=N_s, P_tot=P, w=w))
    W, p = res.precoder.W, res.precoder.p
    assert np.max(np.abs(W.conj().T @ W - np.eye(N_s))) < 1e-8
    assert np.all(p >= -1e-12) and p.sum() <= P * (1 + 1e-9)
    assert np.all(np.diff(res.objective_trace) >= -1e-7)
    assert res.objective_trace[-1] >= res.initial_objective - 1e-7
    assert np.isfinite(res.objective_trace).all()
    assert res.objective_trace[-1] == pytest.approx(weighted_objective(ch, res.precoder.F, w, clamp=False), abs=1e-9)
    # no feasible precoder senses more than the waterfilled H_s
    sv = np.linalg.svd(ch.H_s, compute_uv=False)
    assert link_rate(ch.H_s, res.precoder.F) <= capacity(sv**2, P) + 1e-8


def test_objective_trace_matches_dc_objective(rng):
    ch = _random_channels(rng, 4)
    w = Weights(0.7, 0.3)
    res = solve(ch, OptimizerConfig(N_s=2, P_tot=20.0, w=w))
    W, p = res.precoder.W, res.precoder.p
    K = [W.conj().T @ G @ W for G in ch.grams()]
    assert dc_objective(*K, w, p) == pytest.approx(res.objective_trace[-1], abs=1e-10)


# ------------------------------------------------------------------ low_snr_precoder


def test_low_snr_diagonal_example():
    ch = ChannelSet(np.diag([2.0, 1.0]), np.zeros((2, 2)), np.zeros((2, 2)))
    prec = low_snr_precoder(ch, Weights(1.0, 0.0), 0.5)
    assert abs(prec.W[0, 0]) == pytest.approx(1.0)
    assert prec.p[0] == 0.5


def test_low_snr_negative_curvature_gives_zero_power():
    ch = ChannelSet(np.eye(2), 2 * np.eye(2), np.zeros((2, 2)))
    prec = low_snr_precoder(ch, Weights(1.0, 0.0), 1.0)
    assert prec.degenerate and prec.total_power() == 0.0
    with pytest.raises(InvalidInputError):
        low_snr_precoder(ch, Weights(1.0, 0.0), 0.0)


def test_low_snr_beats_random_search(rng):
    ch = _random_channels(rng, 4)
    w = Weights(0.4, 0.6)
    M = composite_matrix(ch, w)
    f = low_snr_precoder(ch, w, 1.0).W[:, 0]
    best = float(np.real(f.conj() @ M @ f))
    X = random_complex(rng, 4, 10_000)
    X /= np.linalg.norm(X, axis=0)
    vals = np.real(np.einsum("ik,ij,jk->k", X.conj(), M, X))
    assert vals.max() <= best + 1e-9
