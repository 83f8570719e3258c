"""Eight-subspace decomposition of the transmit space and its DoF bookkeeping.

Labels follow which receivers a direction is invisible to: ``V_c`` lies in
the sensing and eavesdropper null spaces (only the legitimate receiver sees
it), ``V_cs`` is seen by the receiver and the sensing array but not the
eavesdropper, and so on. ``V_n`` is invisible to everyone and ``V_cse`` is
seen by all three.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import SUBSPACE_LABELS
from .errors import EmptyUsefulSpaceError, NumericalDegeneracyError
from .numerics import (
    DEFAULT_TOL,
    column_space_basis,
    complement_within,
    numerical_rank,
    stacked_null_space,
)
from .rates import Precoder, weighted_objective

__all__ = [
    "SubspaceDecomposition",
    "DofReport",
    "decompose",
    "dof_weights",
    "dof_table",
    "useful_labels",
    "useful_subspace",
    "quasi_optimal_precoder",
    "rank_dof",
    "empirical_dof",
    "NULL_MEMBERSHIP",
    "ORTHOGONAL_TO",
    "membership_residuals",
    "triple_row_intersection",
]

# channels whose null space contains each subspace
NULL_MEMBERSHIP = {
    "n": ("c", "s", "e"),
    "c": ("s", "e"),
    "s": ("e", "c"),
    "e": ("c", "s"),
    "cs": ("e",),
    "ce": ("s",),
    "se": ("c",),
    "cse": (),
}

# subspaces each label is constructed orthogonal to
ORTHOGONAL_TO = {
    "n": (),
    "c": ("n",),
    "s": ("n",),
    "e": ("n",),
    "cs": ("n", "c", "s"),
    "ce": ("n", "e", "c"),
    "se": ("n", "s", "e"),
    "cse": ("n", "c", "s", "e", "cs", "ce", "se"),
}


@dataclass
class SubspaceDecomposition:
    bases: dict
    tol: object = DEFAULT_TOL
    dims: dict = field(init=False)

    def __post_init__(self):
        self.dims = {label: int(self.bases[label].shape[1]) for label in SUBSPACE_LABELS}

    @property
    def n_t(self):
        return self.bases["n"].shape[0]

    def concatenated(self):
        return np.hstack([self.bases[label] for label in SUBSPACE_LABELS])


@dataclass
class DofReport:
    weights: dict
    d_max: float
    useful_dim: int


def _channel(ch, key):
    return {"c": ch.H_c, "s": ch.H_s, "e": ch.H_e}[key]


def decompose(ch, tol=DEFAULT_TOL):
    """Split ``C^{n_t}`` into the eight subspaces of the MIMO-ME-MS channel.

    Intersections of null spaces come from stacked-matrix null spaces and
    every "orthogonal complement inside" step is a null-space solve restricted
    to the larger space, so all rank decisions share one tolerance.

    Raises
    ------
    NumericalDegeneracyError
        If the subspace dimensions do not add up to ``n_t`` or their
        concatenation is rank deficient.
    """
    n = ch.n_t
    H = {"c": ch.H_c, "s": ch.H_s, "e": ch.H_e}
    null = {
        key: stacked_null_space([H[key]], n, tol) for key in ("c", "s", "e")
    }
    null_pair = {
        "se": stacked_null_space([H["s"], H["e"]], n, tol),
        "ce": stacked_null_space([H["c"], H["e"]], n, tol),
        "cs": stacked_null_space([H["c"], H["s"]], n, tol),
    }
    B = {}
    B["n"] = stacked_null_space([H["c"], H["s"], H["e"]], n, tol)
    B["c"] = complement_within(null_pair["se"], B["n"], tol)
    B["s"] = complement_within(null_pair["ce"], B["n"], tol)
    B["e"] = complement_within(null_pair["cs"], B["n"], tol)
    B["cs"] = complement_within(null["e"], np.hstack([B["n"], B["c"], B["s"]]), tol)
    B["ce"] = complement_within(null["s"], np.hstack([B["n"], B["e"], B["c"]]), tol)
    B["se"] = complement_within(null["c"], np.hstack([B["n"], B["s"], B["e"]]), tol)
    seven = np.hstack([B[label] for label in SUBSPACE_LABELS if label != "cse"])
    B["cse"] = complement_within(np.eye(n, dtype=complex), seven, tol)

    dec = SubspaceDecomposition(bases=B, tol=tol)
    total = sum(dec.dims.values())
    if total != n:
        raise NumericalDegeneracyError(f"subspace dimensions sum to {total}, expected {n}", dims=dec.dims)
    if numerical_rank(dec.concatenated(), tol) != n:
        raise NumericalDegeneracyError("concatenated subspace bases are rank deficient", dims=dec.dims)
    return dec


def dof_weights(w):
    return {
        "n": 0.0,
        "c": w.w_c,
        "s": w.w_s,
        "e": -w.w_c,
        "cs": w.w_c + w.w_s,
        "ce": 0.0,
        "se": w.w_s - w.w_c,
        "cse": w.w_s,
    }


def useful_labels(w):
    labels = ["c", "s", "cs", "cse"]
    if w.w_s > w.w_c:
        labels.append("se")
    return labels


def dof_table(dec, w):
    k = dec.dims
    d_max = (
        w.w_c * k["c"]
        + w.w_s * k["s"]
        + (w.w_c + w.w_s) * k["cs"]
        + max(0.0, w.w_s - w.w_c) * k["se"]
        + w.w_s * k["cse"]
    )
    useful_dim = sum(k[label] for label in useful_labels(w))
    return DofReport(weights=dof_weights(w), d_max=d_max, useful_dim=useful_dim)


def useful_subspace(dec, w):
    """Orthonormal basis of the sum of the strictly DoF-positive subspaces.

    ``V_se`` joins only when ``w_s > w_c``; at equality it is left out.
    """
    parts = [dec.bases[label] for label in useful_labels(w)]
    stacked = np.hstack(parts)
    if stacked.shape[1] == 0:
        return np.zeros((dec.n_t, 0), dtype=complex)
    return column_space_basis(stacked, dec.tol)


def quasi_optimal_precoder(dec, w, P_tot):
    """Uniform power over an orthonormal basis of the useful subspace."""
    if not P_tot > 0:
        raise ValueError("P_tot must be positive")
    W = useful_subspace(dec, w)
    if W.shape[1] == 0:
        raise EmptyUsefulSpaceError("useful subspace is {0}; fall back to the zero precoder")
    return Precoder(W, np.full(W.shape[1], P_tot / W.shape[1]))


def rank_dof(ch, F, w, tol=DEFAULT_TOL):
    """Weighted rank combination ``w_c rk(H_c F) - w_c rk(H_e F) + w_s rk(H_s F)``.

    This is the high-SNR slope of the objective for precoders whose nonzero
    columns all carry power proportional to the total budget.
    """
    F = np.asarray(F, dtype=complex)
    if F.size == 0 or not np.any(F):
        return 0.0
    F_norm = np.linalg.norm(F, 2)

    def rank(H, H_norm):
        return numerical_rank(H @ F, tol, scale=H_norm * F_norm)

    n_c, n_e, n_s = ch.spectral_norms()
    r_c, r_e, r_s = rank(ch.H_c, n_c), rank(ch.H_e, n_e), rank(ch.H_s, n_s)
    return w.w_c * r_c - w.w_c * r_e + w.w_s * r_s


def empirical_dof(ch, make_F, w, P_lo_db=40.0, P_hi_db=60.0):
    """Finite-difference slope of the unclamped objective in ``log2 P``.

    ``make_F(P)`` returns the precoder matrix used at linear power ``P``.
    """
    if not P_hi_db > P_lo_db:
        raise ValueError("P_hi_db must exceed P_lo_db")
    P_lo = 10.0 ** (P_lo_db / 10.0)
    P_hi = 10.0 ** (P_hi_db / 10.0)
    R_lo = weighted_objective(ch, make_F(P_lo), w, clamp=False)
    R_hi = weighted_objective(ch, make_F(P_hi), w, clamp=False)
    return (R_hi - R_lo) / (np.log2(P_hi) - np.log2(P_lo))


def membership_residuals(dec, ch):
    """``||H_i B_j|| / ||H_i||`` for every label j placed inside ``N(H_i)``."""
    out = {}
    for label, channels in NULL_MEMBERSHIP.items():
        B = dec.bases[label]
        for key in channels:
            H = _channel(ch, key)
            norm = np.linalg.norm(H, 2)
            if B.shape[1] == 0 or norm == 0:
                out[(label, key)] = 0.0
            else:
                out[(label, key)] = float(np.linalg.norm(H @ B, 2) / norm)
    return out


def triple_row_intersection(ch, tol=DEFAULT_TOL):
    """Basis of ``R(H_c) ∩ R(H_s) ∩ R(H_e)``: vectors orthogonal to all three null spaces."""
    n = ch.n_t
    nulls = [stacked_null_space([_channel(ch, key)], n, tol) for key in ("c", "s", "e")]
    stacked = np.hstack(nulls)
    if stacked.shape[1] == 0:
        return np.eye(n, dtype=complex)
    return stacked_null_space([stacked.conj().T], n, tol)
