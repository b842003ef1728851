"""Closure-operator calibration: TSVD least squares, plain and constrained.

The unconstrained solve regularizes the ill-conditioned design matrix by
truncating singular values below tol * sigma_max and returns the minimum-norm
solution.

The constrained solve enforces, exactly by construction,

    Atilde_ii <= -epsilon,          Atilde_ij = -Atilde_ji (i != j),
    Btilde_iii = 0,
    Btilde_iij + Btilde_iji + Btilde_jii = 0,
    sum over the six permutations of distinct (i,j,k) of Btilde = 0.

Equality constraints are eliminated: the Atilde unknowns become a bounded
diagonal plus a free strict upper triangle, and the Btilde unknowns are
expressed in an orthonormal basis of the constraint null space computed on
the symmetric representative.  TSVD is applied in the reduced coordinates to
the free directions only, leaving the bounded diagonal untruncated so that
feasibility is never compromised, and the remaining box-constrained problem
is solved with an active-set iteration (finite termination; r <= 10).
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .closure import FeatureMap

MAX_CONSTRAINED_DIM = 10


@dataclass(frozen=True)
class TsvdReport:
    """Spectrum bookkeeping of one truncated-SVD solve."""

    singular_values: np.ndarray
    threshold: float
    kept_rank: int
    condition_before: float
    condition_after: float

    def __post_init__(self):
        if self.kept_rank > self.singular_values.shape[0]:
            raise ValueError("kept_rank exceeds the number of singular values")


@dataclass(frozen=True)
class ClosureOperators:
    """Calibrated closure pair (Atilde, Btilde) with training metadata.

    Btilde is stored symmetric in its last two indices (the antisymmetric
    part is unidentifiable from quadratic features).
    """

    r: int
    A_tilde: np.ndarray
    B_tilde: np.ndarray
    constrained: bool
    epsilon: float
    tol: float
    residual: float
    kept_rank: int

    def __post_init__(self):
        if self.A_tilde.shape != (self.r, self.r):
            raise ValueError("A_tilde shape does not match r")
        if self.B_tilde.shape != (self.r, self.r, self.r):
            raise ValueError("B_tilde shape does not match r")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


def pack_operators(a_tilde, b_tilde, fmap):
    """Flatten (Atilde, Btilde) into the design-column unknown vector."""
    r = fmap.r
    x = np.empty(fmap.n_columns)
    for i in range(r):
        x[i * fmap.block : i * fmap.block + r] = a_tilde[i]
        for m, n in fmap.pairs():
            c = b_tilde[i, m, n] if m == n else b_tilde[i, m, n] + b_tilde[i, n, m]
            x[fmap.quadratic_column(i, m, n)] = c
    return x


def unpack_operators(x, fmap):
    """Inverse of :func:`pack_operators`; Btilde comes out (m,n)-symmetric."""
    r = fmap.r
    a_tilde = np.empty((r, r))
    b_tilde = np.zeros((r, r, r))
    for i in range(r):
        a_tilde[i] = x[i * fmap.block : i * fmap.block + r]
        for m, n in fmap.pairs():
            c = x[fmap.quadratic_column(i, m, n)]
            if m == n:
                b_tilde[i, m, m] = c
            else:
                b_tilde[i, m, n] = b_tilde[i, n, m] = 0.5 * c
    return a_tilde, b_tilde


def objective(data, ops):
    """Exact training objective sum_j ||tau(t_j) - ansatz(a(t_j))||^2."""
    if ops.r != data.r:
        raise ValueError("operator dimension does not match regression data")
    x = pack_operators(ops.A_tilde, ops.B_tilde, data.feature_map)
    resid = data.design @ x - data.target
    return float(resid @ resid)


def _report(s, threshold, kept_rank):
    cond_before = float(s[0] / s[-1]) if s.size and s[-1] > 0 else np.inf
    cond_after = float(s[0] / s[kept_rank - 1]) if kept_rank > 0 else np.inf
    return TsvdReport(
        singular_values=s,
        threshold=threshold,
        kept_rank=kept_rank,
        condition_before=cond_before,
        condition_after=cond_after,
    )


def solve_unconstrained(data, tol):
    """Minimum-norm TSVD solution of the closure least-squares problem."""
    if not 0.0 <= tol < 1.0:
        raise ValueError(f"tol must lie in [0, 1), got {tol}")
    if data.target.size == 0:
        raise ValueError("empty regression data")
    d, t = data.design, data.target
    u, s, vt = np.linalg.svd(d, full_matrices=False)
    threshold = tol * s[0] if s.size else 0.0
    kept = (s >= threshold) & (s > 0.0) if tol > 0 else s > 0.0
    k = int(kept.sum())
    x = vt[kept].T @ ((u[:, kept].T @ t) / s[kept]) if k else np.zeros(d.shape[1])
    a_tilde, b_tilde = unpack_operators(x, data.feature_map)
    resid = d @ x - t
    ops = ClosureOperators(
        r=data.r,
        A_tilde=a_tilde,
        B_tilde=b_tilde,
        constrained=False,
        epsilon=0.0,
        tol=tol,
        residual=float(resid @ resid),
        kept_rank=k,
    )
    return ops, _report(s, threshold, k)


# ---------------------------------------------------------------------------
# constrained path


def conservation_constraint_matrix(fmap):
    """Equality constraints on the combined quadratic coefficients.

    Rows span, in the per-output stacked coefficient space of size r*q:
    c_{i,(i,i)} = 0; c_{i,(i,j)} + c_{j,(i,i)} = 0 for ordered i != j;
    c_{i,(j,k)} + c_{j,(i,k)} + c_{k,(i,j)} = 0 per unordered triple.
    Together they state that the fully symmetric part of Btilde vanishes.
    """
    r, q = fmap.r, fmap.n_pairs

    def col(i, m, n):
        return i * q + fmap.pair_index(min(m, n), max(m, n))

    rows = []
    for i in range(r):
        row = np.zeros(r * q)
        row[col(i, i, i)] = 1.0
        rows.append(row)
    for i in range(r):
        for j in range(r):
            if i == j:
                continue
            row = np.zeros(r * q)
            row[col(i, i, j)] += 1.0
            row[col(j, i, i)] += 1.0
            rows.append(row)
    for i in range(r):
        for j in range(i + 1, r):
            for k in range(j + 1, r):
                row = np.zeros(r * q)
                row[col(i, j, k)] += 1.0
                row[col(j, i, k)] += 1.0
                row[col(k, i, j)] += 1.0
                rows.append(row)
    return np.array(rows)


def reduced_basis(fmap):
    """Orthonormal map T from reduced unknowns to design columns.

    Column order: r bounded diagonal slots Atilde_ii, then the strict upper
    triangle of Atilde (antisymmetric completion), then an orthonormal basis
    of the Btilde conservation null space.  Returns (T, n_diag).
    """
    r = fmap.r
    cols = []
    for i in range(r):
        e = np.zeros(fmap.n_columns)
        e[fmap.linear_column(i, i)] = 1.0
        cols.append(e)
    n_diag = r
    for i in range(r):
        for j in range(i + 1, r):
            e = np.zeros(fmap.n_columns)
            e[fmap.linear_column(i, j)] = 1.0 / np.sqrt(2.0)
            e[fmap.linear_column(j, i)] = -1.0 / np.sqrt(2.0)
            cols.append(e)

    null = scipy.linalg.null_space(conservation_constraint_matrix(fmap))
    quad_cols = np.array(
        [fmap.quadratic_column(i, m, n) for i in range(r) for (m, n) in fmap.pairs()]
    )
    for k in range(null.shape[1]):
        e = np.zeros(fmap.n_columns)
        e[quad_cols] = null[:, k]
        cols.append(e)
    return np.column_stack(cols), n_diag


def active_set_bounded_lstsq(a_bound, a_free, b, max_iter=None):
    """Solve min ||a_bound e + a_free g - b||^2 subject to e >= 0.

    Active-set iteration in the style of Lawson-Hanson: the free block g is
    eliminated through an orthogonal projector, nonnegative variables enter
    the passive set at the steepest-descent coordinate, and infeasible trial
    points are pulled back to the nearest bound.

    Returns (e, g).
    """
    n_bound = a_bound.shape[1]
    if a_free.shape[1] > 0:
        q_free, _ = np.linalg.qr(a_free)
        proj = lambda v: v - q_free @ (q_free.T @ v)
    else:
        proj = lambda v: v
    ap = proj(a_bound) if n_bound else a_bound
    bp = proj(b)

    e = np.zeros(n_bound)
    passive = np.zeros(n_bound, dtype=bool)
    grad_scale = max(1.0, float(np.abs(ap.T @ bp).max()) if n_bound else 1.0)
    entry_tol = 1e-12 * grad_scale
    if max_iter is None:
        max_iter = 6 * max(n_bound, 1) + 10

    for _ in range(max_iter):
        w = ap.T @ (bp - ap @ e)
        inactive = ~passive
        if not inactive.any() or w[inactive].max() <= entry_tol:
            break
        j = int(np.flatnonzero(inactive)[np.argmax(w[inactive])])
        passive[j] = True
        for _ in range(n_bound + 1):
            cols = np.flatnonzero(passive)
            if cols.size == 0:  # degenerate entering step, keep the origin
                e = np.zeros(n_bound)
                break
            trial = np.zeros(n_bound)
            sol, *_ = np.linalg.lstsq(ap[:, cols], bp, rcond=None)
            trial[cols] = sol
            if trial[cols].min() > 0.0:
                e = trial
                break
            shrink = passive & (trial <= 0.0)
            alpha = np.min(e[shrink] / (e[shrink] - trial[shrink]))
            e = e + alpha * (trial - e)
            zero_tol = 1e-14 * max(1.0, float(np.abs(e).max()))
            passive &= e > zero_tol
            e[~passive] = 0.0

    if a_free.shape[1] > 0:
        g, *_ = np.linalg.lstsq(a_free, b - a_bound @ e, rcond=None)
    else:
        g = np.zeros(0)
    return e, g


def solve_constrained(data, tol, epsilon):
    """Physically constrained closure calibration.

    Pipeline: (1) eliminate the equality constraints through the reduced
    orthonormal basis, (2) transform the design matrix, (3) truncate the
    free directions at tol * sigma_max of the reduced design, (4) solve the
    remaining diagonal-bounded problem by the active-set iteration,
    (5) unpack operators that satisfy every constraint by construction.

    The feasible set is never empty (diagonal at -epsilon, all else zero).
    """
    if not 0.0 <= tol < 1.0:
        raise ValueError(f"tol must lie in [0, 1), got {tol}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    if data.target.size == 0:
        raise ValueError("empty regression data")
    r = data.r
    if r > MAX_CONSTRAINED_DIM:
        raise ValueError(
            f"constrained solve supports r <= {MAX_CONSTRAINED_DIM} "
            f"(active-set bound), got r={r}"
        )

    fmap = data.feature_map
    basis, n_diag = reduced_basis(fmap)
    d_red = data.design @ basis
    s_full = np.linalg.svd(d_red, compute_uv=False)
    sigma_max = s_full[0] if s_full.size else 0.0
    threshold = tol * sigma_max

    d_diag = d_red[:, :n_diag]
    d_free = d_red[:, n_diag:]
    u, s, vt = np.linalg.svd(d_free, full_matrices=False)
    kept = (s >= threshold) & (s > 0.0) if tol > 0 else s > 0.0
    a_free = u[:, kept] * s[kept]
    v_kept = vt[kept].T

    # substitute d = -epsilon - e with e >= 0
    b_shift = data.target + epsilon * d_diag.sum(axis=1)
    e, g = active_set_bounded_lstsq(-d_diag, a_free, b_shift)
    f = v_kept @ g if g.size else np.zeros(d_free.shape[1])
    x = basis @ np.concatenate([-epsilon - e, f])

    a_tilde, b_tilde = unpack_operators(x, fmap)
    # rebuild the diagonal from the bounded variables; the bound then holds
    # exactly rather than to roundoff
    for i in range(r):
        a_tilde[i, i] = -epsilon - e[i]

    resid = data.design @ pack_operators(a_tilde, b_tilde, fmap) - data.target
    ops = ClosureOperators(
        r=r,
        A_tilde=a_tilde,
        B_tilde=b_tilde,
        constrained=True,
        epsilon=epsilon,
        tol=tol,
        residual=float(resid @ resid),
        kept_rank=int(kept.sum()),
    )
    return ops, _report(s_full, threshold, int(kept.sum()))


def constrained_kkt_residuals(data, ops):
    """KKT residuals of the truncated box-constrained problem at a solution.

    Recomputes the reduction and truncation from scratch (independently of
    the solver's internal state) and reports the largest gradient magnitude
    over free directions and the smallest active-bound multiplier.
    """
    fmap = data.feature_map
    basis, n_diag = reduced_basis(fmap)
    d_red = data.design @ basis
    s_full = np.linalg.svd(d_red, compute_uv=False)
    threshold = ops.tol * (s_full[0] if s_full.size else 0.0)
    d_diag = d_red[:, :n_diag]
    d_free = d_red[:, n_diag:]
    u, s, vt = np.linalg.svd(d_free, full_matrices=False)
    kept = (s >= threshold) & (s > 0.0) if ops.tol > 0 else s > 0.0

    y = basis.T @ pack_operators(ops.A_tilde, ops.B_tilde, fmap)
    d_vars, f_vars = y[:n_diag], y[n_diag:]
    resid = d_diag @ d_vars + d_free @ f_vars - data.target

    grad_d = d_diag.T @ resid
    grad_g = (u[:, kept] * s[kept]).T @ resid
    active = np.abs(d_vars + ops.epsilon) <= 1e-12 * max(1.0, ops.epsilon)
    grad_free = float(np.abs(grad_d[~active]).max()) if (~active).any() else 0.0
    if grad_g.size:
        grad_free = max(grad_free, float(np.abs(grad_g).max()))
    multipliers = -grad_d[active]
    return {
        "gradient": grad_free,
        "multiplier_min": float(multipliers.min()) if multipliers.size else 0.0,
        "active": active,
    }
