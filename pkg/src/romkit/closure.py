"""Closure-term extraction and regression-problem assembly.

The closure target tau is the commutator between the reduced dynamics
evaluated with m modes and with r modes (m >= r): for each retained
component i <= r,

    tau_i(t_j) = rhs_m(a_m(t_j))_i - rhs_r(a_r(t_j))_i.

The linear (viscous and mean-advection) parts of the two models cancel for
the shared leading-r coefficients; what survives is the projected commutator
of the convective terms plus the linear contribution of modes r+1..m.  The
implementation computes the full difference, so that cancellation is a
checked property rather than an assumption.

The ansatz tau ~ Atilde a + a^T Btilde a is linear in the unknown operator
entries; :func:`build_regression` assembles the corresponding least-squares
design matrix with quadratic features symmetrized in (m, n).
"""

from dataclasses import dataclass

import numpy as np

from .galerkin import rhs_series

_TAU_METHODS = ("commutator", "residual")
_SCHEMES = ("full", "equally_spaced", "first_fraction", "random_subset")


@dataclass(frozen=True)
class TauSeries:
    """Closure-target time series, r x n_times."""

    times: np.ndarray
    values: np.ndarray
    method: str
    r: int
    m: int

    def __post_init__(self):
        if self.method not in _TAU_METHODS:
            raise ValueError(f"unknown tau method {self.method!r}")
        if self.values.shape != (self.r, self.times.shape[0]):
            raise ValueError("tau matrix shape does not match times / r")
        if self.method == "commutator" and not self.r <= self.m:
            raise ValueError(f"commutator tau needs r <= m, got r={self.r}, m={self.m}")
        if not np.isfinite(self.values).all():
            raise ValueError("tau series contains non-finite values")


@dataclass(frozen=True)
class SampleSelection:
    """Strictly increasing 0-based snapshot indices plus the scheme label."""

    indices: np.ndarray
    scheme: str

    def __post_init__(self):
        if self.indices.size == 0:
            raise ValueError("sample selection is empty")
        if np.any(np.diff(self.indices) <= 0):
            raise ValueError("selection indices must be strictly increasing")
        if self.indices[0] < 0:
            raise ValueError("selection indices must be non-negative")


def select_samples(n_samples, scheme, ell=None, fraction=None, size=None, seed=None):
    """Build a snapshot subsample for closure training.

    scheme 'full'            -> every index
    scheme 'equally_spaced'  -> indices 0, ell, 2*ell, ... (ceil(M/ell) samples)
    scheme 'first_fraction'  -> the first ceil(fraction*M) indices
    scheme 'random_subset'   -> seeded sorted random subset (off by default
                                everywhere; kept for experimentation)
    """
    if n_samples < 1:
        raise ValueError(f"need at least one sample, got {n_samples}")
    if scheme == "full":
        idx = np.arange(n_samples)
        label = "full"
    elif scheme == "equally_spaced":
        if ell is None or ell < 1:
            raise ValueError(f"equally_spaced needs a stride ell >= 1, got {ell}")
        idx = np.arange(0, n_samples, ell)
        label = f"equally_spaced({ell})"
    elif scheme == "first_fraction":
        if fraction is None or not 0.0 < fraction <= 1.0:
            raise ValueError(f"first_fraction needs 0 < f <= 1, got {fraction}")
        count = int(np.ceil(fraction * n_samples))
        idx = np.arange(count)
        label = f"first_fraction({fraction})"
    elif scheme == "random_subset":
        if size is None or not 1 <= size <= n_samples:
            raise ValueError(f"random_subset needs 1 <= size <= M, got {size}")
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(n_samples, size=size, replace=False))
        label = f"random_subset({size},seed={seed})"
    else:
        raise ValueError(f"unknown selection scheme {scheme!r}")
    return SampleSelection(indices=idx, scheme=label)


def _check_shared_times(ta, tb, what):
    if ta.shape != tb.shape or np.max(np.abs(ta - tb)) > 1e-12 * max(1.0, abs(ta[-1])):
        raise ValueError(f"{what} must share the same time grid")


def compute_tau_commutator(series_m, series_r, model_m, model_r):
    """Exact closure target from the m-mode vs r-mode dynamics commutator.

    Evaluates the full right-hand-side difference restricted to the leading
    r components; with nested series/operators this equals the projected
    convective commutator plus the linear tail of modes r+1..m.
    """
    r, m = series_r.r, series_m.r
    if m < r:
        raise ValueError(f"need m >= r, got m={m}, r={r}")
    if model_m.r != m or model_r.r != r:
        raise ValueError("model dimensions must match the coefficient series")
    _check_shared_times(series_m.times, series_r.times, "coefficient series")

    full = rhs_series(model_m, series_m.coeffs)[:r]
    reduced = rhs_series(model_r, series_r.coeffs)
    return TauSeries(
        times=series_r.times.copy(),
        values=full - reduced,
        method="commutator",
        r=r,
        m=m,
    )


def compute_tau_residual(series_r, model):
    """Alternative target: da/dt - rhs(a) with finite-difference da/dt.

    Second-order central differences inside the window, one-sided
    second-order at the two ends.  Not used by the acceptance experiments.
    """
    if series_r.n_times < 3:
        raise ValueError("residual tau needs at least 3 samples")
    if model.r != series_r.r:
        raise ValueError("model dimension does not match the series")
    a = series_r.coeffs
    dt = series_r.times[1] - series_r.times[0]
    adot = np.empty_like(a)
    adot[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * dt)
    adot[:, 0] = (-3.0 * a[:, 0] + 4.0 * a[:, 1] - a[:, 2]) / (2.0 * dt)
    adot[:, -1] = (3.0 * a[:, -1] - 4.0 * a[:, -2] + a[:, -3]) / (2.0 * dt)
    return TauSeries(
        times=series_r.times.copy(),
        values=adot - rhs_series(model, a),
        method="residual",
        r=series_r.r,
        m=series_r.r,
    )


# ---------------------------------------------------------------------------
# regression design


@dataclass(frozen=True)
class FeatureMap:
    """Index bookkeeping between operator entries and design-matrix columns.

    Unknowns are grouped per output component i, each block holding the r
    linear slots Atilde[i, m] followed by the q = r(r+1)/2 quadratic slots.
    The quadratic slot (i, m<=n) carries the combined coefficient of the
    symmetrized tensor: c = Btilde[i,m,m] for m == n and
    c = Btilde[i,m,n] + Btilde[i,n,m] for m < n, with feature a_m * a_n.
    """

    r: int

    @property
    def n_pairs(self):
        return self.r * (self.r + 1) // 2

    @property
    def block(self):
        return self.r + self.n_pairs

    @property
    def n_columns(self):
        return self.r * self.block

    def pair_index(self, m, n):
        if not 0 <= m <= n < self.r:
            raise ValueError(f"need 0 <= m <= n < r, got ({m}, {n})")
        return m * self.r - m * (m - 1) // 2 + (n - m)

    def linear_column(self, i, m):
        return i * self.block + m

    def quadratic_column(self, i, m, n):
        return i * self.block + self.r + self.pair_index(m, n)

    def pairs(self):
        return [(m, n) for m in range(self.r) for n in range(m, self.r)]


@dataclass(frozen=True)
class RegressionData:
    """Stacked least-squares problem design @ x ~ target for the ansatz."""

    design: np.ndarray
    target: np.ndarray
    feature_map: FeatureMap
    sample_indices: np.ndarray
    r: int

    def __post_init__(self):
        n_rows = self.sample_indices.shape[0] * self.r
        if self.design.shape != (n_rows, self.feature_map.n_columns):
            raise ValueError("design matrix shape does not match selection / r")
        if self.target.shape != (n_rows,):
            raise ValueError("target length does not match design row count")


def feature_vector(a, fmap):
    """Linear-plus-quadratic feature vector [a_m, a_m a_n (m<=n)] of one sample."""
    a = np.asarray(a)
    quads = np.array([a[m] * a[n] for (m, n) in fmap.pairs()])
    return np.concatenate([a, quads])


def build_regression(series_r, tau, selection):
    """Assemble the design matrix and stacked targets for selected samples.

    One row per (selected sample j, output component i); rows for different
    i share the feature values but occupy disjoint unknown columns.
    """
    _check_shared_times(series_r.times, tau.times, "coefficients and tau")
    if tau.r != series_r.r:
        raise ValueError("tau and coefficient series dimensions differ")
    idx = selection.indices
    if idx[-1] >= series_r.n_times:
        raise ValueError(
            f"selection index {idx[-1]} out of range for {series_r.n_times} samples"
        )
    r = series_r.r
    fmap = FeatureMap(r)
    n_sel = idx.shape[0]

    design = np.zeros((n_sel * r, fmap.n_columns))
    target = np.empty(n_sel * r)
    for jj, j in enumerate(idx):
        feats = feature_vector(series_r.coeffs[:, j], fmap)
        for i in range(r):
            row = jj * r + i
            design[row, i * fmap.block : (i + 1) * fmap.block] = feats
            target[row] = tau.values[i, j]
    return RegressionData(
        design=design,
        target=target,
        feature_map=fmap,
        sample_indices=idx.copy(),
        r=r,
    )
