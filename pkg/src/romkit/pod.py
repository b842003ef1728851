"""POD basis construction (method of snapshots) and the projection filter."""

from dataclasses import dataclass

import numpy as np

# eigenvalues below RANK_CUTOFF * lambda_1 do not yield usable modes
RANK_CUTOFF = 1e-14


@dataclass(frozen=True)
class PodBasis:
    """Centered POD basis with quadrature-weighted orthonormal modes.

    mean_mode is the snapshot average; modes holds the fluctuation modes
    column-wise (n_points x r_max); eigenvalues are the non-increasing
    fluctuation energies lambda_i of the snapshot Gram matrix.
    """

    grid: object
    mean_mode: np.ndarray
    modes: np.ndarray
    eigenvalues: np.ndarray
    r_max: int

    def __post_init__(self):
        if self.modes.shape != (self.grid.n_points, self.r_max):
            raise ValueError("mode matrix shape does not match grid / r_max")
        if self.eigenvalues.shape != (self.r_max,):
            raise ValueError("eigenvalue vector length does not match r_max")
        if np.any(np.diff(self.eigenvalues) > 1e-12 * self.eigenvalues[0]):
            raise ValueError("eigenvalues must be non-increasing")


@dataclass(frozen=True)
class CoefficientSeries:
    """Time series of ROM coefficients a(t_j), stored r x n_times."""

    times: np.ndarray
    coeffs: np.ndarray
    r: int

    def __post_init__(self):
        if self.coeffs.shape != (self.r, self.times.shape[0]):
            raise ValueError("coefficient matrix shape does not match times / r")
        if not np.isfinite(self.coeffs).all():
            raise ValueError("coefficient series contains non-finite entries")

    @property
    def n_times(self):
        return self.times.shape[0]


def build_pod(snaps, r_max):
    """Build the centered POD basis from a snapshot set.

    Method of snapshots: subtract the snapshot average, form the M x M
    weighted Gram matrix G_ij = <u'_i, u'_j>_w / M, and solve its symmetric
    eigenproblem.  Modes are normalized to <phi_i, phi_i>_w = 1 and each
    mode's sign is fixed so that its entry of largest magnitude is positive.

    Raises ValueError if r_max exceeds the numerical rank of the centered
    data (eigenvalues below 1e-14 * lambda_1 are unusable) or if the
    snapshots have zero fluctuation energy.
    """
    data = snaps.data
    n, m = data.shape
    if m < 2:
        raise ValueError(f"need at least 2 snapshots, got {m}")
    if not 1 <= r_max <= min(n, m):
        raise ValueError(f"r_max={r_max} must lie in [1, min(N, M)={min(n, m)}]")

    mean = data.mean(axis=1)
    fluct = data - mean[:, None]
    w = snaps.grid.weights
    gram = (fluct.T * w) @ fluct / m

    evals, evecs = np.linalg.eigh(gram)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]

    if evals[0] <= 0.0 or not np.isfinite(evals[0]):
        raise ValueError("zero fluctuation energy: all snapshots are identical")
    rank = int(np.sum(evals >= RANK_CUTOFF * evals[0]))
    if r_max > rank:
        raise ValueError(
            f"r_max={r_max} exceeds the numerical rank; achievable rank is {rank}"
        )

    evals = evals[:r_max].copy()
    modes = fluct @ evecs[:, :r_max] / np.sqrt(m * evals)
    # sign convention: largest-magnitude entry of each mode is positive
    for i in range(r_max):
        k = int(np.argmax(np.abs(modes[:, i])))
        if modes[k, i] < 0:
            modes[:, i] = -modes[:, i]

    return PodBasis(
        grid=snaps.grid, mean_mode=mean, modes=modes, eigenvalues=evals, r_max=r_max
    )


def project(basis, u, r):
    """Coefficients of u in the first r modes: a_i = <u - mean, phi_i>_w."""
    if r > basis.r_max:
        raise ValueError(f"r={r} exceeds basis rank r_max={basis.r_max}")
    u = np.asarray(u)
    if u.shape[0] != basis.grid.n_points:
        raise ValueError("sample length does not match grid")
    weighted = basis.grid.weights * (u - basis.mean_mode)
    return basis.modes[:, :r].T @ weighted


def reconstruct(basis, a):
    """Velocity field mean + sum_i a_i phi_i for a length-r coefficient vector."""
    a = np.asarray(a)
    r = a.shape[0]
    if r > basis.r_max:
        raise ValueError(f"coefficient vector length {r} exceeds r_max={basis.r_max}")
    return basis.mean_mode + basis.modes[:, :r] @ a


def project_series(basis, snaps, r):
    """Project every snapshot column; returns a CoefficientSeries."""
    if r > basis.r_max:
        raise ValueError(f"r={r} exceeds basis rank r_max={basis.r_max}")
    weighted = basis.grid.weights[:, None] * (snaps.data - basis.mean_mode[:, None])
    coeffs = basis.modes[:, :r].T @ weighted
    return CoefficientSeries(times=snaps.times.copy(), coeffs=coeffs, r=r)
