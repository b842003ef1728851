"""Full-order model: 1D periodic viscous Burgers-type solver.

The solver generates the snapshot data used by the rest of the toolkit.
Space is discretized with second-order central differences on a uniform
periodic grid; the convective term is kept in the split (skew-symmetric)
form induced by the trilinear form of :func:`romkit.galerkin.convection_form`,

    N(u) = 1/2 * (u * Du + D(u*u)),

so that the discrete kinetic energy of convection is conserved exactly,
``<N(u), u>_w = 0``.  Time stepping is linearized BDF2 (backward Euler on
the first step), the same scheme the reduced models use.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class BlowUpError(RuntimeError):
    """Raised when the FOM state becomes non-finite during integration."""


class ConfigError(ValueError):
    """Raised for invalid solver or pipeline configuration."""


# ---------------------------------------------------------------------------
# grid and discrete operators


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [0, length) with rectangle-rule quadrature."""

    n_points: int
    length: float

    def __post_init__(self):
        if self.n_points < 8:
            raise ConfigError(f"grid needs at least 8 points, got {self.n_points}")
        if not self.length > 0:
            raise ConfigError(f"domain length must be positive, got {self.length}")

    @property
    def dx(self):
        return self.length / self.n_points

    @property
    def weights(self):
        return np.full(self.n_points, self.dx)

    @property
    def x(self):
        return self.dx * np.arange(self.n_points)

    def inner(self, u, v):
        """Quadrature-weighted inner product <u, v>_w = sum_k w_k u_k v_k."""
        return float(np.dot(self.weights * np.asarray(u), np.asarray(v)))

    def ddx(self, u):
        """Second-order central first derivative with periodic wrap."""
        u = np.asarray(u)
        return (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * self.dx)

    def ddx_forward(self, u):
        """One-sided gradient (u_{k+1} - u_k)/dx.

        Adjoint-consistent with the compact Laplacian:
        <d2dx2(u), v>_w = -<ddx_forward(u), ddx_forward(v)>_w exactly, which
        makes weak viscous terms built from it match the solver's diffusion.
        """
        u = np.asarray(u)
        return (np.roll(u, -1, axis=0) - u) / self.dx

    def d2dx2(self, u):
        """Standard compact (3-point) second derivative with periodic wrap."""
        u = np.asarray(u)
        return (np.roll(u, -1, axis=0) - 2.0 * u + np.roll(u, 1, axis=0)) / self.dx**2


def kinetic_energy(u, grid):
    """Discrete kinetic energy 1/2 sum_k w_k u_k^2."""
    u = np.asarray(u)
    if u.shape[0] != grid.n_points:
        raise ValueError(
            f"sample has {u.shape[0]} entries, grid has {grid.n_points} points"
        )
    return 0.5 * grid.inner(u, u)


def convection(u, grid):
    """Split-form convective term, energy-conserving: 1/2 (u*Du + D(u*u))."""
    return 0.5 * (u * grid.ddx(u) + grid.ddx(u * u))


def convection_linearized(w, u, grid):
    """Convection with transporting field w frozen: 1/2 (w*Du + D(w*u)).

    Bilinear in (w, u) and equal to :func:`convection` at w = u; satisfies
    <conv(w, u), u>_w = 0 for every w.
    """
    return 0.5 * (w * grid.ddx(u) + grid.ddx(w * u))


# ---------------------------------------------------------------------------
# configuration and snapshot container


_IC_PROFILES = ("sine", "gaussian", "zero")


@dataclass(frozen=True)
class InitialCondition:
    """Named initial profile.

    sine:     amplitude * sin(2*pi*wavenumber*x/L)
    gaussian: amplitude * exp(-((x - center*L)/(width*L))^2)
    zero:     identically zero
    """

    profile: str = "sine"
    amplitude: float = 1.0
    wavenumber: int = 1
    center: float = 0.5
    width: float = 0.1

    def __post_init__(self):
        if self.profile not in _IC_PROFILES:
            raise ConfigError(
                f"unknown initial condition {self.profile!r}; choose from {_IC_PROFILES}"
            )

    def sample(self, grid):
        x = grid.x
        if self.profile == "sine":
            return self.amplitude * np.sin(2.0 * np.pi * self.wavenumber * x / grid.length)
        if self.profile == "gaussian":
            return self.amplitude * np.exp(
                -(((x - self.center * grid.length) / (self.width * grid.length)) ** 2)
            )
        return np.zeros(grid.n_points)


def _steps_of(t, dt, name):
    k = int(round(t / dt))
    if abs(k * dt - t) > 1e-9 * max(dt, abs(t)):
        raise ConfigError(f"{name}={t} is not an integer multiple of dt={dt}")
    return k


@dataclass(frozen=True)
class FomConfig:
    """Full-order run description: grid, physics, stepping, snapshot window."""

    grid: Grid1D
    viscosity: float
    dt: float
    t_end: float
    initial_condition: InitialCondition = field(default_factory=InitialCondition)
    snapshot_window: tuple = (0.0, 0.0)
    snapshot_stride: int = 1

    def __post_init__(self):
        if not self.viscosity > 0:
            raise ConfigError(f"viscosity must be positive, got {self.viscosity}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        t_start, t_stop = self.snapshot_window
        if t_start < 0 or t_stop > self.t_end or not t_start < t_stop:
            raise ConfigError(
                f"snapshot window {self.snapshot_window} must satisfy "
                f"0 <= t_start < t_stop <= t_end={self.t_end}"
            )
        if self.snapshot_stride < 1:
            raise ConfigError(f"snapshot stride must be >= 1, got {self.snapshot_stride}")
        # these raise if the window does not land on time steps
        _steps_of(t_start, self.dt, "t_start")
        _steps_of(t_stop, self.dt, "t_stop")
        _steps_of(self.t_end, self.dt, "t_end")


def default_config(horizon_multiplier=3.0):
    """Default desk-scale configuration: N=256, L=1, nu=1e-3, dt=0.002.

    The snapshot window starts at t=0.1 with a training span of 0.33
    (166 snapshots at stride 1) scaled by ``horizon_multiplier`` so that the
    reference data covers the full evaluation horizon.
    """
    train_span = 0.33
    t_start = 0.1
    t_stop = t_start + horizon_multiplier * train_span
    return FomConfig(
        grid=Grid1D(256, 1.0),
        viscosity=1e-3,
        dt=0.002,
        t_end=t_stop,
        initial_condition=InitialCondition("sine"),
        snapshot_window=(t_start, t_stop),
        snapshot_stride=1,
    )


@dataclass(frozen=True)
class SnapshotSet:
    """Velocity samples on a uniform time grid; data is n_points x n_times."""

    grid: Grid1D
    times: np.ndarray
    data: np.ndarray
    dt_snap: float

    def __post_init__(self):
        if self.data.shape != (self.grid.n_points, self.times.shape[0]):
            raise ValueError(
                f"data shape {self.data.shape} does not match grid/time sizes "
                f"({self.grid.n_points}, {self.times.shape[0]})"
            )
        diffs = np.diff(self.times)
        if self.times.shape[0] > 1:
            if np.any(diffs <= 0) or np.max(np.abs(diffs - self.dt_snap)) > 1e-12 * max(
                1.0, abs(self.times[-1])
            ):
                raise ValueError("snapshot times must increase with constant spacing")
        if not np.isfinite(self.data).all():
            raise ValueError("snapshot data contains non-finite entries")

    @property
    def n_snapshots(self):
        return self.times.shape[0]


# ---------------------------------------------------------------------------
# time integration


def _step_matrix(grid, viscosity, w, alpha):
    """Sparse matrix alpha*I - nu*L + Conv(w) of one linearized implicit step."""
    n = grid.n_points
    dx = grid.dx
    # compact Laplacian, cyclic tridiagonal
    lap_main = np.full(n, -2.0 / dx**2)
    lap_off = np.full(n - 1, 1.0 / dx**2)
    # linearized convection 1/2 (w*Du + D(w*u)): cyclic tridiagonal, zero diagonal
    cu = (w + np.roll(w, -1)) / (4.0 * dx)      # couples u_{k+1}
    cl = -(w + np.roll(w, 1)) / (4.0 * dx)      # couples u_{k-1}
    main = alpha - viscosity * lap_main
    upper = -viscosity * lap_off + cu[:-1]
    lower = -viscosity * lap_off + cl[1:]
    mat = sp.diags(
        [main, upper, lower], [0, 1, -1], shape=(n, n), format="lil"
    )
    mat[0, n - 1] = -viscosity / dx**2 + cl[0]
    mat[n - 1, 0] = -viscosity / dx**2 + cu[-1]
    return mat.tocsc()


def run_fom(config):
    """Integrate the full-order model and collect snapshots.

    Linearized BDF2 in time (backward Euler bootstrap on step 1): the
    convective term at step n+1 is evaluated with the transporting field
    extrapolated to 2 u^n - u^{n-1}, so each step is one sparse linear solve.

    Returns a :class:`SnapshotSet` sampled on the configured window/stride.
    Deterministic for a fixed config.
    """
    grid = config.grid
    nu = config.viscosity
    dt = config.dt
    if dt > grid.dx:
        warnings.warn(
            f"dt={dt} exceeds dx={grid.dx}; accuracy may suffer", stacklevel=2
        )

    t_start, t_stop = config.snapshot_window
    k_start = _steps_of(t_start, dt, "t_start")
    k_stop = _steps_of(t_stop, dt, "t_stop")
    k_end = _steps_of(config.t_end, dt, "t_end")
    stride = config.snapshot_stride
    if (k_stop - k_start) % stride != 0:
        raise ConfigError(
            f"snapshot window of {k_stop - k_start} steps is not divisible by "
            f"stride {stride}"
        )
    capture = set(range(k_start, k_stop + 1, stride))

    u_prev = config.initial_condition.sample(grid)
    samples = []
    if 0 in capture:
        samples.append(u_prev.copy())

    u_old = None
    for k in range(1, k_end + 1):
        if u_old is None:
            # backward Euler bootstrap
            alpha = 1.0 / dt
            w = u_prev
            rhs = u_prev / dt
        else:
            alpha = 1.5 / dt
            w = 2.0 * u_prev - u_old
            rhs = (4.0 * u_prev - u_old) / (2.0 * dt)
        mat = _step_matrix(grid, nu, w, alpha)
        u_new = spla.spsolve(mat, rhs)
        if not np.isfinite(u_new).all():
            raise BlowUpError(
                f"non-finite state at step {k} (t={k * dt:.6g}); "
                "reduce dt or increase viscosity"
            )
        u_old, u_prev = u_prev, u_new
        if k in capture:
            samples.append(u_new.copy())

    if not samples:
        raise ConfigError("empty snapshot window: no samples were captured")

    dt_snap = stride * dt
    n_snap = len(samples)
    times = t_start + dt_snap * np.arange(n_snap)
    return SnapshotSet(
        grid=grid, times=times, data=np.column_stack(samples), dt_snap=dt_snap
    )
