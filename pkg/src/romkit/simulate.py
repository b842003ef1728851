"""Time integration of the reduced models and trajectory diagnostics.

All four model kinds share one linearized BDF2 integrator:

    grom   da/dt = C + A a + a^T B a
    ddf    da/dt = C + (A + Atilde) a + a^T (B + Btilde) a   (unconstrained fit)
    cddf   same form, constrained fit
    ideal  da/dt = C + A a + a^T B a + tau(t)  with tabulated exact tau

The quadratic term at step n+1 is evaluated as E^T B a^{n+1} with the
extrapolant E = 2 a^n - a^{n-1} (backward Euler with E = a^0 on step 1), so
every step is one r x r linear solve.  Trajectories start at t = 0.
"""

from dataclasses import dataclass

import numpy as np

MODEL_KINDS = ("grom", "ddf", "cddf", "ideal")


@dataclass(frozen=True)
class IdealTauTable:
    """Tabulated closure term tau(t), interpolated linearly in time.

    Integration is only meaningful up to the final tabulated time; the
    integrator stops there.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("tau table times must be strictly increasing")
        if self.values.shape[1] != self.times.shape[0]:
            raise ValueError("tau table shape does not match times")

    @classmethod
    def from_series(cls, tau, t_offset=0.0):
        return cls(times=tau.times - t_offset, values=tau.values.copy())

    def at(self, t):
        return np.array(
            [np.interp(t, self.times, self.values[i]) for i in range(self.values.shape[0])]
        )


@dataclass(frozen=True)
class RomTrajectory:
    """Integrated coefficients, r x n_times, with blow-up bookkeeping.

    blowup_index is -1 for a clean run, otherwise the index of the first
    non-finite (or unsolvable) step; entries from that index on are NaN.
    """

    times: np.ndarray
    coeffs: np.ndarray
    model_kind: str
    dt: float
    energy: np.ndarray
    blowup_index: int = -1

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.coeffs.shape[1] != self.times.shape[0]:
            raise ValueError("coefficient matrix does not match times")
        if self.blowup_index < 0 and not np.isfinite(self.coeffs).all():
            raise ValueError("non-finite coefficients without a blow-up flag")

    @property
    def blew_up(self):
        return self.blowup_index >= 0


def energy_series(traj):
    """Fluctuation energy 1/2 sum_i a_i(t)^2 for each stored step."""
    return 0.5 * np.sum(traj.coeffs**2, axis=0)


def coefficient_energy(coeffs):
    return 0.5 * np.sum(np.asarray(coeffs) ** 2, axis=0)


def integrate(
    model,
    a0,
    dt,
    t_end,
    closure=None,
    ideal=None,
    a1_hint=None,
    model_kind=None,
):
    """Integrate the reduced model with linearized BDF2.

    closure adds (Atilde, Btilde) to the operators; ideal adds interpolated
    tau(t) to the right-hand side instead.  The two are mutually exclusive.
    a1_hint, when given, replaces the backward-Euler bootstrap of step 1.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if closure is not None and ideal is not None:
        raise ValueError("closure and ideal tau are mutually exclusive")
    r = model.r
    a0 = np.asarray(a0, dtype=float)
    if a0.shape != (r,):
        raise ValueError(f"initial coefficients have shape {a0.shape}, expected ({r},)")

    a_mat = model.A
    b_ten = model.B
    if closure is not None:
        if closure.r != r:
            raise ValueError("closure dimension does not match the model")
        a_mat = a_mat + closure.A_tilde
        b_ten = b_ten + closure.B_tilde
        kind = "cddf" if closure.constrained else "ddf"
    elif ideal is not None:
        if ideal.values.shape[0] != r:
            raise ValueError("tau table dimension does not match the model")
        t_end = min(t_end, float(ideal.times[-1]))
        kind = "ideal"
    else:
        kind = "grom"
    if model_kind is not None:
        kind = model_kind

    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(dt, abs(t_end)):
        raise ValueError(f"t_end={t_end} is not an integer multiple of dt={dt}")
    times = dt * np.arange(n_steps + 1)
    coeffs = np.full((r, n_steps + 1), np.nan)
    coeffs[:, 0] = a0
    eye = np.eye(r)
    blowup = -1

    def tau_at(t):
        return ideal.at(t) if ideal is not None else 0.0

    a_prev = a0
    a_old = None
    start = 1
    if a1_hint is not None and n_steps >= 1:
        a_old, a_prev = a0, np.asarray(a1_hint, dtype=float)
        coeffs[:, 1] = a_prev
        start = 2

    for k in range(start, n_steps + 1):
        if a_old is None:
            alpha = 1.0 / dt
            extrap = a_prev
            rhs_vec = a_prev / dt + model.C + tau_at(times[k])
        else:
            alpha = 1.5 / dt
            extrap = 2.0 * a_prev - a_old
            rhs_vec = (4.0 * a_prev - a_old) / (2.0 * dt) + model.C + tau_at(times[k])
        quad = np.einsum("imn,m->in", b_ten, extrap)
        step_matrix = alpha * eye - a_mat - quad
        try:
            a_new = np.linalg.solve(step_matrix, rhs_vec)
        except np.linalg.LinAlgError:
            blowup = k
            break
        if not np.isfinite(a_new).all():
            blowup = k
            break
        coeffs[:, k] = a_new
        a_old, a_prev = a_prev, a_new

    if blowup < 0:
        energy = 0.5 * np.sum(coeffs**2, axis=0)
    else:
        energy = np.full(n_steps + 1, np.nan)
        energy[:blowup] = 0.5 * np.sum(coeffs[:, :blowup] ** 2, axis=0)
    return RomTrajectory(
        times=times,
        coeffs=coeffs,
        model_kind=kind,
        dt=dt,
        energy=energy,
        blowup_index=blowup,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Relative L2-in-time errors of a trajectory against a reference."""

    l2_coeff_error: float
    l2_energy_error: float
    max_energy_error: float
    blew_up: bool
    absolute_fallback: bool = False


def compare(traj, reference):
    """Score a trajectory against a reference coefficient series.

    The reference is interpolated linearly onto the trajectory times over
    the overlapping window.  Errors are relative L2-in-time norms; if the
    reference vanishes identically the absolute error is reported and
    flagged.  A blow-up inside the overlap yields infinite errors.
    """
    t0 = max(traj.times[0], reference.times[0])
    t1 = min(traj.times[-1], reference.times[-1])
    if not t0 < t1:
        raise ValueError(
            f"trajectory [{traj.times[0]}, {traj.times[-1]}] and reference "
            f"[{reference.times[0]}, {reference.times[-1]}] windows are disjoint"
        )
    mask = (traj.times >= t0 - 1e-12) & (traj.times <= t1 + 1e-12)
    t_eval = traj.times[mask]
    sim = traj.coeffs[:, mask]

    if traj.blew_up and not np.isfinite(sim).all():
        return ComparisonReport(np.inf, np.inf, np.inf, True)

    ref = np.vstack(
        [np.interp(t_eval, reference.times, reference.coeffs[i]) for i in range(reference.r)]
    )
    if sim.shape[0] != ref.shape[0]:
        raise ValueError("trajectory and reference dimensions differ")

    diff_norm = float(np.linalg.norm(sim - ref))
    ref_norm = float(np.linalg.norm(ref))
    e_sim = coefficient_energy(sim)
    e_ref = coefficient_energy(ref)
    de_norm = float(np.linalg.norm(e_sim - e_ref))
    e_norm = float(np.linalg.norm(e_ref))
    e_max_ref = float(np.max(np.abs(e_ref)))

    if ref_norm == 0.0 or e_norm == 0.0:
        return ComparisonReport(
            diff_norm, de_norm, float(np.max(np.abs(e_sim - e_ref))), traj.blew_up, True
        )
    return ComparisonReport(
        l2_coeff_error=diff_norm / ref_norm,
        l2_energy_error=de_norm / e_norm,
        max_energy_error=float(np.max(np.abs(e_sim - e_ref))) / e_max_ref,
        blew_up=traj.blew_up,
    )
