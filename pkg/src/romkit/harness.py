"""End-to-end experiment orchestration: reproductive and predictive sweeps.

A sweep builds the POD basis from the training window of a snapshot set,
extracts the closure target for every (r, m) pair, calibrates plain and
constrained closures over the (tol, epsilon) grids, integrates all four
model kinds, and scores them against the projected full-order coefficients.
The training window is the leading 1/horizon_multiplier of the snapshot
span; trajectories are integrated over the whole span (ideal runs stop at
the training-window end, where their tau table ends).

Trajectory time is re-based so the training window starts at t = 0.
"""

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closure import build_regression, compute_tau_commutator, select_samples
from .fom import ConfigError, SnapshotSet, run_fom
from .galerkin import assemble_galerkin
from .pod import CoefficientSeries, build_pod, project_series
from .regression import solve_constrained, solve_unconstrained
from .simulate import IdealTauTable, compare, integrate

MODEL_KINDS = ("grom", "ddf", "cddf", "ideal")

REPORT_COLUMNS = (
    "scheme",
    "r",
    "m",
    "tol",
    "epsilon",
    "model_kind",
    "training_residual",
    "kept_rank",
    "l2_energy_error",
    "l2_energy_error_train",
    "l2_coeff_error",
    "blowup_index",
    "error",
    "wall_time_s",
)


@dataclass(frozen=True)
class SelectionSpec:
    """Declarative sample-selection scheme for a sweep."""

    scheme: str = "full"
    ell: int = None
    fraction: float = None

    def label(self):
        if self.scheme == "equally_spaced":
            return f"equally_spaced({self.ell})"
        if self.scheme == "first_fraction":
            return f"first_fraction({self.fraction})"
        return self.scheme

    def build(self, n_samples):
        return select_samples(
            n_samples, self.scheme, ell=self.ell, fraction=self.fraction
        )


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid of sweep configurations around one full-order run."""

    fom: object
    r_values: tuple = (4,)
    m_offsets: tuple = (1, 3)
    tol_grid: tuple = (7e-3, 1.2e-2, 1e-1)
    epsilon_grid: tuple = (0.0, 7.1e-10, 8.5e-3)
    selection_schemes: tuple = (SelectionSpec("full"),)
    horizon_multiplier: float = 3.0
    basis_rank: int = 10
    seed: int = 2024
    max_workers: int = 4

    def __post_init__(self):
        if not (self.r_values and self.m_offsets and self.tol_grid and self.epsilon_grid):
            raise ConfigError("sweep grids must be nonempty")
        if self.horizon_multiplier < 1.0:
            raise ConfigError("horizon_multiplier must be >= 1")
        for r in self.r_values:
            for off in self.m_offsets:
                if r + off > self.basis_rank:
                    raise ConfigError(
                        f"r+offset={r + off} exceeds basis rank {self.basis_rank}"
                    )

    def configurations(self, schemes=None):
        for spec in schemes if schemes is not None else self.selection_schemes:
            for r in self.r_values:
                for off in self.m_offsets:
                    for tol in self.tol_grid:
                        for eps in self.epsilon_grid:
                            yield (spec, r, r + off, tol, eps)


@dataclass
class RunRecord:
    scheme: str
    r: int
    m: int
    tol: float
    epsilon: float
    model_kind: str
    training_residual: float = np.nan
    kept_rank: int = -1
    l2_energy_error: float = np.nan
    l2_energy_error_train: float = np.nan
    l2_coeff_error: float = np.nan
    blowup_index: int = -1
    error: str = ""
    wall_time_s: float = 0.0


@dataclass
class ExperimentReport:
    records: list
    winners: dict
    seed: int
    n_train: int
    n_reference: int
    mode: str = "reproductive"
    metadata: dict = field(default_factory=dict)


class _Pipeline:
    """Shared state of one sweep: snapshots, basis, per-(r, m) caches."""

    def __init__(self, plan, snapshots=None):
        self.plan = plan
        self.snaps = snapshots if snapshots is not None else run_fom(plan.fom)
        m_total = self.snaps.n_snapshots
        span = self.snaps.times[-1] - self.snaps.times[0]
        n_train = int(round((m_total - 1) / plan.horizon_multiplier)) + 1
        if n_train < 2:
            raise ConfigError("training window must contain at least 2 snapshots")
        self.n_train = n_train
        self.t0 = self.snaps.times[0]
        self.train_span = self.snaps.times[n_train - 1] - self.t0
        self.full_span = span
        self.dt = self.snaps.dt_snap

        self.train_snaps = SnapshotSet(
            grid=self.snaps.grid,
            times=self.snaps.times[:n_train].copy(),
            data=self.snaps.data[:, :n_train].copy(),
            dt_snap=self.snaps.dt_snap,
        )
        self.basis = build_pod(self.train_snaps, plan.basis_rank)
        self._series = {}
        self._models = {}
        self._taus = {}
        self._references = {}

    def series(self, r, training=True):
        key = (r, training)
        if key not in self._series:
            snaps = self.train_snaps if training else self.snaps
            raw = project_series(self.basis, snaps, r)
            self._series[key] = CoefficientSeries(
                times=raw.times - self.t0, coeffs=raw.coeffs, r=r
            )
        return self._series[key]

    def model(self, r):
        if r not in self._models:
            self._models[r] = assemble_galerkin(
                self.basis, r, self.plan.fom.viscosity
            )
        return self._models[r]

    def tau(self, r, m):
        if (r, m) not in self._taus:
            self._taus[(r, m)] = compute_tau_commutator(
                self.series(m), self.series(r), self.model(m), self.model(r)
            )
        return self._taus[(r, m)]

    def reference(self, r):
        return self.series(r, training=False)

    def initial_coefficients(self, r):
        return self.series(r).coeffs[:, 0].copy()


def _score(pipeline, traj, r):
    reference = pipeline.reference(r)
    rep_full = compare(traj, reference)
    train_ref = pipeline.series(r)
    rep_train = compare(traj, train_ref)
    return rep_full, rep_train


def _run_configuration(pipeline, config):
    """All four model kinds for one (scheme, r, m, tol, epsilon) cell."""
    spec, r, m, tol, eps = config
    plan = pipeline.plan
    records = []
    base = dict(scheme=spec.label(), r=r, m=m, tol=tol, epsilon=eps)
    model = pipeline.model(r)
    a0 = pipeline.initial_coefficients(r)
    t_end = plan.horizon_multiplier * pipeline.train_span
    tau = pipeline.tau(r, m)
    series_train = pipeline.series(r)

    def scored_record(kind, **kwargs):
        t_start = time.perf_counter()
        rec = RunRecord(model_kind=kind, **base)
        try:
            traj = integrate(model, a0, pipeline.dt, t_end, **kwargs)
            rep_full, rep_train = _score(pipeline, traj, r)
            rec.l2_energy_error = rep_full.l2_energy_error
            rec.l2_energy_error_train = rep_train.l2_energy_error
            rec.l2_coeff_error = rep_full.l2_coeff_error
            rec.blowup_index = traj.blowup_index
        except Exception as exc:  # recorded, never aborts the sweep
            rec.error = f"{type(exc).__name__}: {exc}"
        rec.wall_time_s = time.perf_counter() - t_start
        return rec

    records.append(scored_record("grom"))
    records.append(
        scored_record("ideal", ideal=IdealTauTable(tau.times, tau.values))
    )

    try:
        selection = spec.build(series_train.n_times)
        data = build_regression(series_train, tau, selection)
    except Exception as exc:
        for kind in ("ddf", "cddf"):
            rec = RunRecord(model_kind=kind, **base)
            rec.error = f"{type(exc).__name__}: {exc}"
            records.append(rec)
        return records

    for kind in ("ddf", "cddf"):
        t_start = time.perf_counter()
        rec = RunRecord(model_kind=kind, **base)
        try:
            if kind == "ddf":
                ops, report = solve_unconstrained(data, tol)
            else:
                ops, report = solve_constrained(data, tol, eps)
            rec.training_residual = ops.residual
            rec.kept_rank = report.kept_rank
            traj = integrate(model, a0, pipeline.dt, t_end, closure=ops)
            rep_full, rep_train = _score(pipeline, traj, r)
            rec.l2_energy_error = rep_full.l2_energy_error
            rec.l2_energy_error_train = rep_train.l2_energy_error
            rec.l2_coeff_error = rep_full.l2_coeff_error
            rec.blowup_index = traj.blowup_index
        except Exception as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        rec.wall_time_s = time.perf_counter() - t_start
        records.append(rec)
    return records


def _winners(records):
    """Minimum-energy-error record per (r, scheme, kind); ties prefer the
    smaller kept rank, then the smaller epsilon."""
    winners = {}
    for rec in records:
        if rec.error or not np.isfinite(rec.l2_energy_error):
            continue
        key = (rec.r, rec.scheme, rec.model_kind)
        rank = rec.kept_rank if rec.kept_rank >= 0 else 0
        candidate = (rec.l2_energy_error, rank, rec.epsilon)
        if key not in winners or candidate < winners[key][0]:
            winners[key] = (candidate, rec)
    return {key: rec for key, (_, rec) in winners.items()}


def _run_sweep(plan, schemes, snapshots, mode):
    pipeline = _Pipeline(plan, snapshots)
    configs = list(plan.configurations(schemes))
    # warm the shared caches sequentially; the sweep itself is embarrassingly
    # parallel over configurations
    for r in plan.r_values:
        pipeline.model(r)
        pipeline.reference(r)
        for off in plan.m_offsets:
            pipeline.tau(r, r + off)

    records = []
    if plan.max_workers > 1:
        with ThreadPoolExecutor(max_workers=plan.max_workers) as pool:
            for recs in pool.map(lambda c: _run_configuration(pipeline, c), configs):
                records.extend(recs)
    else:
        for config in configs:
            records.extend(_run_configuration(pipeline, config))

    return ExperimentReport(
        records=records,
        winners=_winners(records),
        seed=plan.seed,
        n_train=pipeline.n_train,
        n_reference=pipeline.snaps.n_snapshots,
        mode=mode,
        metadata={
            "train_span": pipeline.train_span,
            "full_span": pipeline.full_span,
            "basis_rank": plan.basis_rank,
            "dt_snap": pipeline.dt,
        },
    )


def run_reproductive(plan, snapshots=None):
    """Full-data sweep: closures trained on every training snapshot."""
    schemes = (SelectionSpec("full"),)
    return _run_sweep(plan, schemes, snapshots, "reproductive")


def run_predictive(plan, snapshots=None):
    """Cross-validation sweep: closures trained on subsampled snapshots."""
    schemes = tuple(plan.selection_schemes)
    if not any(spec.scheme != "full" for spec in schemes):
        raise ConfigError("predictive sweep needs at least one non-full scheme")
    return _run_sweep(plan, schemes, snapshots, "predictive")


def report_to_csv(report):
    """Render a report as CSV text with the documented column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for rec in report.records:
        writer.writerow(
            [
                rec.scheme,
                rec.r,
                rec.m,
                format(rec.tol, ".17g"),
                format(rec.epsilon, ".17g"),
                rec.model_kind,
                format(rec.training_residual, ".17g"),
                rec.kept_rank,
                format(rec.l2_energy_error, ".17g"),
                format(rec.l2_energy_error_train, ".17g"),
                format(rec.l2_coeff_error, ".17g"),
                rec.blowup_index,
                rec.error,
                format(rec.wall_time_s, ".6g"),
            ]
        )
    return buf.getvalue()


def report_summary(report):
    """Plain-text summary: winner per (r, scheme, model kind)."""
    lines = [
        f"mode={report.mode} seed={report.seed} "
        f"n_train={report.n_train} n_reference={report.n_reference}",
        f"records={len(report.records)}",
    ]
    for key in sorted(report.winners):
        r, scheme, kind = key
        rec = report.winners[key]
        lines.append(
            f"winner r={r} scheme={scheme} kind={kind}: "
            f"m={rec.m} tol={rec.tol:g} epsilon={rec.epsilon:g} "
            f"energy_error={rec.l2_energy_error:.6g} blowup={rec.blowup_index}"
        )
    return "\n".join(lines) + "\n"
