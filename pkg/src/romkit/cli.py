"""Command-line entry point: romkit generate|train|simulate|report --config.

Exit codes: 0 success, 1 validation error, 2 numerical failure (blow-up).
The final stdout line is machine-parsable:
``romkit-status: stage=<stage> code=<int> ...``.
"""

import argparse
import os
import sys

import numpy as np

from . import io as romio
from .config import load_config
from .closure import build_regression, compute_tau_commutator, select_samples
from .fom import BlowUpError, ConfigError, run_fom
from .galerkin import assemble_galerkin
from .harness import report_summary, report_to_csv, run_predictive, run_reproductive
from .pod import CoefficientSeries, build_pod, project_series
from .regression import solve_constrained, solve_unconstrained
from .simulate import IdealTauTable, integrate


def _out(config, name):
    directory = config["output.dir"]
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, name)


def cmd_generate(config):
    snaps = run_fom(config.fom_config())
    path = _out(config, "snapshots.txt")
    romio.write_snapshots(path, snaps)
    return [path]


def _rebased_series(basis, snaps, r):
    raw = project_series(basis, snaps, r)
    return CoefficientSeries(times=raw.times - raw.times[0], coeffs=raw.coeffs, r=r)


def cmd_train(config):
    """POD basis, Galerkin operators, closure target, and both closure fits.

    The whole snapshot file is the training window for this stage; sweeps
    with train/test splits live in the report stage.
    """
    snaps = romio.read_snapshots(_out(config, "snapshots.txt"))
    r = config["train.r"]
    m = r + config["train.m_offset"]
    basis = build_pod(snaps, config["train.basis_rank"])
    model_r = assemble_galerkin(basis, r, config["fom.viscosity"])
    model_m = assemble_galerkin(basis, m, config["fom.viscosity"])
    series_r = _rebased_series(basis, snaps, r)
    series_m = _rebased_series(basis, snaps, m)
    tau = compute_tau_commutator(series_m, series_r, model_m, model_r)
    data = build_regression(series_r, tau, select_samples(series_r.n_times, "full"))
    ddf, _ = solve_unconstrained(data, config["train.tol"])
    cddf, _ = solve_constrained(data, config["train.tol"], config["train.epsilon"])

    paths = {
        "basis.txt": (romio.write_basis, basis),
        "operators_r.txt": (romio.write_model, model_r),
        "operators_m.txt": (romio.write_model, model_m),
        "tau.txt": (romio.write_tau, tau),
        "closure_ddf.txt": (romio.write_closure, ddf),
        "closure_cddf.txt": (romio.write_closure, cddf),
    }
    written = []
    for name, (writer, artifact) in paths.items():
        path = _out(config, name)
        writer(path, artifact)
        written.append(path)
    return written


def cmd_simulate(config):
    """Integrate all four model kinds from the projected initial state."""
    snaps = romio.read_snapshots(_out(config, "snapshots.txt"))
    basis = romio.read_basis(_out(config, "basis.txt"))
    model = romio.read_model(_out(config, "operators_r.txt"))
    tau = romio.read_tau(_out(config, "tau.txt"))
    ddf = romio.read_closure(_out(config, "closure_ddf.txt"))
    cddf = romio.read_closure(_out(config, "closure_cddf.txt"))

    series = _rebased_series(basis, snaps, model.r)
    a0 = series.coeffs[:, 0]
    dt = snaps.dt_snap
    t_end = config["sim.horizon_multiplier"] * float(series.times[-1])

    runs = {
        "trajectory_grom.txt": dict(),
        "trajectory_ddf.txt": dict(closure=ddf),
        "trajectory_cddf.txt": dict(closure=cddf),
        "trajectory_ideal.txt": dict(ideal=IdealTauTable(tau.times, tau.values)),
    }
    written, blown = [], []
    for name, kwargs in runs.items():
        traj = integrate(model, a0, dt, t_end, **kwargs)
        path = _out(config, name)
        romio.write_trajectory(path, traj)
        written.append(path)
        if traj.blew_up:
            blown.append(f"{traj.model_kind}@step{traj.blowup_index}")
    if blown:
        raise BlowUpError("blow-up in " + ", ".join(blown))
    return written


def cmd_report(config):
    """Reproductive (and optionally predictive) sweep reports."""
    snaps = romio.read_snapshots(_out(config, "snapshots.txt"))
    plan = config.plan()
    report = run_reproductive(plan, snapshots=snaps)
    written = []
    path = _out(config, "report.csv")
    with open(path, "w") as handle:
        handle.write(report_to_csv(report))
    written.append(path)
    summary = report_summary(report)
    if config["plan.predictive"]:
        predictive = run_predictive(plan, snapshots=snaps)
        path = _out(config, "report_predictive.csv")
        with open(path, "w") as handle:
            handle.write(report_to_csv(predictive))
        written.append(path)
        summary += report_summary(predictive)
    path = _out(config, "summary.txt")
    with open(path, "w") as handle:
        handle.write(summary)
    written.append(path)
    return written


_STAGES = {
    "generate": cmd_generate,
    "train": cmd_train,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="romkit",
        description="reduced-order modeling pipeline with data-driven closures",
    )
    parser.add_argument("stage", choices=sorted(_STAGES))
    parser.add_argument("--config", required=True, help="path to the run config file")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        outputs = _STAGES[args.stage](config)
    except BlowUpError as exc:
        print(f"romkit-status: stage={args.stage} code=2 reason={exc}")
        return 2
    except (ConfigError, romio.FormatError, ValueError, OSError) as exc:
        print(f"romkit-status: stage={args.stage} code=1 reason={exc}")
        return 1
    print(f"romkit-status: stage={args.stage} code=0 outputs={','.join(outputs)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
