"""Plain-text persistence for every pipeline artifact.

All formats are line-oriented with a version header and decimal floats at
17 significant digits, which round-trip doubles exactly.  Writers are
atomic (write-temp-then-rename); readers report the file and the first bad
line of any malformed input.

    ROMSNAP 1   snapshots        ROMPOD 1   POD basis
    ROMOPS 1    model operators  ROMTAU 1   closure targets
    ROMCLS 1    closure fit      ROMTRJ 1   trajectories
"""

import os
import tempfile

import numpy as np

from .fom import Grid1D, SnapshotSet
from .galerkin import QuadraticModel
from .pod import PodBasis
from .regression import ClosureOperators
from .closure import TauSeries
from .simulate import RomTrajectory


class FormatError(ValueError):
    """Malformed artifact file; message carries path and line number."""


def _fmt(values):
    return " ".join(format(float(v), ".17g") for v in np.atleast_1d(values))


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".romkit-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _LineReader:
    def __init__(self, path):
        self.path = path
        with open(path) as handle:
            self.lines = handle.read().splitlines()
        self.cursor = 0

    def fail(self, message, line_no=None):
        line_no = self.cursor if line_no is None else line_no
        raise FormatError(f"{self.path}:{line_no}: {message}")

    def next_line(self, what):
        if self.cursor >= len(self.lines):
            self.fail(f"unexpected end of file, expected {what}", self.cursor + 1)
        self.cursor += 1
        return self.lines[self.cursor - 1]

    def floats(self, what, count=None):
        raw = self.next_line(what)
        try:
            values = np.array([float(tok) for tok in raw.split()])
        except ValueError:
            self.fail(f"bad float in {what}")
        if count is not None and values.shape[0] != count:
            self.fail(f"expected {count} values for {what}, got {values.shape[0]}")
        return values

    def header(self, magic):
        line = self.next_line("header").split()
        if len(line) != 2 or line[0] != magic:
            self.fail(f"expected header '{magic} 1'")
        if line[1] != "1":
            self.fail(f"unsupported {magic} version {line[1]!r}")


# ---------------------------------------------------------------------------
# ROMSNAP


def write_snapshots(path, snaps):
    n, m = snaps.data.shape
    lines = [
        "ROMSNAP 1",
        f"{n} {m} {_fmt(snaps.grid.length)} {_fmt(snaps.dt_snap)} {_fmt(snaps.times[0])}",
    ]
    lines.extend(_fmt(snaps.data[:, j]) for j in range(m))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_snapshots(path):
    reader = _LineReader(path)
    reader.header("ROMSNAP")
    meta = reader.next_line("size line").split()
    if len(meta) != 5:
        reader.fail("size line needs 'N M L dt_snap t0'")
    try:
        n, m = int(meta[0]), int(meta[1])
        length, dt_snap, t0 = float(meta[2]), float(meta[3]), float(meta[4])
    except ValueError:
        reader.fail("bad value on size line")
    data = np.empty((n, m))
    for j in range(m):
        data[:, j] = reader.floats(f"snapshot {j}", n)
    times = t0 + dt_snap * np.arange(m)
    return SnapshotSet(grid=Grid1D(n, length), times=times, data=data, dt_snap=dt_snap)


# ---------------------------------------------------------------------------
# ROMPOD


def write_basis(path, basis):
    n = basis.grid.n_points
    lines = [
        "ROMPOD 1",
        f"{n} {basis.r_max} {_fmt(basis.grid.length)}",
        _fmt(basis.mean_mode),
    ]
    lines.extend(_fmt(basis.modes[:, i]) for i in range(basis.r_max))
    lines.append(_fmt(basis.eigenvalues))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_basis(path):
    reader = _LineReader(path)
    reader.header("ROMPOD")
    meta = reader.next_line("size line").split()
    if len(meta) != 3:
        reader.fail("size line needs 'N r_max L'")
    try:
        n, r_max, length = int(meta[0]), int(meta[1]), float(meta[2])
    except ValueError:
        reader.fail("bad value on size line")
    mean = reader.floats("mean mode", n)
    modes = np.column_stack([reader.floats(f"mode {i}", n) for i in range(r_max)])
    evals = reader.floats("eigenvalues", r_max)
    return PodBasis(
        grid=Grid1D(n, length), mean_mode=mean, modes=modes, eigenvalues=evals, r_max=r_max
    )


# ---------------------------------------------------------------------------
# ROMOPS


def write_model(path, model):
    r = model.r
    lines = [
        "ROMOPS 1",
        f"{r} {_fmt(model.viscosity)} {model.provenance}",
        _fmt(model.C),
    ]
    lines.extend(_fmt(model.A[i]) for i in range(r))
    for i in range(r):
        lines.extend(_fmt(model.B[i, m]) for m in range(r))
    lines.append("A_visc")
    lines.extend(_fmt(model.A_visc[i]) for i in range(r))
    lines.append("A_mean")
    lines.extend(_fmt(model.A_mean[i]) for i in range(r))
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_matrix(reader, r, what):
    return np.vstack([reader.floats(f"{what} row {i}", r) for i in range(r)])


def read_model(path):
    reader = _LineReader(path)
    reader.header("ROMOPS")
    meta = reader.next_line("dimension line").split()
    if len(meta) != 3:
        reader.fail("dimension line needs 'r viscosity provenance'")
    try:
        r, viscosity = int(meta[0]), float(meta[1])
    except ValueError:
        reader.fail("bad value on dimension line")
    provenance = meta[2]
    c_vec = reader.floats("C", r)
    a_mat = _read_matrix(reader, r, "A")
    b_ten = np.stack([_read_matrix(reader, r, f"B block {i}") for i in range(r)])
    if reader.next_line("A_visc label") != "A_visc":
        reader.fail("expected 'A_visc' label")
    a_visc = _read_matrix(reader, r, "A_visc")
    if reader.next_line("A_mean label") != "A_mean":
        reader.fail("expected 'A_mean' label")
    a_mean = _read_matrix(reader, r, "A_mean")
    return QuadraticModel(
        r=r,
        C=c_vec,
        A=a_mat,
        B=b_ten,
        A_visc=a_visc,
        A_mean=a_mean,
        viscosity=viscosity,
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# ROMTAU


def write_tau(path, tau):
    lines = [
        "ROMTAU 1",
        f"{tau.r} {tau.times.shape[0]} {tau.method} {tau.m}",
        _fmt(tau.times),
    ]
    lines.extend(_fmt(tau.values[i]) for i in range(tau.r))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_tau(path):
    reader = _LineReader(path)
    reader.header("ROMTAU")
    meta = reader.next_line("size line").split()
    if len(meta) != 4:
        reader.fail("size line needs 'r M_used method m'")
    try:
        r, m_used, m_trunc = int(meta[0]), int(meta[1]), int(meta[3])
    except ValueError:
        reader.fail("bad value on size line")
    method = meta[2]
    times = reader.floats("times", m_used)
    values = np.vstack([reader.floats(f"tau row {i}", m_used) for i in range(r)])
    return TauSeries(times=times, values=values, method=method, r=r, m=m_trunc)


# ---------------------------------------------------------------------------
# ROMCLS


def write_closure(path, ops):
    r = ops.r
    lines = [
        "ROMCLS 1",
        f"{int(ops.constrained)} {_fmt(ops.epsilon)} {_fmt(ops.tol)} "
        f"{_fmt(ops.residual)} {ops.kept_rank}",
        str(r),
        *(_fmt(ops.A_tilde[i]) for i in range(r)),
    ]
    for i in range(r):
        lines.extend(_fmt(ops.B_tilde[i, m]) for m in range(r))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_closure(path):
    reader = _LineReader(path)
    reader.header("ROMCLS")
    meta = reader.next_line("flags line").split()
    if len(meta) != 5:
        reader.fail("flags line needs 'constrained epsilon tol residual kept_rank'")
    try:
        constrained = bool(int(meta[0]))
        epsilon, tol, residual = float(meta[1]), float(meta[2]), float(meta[3])
        kept_rank = int(meta[4])
    except ValueError:
        reader.fail("bad value on flags line")
    try:
        r = int(reader.next_line("dimension line"))
    except ValueError:
        reader.fail("bad dimension line")
    a_tilde = _read_matrix(reader, r, "A_tilde")
    b_tilde = np.stack([_read_matrix(reader, r, f"B_tilde block {i}") for i in range(r)])
    return ClosureOperators(
        r=r,
        A_tilde=a_tilde,
        B_tilde=b_tilde,
        constrained=constrained,
        epsilon=epsilon,
        tol=tol,
        residual=residual,
        kept_rank=kept_rank,
    )


# ---------------------------------------------------------------------------
# ROMTRJ


def write_trajectory(path, traj):
    r, k = traj.coeffs.shape
    lines = [
        "ROMTRJ 1",
        f"{r} {k} {_fmt(traj.dt)} {traj.model_kind} {traj.blowup_index}",
        _fmt(traj.times),
    ]
    lines.extend(_fmt(traj.coeffs[i]) for i in range(r))
    lines.append(_fmt(traj.energy))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_trajectory(path):
    reader = _LineReader(path)
    reader.header("ROMTRJ")
    meta = reader.next_line("size line").split()
    if len(meta) != 5:
        reader.fail("size line needs 'r K dt model_kind blowup_index'")
    try:
        r, k, dt = int(meta[0]), int(meta[1]), float(meta[2])
        blowup = int(meta[4])
    except ValueError:
        reader.fail("bad value on size line")
    kind = meta[3]
    times = reader.floats("times", k)
    coeffs = np.vstack([reader.floats(f"coefficient row {i}", k) for i in range(r)])
    energy = reader.floats("energy", k)
    return RomTrajectory(
        times=times,
        coeffs=coeffs,
        model_kind=kind,
        dt=dt,
        energy=energy,
        blowup_index=blowup,
    )
