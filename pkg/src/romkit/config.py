"""Run configuration: one static key=value file drives every CLI stage.

Lines are `key = value`; blank lines and `#` comments are ignored.  Unknown
keys are rejected, required keys must all be present, and numeric ranges are
validated at parse time.  List values are comma-separated; selection schemes
are `full`, `equally_spaced:<ell>` or `first_fraction:<f>`.
"""

from dataclasses import dataclass

from .fom import ConfigError, FomConfig, Grid1D, InitialCondition
from .harness import ExperimentPlan, SelectionSpec


def _parse_int(raw):
    return int(raw)


def _parse_float(raw):
    return float(raw)


def _parse_str(raw):
    return raw


def _parse_bool(raw):
    if raw.lower() in ("true", "1", "yes"):
        return True
    if raw.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_int_list(raw):
    return tuple(int(tok) for tok in raw.split(","))


def _parse_float_list(raw):
    return tuple(float(tok) for tok in raw.split(","))


def _parse_selections(raw):
    specs = []
    for tok in raw.split(","):
        tok = tok.strip()
        if tok == "full":
            specs.append(SelectionSpec("full"))
        elif tok.startswith("equally_spaced:"):
            specs.append(SelectionSpec("equally_spaced", ell=int(tok.split(":", 1)[1])))
        elif tok.startswith("first_fraction:"):
            specs.append(
                SelectionSpec("first_fraction", fraction=float(tok.split(":", 1)[1]))
            )
        else:
            raise ValueError(f"unknown selection scheme {tok!r}")
    return tuple(specs)


# key -> (parser, required, default)
_SCHEMA = {
    "seed": (_parse_int, True, None),
    "output.dir": (_parse_str, True, None),
    "fom.n_points": (_parse_int, True, None),
    "fom.length": (_parse_float, True, None),
    "fom.viscosity": (_parse_float, True, None),
    "fom.dt": (_parse_float, True, None),
    "fom.t_end": (_parse_float, True, None),
    "fom.ic.profile": (_parse_str, True, None),
    "fom.ic.amplitude": (_parse_float, False, 1.0),
    "fom.ic.wavenumber": (_parse_int, False, 1),
    "fom.ic.center": (_parse_float, False, 0.5),
    "fom.ic.width": (_parse_float, False, 0.1),
    "fom.snapshot.t_start": (_parse_float, True, None),
    "fom.snapshot.t_stop": (_parse_float, True, None),
    "fom.snapshot.stride": (_parse_int, True, None),
    "train.r": (_parse_int, True, None),
    "train.m_offset": (_parse_int, True, None),
    "train.tol": (_parse_float, True, None),
    "train.epsilon": (_parse_float, True, None),
    "train.basis_rank": (_parse_int, True, None),
    "sim.horizon_multiplier": (_parse_float, True, None),
    "plan.r_values": (_parse_int_list, True, None),
    "plan.m_offsets": (_parse_int_list, True, None),
    "plan.tol_grid": (_parse_float_list, True, None),
    "plan.epsilon_grid": (_parse_float_list, True, None),
    "plan.selections": (_parse_selections, True, None),
    "plan.horizon_multiplier": (_parse_float, True, None),
    "plan.basis_rank": (_parse_int, True, None),
    "plan.max_workers": (_parse_int, False, 4),
    "plan.predictive": (_parse_bool, False, False),
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated configuration for all pipeline stages."""

    values: dict
    path: str

    def __getitem__(self, key):
        return self.values[key]

    def fom_config(self):
        ic = InitialCondition(
            profile=self["fom.ic.profile"],
            amplitude=self["fom.ic.amplitude"],
            wavenumber=self["fom.ic.wavenumber"],
            center=self["fom.ic.center"],
            width=self["fom.ic.width"],
        )
        return FomConfig(
            grid=Grid1D(self["fom.n_points"], self["fom.length"]),
            viscosity=self["fom.viscosity"],
            dt=self["fom.dt"],
            t_end=self["fom.t_end"],
            initial_condition=ic,
            snapshot_window=(self["fom.snapshot.t_start"], self["fom.snapshot.t_stop"]),
            snapshot_stride=self["fom.snapshot.stride"],
        )

    def plan(self):
        return ExperimentPlan(
            fom=self.fom_config(),
            r_values=self["plan.r_values"],
            m_offsets=self["plan.m_offsets"],
            tol_grid=self["plan.tol_grid"],
            epsilon_grid=self["plan.epsilon_grid"],
            selection_schemes=self["plan.selections"],
            horizon_multiplier=self["plan.horizon_multiplier"],
            basis_rank=self["plan.basis_rank"],
            seed=self["seed"],
            max_workers=self["plan.max_workers"],
        )


def _validate_ranges(values):
    checks = [
        ("fom.n_points", values["fom.n_points"] >= 8, "must be >= 8"),
        ("fom.length", values["fom.length"] > 0, "must be positive"),
        ("fom.viscosity", values["fom.viscosity"] > 0, "must be positive"),
        ("fom.dt", values["fom.dt"] > 0, "must be positive"),
        ("fom.snapshot.stride", values["fom.snapshot.stride"] >= 1, "must be >= 1"),
        ("train.r", values["train.r"] >= 1, "must be >= 1"),
        ("train.m_offset", values["train.m_offset"] >= 0, "must be >= 0"),
        ("train.tol", 0.0 <= values["train.tol"] < 1.0, "must lie in [0, 1)"),
        ("train.epsilon", values["train.epsilon"] >= 0.0, "must be >= 0"),
        (
            "train.basis_rank",
            values["train.basis_rank"] >= values["train.r"] + values["train.m_offset"],
            "must cover train.r + train.m_offset",
        ),
        (
            "sim.horizon_multiplier",
            values["sim.horizon_multiplier"] >= 1.0,
            "must be >= 1",
        ),
        ("plan.horizon_multiplier", values["plan.horizon_multiplier"] >= 1.0, "must be >= 1"),
        ("plan.max_workers", values["plan.max_workers"] >= 1, "must be >= 1"),
    ]
    for key, ok, reason in checks:
        if not ok:
            raise ConfigError(f"{key} {reason} (got {values[key]})")
    for key in ("plan.tol_grid",):
        if any(not 0.0 <= tol < 1.0 for tol in values[key]):
            raise ConfigError(f"{key} entries must lie in [0, 1)")
    if any(eps < 0 for eps in values["plan.epsilon_grid"]):
        raise ConfigError("plan.epsilon_grid entries must be >= 0")


def load_config(path):
    """Parse, validate, and return a RunConfig; errors carry line numbers."""
    values = {}
    with open(path) as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key, _, raw_value = line.partition("=")
            key, raw_value = key.strip(), raw_value.strip()
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
            parser, _, _ = _SCHEMA[key]
            try:
                values[key] = parser(raw_value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_no}: bad value for {key}: {exc}") from exc

    missing = [k for k, (_, required, _) in _SCHEMA.items() if required and k not in values]
    if missing:
        raise ConfigError(f"{path}: missing required keys: {', '.join(sorted(missing))}")
    for key, (_, required, default) in _SCHEMA.items():
        if not required and key not in values:
            values[key] = default

    _validate_ranges(values)
    config = RunConfig(values=values, path=path)
    config.fom_config()  # cross-field validation (window arithmetic etc.)
    config.plan()
    return config
