"""romkit: desk-scale reduced-order modeling with data-driven closures.

Pipeline: a 1D periodic viscous Burgers-type solver generates snapshots; a
centered POD basis and Galerkin operators define the reduced model; the
exact closure term is extracted by commutating the m-mode and r-mode
dynamics; closure operators are calibrated by truncated-SVD least squares,
either unconstrained or under dissipativity/energy-conservation constraints;
linearized BDF2 integrates the resulting models for evaluation.
"""

from .fom import (
    BlowUpError,
    ConfigError,
    FomConfig,
    Grid1D,
    InitialCondition,
    SnapshotSet,
    default_config,
    kinetic_energy,
    run_fom,
)
from .pod import CoefficientSeries, PodBasis, build_pod, project, project_series, reconstruct
from .galerkin import QuadraticModel, assemble_galerkin, convection_form, rhs, rhs_series
from .closure import (
    FeatureMap,
    RegressionData,
    SampleSelection,
    TauSeries,
    build_regression,
    compute_tau_commutator,
    compute_tau_residual,
    select_samples,
)
from .regression import (
    ClosureOperators,
    TsvdReport,
    objective,
    solve_constrained,
    solve_unconstrained,
)
from .simulate import (
    ComparisonReport,
    IdealTauTable,
    RomTrajectory,
    compare,
    energy_series,
    integrate,
)
from .harness import (
    ExperimentPlan,
    ExperimentReport,
    SelectionSpec,
    run_predictive,
    run_reproductive,
)

__version__ = "0.1.0"
