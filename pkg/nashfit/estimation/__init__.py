from .observations import Observation, ObservationSet
from .system import (
    CoefficientLayout,
    FeasibleSet,
    PlayerSegment,
    RegressionSystem,
    assemble_system,
    stacked_residuals,
)
from .noise import (
    NoiseKind,
    NoiseModel,
    estimate_noise,
    estimate_noise_freedman,
    estimate_noise_hc4,
    estimate_noise_spherical,
    whiten,
)
from .solvers import EstimatorResult, Method, project_feasible, solve_box_lsq, solve_cols
from .fgls import fit_fgls, fit_gls, solve_cfgls
