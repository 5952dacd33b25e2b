"""D-optimal 0-1 subsampling designs for polynomial regression in one covariate."""
from .design import (
    InformationMatrix,
    IntervalUnion,
    SensitivityEvaluator,
    SingularDesignError,
    SubsamplingDesign,
    d_criterion,
    information_matrix,
    load_design,
    dump_design,
    sensitivity,
)
from .distributions import (
    CovariateDistribution,
    DomainError,
    InfiniteMomentError,
    exponential,
    normal,
    parse_dist,
    student_t,
    uniform,
)
from .efficiency import EfficiencyPoint, curve_minimum, efficiency, efficiency_curve
from .optimality import EquivalenceReport, check_equivalence, threshold
from .solver import SolveReport, SolverError, critical_alpha, solve_optimal
from .subsample import SubsampleStats, subsample_csv, subsample_stream

__version__ = "0.1.0"
