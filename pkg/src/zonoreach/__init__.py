"""Online data-driven reachability analysis with set-valued recursive
least squares: zonotope arithmetic, the forgetting-factor set estimator,
and over-approximate reachable sets for linear time-varying and Lipschitz
nonlinear discrete-time systems."""

from .sets import (
    IntervalMatrix,
    MatrixZonotope,
    Zonotope,
    cartesian_product,
    contains_point,
    interval_frobenius,
    interval_hull,
    linear_map,
    matzono_interval,
    matzono_reduce,
    matzono_times_zono,
    matzono_unvec,
    matzono_vec,
    minkowski_sum,
    reduce,
    sample,
    vertices_2d,
)
from .estimator import (
    DriftStructure,
    EstimationError,
    EstimatorState,
    NoiseStructure,
    default_init,
    init_estimator,
    model_set,
    optimal_gain,
    pe_check,
    update,
)
from .harness import PlantSpec, SlidingWindow, Trajectory, batch_ls_model_set, simulate
from .reach_ltv import LtvReachConfig, ReachResult, reach_ltv
from .reach_lipschitz import LipReachConfig, reach_lipschitz
from .validation import ValidationReport, conservatism_metric, validate_reach

__version__ = "0.1.0"
