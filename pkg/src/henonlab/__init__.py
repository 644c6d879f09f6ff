"""henonlab: numerical laboratory for semi-parabolic complex Henon dynamics."""

from .henon import (
    HenonMap,
    Point2,
    FixedPointInfo,
    LocalChart,
    eval_forward,
    eval_inverse,
    filtration_radius,
    fixed_points,
    local_chart,
    perturbed_family,
    semi_parabolic_map,
    semi_parabolic_parameter,
)
from .fatou import (
    FatouEvaluator,
    SigmaPoint,
    make_evaluator,
    in_basin,
    incoming_coordinate,
    outgoing_param,
)
from .green import classify, julia_slice, Slice, FieldGrid
from .horn import (
    CylinderPoint,
    Island,
    PeriodicPoint,
    lifted_horn,
    horn_cyl,
    horn_derivative,
    find_islands,
    repelling_cycles,
)
from .implosion import alpha_epsilon, lavaurs, implosion_error, basin_samples
from .dimension import (
    IFSBranch,
    IFSSystem,
    PointCloud,
    bowen_dimension,
    hyperbolic_lower_bound,
    box_dimension,
    misiurewicz_shoot,
)

__version__ = "0.1.0"
