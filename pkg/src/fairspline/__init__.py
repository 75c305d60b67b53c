"""Fair B-spline fitting by progressive control-point iteration."""

from .splines import (
    DataSet,
    KnotVector,
    SplineCurve,
    SplineSurface,
    basis_all,
    chord_length_params,
    centripetal_params,
    insert_knot,
    make_knot_vector,
    select_initial_controls,
)
from .assembly import (
    AssemblyBundle,
    WeightConfig,
    build_curve_bundle,
    build_surface_bundle,
    gram_matrix_curve,
    gram_matrix_surface,
)
from .iteration import (
    IterationState,
    IterationTrace,
    StoppingRule,
    absolute_energy,
    absolute_fitting_error,
    initial_state,
    run,
    step,
    zero_state,
)
from .metrics import (
    CurvatureComb,
    CurvatureMap,
    curvature,
    curvature_comb,
    mean_curvature,
    mean_curvature_map,
    second_difference_weights,
)
from .datasets import load_points, sample_starfish, sample_viviani, save_points
from .jobs import JobConfig, JobResult, RunReport, run_job

__version__ = "0.1.0"
