"""Aligning planar points to lines under robust costs.

The alignment convention throughout is ``p -> R p - t``.
"""
from .align import (
    CandidateSet,
    align_candidates,
    best_candidate,
    iter_candidate_blocks,
    solve_exhaustive,
    triangle_side,
    z_configs,
)
from .baselines import RansacConfig, adaptive_ransac, fast_approx_align, lms_align
from .circle import (
    CircleConstraint,
    PiecewiseFn,
    candidate_unit_vectors,
    min_abs_affine_on_circle,
    simultaneous_approx_select,
)
from .coreset import (
    SparseWeights,
    StreamState,
    WeightedPairSet,
    alignment_lift,
    build_coreset,
    lift_pair,
    sensitivities,
    stream_coreset,
    stream_insert,
)
from .cost import (
    MIN_HUBER,
    CostSpec,
    Max,
    Power,
    Sum,
    Threshold,
    TrimmedSum,
    approx_factor,
    evaluate_cost,
    log_lipschitz_check,
)
from .errors import DegenerateConstraintError, NumericalError, ParallelLinesError, PointLineError
from .geometry import (
    Alignment,
    Line,
    PairSet,
    apply_alignment,
    line_intersection,
    point_line_distance,
    rigid_from_two_correspondences,
    rotation_to_x_axis,
)
from .harness import GenConfig, Instance, coreset_pipeline, gen_instance, run_error_sweep, run_time_sweep
from .matching import Exact, MatchResult, Sampled, align_and_match, hungarian, optimal_matching

__version__ = "0.1.0"
