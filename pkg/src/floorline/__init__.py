"""floorline: non-network machinery for floor-level-line recognition.

Turns facade/floor segmentation masks into vanishing-point-consistent line
5-tuples, synthesizes labeled samples by facade warping, characterizes
datasets, verifies the height-attention math at desk scale, and scores
predictions. See the README for CLI usage.
"""

from .errors import FloorLineError
from .geometry import (
    MAX_FLOOR_ORDER,
    Homography,
    LabelMask,
    Line5Tuple,
    Point2,
    Quad,
    apply_homography,
    homography_from_quads,
    invert_homography,
    warp_mask,
)
from .io_formats import (
    FACADE_PALETTE,
    FLOOR_PALETTE,
    AnnotationRecord,
    FacadeLines,
    ImageLines,
    read_annotations,
    read_label_mask,
    read_lines,
    write_annotations,
    write_label_mask,
    write_lines,
)
from .augment import AugmentedSample, RectifiedFacade, generate_sample, rasterize_floor_lines, simplify_semantics
from .attention import AttentionMap, FeatureMap, HaParams, fused_loss, ha_backward, ha_forward, height_heatmap, softmax_cross_entropy
from .metrics import ConfusionCounts, EvalPair, EvalReport, evaluate_dataset, line_confidence, line_f1, pixel_f1
from .postprocess import (
    PARALLEL_LINES,
    FacadeRegion,
    LinePixelGroup,
    ParallelSentinel,
    PipelineConfig,
    PipelineResult,
    PolylineFit,
    VpSolution,
    derive_endpoints,
    enforce_order,
    group_facades,
    group_lines,
    polyfit_line,
    refine_vp,
    run_pipeline,
)
from .stats import (
    EntropyReport,
    VerticalBoundDistribution,
    bound_probability_table,
    class_entropy,
    highest_floor_histogram,
    orientation_histogram,
    pixels_per_order,
    vertical_bound_distribution,
)

__version__ = "0.1.0"
