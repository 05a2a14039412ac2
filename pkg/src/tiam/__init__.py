"""Template-based text-image alignment scoring toolkit.

The pipeline: enumerate a prompt dataset from a template (``prompts``),
ingest external detection/segmentation results (``records``), score each
image strictly against its prompt's expected objects and color attributes
(``scoring``, ``colors``), aggregate alignment statistics (``analytics``),
and project object-pair dissimilarities to 2D (``embedding``). The ``tiam``
command line binds the steps together.
"""

from .analytics import (
    BindingRates,
    SeedProfile,
    TiamReport,
    binding_success_rate,
    build_report,
    compute_tiam,
    convergence_curve,
    occurrence_by_position,
    per_prompt_tiam,
    per_seed_tiam,
    select_seeds,
)
from .colors import (
    BINDING_THRESHOLD_DEFAULT,
    BindingVerdict,
    LabColor,
    ReferencePalette,
    check_binding,
    classify_pixel,
    classify_pixels,
    default_palette,
    load_palette,
    srgb_to_lab,
    srgb_to_lab_array,
)
from .embedding import (
    DissimilarityMatrix,
    Embedding2D,
    build_dissimilarity,
    classical_mds,
    correlate,
)
from .errors import (
    AssignmentError,
    DataError,
    EmptyMaskError,
    InfeasibleTemplateError,
    SchemaError,
    TemplateError,
    TiamError,
)
from .masks import SegmentationMask, mask_iou
from .prompts import (
    AttributeSet,
    ObjectSet,
    PromptDataset,
    PromptInstance,
    Template,
    count_prompts,
    enumerate_prompts,
    generate_dataset,
    load_dataset,
    load_template,
    render_prompt,
)
from .records import (
    CONFIDENCE_THRESHOLD_DEFAULT,
    DEDUP_IOU_DEFAULT,
    Detection,
    ImageRecord,
    ResultsFile,
    dedup_overlaps,
    filter_confidence,
    load_results,
    save_results,
)
from .scoring import CoverageSummary, Outcome, score_corpus, score_image

__version__ = "0.1.0"
