"""Bias auditing, blind baselines, and evaluation for moment retrieval benchmarks."""

from .corpus import (
    Corpus,
    CorpusError,
    LocationPoint,
    Moment,
    QuerySample,
    ReferenceSet,
    denormalize,
    load_activitynet,
    load_canonical,
    load_charades,
    load_duration_table,
    normalize,
    save_canonical,
)
from .lexicon import (
    VerbLexicon,
    VerbStats,
    extract_first_verb,
    top_k_coverage,
    top_k_verbs,
    verb_stats,
)
from .density import (
    ConditionalPriors,
    DensityError,
    DensityGrid,
    DensityModel,
    export_density_grid,
    fit,
    fit_conditional,
    pdf,
    pdf_points,
    sample,
    sample_array,
)
from .baselines import (
    RankedPrediction,
    action_aware_predict,
    load_predictions,
    prior_only_predict,
    run_baseline,
    save_predictions,
    uniform_predict,
)
from .metrics import (
    DurationBucket,
    EvalReport,
    MetricParams,
    duration_bucket_report,
    human_score_multi_reference,
    human_score_random,
    human_score_representative,
    iou,
    recall_at_k,
    recall_nn,
    recall_representative,
    representative_reference,
)
from .shuffle import (
    FeatureSequence,
    SensitivityReport,
    sensitivity_test,
    shuffle_segments,
)

__version__ = "0.1.0"
