"""Speaker diarization and verification scoring toolkit.

The library covers the offline scoring half of a diarization stack:
posterior fusion and speech segmentation, sliding-window bookkeeping for
precomputed embedding archives, agglomerative and variational HMM
clustering, overlap assignment, trial scoring with adaptive
normalization and calibration, and DER/EER style evaluation. Neural
inference stays out of scope; embeddings and posteriors arrive as text
archives.
"""

__version__ = "0.1.0"

from .archives import (
    emit_rttm,
    parse_rttm,
    read_embeddings,
    read_lab,
    read_labels,
    read_posteriors,
    read_rttm,
    read_scores,
    read_trials,
    write_embeddings,
    write_lab,
    write_labels,
    write_posteriors,
    write_rttm,
    write_scores,
    write_trials,
)
from .clustering import AhcConfig, WindowingConfig, ahc, make_windows, segment_windows
from .errors import (
    ComputationError,
    ConfigurationError,
    DegenerateInputError,
    DiarkitError,
    FitError,
    FormatError,
    ParseError,
    ShapeError,
    UsageError,
)
from .metrics import DerBreakdown, der, eer, jer, min_dcf
from .overlap import OverlapAssignment, assign_overlaps, merge_overlaps
from .pipeline import (
    DiarizeConfig,
    RecordingJob,
    VerifyConfig,
    VerifySystem,
    load_diarize_config,
    load_verify_config,
    run_diarization,
    run_verification,
    turns_from_window_labels,
)
from .pooling import (
    PoolingConfig,
    channel_shuffle,
    mha_attention_weights,
    mha_pool,
    shuffled_mha_pool,
    stats_pool,
)
from .records import EmbeddingSequence, PosteriorStream, Trial
from .timeline import TIME_QUANTUM, Diarization, Segment, Timeline
from .vadfuse import FusionConfig, VadReport, fuse_posteriors, posterior_to_segments, vad_metrics
from .vbhmm import SpeakerState, VbConfig, VbDiagnostics, vb_emission, vb_estep, vb_init, vb_mstep, vb_resegment
from .verification import (
    QMF_FEATURE_NAMES,
    SIGMA_FLOOR,
    CalibrationModel,
    Cohort,
    CohortStats,
    UtteranceMeta,
    apply_calibration,
    as_norm,
    cohort_stats,
    cosine_score,
    fit_calibration,
    fuse,
    qmf_features,
    speaker_average_cohort,
    top_score_stats,
)

__all__ = [
    "__version__",
    "TIME_QUANTUM",
    "Segment",
    "Timeline",
    "Diarization",
    "EmbeddingSequence",
    "PosteriorStream",
    "Trial",
    "DiarkitError",
    "ParseError",
    "FormatError",
    "ShapeError",
    "DegenerateInputError",
    "ConfigurationError",
    "FitError",
    "UsageError",
    "ComputationError",
    "parse_rttm",
    "emit_rttm",
    "read_rttm",
    "write_rttm",
    "read_embeddings",
    "write_embeddings",
    "read_posteriors",
    "write_posteriors",
    "read_trials",
    "write_trials",
    "read_scores",
    "write_scores",
    "read_lab",
    "write_lab",
    "read_labels",
    "write_labels",
    "stats_pool",
    "channel_shuffle",
    "PoolingConfig",
    "mha_attention_weights",
    "mha_pool",
    "shuffled_mha_pool",
    "cosine_score",
    "top_score_stats",
    "cohort_stats",
    "as_norm",
    "qmf_features",
    "Cohort",
    "CohortStats",
    "QMF_FEATURE_NAMES",
    "SIGMA_FLOOR",
    "UtteranceMeta",
    "CalibrationModel",
    "fit_calibration",
    "apply_calibration",
    "fuse",
    "speaker_average_cohort",
    "FusionConfig",
    "VadReport",
    "fuse_posteriors",
    "posterior_to_segments",
    "vad_metrics",
    "WindowingConfig",
    "AhcConfig",
    "segment_windows",
    "make_windows",
    "ahc",
    "VbConfig",
    "SpeakerState",
    "VbDiagnostics",
    "vb_init",
    "vb_mstep",
    "vb_emission",
    "vb_estep",
    "vb_resegment",
    "OverlapAssignment",
    "assign_overlaps",
    "merge_overlaps",
    "DerBreakdown",
    "der",
    "jer",
    "eer",
    "min_dcf",
    "DiarizeConfig",
    "RecordingJob",
    "VerifyConfig",
    "VerifySystem",
    "load_diarize_config",
    "load_verify_config",
    "run_diarization",
    "run_verification",
    "turns_from_window_labels",
]
