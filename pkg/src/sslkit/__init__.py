"""Toolkit for typed three-layer skill records.

Parse and validate skill records, render deterministic retrieval views,
orchestrate staged normalization through pluggable text backends, and
evaluate skill discovery and six-dimension risk labeling with paired
bootstrap statistics.
"""

from .bootstrap import (
    BootstrapResult,
    PairedUnit,
    macro_f1_of_label_pairs,
    mean_score,
    paired_bootstrap,
)
from .document import (
    ActType,
    ControlFlowFeatures,
    Dependency,
    IoField,
    LogicStep,
    ResourceScope,
    Scene,
    SceneRef,
    SceneType,
    SkillRecord,
    SslDocument,
    StepRef,
    TerminalRef,
    TerminalTarget,
    TransitionRule,
    document_from_dict,
    document_to_dict,
    is_variable,
    parse_document,
    resolve_target,
    serialize_document,
)
from .normalizer import (
    AuditItem,
    GenerationBackend,
    NormalizationOutcome,
    NormalizationStatus,
    NormalizerConfig,
    NormalizerStage,
    YieldReport,
    build_prompt,
    extract_payload,
    normalize_corpus,
    normalize_skill,
    support_accuracy,
)
from .retrieval import (
    AnnotationScores,
    CorpusEntry,
    EmbeddingBackend,
    HashedTokenEmbedder,
    MetricsRow,
    Query,
    QueryType,
    RankedQueryResult,
    VariantEvaluation,
    evaluate_variant,
    filter_queries,
    l2_normalize,
    query_metrics,
    rank_candidates,
)
from .risk import (
    DIMENSIONS,
    FirstRound,
    MetricSet,
    ModelVote,
    Provenance,
    ReviewVote,
    RiskDimension,
    RiskLabelVector,
    Stratum,
    aggregate_first_round,
    apply_review,
    dimension_metrics,
    label_distribution,
    macro_metrics,
    stratify,
)
from .validation import (
    IssueCode,
    Severity,
    ValidationIssue,
    ValidationReport,
    validate,
    validate_hard,
    validate_soft,
)
from .views import (
    ProjectedView,
    RepresentationVariant,
    compose_input,
    project_rich,
    project_sched,
    project_shallow,
    source_outline,
)

__version__ = "0.1.0"
