"""Degree-of-personalization evaluation for personalized summarization.

The package scores how responsively a summarization model adapts its
output to different users of the same document (degress / egises),
discounts that responsiveness by accuracy penalties (perseval, p_acc),
and meta-evaluates the resulting leaderboards: resampling stability,
correlation statistics, rank aggregation, and estimation against human
judgements.
"""

from .corpus import (
    Document,
    EvaluationCorpus,
    GeneratedSummary,
    GoldReference,
    RatedSummaryPool,
    Sample,
    SampleCollections,
    build_surrogates,
    load_corpus,
    load_rated_pool,
    sample_collections,
    save_corpus,
)
from .engine import (
    DivergenceTensors,
    PAccConfig,
    PenaltyConfig,
    ScoreTable,
    acp,
    adp,
    degress_document,
    degress_summary,
    degress_system,
    divergence_tensors,
    edp,
    egises_system,
    p_accuracy,
    pairwise_divergences,
    perseval_summary,
    perseval_system,
    score_model,
    score_table,
)
from .errors import (
    DataError,
    DegenerateInputError,
    DuplicateKeyError,
    MissingIdError,
    MissingRatingError,
    MissingSummaryError,
    NumericError,
    ParseError,
    PersevalError,
    ReferentialError,
    UnscorableSampleError,
)
from .metaeval import (
    HumanRatings,
    Ranking,
    StabilityReport,
    bias_variance,
    borda_kendall,
    kendall_tau,
    leaderboard,
    load_ratings,
    pearson_r,
    permutation_pvalues,
    perseval_hj,
    rank_models,
    spearman_rho,
    stability_report,
)
from .metrics import (
    DistanceMatrixFile,
    ProbabilityDistribution,
    TextRef,
    ab_divergence,
    bleu1_distance,
    get_metric,
    infolm_distance,
    jsd_distance,
    lcs_length,
    meteor_distance,
    rouge_l_distance,
    rouge_su4_distance,
    tokenize,
)

__version__ = "0.1.0"
