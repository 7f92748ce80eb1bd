"""Tangent-space classification of SPD covariance matrices.

A numpy/scipy library for decoding multichannel band-power signals:
affine-invariant geometry on the SPD manifold, tangent-space linear
models, spatial filter extraction from those models via generalized
eigendecomposition, a CSP baseline, spatial-pattern recovery, and a
cross-validation/statistics harness.
"""

from .errors import (
    ConvergenceFailure,
    DegenerateModel,
    DegenerateStatistic,
    DimMismatch,
    FormatError,
    InvalidInput,
    NotPositiveDefinite,
    TssfError,
    UnsupportedFeatureKind,
)
from .manifold import (
    FrechetConfig,
    GedResult,
    airm_distance,
    ensure_spd,
    exp_map_at,
    expm,
    frechet_mean,
    ged,
    inner_product_at,
    log_map_at,
    logm,
    powm,
    subspace_angle_by_cluster,
    sym_eig,
    unvec,
    vec,
    vec_dim,
)
from .linmodel import (
    ClassifierConfig,
    LinearModel,
    decision_value,
    fit_lda,
    fit_linear_svm,
    grid_search_cv,
    load_linear_model,
    save_linear_model,
    svm_objective,
)
from .tssf import (
    DIAGLOGCOV,
    FEATURE_KINDS,
    LOGCOV,
    LOGVAR,
    TssfModel,
    apply_filters,
    compute_features,
    exact_decision_value,
    extract_tssf,
    load_tssf_model,
    predict_one_step,
    predict_two_step,
    save_tssf_model,
    tangent_vectors,
    truncate_model,
)
from .csp import (
    CspEquivalenceReport,
    CspModel,
    csp_tssf_equivalence_report,
    fit_csp,
    load_csp_model,
    save_csp_model,
)
from .patterns import PatternSet, compute_patterns, patterns_to_csv
from .dataio import (
    SynthConfig,
    TrialSet,
    covariances,
    empirical_covariance,
    fir_bandpass,
    load_manifest,
    read_manifest,
    read_trial_csv,
    read_trials,
    synth_generate,
    write_trials,
)
from .evalstats import (
    BenchRow,
    EvalReport,
    PairedComparison,
    bench_predict,
    compare_paired,
    kfold_cv,
    roc_auc,
    smd,
    stratified_folds,
    wilcoxon_one_sided,
)
from .pipelines import PIPELINE_NAMES, PipelineSpec, make_pipeline

__version__ = "0.1.0"
