"""Spatial filter extraction from tangent-space linear models.

A linear decision function fitted on tangent vectors is turned into a
bank of spatial filters: the fitted weight vector is reshaped back into a
symmetric matrix, re-projected onto the manifold through the exponential
map at the reference mean, and jointly diagonalized with that mean by a
generalized eigendecomposition. The log-eigenvalues double as regression
coefficients, so filtered log-power features can be scored directly
("one-step") without fitting a second classifier.

Tangent vectors here are whitened: ``vec(logm(m^{-1/2} C m^{-1/2}))`` at
reference mean ``m``. With that convention the dot product of two tangent
vectors is the manifold inner product at ``m``, which is what makes the
full-rank one-step scores reproduce the fitted model's decision values
exactly (see ``exact_decision_value``).
"""

from dataclasses import dataclass

import numpy as np

from . import _textdoc
from .errors import (
    DegenerateModel,
    DimMismatch,
    FormatError,
    InvalidInput,
    UnsupportedFeatureKind,
)
from .linmodel import decision_value, fit_from_config
from .manifold import (
    _half_powers,
    ensure_spd,
    expm,
    frechet_mean,
    ged,
    log_map_at,
    logm,
    unvec,
    vec,
)

LOGVAR = "logvar"
DIAGLOGCOV = "diaglogcov"
LOGCOV = "logcov"
FEATURE_KINDS = (LOGVAR, DIAGLOGCOV, LOGCOV)
ONE_STEP_KINDS = (LOGVAR, DIAGLOGCOV)


def _check_kind(kind):
    if kind not in FEATURE_KINDS:
        raise UnsupportedFeatureKind(f"unknown feature kind {kind!r}")
    return kind


def tangent_vectors(ref, covs):
    """Whitened tangent vectors of SPD matrices at reference ``ref``.

    Returns the (T, C(C+1)/2) matrix with rows
    ``vec(logm(ref^{-1/2} covs[t] ref^{-1/2}))``.
    """
    _, inv_half = _half_powers(np.asarray(ref, dtype=float))
    return np.array([_vec_whitened_log(inv_half, c) for c in np.asarray(covs, dtype=float)])


def _vec_whitened_log(inv_half, cov):
    m = inv_half @ cov @ inv_half
    return vec(logm(0.5 * (m + m.T)))


@dataclass(frozen=True)
class TssfModel:
    """Spatial filters plus the ingredients of one-step scoring.

    ``full_filters`` are all C generalized eigenvectors in sorted order
    (``filters`` is their K-column prefix), ``beta`` the matching sorted
    log-eigenvalues truncated to K, ``sort_index`` the permutation from
    descending-eigenvalue order to sorted order, and ``filtered_mean``
    the Frechet mean of the K x K filtered training covariances (the
    reference for "logcov" features).
    """

    filters: np.ndarray
    beta: np.ndarray
    intercept: float
    reference_mean: np.ndarray
    full_filters: np.ndarray
    sort_index: np.ndarray
    filtered_mean: np.ndarray
    feature_kind: str = LOGVAR

    @property
    def k(self):
        return self.filters.shape[1]

    @property
    def n_channels(self):
        return self.filters.shape[0]


def extract_tssf(covs, labels, k, model_cfg=None, feature_kind=LOGVAR, frechet_cfg=None):
    """Extract spatial filters from a tangent-space linear model.

    Parameters
    ----------
    covs : array-like, shape (T, C, C)
        Per-trial SPD covariance matrices.
    labels : array-like, shape (T,)
        Trial labels in {-1, +1}; both classes must be present.
    k : int
        Number of filter components to keep, ``1 <= k <= C``.
    model_cfg : ClassifierConfig, optional
        Tangent-space classifier (default: SVM with inner-CV grid search).
    feature_kind : str
        Feature type this model is meant to produce (stored for
        prediction and serialization).
    frechet_cfg : FrechetConfig, optional

    Returns
    -------
    TssfModel

    Notes
    -----
    Steps: Frechet mean of the covariances; whitened tangent vectors;
    linear model fit; weight vector reshaped to a symmetric matrix and
    re-projected onto the manifold at the mean; generalized
    eigendecomposition of (weight covariance, mean); components sorted by
    absolute log-eigenvalue, descending (ties by descending eigenvalue,
    then original position); truncation to ``k`` columns.

    Raises
    ------
    DegenerateModel
        On single-class labels or an all-zero fitted weight vector.
    """
    covs = np.asarray(covs, dtype=float)
    labels = np.asarray(labels)
    if covs.ndim != 3 or covs.shape[1] != covs.shape[2]:
        raise InvalidInput("covs must have shape (T, C, C)")
    if labels.shape != (covs.shape[0],):
        raise InvalidInput("need one label per covariance")
    c = covs.shape[1]
    if not 1 <= k <= c:
        raise InvalidInput(f"k must be in [1, {c}], got {k}")
    if np.unique(labels).size < 2:
        raise DegenerateModel("labels are constant; need both classes")
    _check_kind(feature_kind)

    mean = frechet_mean(covs, frechet_cfg)
    half, inv_half = _half_powers(mean)
    vectors = np.array([_vec_whitened_log(inv_half, cov) for cov in covs])
    model = fit_from_config(vectors, labels, model_cfg)
    if not np.any(model.weights):
        raise DegenerateModel("tangent-space model has an all-zero weight vector")

    weight_mat = unvec(model.weights)
    weight_cov = half @ expm(weight_mat) @ half
    solution = ged(weight_cov, mean)
    d = solution.eigenvalues
    beta_full = np.log(d)
    order = np.lexsort((np.arange(c), -d, -np.abs(beta_full)))
    full_filters = solution.eigenvectors[:, order]
    filters = full_filters[:, :k]
    filtered = np.array([filters.T @ cov @ filters for cov in covs])
    filtered = 0.5 * (filtered + np.transpose(filtered, (0, 2, 1)))
    filtered_mean = frechet_mean(filtered, frechet_cfg)
    return TssfModel(
        filters=filters,
        beta=beta_full[order][:k],
        intercept=float(model.intercept),
        reference_mean=mean,
        full_filters=full_filters,
        sort_index=order,
        filtered_mean=filtered_mean,
        feature_kind=feature_kind,
    )


def truncate_model(model, k, covs, frechet_cfg=None):
    """Derive the k-component model from one with more components.

    Reuses the fitted filters and coefficients (truncation keeps the
    leading columns, so no refit is needed); only the filtered-space
    reference mean is recomputed from ``covs`` for the new width.
    """
    if not 1 <= k <= model.k:
        raise InvalidInput(f"k must be in [1, {model.k}], got {k}")
    if k == model.k:
        return model
    filters = model.filters[:, :k]
    covs = np.asarray(covs, dtype=float)
    filtered = np.array([filters.T @ cov @ filters for cov in covs])
    filtered = 0.5 * (filtered + np.transpose(filtered, (0, 2, 1)))
    return TssfModel(
        filters=filters,
        beta=model.beta[:k],
        intercept=model.intercept,
        reference_mean=model.reference_mean,
        full_filters=model.full_filters,
        sort_index=model.sort_index,
        filtered_mean=frechet_mean(filtered, frechet_cfg),
        feature_kind=model.feature_kind,
    )


def apply_filters(model, trial):
    """Filter one C x N trial: ``filters.T @ trial`` (K x N)."""
    trial = np.asarray(trial, dtype=float)
    if trial.ndim != 2 or trial.shape[0] != model.n_channels:
        raise DimMismatch(
            f"trial has {trial.shape[0] if trial.ndim == 2 else '?'} channels, "
            f"model expects {model.n_channels}"
        )
    return model.filters.T @ trial


def compute_features(model, filtered_cov, kind=None):
    """Features of a K x K filtered covariance matrix.

    ``logvar``: log of the diagonal (length K). ``diaglogcov``: diagonal
    of the matrix logarithm (length K). ``logcov``: tangent vector of the
    covariance at the filtered-space Frechet mean (length K(K+1)/2).
    """
    kind = _check_kind(kind or model.feature_kind)
    cov = ensure_spd(np.asarray(filtered_cov, dtype=float), name="filtered covariance")
    if cov.shape[0] != model.k:
        raise DimMismatch(f"filtered covariance must be {model.k} x {model.k}")
    if kind == LOGVAR:
        return np.log(np.diag(cov))
    if kind == DIAGLOGCOV:
        return np.diag(logm(cov)).copy()
    return vec(log_map_at(model.filtered_mean, cov))


def predict_one_step(model, features, kind=None):
    """Score features directly with the sorted log-eigenvalues.

    ``score = beta . features + intercept``; the label is the sign of the
    score with sign(0) = +1. Only "logvar" and "diaglogcov" features are
    one-step scorable.

    Returns
    -------
    (score, label)
    """
    kind = kind or model.feature_kind
    if kind not in ONE_STEP_KINDS:
        raise UnsupportedFeatureKind(
            f"one-step scoring needs diagonal features, not {kind!r}"
        )
    features = np.asarray(features, dtype=float)
    if features.shape != (model.k,):
        raise InvalidInput(f"expected {model.k} features, got shape {features.shape}")
    score = float(model.beta @ features + model.intercept)
    return score, _sign(score)


def predict_two_step(model, second, features):
    """Score features with a separately fitted second classifier."""
    score = decision_value(second, np.asarray(features, dtype=float))
    return score, _sign(score)


def _sign(score):
    return 1 if score >= 0 else -1


def exact_decision_value(weight_cov, ref, trial_cov, ged_result):
    """Tangent decision value through the full-rank filter route.

    Evaluates ``Tr(logm(D) logm(F.T @ trial_cov @ F))`` for the
    generalized eigendecomposition ``F, D`` of ``(weight_cov, ref)``. For
    full-rank F this equals the manifold inner product at ``ref`` between
    the tangent images of ``weight_cov`` and ``trial_cov``, i.e. the
    decision value of the underlying tangent-space linear model (without
    its intercept).
    """
    f = np.asarray(ged_result.eigenvectors, dtype=float)
    d = np.asarray(ged_result.eigenvalues, dtype=float)
    if f.shape[0] != f.shape[1]:
        raise InvalidInput("filters must be square (full rank) for the exact value")
    if np.linalg.matrix_rank(f) < f.shape[0]:
        raise InvalidInput("filters are rank deficient")
    ref = np.asarray(ref, dtype=float)
    if not np.allclose(f.T @ ref @ f, np.eye(f.shape[0]), atol=1e-6):
        raise InvalidInput("ged_result does not whiten ref; was it solved on (weight_cov, ref)?")
    if np.any(d <= 0):
        raise InvalidInput("weight covariance eigenvalues must be positive")
    filtered = f.T @ np.asarray(trial_cov, dtype=float) @ f
    log_filtered = logm(0.5 * (filtered + filtered.T))
    return float(np.log(d) @ np.diag(log_filtered))


def save_tssf_model(model, path):
    """Write a model as a "tssf/1" structured-text document."""
    text = _textdoc.dump(
        [
            ("format", "tssf/1"),
            ("k", model.k),
            ("feature_kind", model.feature_kind),
            ("intercept", float(model.intercept)),
            ("beta", model.beta),
            ("sort_index", model.sort_index),
            ("filters", model.filters),
            ("full_filters", model.full_filters),
            ("reference_mean", model.reference_mean),
            ("filtered_mean", model.filtered_mean),
        ]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_tssf_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = _textdoc.parse(fh.read())
    if _textdoc.get_str(doc, "format") != "tssf/1":
        raise FormatError("not a tssf/1 model file")
    k = _textdoc.get_int(doc, "k")
    kind = _textdoc.get_str(doc, "feature_kind")
    if kind not in FEATURE_KINDS:
        raise FormatError(f"unknown feature kind {kind!r}")
    model = TssfModel(
        filters=_textdoc.get_matrix(doc, "filters"),
        beta=_textdoc.get_vector(doc, "beta"),
        intercept=_textdoc.get_float(doc, "intercept"),
        reference_mean=_textdoc.get_matrix(doc, "reference_mean"),
        full_filters=_textdoc.get_matrix(doc, "full_filters"),
        sort_index=_textdoc.get_vector(doc, "sort_index", dtype=int),
        filtered_mean=_textdoc.get_matrix(doc, "filtered_mean"),
        feature_kind=kind,
    )
    if model.k != k or model.beta.size != k:
        raise FormatError("inconsistent k in model file")
    return model
