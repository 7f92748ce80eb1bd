"""End-to-end classification pipelines over raw trial tensors.

Seven named pipelines cover the baseline and the tangent-space family:

=================== ====================================================
CSP                 CSP filters, log-variance features, linear SVM
TSSF_Var_1_step     tangent-space filters, log-variance, one-step scores
TSSF_Var_2_step     same features, second SVM
TSSF_Cov_1_step     diagonal of the log filtered covariance, one-step
TSSF_Cov_2_step     same features, second SVM
TSSF_LogCov_2_step  full tangent vector of the filtered covariance, SVM
TS_AIRM             full tangent-space vectors at the Frechet mean, SVM
=================== ====================================================

Every pipeline object exposes ``fit(trials, labels)`` and
``decision_scores(trials)`` on C x N x T tensors. Test-trial covariances
are always recomputed from the filtered data, never by congruence of a
stored full covariance, mirroring online use.
"""

from dataclasses import dataclass, field

import numpy as np

from .csp import fit_csp
from .dataio import empirical_covariance
from .errors import DegenerateModel, InvalidInput
from .linmodel import ClassifierConfig, fit_from_config
from .manifold import _half_powers, frechet_mean
from .tssf import (
    DIAGLOGCOV,
    LOGCOV,
    LOGVAR,
    _vec_whitened_log,
    extract_tssf,
)

PIPELINE_NAMES = (
    "CSP",
    "TSSF_Var_1_step",
    "TSSF_Var_2_step",
    "TSSF_Cov_1_step",
    "TSSF_Cov_2_step",
    "TSSF_LogCov_2_step",
    "TS_AIRM",
)

_TSSF_VARIANTS = {
    "TSSF_Var_1_step": (LOGVAR, True),
    "TSSF_Var_2_step": (LOGVAR, False),
    "TSSF_Cov_1_step": (DIAGLOGCOV, True),
    "TSSF_Cov_2_step": (DIAGLOGCOV, False),
    "TSSF_LogCov_2_step": (LOGCOV, False),
}


@dataclass(frozen=True)
class PipelineSpec:
    """A pipeline name plus its filter count and classifier settings."""

    name: str
    k: int = 6
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def validate(self):
        if self.name not in PIPELINE_NAMES:
            raise InvalidInput(
                f"unknown pipeline {self.name!r}; choose from {', '.join(PIPELINE_NAMES)}"
            )
        if self.k < 1:
            raise InvalidInput("k must be >= 1")
        self.classifier.validate()
        return self


def make_pipeline(spec):
    """Build a fresh, unfitted pipeline object from a spec."""
    spec.validate()
    if spec.name == "CSP":
        return CspPipeline(spec.k, spec.classifier)
    if spec.name == "TS_AIRM":
        return TangentSpacePipeline(spec.classifier)
    kind, one_step = _TSSF_VARIANTS[spec.name]
    return TssfPipeline(spec.name, spec.k, kind, one_step, spec.classifier)


def _check_fit_inputs(trials, labels):
    trials = np.ascontiguousarray(trials, dtype=float)
    labels = np.asarray(labels)
    if trials.ndim != 3:
        raise InvalidInput("trials must be a C x N x T tensor")
    if labels.shape != (trials.shape[2],):
        raise InvalidInput("need one label per trial")
    if np.unique(labels).size < 2:
        raise DegenerateModel("training data contains a single class")
    return trials, labels


def _trial_covariances(trials):
    return np.array(
        [empirical_covariance(trials[:, :, t]) for t in range(trials.shape[2])]
    )


def _lean_cov(x):
    # prediction-path covariance: same arithmetic as empirical_covariance
    # with default flags, minus the SPD revalidation (costs an extra
    # eigendecomposition per trial, which online use cannot afford)
    centered = x - x.mean(axis=1, keepdims=True)
    return (centered @ centered.T) / x.shape[1]


def _filter_all(filters, trials):
    # (C, N, T) is C-contiguous, so channel-space filtering maps onto one
    # large matmul over the flattened (N, T) axes
    c, n, t = trials.shape
    flat = filters.T @ trials.reshape(c, n * t)
    return flat.reshape(filters.shape[1], n, t)


class CspPipeline:
    name = "CSP"
    feature_kind = LOGVAR

    def __init__(self, k, classifier=None, class_mean="arithmetic"):
        self.k = k
        self.classifier_cfg = classifier or ClassifierConfig()
        self.class_mean = class_mean
        self.model = None
        self.clf = None

    def fit(self, trials, labels):
        trials, labels = _check_fit_inputs(trials, labels)
        covs = _trial_covariances(trials)
        self.model = fit_csp(covs, labels, self.k, class_mean=self.class_mean)
        feats = self._features(trials)
        self.clf = fit_from_config(feats, labels, self.classifier_cfg)
        return self

    def _features(self, trials):
        filtered_all = _filter_all(self.model.filters, trials)
        out = np.empty((trials.shape[2], self.k))
        for t in range(trials.shape[2]):
            cov = _lean_cov(np.ascontiguousarray(filtered_all[:, :, t]))
            out[t] = np.log(np.diag(cov))
        return out

    def decision_scores(self, trials):
        feats = self._features(np.ascontiguousarray(trials, dtype=float))
        return feats @ self.clf.weights + self.clf.intercept


class TssfPipeline:
    def __init__(self, name, k, kind, one_step, classifier=None):
        self.name = name
        self.k = k
        self.feature_kind = kind
        self.one_step = one_step
        self.classifier_cfg = classifier or ClassifierConfig()
        self.model = None
        self.second = None

    def fit(self, trials, labels):
        trials, labels = _check_fit_inputs(trials, labels)
        covs = _trial_covariances(trials)
        self.model = extract_tssf(
            covs, labels, self.k, model_cfg=self.classifier_cfg, feature_kind=self.feature_kind
        )
        self._prepare_feature_maps()
        if not self.one_step:
            feats = self._features(trials)
            self.second = fit_from_config(feats, labels, self.classifier_cfg)
        return self

    def _prepare_feature_maps(self):
        if self.feature_kind == LOGCOV:
            w, v = np.linalg.eigh(self.model.filtered_mean)
            self._fm_half = (v * np.sqrt(w)) @ v.T
            self._fm_inv_half = (v / np.sqrt(w)) @ v.T
            k = self.k
            rows, cols = np.tril_indices(k)
            self._vec_rows, self._vec_cols = rows, cols
            self._vec_weights = np.where(rows == cols, 1.0, np.sqrt(2.0))

    def _features_from_cov(self, cov):
        if self.feature_kind == LOGVAR:
            return np.log(np.diag(cov))
        if self.feature_kind == DIAGLOGCOV:
            w, v = np.linalg.eigh(cov)
            return (v * v) @ np.log(w)  # diagonal of V log(w) V^T
        # logcov: tangent vector of the covariance at the filtered mean
        m = self._fm_inv_half @ cov @ self._fm_inv_half
        w, v = np.linalg.eigh(0.5 * (m + m.T))
        ambient = self._fm_half @ ((v * np.log(w)) @ v.T) @ self._fm_half
        return ambient[self._vec_rows, self._vec_cols] * self._vec_weights

    def _features(self, trials):
        filtered_all = _filter_all(self.model.filters, trials)
        n_trials = trials.shape[2]
        out = None
        for t in range(n_trials):
            cov = _lean_cov(np.ascontiguousarray(filtered_all[:, :, t]))
            feats = self._features_from_cov(cov)
            if out is None:
                out = np.empty((n_trials, feats.size))
            out[t] = feats
        return out

    def decision_scores(self, trials):
        feats = self._features(np.ascontiguousarray(trials, dtype=float))
        if self.one_step:
            return feats @ self.model.beta + self.model.intercept
        return feats @ self.second.weights + self.second.intercept


class TangentSpacePipeline:
    name = "TS_AIRM"
    feature_kind = "tangent"
    k = 0  # no spatial filtering; feature dim is C(C+1)/2

    def __init__(self, classifier=None):
        self.classifier_cfg = classifier or ClassifierConfig()
        self.reference_mean = None
        self._inv_half = None
        self.clf = None

    def fit(self, trials, labels):
        trials, labels = _check_fit_inputs(trials, labels)
        covs = _trial_covariances(trials)
        self.reference_mean = frechet_mean(covs)
        _, self._inv_half = _half_powers(self.reference_mean)
        c = trials.shape[0]
        rows, cols = np.tril_indices(c)
        self._vec_rows, self._vec_cols = rows, cols
        self._vec_weights = np.where(rows == cols, 1.0, np.sqrt(2.0))
        vectors = np.array([_vec_whitened_log(self._inv_half, cov) for cov in covs])
        self.clf = fit_from_config(vectors, labels, self.classifier_cfg)
        return self

    def decision_scores(self, trials):
        trials = np.ascontiguousarray(trials, dtype=float)
        scores = np.empty(trials.shape[2])
        for t in range(trials.shape[2]):
            cov = _lean_cov(np.ascontiguousarray(trials[:, :, t]))
            m = self._inv_half @ cov @ self._inv_half
            w, v = np.linalg.eigh(0.5 * (m + m.T))
            log_m = (v * np.log(w)) @ v.T
            vec_t = log_m[self._vec_rows, self._vec_cols] * self._vec_weights
            scores[t] = self.clf.weights @ vec_t + self.clf.intercept
        return scores
