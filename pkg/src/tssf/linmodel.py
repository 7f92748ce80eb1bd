"""Linear models on tangent vectors.

The classifiers used on tangent-space features: an L2-regularized linear
SVM solved by a deterministic most-violating-pair dual ascent, Fisher LDA,
and regularization grid search with stratified inner cross-validation.

The SVM minimizes ``0.5 ||w||^2 + reg * mean_i hinge(1 - y_i (w.x_i + b))``
with an unpenalized intercept. Averaging the loss (rather than summing it)
makes the optimum invariant to duplicating the dataset.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _textdoc
from .errors import FormatError, InvalidInput
from .evalstats import roc_auc, stratified_folds

DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class LinearModel:
    """Affine decision function ``score(x) = weights . x + intercept``."""

    weights: np.ndarray
    intercept: float
    reg: float

    @property
    def feature_dim(self):
        return self.weights.size


@dataclass
class SvmFitInfo:
    """Solver diagnostics: the recorded objective is the dual objective in
    minimization form, so it is non-increasing over iterations."""

    objective_path: np.ndarray = field(default_factory=lambda: np.array([]))
    iterations: int = 0
    kkt_gap: float = np.nan


def _check_dataset(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if x.ndim != 2:
        raise InvalidInput("feature matrix must be 2-D (samples x features)")
    if y.shape != (x.shape[0],):
        raise InvalidInput("label count must match sample count")
    if not np.all(np.isin(y, (-1, 1))):
        raise InvalidInput("labels must be -1 or +1")
    y = y.astype(float)
    npos, nneg = int(np.sum(y > 0)), int(np.sum(y < 0))
    if npos == 0 or nneg == 0:
        raise InvalidInput("both classes must be present")
    return x, y, npos, nneg


def svm_objective(weights, intercept, x, y, reg):
    """Primal objective: ``0.5 ||w||^2 + reg * mean(hinge)``."""
    margins = 1.0 - y * (x @ weights + intercept)
    hinge = np.maximum(0.0, margins)
    return 0.5 * float(weights @ weights) + reg * float(hinge.mean())


def fit_linear_svm(x, y, reg, tol=1e-6, max_iter=10**5, full_output=False):
    """Fit the L2-regularized hinge-loss SVM.

    Parameters
    ----------
    x : ndarray, shape (T, d)
        Feature vectors (tangent vectors or filtered features).
    y : ndarray, shape (T,)
        Labels in {-1, +1}; each class needs at least 2 samples.
    reg : float
        Positive hinge-loss weight (larger = less regularization).
    tol : float
        Stop when the maximal KKT violation (most-violating-pair gap)
        drops below ``tol``.
    max_iter : int
        Hard cap on pair updates.
    full_output : bool
        Also return an :class:`SvmFitInfo`.

    Returns
    -------
    LinearModel, or (LinearModel, SvmFitInfo) when ``full_output``.
    """
    x, y, npos, nneg = _check_dataset(x, y)
    if min(npos, nneg) < 2:
        raise InvalidInput("need at least 2 samples per class")
    if reg <= 0:
        raise InvalidInput("reg must be positive")
    weights, intercept, info = _solve_svm_dual(x, y, reg, tol, max_iter)
    model = LinearModel(weights=weights, intercept=intercept, reg=float(reg))
    return (model, info) if full_output else model


def _solve_svm_dual(x, y, reg, tol, max_iter, gram=None):
    t = x.shape[0]
    cap = reg / t
    if gram is None:
        gram = x @ x.T
    alpha = np.zeros(t)
    qalpha = np.zeros(t)  # (Q alpha)_i with Q_ij = y_i y_j gram_ij
    dual = 0.0
    path = [dual]
    pos = y > 0
    stall_window = 2 * t
    last_window_dual = np.inf
    it = 0
    m_val = np.inf
    big_m_val = -np.inf
    while it < max_iter:
        # b candidates y_i - f_i; KKT requires max over "up" <= min over "low"
        cand = y - y * qalpha
        up = (pos & (alpha < cap)) | (~pos & (alpha > 0))
        low = (~pos & (alpha < cap)) | (pos & (alpha > 0))
        up_vals = np.where(up, cand, -np.inf)
        low_vals = np.where(low, cand, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        m_val = up_vals[i]
        big_m_val = low_vals[j]
        if m_val - big_m_val <= tol:
            break
        if it > 0 and it % stall_window == 0:
            if dual == last_window_dual:
                break  # exact stall; numerically converged
            last_window_dual = dual
        curvature = gram[i, i] + gram[j, j] - 2.0 * gram[i, j]
        curvature = max(curvature, 1e-12)
        slope = y[i] * (qalpha[i] - 1.0) - y[j] * (qalpha[j] - 1.0)
        step = -slope / curvature
        lo, hi = _step_bounds(alpha[i], alpha[j], y[i], y[j], cap)
        step = min(max(step, lo), hi)
        if step == 0.0:
            break
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        qalpha += step * y * (gram[:, i] - gram[:, j])
        dual += slope * step + 0.5 * curvature * step * step
        path.append(dual)
        it += 1
    if np.isfinite(m_val) and np.isfinite(big_m_val):
        intercept = 0.5 * (m_val + big_m_val)
    else:  # all multipliers pinned to one bound; fall back to feasible value
        intercept = float(np.median(y - y * qalpha))
    weights = x.T @ (alpha * y)
    info = SvmFitInfo(
        objective_path=np.asarray(path),
        iterations=it,
        kkt_gap=float(m_val - big_m_val),
    )
    return weights, float(intercept), info


def _step_bounds(ai, aj, yi, yj, cap):
    # alpha_i moves by +yi*step, alpha_j by -yj*step; keep both in [0, cap]
    if yi > 0:
        lo_i, hi_i = -ai, cap - ai
    else:
        lo_i, hi_i = ai - cap, ai
    if yj > 0:
        lo_j, hi_j = aj - cap, aj
    else:
        lo_j, hi_j = -aj, cap - aj
    return max(lo_i, lo_j), min(hi_i, hi_j)


def fit_lda(x, y):
    """Fisher LDA: ``w = S_within^{-1} (mu_pos - mu_neg)``.

    The within scatter is the unnormalized sum of outer products of the
    class-centered samples. If it is singular, a ridge of
    ``1e-10 * trace / dim`` is added (reported via a warning). The
    intercept puts the decision boundary at the midpoint of the projected
    class means.
    """
    x, y, _, _ = _check_dataset(x, y)
    mu_pos = x[y > 0].mean(axis=0)
    mu_neg = x[y < 0].mean(axis=0)
    centered = x.copy()
    centered[y > 0] -= mu_pos
    centered[y < 0] -= mu_neg
    scatter = centered.T @ centered
    diff = mu_pos - mu_neg
    try:
        cho = scipy.linalg.cho_factor(scatter)
        weights = scipy.linalg.cho_solve(cho, diff)
    except scipy.linalg.LinAlgError:
        ridge = 1e-10 * np.trace(scatter) / scatter.shape[0]
        if ridge <= 0:
            ridge = 1e-10
        warnings.warn(
            f"within scatter is singular; adding ridge {ridge:g} to its diagonal",
            stacklevel=2,
        )
        scatter = scatter + ridge * np.eye(scatter.shape[0])
        weights = scipy.linalg.cho_solve(scipy.linalg.cho_factor(scatter), diff)
    intercept = -float(weights @ (mu_pos + mu_neg)) / 2.0
    return LinearModel(weights=weights, intercept=intercept, reg=0.0)


def grid_search_cv(x, y, grid=None, folds=5, seed=0, tol=1e-6):
    """Pick the SVM regularization by stratified inner cross-validation.

    Each grid value is scored by its mean ROC-AUC over ``folds``
    stratified splits (seeded, so the search is deterministic); ties go
    to the smallest value. The returned model is refit on all data.

    Returns
    -------
    (best_reg, LinearModel)
    """
    x, y, npos, nneg = _check_dataset(x, y)
    grid = DEFAULT_GRID if grid is None else tuple(grid)
    if not grid:
        raise InvalidInput("grid must be non-empty")
    if any(g <= 0 for g in grid):
        raise InvalidInput("grid values must be positive")
    if folds < 2:
        raise InvalidInput("folds must be >= 2")
    if folds > min(npos, nneg):
        raise InvalidInput(
            f"{folds} folds exceed the smaller class size {min(npos, nneg)}"
        )
    test_folds = stratified_folds(y, folds, seed)
    splits = []
    for test_idx in test_folds:
        train_idx = np.setdiff1d(np.arange(y.size), test_idx)
        xt = x[train_idx]
        splits.append((train_idx, test_idx, xt @ xt.T))
    best_reg, best_auc = None, -np.inf
    for reg in grid:
        aucs = []
        for train_idx, test_idx, gram in splits:
            w, b, _ = _solve_svm_dual(
                x[train_idx], y[train_idx], reg, tol, 10**5, gram=gram
            )
            aucs.append(roc_auc(x[test_idx] @ w + b, y[test_idx]))
        mean_auc = float(np.mean(aucs))
        if mean_auc > best_auc or (mean_auc == best_auc and reg < best_reg):
            best_reg, best_auc = reg, mean_auc
    model = fit_linear_svm(x, y, best_reg, tol=tol)
    return best_reg, model


@dataclass(frozen=True)
class ClassifierConfig:
    """How to fit a linear model on a feature matrix.

    ``kind`` is "svm" or "lda". For the SVM, a fixed ``reg`` wins over
    ``grid``; with neither, the default grid {0.01, 0.1, 1, 10, 100} is
    searched by stratified inner CV.
    """

    kind: str = "svm"
    reg: float = None
    grid: tuple = None
    folds: int = 5
    seed: int = 0
    tol: float = 1e-6

    def validate(self):
        if self.kind not in ("svm", "lda"):
            raise InvalidInput(f"unknown classifier kind {self.kind!r}")
        if self.reg is not None and self.reg <= 0:
            raise InvalidInput("reg must be positive")
        return self


def fit_from_config(x, y, cfg=None):
    """Fit a LinearModel according to a ClassifierConfig."""
    cfg = (cfg or ClassifierConfig()).validate()
    if cfg.kind == "lda":
        return fit_lda(x, y)
    if cfg.reg is not None:
        return fit_linear_svm(x, y, cfg.reg, tol=cfg.tol)
    _, model = grid_search_cv(
        x, y, grid=cfg.grid, folds=cfg.folds, seed=cfg.seed, tol=cfg.tol
    )
    return model


def decision_value(model, x):
    """Evaluate ``weights . x + intercept``; the label is its sign."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.feature_dim,):
        raise InvalidInput(
            f"feature vector has shape {x.shape}, model expects ({model.feature_dim},)"
        )
    return float(model.weights @ x + model.intercept)


def save_linear_model(model, path):
    """Write a model as a structured-text document (human-diffable)."""
    text = _textdoc.dump(
        [
            ("weights", np.asarray(model.weights)),
            ("intercept", float(model.intercept)),
            ("reg", float(model.reg)),
            ("feature_dim", model.feature_dim),
        ]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_linear_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = _textdoc.parse(fh.read())
    weights = _textdoc.get_vector(doc, "weights")
    dim = _textdoc.get_int(doc, "feature_dim")
    if weights.size != dim:
        raise FormatError(f"feature_dim {dim} does not match {weights.size} weights")
    return LinearModel(
        weights=weights,
        intercept=_textdoc.get_float(doc, "intercept"),
        reg=_textdoc.get_float(doc, "reg"),
    )
