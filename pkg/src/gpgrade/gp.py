"""Exact Gaussian-process regression with evidence-based hyperparameter fitting.

Standard Cholesky formulation: the training system (K + noise*I) alpha = y
is factorized once per hyperparameter setting, the log marginal likelihood
and its analytic log-space gradients drive an L-BFGS-B search (with
restarts), and prediction reads the posterior mean and standard deviation
off the retained factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular
from scipy.optimize import minimize

from .errors import InputError, NumericalError
from .kernel import (
    NOISE_VARIANCE_FLOOR,
    Hyperparams,
    kernel_matrix,
    pairwise_sq_dists,
    rbf_from_sq_dists,
)

if TYPE_CHECKING:
    from .data import NormStats

# Relative diagonal inflation attempted, in order, until the Cholesky
# factorization succeeds.
JITTER_LEVELS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)

_LOG_2PI = math.log(2.0 * math.pi)

# Objective value reported to the optimizer when the evidence is not
# computable at a trial point; large enough to reject the point, finite
# so L-BFGS-B keeps going.
_BAD_OBJECTIVE = 1e25

_PREDICT_BLOCK = 2048


@dataclass(frozen=True)
class FitConfig:
    """Knobs for hyperparameter fitting.

    ``grade_targets`` enforces the integer 0..4 target domain; switch it
    off to fit arbitrary real-valued targets (used by synthetic-recovery
    checks).
    """

    max_train: int = 2000
    restarts: int = 3
    seed: int = 0
    max_iter: int = 200
    lml_tol: float = 1e-6
    grad_tol: float = 1e-5
    grade_targets: bool = True


@dataclass(frozen=True)
class Prediction:
    """Posterior mean (continuous grade) and standard deviation."""

    mean: float
    std: float


@dataclass
class GPModel:
    """Trained regressor state. Treat instances as immutable once built."""

    hp: Hyperparams
    X_train: np.ndarray
    y_train: np.ndarray
    chol_L: np.ndarray
    alpha: np.ndarray
    normalizer: "NormStats | None" = None
    train_subset_seed: int = 0


def cholesky_with_jitter(M) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of M, escalating diagonal jitter on failure.

    Jitter levels are multiples of the mean diagonal of M; the value that
    succeeded is returned alongside the factor. Raises NumericalError
    (naming the failing diagonal index) if every level fails.
    """
    M = np.ascontiguousarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise InputError("matrix entries must be finite")
    n = M.shape[0]
    scale = float(np.mean(np.diag(M)))
    last_info = 0
    for level in JITTER_LEVELS:
        jitter = level * scale
        target = M if jitter == 0.0 else M + jitter * np.eye(n)
        L, info = lapack.dpotrf(target, lower=1, clean=1, overwrite_a=False)
        if info == 0:
            return L, jitter
        last_info = int(info)
    raise NumericalError(
        f"Cholesky factorization failed at all jitter levels; "
        f"leading minor of order {last_info} is not positive definite"
    )


def _validate_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise InputError(f"X must be 2-d, got ndim={X.ndim}")
    if y.ndim != 1:
        raise InputError(f"y must be 1-d, got ndim={y.ndim}")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if X.shape[0] < 2:
        raise InputError("at least 2 training samples are required")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise InputError("training data must be finite")
    return X, y


def _evidence(S: np.ndarray, y: np.ndarray, hp: Hyperparams):
    """Log marginal likelihood, its gradient, and the factorized system.

    ``S`` is the precomputed squared-distance matrix of the training
    inputs; returns (lml, grad, L, alpha) so callers can reuse the
    factorization at the optimum.
    """
    n = y.shape[0]
    K = rbf_from_sq_dists(S, hp)
    Ky = K + hp.noise_variance * np.eye(n)
    L, _ = cholesky_with_jitter(Ky)
    alpha = cho_solve((L, True), y)

    lml = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * _LOG_2PI
    )

    # 0.5 * tr((alpha alpha^T - Ky^-1) dK/dtheta) for each log-parameter.
    Ky_inv = cho_solve((L, True), np.eye(n))
    T = np.outer(alpha, alpha) - Ky_inv
    ell2 = hp.length_scale**2
    raw_noise = math.exp(hp.log_noise_variance)
    noise_deriv = raw_noise if raw_noise > NOISE_VARIANCE_FLOOR else 0.0
    grad = np.array(
        [
            0.5 * float(np.sum(T * (K * (S / ell2)))),
            0.5 * float(np.sum(T * K)),
            0.5 * float(np.trace(T)) * noise_deriv,
        ]
    )
    return lml, grad, L, alpha


def log_marginal_likelihood(X, y, hp: Hyperparams) -> tuple[float, np.ndarray]:
    """Evidence of (X, y) under ``hp`` and its gradient in log-space.

    Gradient order matches Hyperparams.to_log_array: (log length-scale,
    log signal variance, log noise variance).
    """
    X, y = _validate_training_data(X, y)
    S = pairwise_sq_dists(X)
    lml, grad, _, _ = _evidence(S, y, hp)
    return lml, grad


def build_model(
    X,
    y,
    hp: Hyperparams,
    normalizer: "NormStats | None" = None,
    train_subset_seed: int = 0,
) -> GPModel:
    """Assemble a GPModel at fixed hyperparameters (no optimization)."""
    X, y = _validate_training_data(X, y)
    K = kernel_matrix(X, X, hp)
    Ky = K + hp.noise_variance * np.eye(X.shape[0])
    L, _ = cholesky_with_jitter(Ky)
    alpha = cho_solve((L, True), y)
    return GPModel(
        hp=hp,
        X_train=X,
        y_train=y,
        chol_L=L,
        alpha=alpha,
        normalizer=normalizer,
        train_subset_seed=train_subset_seed,
    )


def fit(
    X,
    y,
    config: FitConfig,
    normalizer: "NormStats | None" = None,
) -> GPModel:
    """Fit hyperparameters by maximizing the evidence, then freeze the model.

    If there are more rows than ``config.max_train``, a uniform random
    subset is drawn with ``config.seed`` (recorded on the model). Each
    restart starts the length-scale from a seeded draw around the median
    pairwise distance; the best optimum across restarts wins and is never
    worse than any initialization point.
    """
    X, y = _validate_training_data(X, y)
    if config.max_train < 2:
        raise InputError("max_train must be at least 2")
    if config.restarts < 1:
        raise InputError("restarts must be at least 1")
    if config.grade_targets and not np.isin(y, (0.0, 1.0, 2.0, 3.0, 4.0)).all():
        raise InputError("targets must be integer grades in 0..4")

    rng = np.random.default_rng(config.seed)
    if X.shape[0] > config.max_train:
        idx = np.sort(rng.choice(X.shape[0], size=config.max_train, replace=False))
        X = X[idx]
        y = y[idx]
    S = pairwise_sq_dists(X)
    n = X.shape[0]

    upper = np.triu_indices(n, 1)
    median_dist = math.sqrt(float(np.median(S[upper])))
    if median_dist <= 0.0:
        median_dist = 1.0
    var_y = float(np.var(y))
    if var_y <= 0.0:
        var_y = 1.0
    log_sig0 = math.log(var_y)
    log_noise0 = math.log(0.1 * var_y)

    def negative_evidence(theta):
        try:
            hp = Hyperparams.from_log_array(theta)
            lml, grad, _, _ = _evidence(S, y, hp)
        except (InputError, NumericalError, OverflowError, FloatingPointError):
            return _BAD_OBJECTIVE, np.zeros(3)
        if not np.isfinite(lml) or not np.isfinite(grad).all():
            return _BAD_OBJECTIVE, np.zeros(3)
        return -lml, -grad

    best_lml = -np.inf
    best_theta = None
    for _ in range(config.restarts):
        log_l0 = rng.uniform(
            math.log(0.5 * median_dist), math.log(2.0 * median_dist)
        )
        theta0 = np.array([log_l0, log_sig0, log_noise0])
        f0, _ = negative_evidence(theta0)
        result = minimize(
            negative_evidence,
            theta0,
            jac=True,
            method="L-BFGS-B",
            options={
                "maxiter": config.max_iter,
                "ftol": config.lml_tol,
                "gtol": config.grad_tol,
            },
        )
        # The optimizer never worsens its own start, but keep the
        # initialization as a candidate in case it fails outright.
        for value, theta in ((-result.fun, result.x), (-f0, theta0)):
            if value > best_lml:
                best_lml = value
                best_theta = theta

    if best_theta is None or not np.isfinite(best_lml) or best_lml <= -_BAD_OBJECTIVE / 2:
        raise NumericalError("evidence was non-finite at every restart")

    hp = Hyperparams.from_log_array(best_theta)
    _, _, L, alpha = _evidence(S, y, hp)
    return GPModel(
        hp=hp,
        X_train=X,
        y_train=y,
        chol_L=L,
        alpha=alpha,
        normalizer=normalizer,
        train_subset_seed=config.seed,
    )


def predict(model: GPModel, X_query) -> list[Prediction]:
    """Posterior mean and standard deviation at each query row.

    Queries must already be normalized with the model's statistics; the
    pipeline layer is responsible for that. The reported variance includes
    the learned observation noise and is clamped at zero before the root.
    """
    Xq = np.ascontiguousarray(X_query, dtype=np.float64)
    if Xq.ndim != 2:
        raise InputError(f"query matrix must be 2-d, got ndim={Xq.ndim}")
    if Xq.shape[1] != model.X_train.shape[1]:
        raise InputError(
            f"query dimension {Xq.shape[1]} does not match model dimension "
            f"{model.X_train.shape[1]}"
        )
    sig2 = model.hp.signal_variance
    noise = model.hp.noise_variance
    out: list[Prediction] = []
    for start in range(0, Xq.shape[0], _PREDICT_BLOCK):
        block = Xq[start : start + _PREDICT_BLOCK]
        Kq = kernel_matrix(block, model.X_train, model.hp)
        mean = Kq @ model.alpha
        W = solve_triangular(model.chol_L, Kq.T, lower=True)
        var = sig2 + noise - np.einsum("ij,ij->j", W, W)
        np.clip(var, 0.0, None, out=var)
        std = np.sqrt(var)
        out.extend(
            Prediction(float(m), float(s)) for m, s in zip(mean, std)
        )
    return out
