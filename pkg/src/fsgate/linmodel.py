"""Binary logistic regression, optionally L1-penalized.

Training is full-batch and starts from all-zero weights, so identical
inputs give identical models. The unpenalized problem is solved by gradient
descent with backtracking; the L1 problem by proximal gradient
(soft-thresholding) with the same backtracking rule. The intercept is
never penalized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fsgate._backend import kernels

PROB_CLIP = 1e-15


class TrainingError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PenaltySpec:
    kind: str = "none"
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "l1"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.strength < 0:
            raise ValueError("penalty strength must be >= 0")
        if self.kind == "none" and self.strength != 0:
            raise ValueError("strength must be 0 when kind is 'none'")

    @classmethod
    def l1(cls, strength: float) -> "PenaltySpec":
        return cls("l1", float(strength))


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-6
    max_iters: int = 5000
    # optional L2 term (mean-loss scale) for separable folds; 0 = off
    ridge: float = 0.0
    trace: bool = False


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    penalty: PenaltySpec
    converged: bool
    iterations: int
    final_gradient_norm: float
    loss_trace: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def to_text(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names is not None else [f"x{j}" for j in range(len(self.weights))]
        lines = [f"{n} = {float(w)!r}" for n, w in zip(names, self.weights)]
        lines += [
            f"intercept = {float(self.intercept)!r}",
            f"penalty = {self.penalty.kind} {self.penalty.strength!r}",
            f"converged = {str(self.converged).lower()}",
            f"iterations = {self.iterations}",
            f"final_gradient_norm = {float(self.final_gradient_norm)!r}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> tuple[list[str], "LogisticModel"]:
        kv = []
        for line in text.splitlines():
            if "=" in line:
                k, _, v = line.partition("=")
                kv.append((k.strip(), v.strip()))
        meta = dict(kv[-5:])
        names = [k for k, _ in kv[:-5]]
        kind, strength = meta["penalty"].split()
        model = cls(
            weights=np.array([float(v) for _, v in kv[:-5]]),
            intercept=float(meta["intercept"]),
            penalty=PenaltySpec(kind, float(strength)),
            converged=meta["converged"] == "true",
            iterations=int(meta["iterations"]),
            final_gradient_norm=float(meta["final_gradient_norm"]),
        )
        return names, model


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise TrainingError(f"dimension mismatch: X {X.shape}, y {y.shape}")
    if X.shape[0] < 2:
        raise TrainingError("need at least 2 rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise TrainingError("non-finite input")
    if not np.all((y == 0) | (y == 1)):
        raise TrainingError("labels must be 0/1")
    if y.min() == y.max():
        raise TrainingError("only one class present in y")
    return X, y


def _fit(X, y, penalty, opts, w0, b0):
    w, b, converged, iters, gnorm, trace = kernels.logistic_fit(
        X, y, w0, float(b0), penalty.strength, float(opts.ridge),
        float(opts.tolerance), int(opts.max_iters), bool(opts.trace),
    )
    w = np.asarray(w)
    w.setflags(write=False)
    return LogisticModel(
        weights=w,
        intercept=float(b),
        penalty=penalty,
        converged=bool(converged),
        iterations=int(iters),
        final_gradient_norm=float(gnorm),
        loss_trace=np.asarray(trace),
    )


def train(X, y, penalty: PenaltySpec | None = None, opts: SolverOptions | None = None) -> LogisticModel:
    """Minimize mean negative log-likelihood (+ L1 on the weights)."""
    penalty = penalty or PenaltySpec()
    opts = opts or SolverOptions()
    X, y = _check_xy(X, y)
    model = _fit(X, y, penalty, opts, np.zeros(X.shape[1]), 0.0)
    if not model.converged:
        warnings.warn(
            f"logistic regression stopped after {model.iterations} iterations "
            f"(gradient norm {model.final_gradient_norm:.3g})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return model


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise ValueError(f"model has {model.weights.shape[0]} weights, X has shape {X.shape}")
    z = X @ model.weights + model.intercept
    q = np.empty_like(z)
    pos = z >= 0
    q[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    q[~pos] = e / (1.0 + e)
    return np.clip(q, PROB_CLIP, 1.0 - PROB_CLIP)


def nll(weights, intercept, X, y) -> float:
    """Mean negative log-likelihood, without penalty."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return float(kernels.logistic_loss(X, y, np.asarray(weights, dtype=np.float64), float(intercept)))


def nll_gradient(weights, intercept, X, y) -> tuple[np.ndarray, float]:
    """``((1/N) X^T (q - y), (1/N) sum(q - y))`` for the unpenalized loss."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != w.shape[0] or X.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: X {X.shape}, w {w.shape}, y {y.shape}")
    gw, gb = kernels.logistic_gradient(X, y, w, float(intercept))
    return np.asarray(gw), float(gb)


def soft_threshold(v, t):
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lambda_max(X, y) -> float:
    """Smallest L1 strength whose solution has all weights at zero."""
    X, y = _check_xy(X, y)
    return float(np.max(np.abs(X.T @ (y - y.mean()))) / X.shape[0])


def regularization_path(
    X, y, n_lambdas: int = 100, ratio: float = 1e-3, opts: SolverOptions | None = None
) -> list[tuple[float, np.ndarray]]:
    """L1 solutions on a log-spaced grid from ``lambda_max`` down to ``lambda_max * ratio``.

    Each solve is warm-started from the previous one; the first starts at the
    intercept-only optimum, where the weights are exactly zero.
    """
    opts = opts or SolverOptions()
    X, y = _check_xy(X, y)
    ybar = y.mean()
    b0 = math.log(ybar / (1.0 - ybar))
    # gradient at the intercept-only optimum, through the same kernel the solver uses
    g0, _ = kernels.logistic_gradient(X, y, np.zeros(X.shape[1]), b0)
    lam_max = float(np.max(np.abs(g0)))
    if n_lambdas == 1:
        grid = np.array([lam_max])
    else:
        grid = lam_max * np.logspace(0.0, math.log10(ratio), n_lambdas) if lam_max > 0 else np.zeros(n_lambdas)
        grid[0] = lam_max
    path = []
    w, b = np.zeros(X.shape[1]), b0
    for lam in grid:
        m = _fit(X, y, PenaltySpec.l1(float(lam)), opts, w, b)
        w, b = np.array(m.weights), m.intercept
        path.append((float(lam), np.array(m.weights)))
    return path
