"""Yeo-Johnson power transform followed by standardization.

Parameters are fit on a training fold only and then applied unchanged to
held-out rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fsgate._backend import kernels

LAMBDA_BOUNDS = (-5.0, 5.0)
LAMBDA_TOL = 1e-6
DEGENERATE_STD = 1e-12
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def yeo_johnson(x, lam: float):
    """Yeo-Johnson transform of a scalar or array for a fixed ``lam``."""
    if np.ndim(x) == 0:
        return float(kernels.yj_transform(np.array([x], dtype=np.float64), float(lam))[0])
    arr = np.asarray(x, dtype=np.float64)
    return kernels.yj_transform(arr.ravel(), float(lam)).reshape(arr.shape)


def inverse_yeo_johnson(y, lam: float):
    y = np.asarray(y, dtype=np.float64)
    out = np.empty_like(y)
    pos = y >= 0
    if lam == 0.0:
        out[pos] = np.expm1(y[pos])
    else:
        out[pos] = np.expm1(np.log1p(lam * y[pos]) / lam)
    if lam == 2.0:
        out[~pos] = -np.expm1(-y[~pos])
    else:
        out[~pos] = -np.expm1(np.log1p(-(2.0 - lam) * y[~pos]) / (2.0 - lam))
    return out if out.ndim else float(out)


def log_likelihood(column, lam: float) -> float:
    """Profile log-likelihood of ``lam`` for one column (biased variance)."""
    return float(kernels.yj_loglik(np.asarray(column, dtype=np.float64), float(lam)))


def fit_lambda(column) -> float:
    """Maximum-likelihood ``lam`` by golden-section search on [-5, 5].

    A constant column returns 1.0.
    """
    x = np.ascontiguousarray(column, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("need at least 2 values to fit lambda")
    if np.all(x == x[0]):
        return 1.0
    a, b = LAMBDA_BOUNDS
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc = kernels.yj_loglik(x, c)
    fd = kernels.yj_loglik(x, d)
    while b - a > LAMBDA_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = kernels.yj_loglik(x, c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = kernels.yj_loglik(x, d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class TransformParams:
    lambdas: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        for name in ("lambdas", "means", "stds"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def subset(self, columns: Sequence[int]) -> "TransformParams":
        idx = list(columns)
        return TransformParams(self.lambdas[idx], self.means[idx], self.stds[idx])

    def to_text(self, names: Sequence[str]) -> str:
        lines = ["# feature lambda mean std"]
        for n, lam, m, s in zip(names, self.lambdas, self.means, self.stds):
            lines.append(f"{n} = {float(lam)!r} {float(m)!r} {float(s)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> tuple[list[str], "TransformParams"]:
        names, lams, means, stds = [], [], [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, rest = line.partition("=")
            lam, m, s = (float(v) for v in rest.split())
            names.append(key.strip())
            lams.append(lam)
            means.append(m)
            stds.append(s)
        return names, cls(np.array(lams), np.array(means), np.array(stds))


def fit(train) -> TransformParams:
    """Per-column lambda, then mean and population std of the transformed column."""
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 2:
        raise ValueError("fit needs a 2-D matrix with at least 2 rows")
    p = train.shape[1]
    lams = np.empty(p)
    means = np.empty(p)
    stds = np.empty(p)
    for j in range(p):
        col = np.ascontiguousarray(train[:, j])
        lam = fit_lambda(col)
        psi = kernels.yj_transform(col, lam)
        lams[j] = lam
        means[j] = psi.mean()
        sd = psi.std()
        stds[j] = 0.0 if sd < DEGENERATE_STD else sd
    return TransformParams(lams, means, stds)


def transform(data, params: TransformParams) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != params.lambdas.shape[0]:
        raise ValueError(
            f"expected {params.lambdas.shape[0]} columns, got shape {data.shape}"
        )
    out = np.zeros_like(data)
    for j in range(data.shape[1]):
        if params.stds[j] == 0.0:
            continue
        psi = kernels.yj_transform(np.ascontiguousarray(data[:, j]), params.lambdas[j])
        out[:, j] = (psi - params.means[j]) / params.stds[j]
    return out
