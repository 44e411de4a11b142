"""Pure numpy implementations of the numerical kernels.

Used when the compiled extension is unavailable or ``FSGATE_PURE_PYTHON=1``.
Both backends implement the same algorithms step for step; results agree to
rounding, not bit for bit.
"""

import numpy as np

LOG_CAP = 700.0
MIN_STEP = 1e-20
MIN_TRIAL = 1e-10
MAX_TRIAL = 1e10


def yj_transform(x, lam):
    x = np.asarray(x, dtype=np.float64)
    if lam == 1.0:
        # both branches reduce to x; skip the rounding of expm1(log1p(x))
        return x.copy()
    out = np.empty_like(x)
    pos = x >= 0
    xp = x[pos]
    xn = x[~pos]
    if lam == 0.0:
        out[pos] = np.log1p(xp)
    else:
        a = np.minimum(lam * np.log1p(xp), LOG_CAP)
        out[pos] = np.expm1(a) / lam
    if lam == 2.0:
        out[~pos] = -np.log1p(-xn)
    else:
        a = np.minimum((2.0 - lam) * np.log1p(-xn), LOG_CAP)
        out[~pos] = -np.expm1(a) / (2.0 - lam)
    return out


def yj_loglik(x, lam):
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    psi = yj_transform(x, lam)
    with np.errstate(over="ignore", invalid="ignore"):
        var = np.var(psi)
    if not np.isfinite(var):
        return -np.inf
    if var <= 0.0:
        return -np.inf
    return -0.5 * n * np.log(var) + (lam - 1.0) * np.sum(np.sign(x) * np.log1p(np.abs(x)))


def _loss(z, y):
    # mean of log(1 + e^z) - y z, stable for large |z|
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _decrease(z, zn, d, y):
    """Mean loss change from ``z`` to ``zn``, where ``d = X dw + db``.

    Short moves use log1p(q * expm1(d)) per row, which keeps the change
    accurate even when it is far below the rounding error of the loss itself.
    ``d`` is formed from the step, not as ``zn - z``, for the same reason.
    """
    near = np.abs(d) < 1.0
    out = np.empty_like(d)
    out[near] = np.log1p(_sigmoid(z[near]) * np.expm1(d[near]))
    out[~near] = np.logaddexp(0.0, zn[~near]) - np.logaddexp(0.0, z[~near])
    return float(np.mean(out - y * d))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_gradient(X, y, w, b):
    z = X @ w + b
    r = _sigmoid(z) - y
    n = X.shape[0]
    return X.T @ r / n, float(np.sum(r) / n)


def logistic_loss(X, y, w, b):
    return _loss(X @ w + b, y)


def _bb_step(ss, sr, t):
    # Barzilai-Borwein trial step for the next line search
    t = ss / sr if (sr > 0.0 and ss > 0.0) else 2.0 * t
    return min(max(t, MIN_TRIAL), MAX_TRIAL)


def logistic_fit(X, y, w0, b0, l1, ridge, tol, max_iters, trace):
    """Gradient descent (``l1 == 0``) or proximal gradient with backtracking.

    Each line search starts from a Barzilai-Borwein step and halves until the
    sufficient-decrease condition holds, so the objective never increases.
    The objective trace is the initial value plus the accepted decreases.

    Returns ``(w, b, converged, iterations, grad_norm, objective_trace)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    w = np.array(w0, dtype=np.float64, copy=True)
    b = float(b0)

    z = X @ w + b
    f = _loss(z, y) + 0.5 * ridge * float(w @ w)
    r = _sigmoid(z) - y
    gw = X.T @ r / n + ridge * w
    gb = float(np.sum(r) / n)

    t = 1.0
    it = 0
    converged = False
    gnorm = np.inf
    hist = [f + l1 * float(np.sum(np.abs(w)))] if trace else []

    while True:
        if l1 == 0.0:
            gnorm = float(np.sqrt(gw @ gw + gb * gb))
            if gnorm <= tol:
                converged = True
                break
        if it >= max_iters:
            break

        stalled = False
        while True:
            wn = w - t * gw
            bn = b - t * gb
            if l1 > 0.0:
                wn = np.sign(wn) * np.maximum(np.abs(wn) - t * l1, 0.0)
            dw = wn - w
            db = bn - b
            zn = X @ wn + bn
            delta = _decrease(z, zn, X @ dw + db, y) + 0.5 * ridge * float(dw @ (wn + w))
            step_sq = float(dw @ dw) + db * db
            if delta <= float(gw @ dw) + gb * db + step_sq / (2.0 * t):
                break
            if t * 0.5 < MIN_STEP:
                stalled = True
                break
            t *= 0.5
        if stalled:
            # no representable decrease left; at an L1 optimum the mapping is ~0
            if l1 > 0.0:
                gnorm = float(np.sqrt(step_sq)) / t
                converged = gnorm <= tol
            break

        if l1 > 0.0:
            gnorm = float(np.sqrt(step_sq)) / t

        r = _sigmoid(zn) - y
        gw_new = X.T @ r / n + ridge * wn
        gb_new = float(np.sum(r) / n)
        ss = float(dw @ dw) + db * db
        sr = float(dw @ (gw_new - gw)) + db * (gb_new - gb)
        t = _bb_step(ss, sr, t)
        w, b, z, gw, gb = wn, bn, zn, gw_new, gb_new
        f += delta
        it += 1
        if trace:
            hist.append(f + l1 * float(np.sum(np.abs(w))))
        if l1 > 0.0 and gnorm <= tol:
            converged = True
            break

    return w, b, converged, it, gnorm, np.asarray(hist, dtype=np.float64)
