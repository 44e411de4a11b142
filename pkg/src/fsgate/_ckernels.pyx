# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Yeo-Johnson column transform/likelihood and the
logistic-regression (proximal) gradient solver.

Mirrors ``_pykernels`` step for step.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, expm1, sqrt, fabs, INFINITY

cnp.import_array()

cdef double LOG_CAP = 700.0
cdef double MIN_STEP = 1e-20
cdef double MIN_TRIAL = 1e-10
cdef double MAX_TRIAL = 1e10


cdef inline double _yj(double x, double lam) noexcept nogil:
    cdef double a
    if lam == 1.0:
        return x
    if x >= 0.0:
        if lam == 0.0:
            return log1p(x)
        a = lam * log1p(x)
        if a > LOG_CAP:
            a = LOG_CAP
        return expm1(a) / lam
    if lam == 2.0:
        return -log1p(-x)
    a = (2.0 - lam) * log1p(-x)
    if a > LOG_CAP:
        a = LOG_CAP
    return -expm1(a) / (2.0 - lam)


def yj_transform(x, double lam):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = _yj(xv[i], lam)
    return out


def yj_loglik(x, double lam):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef double s = 0.0, mean, d, var = 0.0, jac = 0.0, v, xi
    psi = np.empty(n, dtype=np.float64)
    cdef double[::1] pv = psi
    with nogil:
        for i in range(n):
            v = _yj(xv[i], lam)
            pv[i] = v
            s += v
        mean = s / n
        for i in range(n):
            d = pv[i] - mean
            var += d * d
        var /= n
        for i in range(n):
            xi = xv[i]
            if xi > 0.0:
                jac += log1p(xi)
            elif xi < 0.0:
                jac -= log1p(-xi)
    if not (var > 0.0) or var == INFINITY or var != var:
        return -INFINITY
    return -0.5 * n * log(var) + (lam - 1.0) * jac


cdef inline double _softplus_minus(double z, double y) noexcept nogil:
    # log(1 + e^z) - y z
    if z > 0.0:
        return z + log1p(exp(-z)) - y * z
    return log1p(exp(z)) - y * z


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef double _forward(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                     double b, double[::1] z) noexcept nogil:
    # fills z = Xw + b, returns mean loss
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    cdef double acc, total = 0.0
    for i in range(n):
        acc = b
        for j in range(p):
            acc += X[i, j] * w[j]
        z[i] = acc
        total += _softplus_minus(acc, y[i])
    return total / n


cdef double _trial(const double[:, ::1] X, const double[::1] y, const double[::1] z,
                   const double[::1] wn, double bn, const double[::1] dw, double db,
                   double[::1] zn) noexcept nogil:
    # fills zn = X wn + bn, returns the mean loss change from z.
    # The per-row move d = X dw + db comes from the step itself and short moves
    # use log1p(q * expm1(d)), so tiny decreases are not lost to rounding.
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    cdef double acc, d, total = 0.0
    for i in range(n):
        acc = bn
        d = db
        for j in range(p):
            acc += X[i, j] * wn[j]
            d += X[i, j] * dw[j]
        zn[i] = acc
        if fabs(d) < 1.0:
            total += log1p(_sigmoid(z[i]) * expm1(d)) - y[i] * d
        else:
            total += _softplus_minus(acc, y[i]) - _softplus_minus(z[i], y[i])
    return total / n


cdef double _gradient(const double[:, ::1] X, const double[::1] y, const double[::1] z,
                      double[::1] gw) noexcept nogil:
    # fills gw = X^T (q - y) / n, returns intercept gradient
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    cdef double r, gb = 0.0
    for j in range(p):
        gw[j] = 0.0
    for i in range(n):
        r = _sigmoid(z[i]) - y[i]
        gb += r
        for j in range(p):
            gw[j] += X[i, j] * r
    for j in range(p):
        gw[j] /= n
    return gb / n


def logistic_gradient(X, y, w, double b):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    z = np.empty(Xv.shape[0], dtype=np.float64)
    gw = np.empty(Xv.shape[1], dtype=np.float64)
    cdef double[::1] zv = z, gv = gw
    cdef double gb
    with nogil:
        _forward(Xv, yv, wv, b, zv)
        gb = _gradient(Xv, yv, zv, gv)
    return gw, gb


def logistic_loss(X, y, w, double b):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    z = np.empty(Xv.shape[0], dtype=np.float64)
    cdef double[::1] zv = z
    cdef double f
    with nogil:
        f = _forward(Xv, yv, wv, b, zv)
    return f


cdef inline double _bb_step(double ss, double sr, double t) noexcept nogil:
    # Barzilai-Borwein trial step for the next line search
    if sr > 0.0 and ss > 0.0:
        t = ss / sr
    else:
        t = 2.0 * t
    if t < MIN_TRIAL:
        return MIN_TRIAL
    if t > MAX_TRIAL:
        return MAX_TRIAL
    return t


def logistic_fit(X, y, w0, double b0, double l1, double ridge, double tol,
                 Py_ssize_t max_iters, bint trace):
    """Gradient descent (``l1 == 0``) or proximal gradient with backtracking.

    The objective trace is the initial value plus the accepted decreases.
    Returns ``(w, b, converged, iterations, grad_norm, objective_trace)``.
    """
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1], j, it = 0
    w_arr = np.array(w0, dtype=np.float64, copy=True)
    wn_arr = np.empty(p, dtype=np.float64)
    gw_arr = np.empty(p, dtype=np.float64)
    z_arr = np.empty(n, dtype=np.float64)
    zn_arr = np.empty(n, dtype=np.float64)
    hist_arr = np.empty(max_iters + 1 if trace else 0, dtype=np.float64)
    cdef double[::1] w = w_arr, wn = wn_arr, gw = gw_arr, z = z_arr, zn = zn_arr
    cdef double[::1] hist = hist_arr
    cdef double b = b0, bn, gb, f, delta, t = 1.0, gnorm = INFINITY
    cdef double dw, db, lin, step_sq, v, pen, wsq, gbold, ss, sr
    step_arr = np.empty(p, dtype=np.float64)
    cdef double[::1] step = step_arr
    gold_arr = np.empty(p, dtype=np.float64)
    wprev_arr = np.array(w_arr, copy=True)
    cdef double[::1] gold = gold_arr, wprev = wprev_arr
    cdef bint converged = False, stalled

    with nogil:
        f = _forward(Xv, yv, w, b, z)
        wsq = 0.0
        for j in range(p):
            wsq += w[j] * w[j]
        f += 0.5 * ridge * wsq
        gb = _gradient(Xv, yv, z, gw)
        for j in range(p):
            gw[j] += ridge * w[j]
        if trace:
            pen = 0.0
            for j in range(p):
                pen += fabs(w[j])
            hist[0] = f + l1 * pen

        while True:
            if l1 == 0.0:
                gnorm = gb * gb
                for j in range(p):
                    gnorm += gw[j] * gw[j]
                gnorm = sqrt(gnorm)
                if gnorm <= tol:
                    converged = True
                    break
            if it >= max_iters:
                break

            stalled = False
            while True:
                lin = 0.0
                step_sq = 0.0
                wsq = 0.0
                for j in range(p):
                    v = w[j] - t * gw[j]
                    if l1 > 0.0:
                        if fabs(v) > t * l1:
                            v = v - t * l1 if v > 0.0 else v + t * l1
                        else:
                            v = 0.0
                    wn[j] = v
                    dw = v - w[j]
                    step[j] = dw
                    lin += gw[j] * dw
                    step_sq += dw * dw
                    wsq += dw * (v + w[j])
                bn = b - t * gb
                db = bn - b
                lin += gb * db
                step_sq += db * db
                delta = _trial(Xv, yv, z, wn, bn, step, db, zn) + 0.5 * ridge * wsq
                if delta <= lin + step_sq / (2.0 * t):
                    break
                if t * 0.5 < MIN_STEP:
                    stalled = True
                    break
                t *= 0.5
            if stalled:
                # no representable decrease left; at an L1 optimum the mapping is ~0
                if l1 > 0.0:
                    gnorm = sqrt(step_sq) / t
                    converged = gnorm <= tol
                break

            if l1 > 0.0:
                gnorm = sqrt(step_sq) / t

            for j in range(p):
                gold[j] = gw[j]
                w[j] = wn[j]
            gbold = gb
            b = bn
            f += delta
            for j in range(n):
                z[j] = zn[j]
            gb = _gradient(Xv, yv, z, gw)
            ss = 0.0
            sr = 0.0
            for j in range(p):
                gw[j] += ridge * w[j]
            for j in range(p):
                dw = w[j] - wprev[j]
                ss += dw * dw
                sr += dw * (gw[j] - gold[j])
                wprev[j] = w[j]
            ss += db * db
            sr += db * (gb - gbold)
            t = _bb_step(ss, sr, t)
            it += 1
            if trace:
                pen = 0.0
                for j in range(p):
                    pen += fabs(w[j])
                hist[it] = f + l1 * pen
            if l1 > 0.0 and gnorm <= tol:
                converged = True
                break

    return w_arr, b, bool(converged), int(it), float(gnorm), hist_arr[: it + 1 if trace else 0].copy()
