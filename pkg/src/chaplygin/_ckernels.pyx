# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; same contract and rounding as ``_purepy``."""

from libc.math cimport pow, isfinite, fabs, ceil, NAN, M_PI

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "compiled"

cdef double FOUR_PI = 4.0 * M_PI

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef struct Params:
    double alpha, beta, gamma, A, n
    int form


cdef inline Params _params(object params):
    cdef Params p
    p.alpha, p.beta, p.gamma, p.A, p.n, p.form = params
    return p


cdef inline double _rhs(double eta, double f, double g, double q, Params* p,
                        double* fp, double* gp, double* qp) noexcept nogil:
    cdef double be, a12, a22, b1, a21, b2, det
    if not g > 0.0:
        fp[0] = NAN
        gp[0] = NAN
        qp[0] = NAN
        return NAN
    be = p.beta * eta
    a12 = f - be
    a22 = p.n * p.A * pow(g, -(p.n + 2.0))
    b1 = p.gamma * g - f * g / eta
    if p.form == 0:
        a21 = eta * f - be - eta * eta
        b2 = p.alpha * f - eta * q
    else:
        a21 = f - be
        b2 = p.alpha * f - q
    det = g * a22 - a12 * a21
    qp[0] = (FOUR_PI * eta * g - q) / eta
    if det == 0.0:
        fp[0] = NAN
        gp[0] = NAN
        return det
    fp[0] = (b1 * a22 - a12 * b2) / det
    gp[0] = (g * b2 - a21 * b1) / det
    return det


cdef inline void _eval(double eta, double* y, Params* p, double* k) noexcept nogil:
    cdef double qp
    _rhs(eta, y[0], y[1], y[3], p, &k[0], &k[1], &qp)
    k[2] = y[3]
    k[3] = qp


def rhs(double eta, double f, double g, double q, params):
    cdef Params p = _params(params)
    cdef double fp, gp, qp, det
    det = _rhs(eta, f, g, q, &p, &fp, &gp, &qp)
    return fp, gp, qp, det


def dp45_step(double eta, y, double h, k1, params):
    cdef Params p = _params(params)
    cdef double ys[4]
    cdef double yt[4]
    cdef double yn[4]
    cdef double K[7][4]
    cdef int i
    for i in range(4):
        ys[i] = y[i]
        K[0][i] = k1[i]
    for i in range(4):
        yt[i] = ys[i] + h * (A21 * K[0][i])
    _eval(eta + C2 * h, yt, &p, K[1])
    for i in range(4):
        yt[i] = ys[i] + h * (A31 * K[0][i] + A32 * K[1][i])
    _eval(eta + C3 * h, yt, &p, K[2])
    for i in range(4):
        yt[i] = ys[i] + h * (A41 * K[0][i] + A42 * K[1][i] + A43 * K[2][i])
    _eval(eta + C4 * h, yt, &p, K[3])
    for i in range(4):
        yt[i] = ys[i] + h * (A51 * K[0][i] + A52 * K[1][i] + A53 * K[2][i] + A54 * K[3][i])
    _eval(eta + C5 * h, yt, &p, K[4])
    for i in range(4):
        yt[i] = ys[i] + h * (A61 * K[0][i] + A62 * K[1][i] + A63 * K[2][i]
                             + A64 * K[3][i] + A65 * K[4][i])
    _eval(eta + h, yt, &p, K[5])
    for i in range(4):
        yn[i] = ys[i] + h * (B1 * K[0][i] + B3 * K[2][i] + B4 * K[3][i]
                             + B5 * K[4][i] + B6 * K[5][i])
    _eval(eta + h, yn, &p, K[6])
    err = tuple([h * (E1 * K[0][i] + E3 * K[2][i] + E4 * K[3][i] + E5 * K[4][i]
                      + E6 * K[5][i] + E7 * K[6][i]) for i in range(4)])
    stages = tuple([K[i // 4][i % 4] for i in range(28)])
    return (yn[0], yn[1], yn[2], yn[3]), err, stages


def euler_march(double eta0, y0, double step, double eta_end, params,
                double singular_tolerance, double g_floor, long max_steps):
    cdef Params p = _params(params)
    cdef long nsteps = <long>ceil((eta_end - eta0) / step - 1e-9)
    cdef long cap = min(nsteps, max_steps) + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] rows = np.empty((cap, 6))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] derivs = np.empty((cap, 4))
    cdef double[:, ::1] R = rows
    cdef double[:, ::1] D = derivs
    cdef double f = y0[0], g = y0[1], h = y0[2], q = y0[3]
    cdef double fp, gp, qp, det, fn, gn, hn, qn, fpn, gpn, qpn, detn
    cdef double eta = eta0, eta_new, hs
    cdef long k, m = 1
    cdef int code = 0
    with nogil:
        det = _rhs(eta0, f, g, q, &p, &fp, &gp, &qp)
        R[0, 0] = eta0; R[0, 1] = f; R[0, 2] = g; R[0, 3] = h; R[0, 4] = q; R[0, 5] = det
        D[0, 0] = fp; D[0, 1] = gp; D[0, 2] = q; D[0, 3] = qp
        for k in range(1, nsteps + 1):
            if k > max_steps:
                code = 4
                break
            if k == nsteps:
                eta_new = eta_end
            else:
                eta_new = eta0 + k * step
            hs = eta_new - eta
            fn = f + hs * fp
            gn = g + hs * gp
            hn = h + hs * q
            qn = q + hs * qp
            if not (isfinite(fn) and isfinite(gn) and isfinite(hn) and isfinite(qn)):
                code = 3
                break
            if gn <= g_floor:
                code = 2
                break
            detn = _rhs(eta_new, fn, gn, qn, &p, &fpn, &gpn, &qpn)
            if not (fabs(detn) > singular_tolerance) or (detn > 0.0) != (det > 0.0):
                code = 1
                break
            if not (isfinite(fpn) and isfinite(gpn) and isfinite(qpn)):
                code = 3
                break
            eta = eta_new; f = fn; g = gn; h = hn; q = qn
            fp = fpn; gp = gpn; qp = qpn; det = detn
            R[m, 0] = eta; R[m, 1] = f; R[m, 2] = g; R[m, 3] = h; R[m, 4] = q; R[m, 5] = det
            D[m, 0] = fp; D[m, 1] = gp; D[m, 2] = q; D[m, 3] = qp
            m += 1
    return rows[:m].copy(), derivs[:m].copy(), code
