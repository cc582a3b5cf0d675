"""Pure-Python hot kernels.

Mirror of ``_ckernels.pyx`` operation for operation; the expression order is
kept identical so both backends round the same way.  ``params`` is the tuple
``(alpha, beta, gamma, A, n, form_code)`` with ``form_code`` 0 for the
published momentum row and 1 for the PDE-derived one.
"""

import math

import numpy as np

NAME = "python"

_FOUR_PI = 4.0 * math.pi
_NAN4 = (math.nan, math.nan, math.nan, math.nan)

# Dormand-Prince 5(4)
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def rhs(eta, f, g, q, params):
    """Return ``(f', g', q', det)``; derivatives are NaN when ``g <= 0`` or
    the determinant vanishes."""
    alpha, beta, gamma, A, n, form = params
    if not g > 0.0:
        return _NAN4
    be = beta * eta
    a12 = f - be
    a22 = n * A * g ** (-(n + 2.0))
    b1 = gamma * g - f * g / eta
    if form == 0:
        a21 = eta * f - be - eta * eta
        b2 = alpha * f - eta * q
    else:
        a21 = f - be
        b2 = alpha * f - q
    det = g * a22 - a12 * a21
    qp = (_FOUR_PI * eta * g - q) / eta
    if det == 0.0:
        return math.nan, math.nan, qp, det
    fp = (b1 * a22 - a12 * b2) / det
    gp = (g * b2 - a21 * b1) / det
    return fp, gp, qp, det


def _eval(eta, y, params):
    fp, gp, qp, _ = rhs(eta, y[0], y[1], y[3], params)
    return (fp, gp, y[3], qp)


def dp45_step(eta, y, h, k1, params):
    """One Dormand-Prince step from ``(eta, y)`` with first stage ``k1``.

    Returns ``(y_new, err, stages)`` where ``err`` is the embedded error
    estimate and ``stages`` the seven stage derivatives flattened row-major
    (stage 7 is the derivative at ``y_new``).
    """
    return dp45_generic(lambda x, z: _eval(x, z, params), eta, y, h, k1)


def dp45_generic(evaluate, eta, y, h, k1):
    """:func:`dp45_step` for an arbitrary ``evaluate(eta, y) -> y'`` on
    4-tuples."""
    y0, y1, y2, y3 = y
    k10, k11, k12, k13 = k1
    k2 = evaluate(eta + C2 * h, (y0 + h * (A21 * k10), y1 + h * (A21 * k11),
                                 y2 + h * (A21 * k12), y3 + h * (A21 * k13)))
    k3 = evaluate(eta + C3 * h, (y0 + h * (A31 * k10 + A32 * k2[0]),
                                 y1 + h * (A31 * k11 + A32 * k2[1]),
                                 y2 + h * (A31 * k12 + A32 * k2[2]),
                                 y3 + h * (A31 * k13 + A32 * k2[3])))
    k4 = evaluate(eta + C4 * h, tuple(
        yi + h * (A41 * a + A42 * b + A43 * c)
        for yi, a, b, c in zip(y, k1, k2, k3)))
    k5 = evaluate(eta + C5 * h, tuple(
        yi + h * (A51 * a + A52 * b + A53 * c + A54 * d)
        for yi, a, b, c, d in zip(y, k1, k2, k3, k4)))
    k6 = evaluate(eta + h, tuple(
        yi + h * (A61 * a + A62 * b + A63 * c + A64 * d + A65 * e)
        for yi, a, b, c, d, e in zip(y, k1, k2, k3, k4, k5)))
    y_new = tuple(
        yi + h * (B1 * a + B3 * c + B4 * d + B5 * e + B6 * f6)
        for yi, a, c, d, e, f6 in zip(y, k1, k3, k4, k5, k6))
    k7 = evaluate(eta + h, y_new)
    err = tuple(
        h * (E1 * a + E3 * c + E4 * d + E5 * e + E6 * f6 + E7 * g7)
        for a, c, d, e, f6, g7 in zip(k1, k3, k4, k5, k6, k7))
    stages = (*k1, *k2, *k3, *k4, *k5, *k6, *k7)
    return y_new, err, stages


def euler_march(eta0, y0, step, eta_end, params, singular_tolerance, g_floor, max_steps):
    """Forward Euler from ``eta0`` to ``eta_end`` with a fixed step.

    Stops early at the first step whose end state has a non-finite value,
    ``g <= g_floor``, ``|det| <= singular_tolerance`` or a determinant of the
    opposite sign; the offending state is not stored.

    Returns ``(rows, derivs, code)`` where ``rows`` is an ``(m, 6)`` array of
    ``eta, f, g, h, q, det``, ``derivs`` the ``(m, 4)`` derivatives at each
    row, and ``code`` one of 0 (end reached), 1 (critical), 2 (density
    floor), 3 (non-finite), 4 (step budget exhausted).
    """
    nsteps = math.ceil((eta_end - eta0) / step - 1e-9)
    f, g, h, q = y0
    fp, gp, qp, det = rhs(eta0, f, g, q, params)
    rows = [(eta0, f, g, h, q, det)]
    derivs = [(fp, gp, q, qp)]
    eta = eta0
    code = 0
    for k in range(1, nsteps + 1):
        if k > max_steps:
            code = 4
            break
        eta_new = eta_end if k == nsteps else eta0 + k * step
        hs = eta_new - eta
        fn = f + hs * fp
        gn = g + hs * gp
        hn = h + hs * q
        qn = q + hs * qp
        if not (math.isfinite(fn) and math.isfinite(gn) and math.isfinite(hn)
                and math.isfinite(qn)):
            code = 3
            break
        if gn <= g_floor:
            code = 2
            break
        fpn, gpn, qpn, detn = rhs(eta_new, fn, gn, qn, params)
        if not (abs(detn) > singular_tolerance) or (detn > 0.0) != (det > 0.0):
            code = 1
            break
        if not (math.isfinite(fpn) and math.isfinite(gpn) and math.isfinite(qpn)):
            code = 3
            break
        eta, f, g, h, q = eta_new, fn, gn, hn, qn
        fp, gp, qp, det = fpn, gpn, qpn, detn
        rows.append((eta, f, g, h, q, det))
        derivs.append((fp, gp, q, qp))
    return np.array(rows, dtype=float), np.array(derivs, dtype=float), code
