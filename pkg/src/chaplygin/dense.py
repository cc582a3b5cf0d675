"""Continuous interpolants of an integrated shape-function trajectory.

Node data are ``(f, g, h, q)`` together with their first derivatives.  The
interpolant for each component is chosen to be as smooth as the available
exact information allows:

* ``f``, ``g`` -- quintic Hermite on values, first and second derivatives
  (C2) when the second derivatives are supplied, cubic Hermite otherwise;
* ``q`` -- quintic Hermite on ``q, q', q''`` (C2);
* ``h`` -- ``h_0`` plus the running integral of the ``q`` pieces (C3), so
  ``h'' = q'`` holds exactly everywhere.  The integrator's own ``h`` nodes
  agree with this to the integration tolerance; using them instead would
  leave jumps in ``h`` or ``h'`` of that size at every node, which the
  verifier's difference stencils amplify by ``1 / spacing**2``.

``q''`` follows from differentiating ``q' = 4 pi g - q / eta``.  Evaluation
may be done in extended precision (``dtype=np.longdouble``); the verifier
relies on this to keep finite-difference stencils free of rounding noise.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np

_FOUR_PI = 4 * np.pi

def _as(dtype, x: Fraction):
    return np.asarray(x.numerator, dtype=dtype) / np.asarray(x.denominator, dtype=dtype)


def _hermite_end_inverse(m: int, dtype):
    """Inverse of the matrix mapping the top ``m+1`` Taylor coefficients of a
    degree ``2m+1`` polynomial to its scaled derivatives at ``t = 1``."""
    size = m + 1
    mat = [[Fraction(comb(k, j)) for k in range(m + 1, 2 * m + 2)] for j in range(size)]
    # Gauss-Jordan in exact arithmetic; size is at most 4
    inv = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    for col in range(size):
        piv = next(r for r in range(col, size) if mat[r][col] != 0)
        mat[col], mat[piv] = mat[piv], mat[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        s = mat[col][col]
        mat[col] = [v / s for v in mat[col]]
        inv[col] = [v / s for v in inv[col]]
        for r in range(size):
            if r != col and mat[r][col] != 0:
                fac = mat[r][col]
                mat[r] = [a - fac * b for a, b in zip(mat[r], mat[col])]
                inv[r] = [a - fac * b for a, b in zip(inv[r], inv[col])]
    return np.array([[_as(dtype, v) for v in row] for row in inv], dtype=dtype)


class _Pieces:
    """Piecewise polynomial stored per interval as ``y0 + sum_{k>=1} c_k t**k``
    with ``t`` the local coordinate in ``[0, 1]``."""

    def __init__(self, x0, width, y0, coef):
        self.x0 = x0
        self.width = width
        self.y0 = y0
        self.coef = coef

    def __call__(self, idx, t, derivative=False):
        c = self.coef[:, idx]
        if derivative:
            acc = np.zeros_like(t)
            for k in range(c.shape[0], 0, -1):
                acc = acc * t + k * c[k - 1]
            return acc / self.width[idx]
        acc = np.zeros_like(t)
        for k in range(c.shape[0], 0, -1):
            acc = acc * t + c[k - 1]
        return self.y0[idx] + acc * t


def _hermite(x, derivs, dtype) -> _Pieces:
    """Piecewise Hermite polynomial matching derivatives ``0..m`` at nodes."""
    x = np.asarray(x, dtype=dtype)
    d = [np.asarray(v, dtype=dtype) for v in derivs]
    m = len(d) - 1
    width = x[1:] - x[:-1]
    coef = np.zeros((2 * m + 1, len(width)), dtype=dtype)  # c_1 .. c_{2m+1}
    fact = 1
    scaled0, scaled1 = [], []
    for j in range(m + 1):
        if j:
            fact *= j
        scale = width**j / fact
        scaled0.append(d[j][:-1] * scale)
        scaled1.append(d[j][1:] * scale)
    for j in range(1, m + 1):
        coef[j - 1] = scaled0[j]
    rhs = []
    for j in range(m + 1):
        if j == 0:
            known = (d[0][1:] - d[0][:-1])
            known = known - sum(scaled0[k] for k in range(1, m + 1))
        else:
            known = scaled1[j] - sum(comb(k, j) * scaled0[k] for k in range(j, m + 1))
        rhs.append(known)
    inv = _hermite_end_inverse(m, dtype)
    for row in range(m + 1):
        coef[m + row] = sum(inv[row][j] * rhs[j] for j in range(m + 1))
    return _Pieces(x[:-1], width, d[0][:-1], coef)


def _antiderivative(p: _Pieces, start, dtype) -> _Pieces:
    """Running integral of ``p`` from its first node, offset by ``start``."""
    w = p.width
    coef = np.zeros((p.coef.shape[0] + 1, p.coef.shape[1]), dtype=dtype)
    coef[0] = w * p.y0
    for k in range(1, p.coef.shape[0] + 1):
        coef[k] = w * p.coef[k - 1] / (k + 1)
    y0 = np.asarray(start, dtype=dtype) + np.concatenate(
        [np.zeros(1, dtype=dtype), np.cumsum(coef.sum(axis=0))[:-1]])
    return _Pieces(p.x0, w, y0, coef)


class DenseSolution:
    """Interpolant through tabulated nodes.

    Parameters
    ----------
    eta : (N,) array
        Strictly increasing node positions.
    y : (N, 4) array
        ``f, g, h, q`` at the nodes.
    dy : (N, 4) array, optional
        ``f', g', h' (= q), q'`` at the nodes.  When omitted, derivatives are
        estimated by second-order finite differences of the columns and every
        component is interpolated by cubic Hermite pieces.
    ddy : (N, 2) array, optional
        ``f'', g''`` at the nodes.  Ignored without ``dy``.
    """

    def __init__(self, eta, y, dy=None, ddy=None):
        self.eta = np.asarray(eta, dtype=float)
        self.y = np.asarray(y, dtype=float).reshape(-1, 4)
        if len(self.eta) < 2:
            raise ValueError("dense output needs at least two nodes")
        self.exact_derivatives = dy is not None
        if dy is None:
            edge = 2 if len(self.eta) >= 3 else 1
            dy = np.column_stack([np.gradient(self.y[:, k], self.eta, edge_order=edge)
                                  for k in (0, 1)] +
                                 [self.y[:, 3],
                                  np.gradient(self.y[:, 3], self.eta, edge_order=edge)])
        self.dy = np.asarray(dy, dtype=float).reshape(-1, 4)
        self.ddy = (None if ddy is None or not self.exact_derivatives
                    else np.asarray(ddy, dtype=float).reshape(-1, 2))
        self._cache = {}

    @property
    def span(self):
        return float(self.eta[0]), float(self.eta[-1])

    def _pieces(self, dtype):
        key = np.dtype(dtype).str
        if key in self._cache:
            return self._cache[key]
        eta, y, dy = self.eta, self.y, self.dy
        pieces = {}
        if self.exact_derivatives:
            etal = eta.astype(dtype)
            qpp = (_FOUR_PI * dy[:, 1].astype(dtype) - dy[:, 3].astype(dtype) / etal
                   + y[:, 3].astype(dtype) / etal**2)
            pieces["q"] = _hermite(eta, [y[:, 3], dy[:, 3], qpp], dtype)
            pieces["h"] = _antiderivative(pieces["q"], y[0, 2], dtype)
        else:
            pieces["h"] = _hermite(eta, [y[:, 2], dy[:, 2]], dtype)
            pieces["q"] = _hermite(eta, [y[:, 3], dy[:, 3]], dtype)
        if self.ddy is not None:
            pieces["f"] = _hermite(eta, [y[:, 0], dy[:, 0], self.ddy[:, 0]], dtype)
            pieces["g"] = _hermite(eta, [y[:, 1], dy[:, 1], self.ddy[:, 1]], dtype)
        else:
            pieces["f"] = _hermite(eta, [y[:, 0], dy[:, 0]], dtype)
            pieces["g"] = _hermite(eta, [y[:, 1], dy[:, 1]], dtype)
        self._cache[key] = pieces
        return pieces

    def __call__(self, x, dtype=float, derivative=False):
        """Evaluate ``(f, g, h, q)`` (or their derivatives) at ``x``.

        Returns an array of shape ``x.shape + (4,)`` in ``dtype``.  Points
        outside the node span are extrapolated from the end pieces.
        """
        x = np.asarray(x, dtype=dtype)
        shape = x.shape
        xf = x.ravel()
        idx = np.clip(np.searchsorted(self.eta, xf.astype(float), side="right") - 1,
                      0, len(self.eta) - 2)
        pieces = self._pieces(dtype)
        hp = pieces["h"]
        t = (xf - hp.x0[idx]) / hp.width[idx]
        out = np.empty(xf.shape + (4,), dtype=dtype)
        out[:, 0] = pieces["f"](idx, t, derivative)
        out[:, 1] = pieces["g"](idx, t, derivative)
        out[:, 2] = hp(idx, t, derivative)
        out[:, 3] = pieces["q"](idx, t, derivative)
        return out.reshape(shape + (4,))
