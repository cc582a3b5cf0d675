"""Right-hand side of the reduced shape-function system.

The continuity and momentum equations are linear in ``(f', g')``::

    [ g               f - beta*eta      ] [f']   [ gamma*g - f*g/eta ]
    [ eta*f - beta*eta - eta**2   nA g^-(n+2) ] [g'] = [ alpha*f - eta*q   ]

and the Poisson equation gives ``h'' = (4*pi*eta*g - q) / eta`` with
``q = h'``.  The momentum row above is the published form; the alternative
:attr:`MomentumForm.PDE_DERIVED` row ``[f - beta*eta, nA g^-(n+2)]`` with
right side ``alpha*f - q`` is what direct substitution of the similarity
ansatz into the momentum PDE produces when ``alpha + beta = 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import CriticalPointError, DomainError
from .model import ChaplyginEos, ShapeState, SimilarityExponents

FOUR_PI = 4.0 * math.pi
DEFAULT_SINGULAR_TOLERANCE = 1e-10


class MomentumForm(enum.Enum):
    AS_PRINTED = "as_printed"
    PDE_DERIVED = "pde_derived"

    @classmethod
    def parse(cls, value) -> MomentumForm:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"asprinted": "as_printed", "pdederived": "pde_derived"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown momentum form {value!r}") from None

    @property
    def code(self) -> int:
        return 0 if self is MomentumForm.AS_PRINTED else 1


@dataclass(frozen=True)
class DerivativeResult:
    f_prime: float
    g_prime: float
    h_prime: float
    h_double_prime: float
    determinant: float


def linear_system(state: ShapeState, exp: SimilarityExponents, eos: ChaplyginEos,
                  form: MomentumForm = MomentumForm.AS_PRINTED):
    """Return ``(matrix, rhs)`` of the 2x2 system for ``(f', g')``.

    ``matrix`` is a nested ``((a11, a12), (a21, a22))`` tuple and ``rhs`` a
    pair, both plain floats.
    """
    eta, f, g, q = state.eta, state.f, state.g, state.q
    if not g > 0:
        raise DomainError(f"density shape g={g!r} must be positive")
    alpha, beta, gamma, _ = exp.as_floats()
    n, A = float(eos.n), float(eos.A)

    a11 = g
    a12 = f - beta * eta
    a22 = n * A * g ** (-(n + 2.0))
    b1 = gamma * g - f * g / eta
    if MomentumForm.parse(form) is MomentumForm.AS_PRINTED:
        a21 = eta * f - beta * eta - eta * eta
        b2 = alpha * f - eta * q
    else:
        a21 = f - beta * eta
        b2 = alpha * f - q
    return ((a11, a12), (a21, a22)), (b1, b2)


def determinant_closed_form(state: ShapeState, exp: SimilarityExponents, eos: ChaplyginEos,
                            form: MomentumForm = MomentumForm.AS_PRINTED) -> float:
    """``nA g^-(n+1) - (f - beta eta) * c`` where ``c`` is the f'-coefficient
    of the momentum row."""
    eta, f, g = state.eta, state.f, state.g
    if not g > 0:
        raise DomainError(f"density shape g={g!r} must be positive")
    beta = float(exp.beta)
    n, A = float(eos.n), float(eos.A)
    if MomentumForm.parse(form) is MomentumForm.AS_PRINTED:
        c = eta * f - beta * eta - eta**2
    else:
        c = f - beta * eta
    return n * A * g ** (-(n + 1.0)) - (f - beta * eta) * c


def derivatives(state: ShapeState, exp: SimilarityExponents, eos: ChaplyginEos,
                form: MomentumForm = MomentumForm.AS_PRINTED,
                singular_tolerance: float = DEFAULT_SINGULAR_TOLERANCE) -> DerivativeResult:
    """Solve the reduced system at ``state``.

    Raises
    ------
    CriticalPointError
        If ``|det| <= singular_tolerance``.
    DomainError
        If ``g <= 0``.
    """
    ((a11, a12), (a21, a22)), (b1, b2) = linear_system(state, exp, eos, form)
    det = a11 * a22 - a12 * a21
    if not abs(det) > singular_tolerance:
        raise CriticalPointError(state.eta, det)
    fp = (b1 * a22 - a12 * b2) / det
    gp = (a11 * b2 - a21 * b1) / det
    hpp = (FOUR_PI * state.eta * state.g - state.q) / state.eta
    return DerivativeResult(fp, gp, state.q, hpp, det)


def equation_terms(eta, f, g, q, fp, gp, hpp, exp: SimilarityExponents, eos: ChaplyginEos,
                   form: MomentumForm = MomentumForm.AS_PRINTED):
    """Signed terms of each reduced equation, written as ``LHS - RHS``.

    Returns a dict mapping ``"eq5"``, ``"eq6"``, ``"eq7"`` (continuity,
    momentum, Poisson) to tuples of terms; the residual is their sum and the
    largest absolute term sets the scale.  Works elementwise on arrays.
    """
    alpha, beta, gamma, _ = exp.as_floats()
    n, A = float(eos.n), float(eos.A)
    pressure_term = n * A * g ** (-(n + 2.0)) * gp
    continuity = (fp * g, f * gp, f * g / eta, -gamma * g, -beta * eta * gp)
    if MomentumForm.parse(form) is MomentumForm.AS_PRINTED:
        momentum = (-alpha * f, -beta * eta * fp, -eta**2 * fp, eta * fp * f,
                    pressure_term, eta * q)
    else:
        momentum = (-alpha * f, -beta * eta * fp, fp * f, pressure_term, q)
    poisson = (q, hpp * eta, -FOUR_PI * eta * g)
    return {"eq5": continuity, "eq6": momentum, "eq7": poisson}


def relative_residuals(state: ShapeState, result: DerivativeResult, exp, eos,
                       form: MomentumForm = MomentumForm.AS_PRINTED) -> dict:
    """Back-substitute ``result`` and return residual / largest-term per equation."""
    terms = equation_terms(state.eta, state.f, state.g, state.q, result.f_prime,
                           result.g_prime, result.h_double_prime, exp, eos, form)
    out = {}
    for key, ts in terms.items():
        scale = max(abs(t) for t in ts)
        total = math.fsum(ts)
        out[key] = abs(total) / scale if scale > 0 else 0.0
    return out


def second_derivatives(eta, f, g, q, fp, gp, qp, exp: SimilarityExponents, eos: ChaplyginEos,
                       form: MomentumForm = MomentumForm.AS_PRINTED):
    """``(f'', g'', q'')`` along a solution, from its first derivatives.

    Differentiating ``M (f', g') = b`` once gives ``M (f'', g'') = b' - M' (f', g')``
    with every entry of ``M'`` and ``b'`` a total derivative in ``eta``.
    Elementwise on arrays; no singularity check (callers pass states that
    were already accepted by :func:`derivatives`).
    """
    alpha, beta, gamma, _ = exp.as_floats()
    n, A = float(eos.n), float(eos.A)
    a11 = g
    a12 = f - beta * eta
    a22 = n * A * g ** (-(n + 2.0))
    d11 = gp
    d12 = fp - beta
    d22 = -(n + 2.0) * a22 / g * gp
    db1 = gamma * gp - (fp * g + f * gp) / eta + f * g / eta**2
    if MomentumForm.parse(form) is MomentumForm.AS_PRINTED:
        a21 = eta * f - beta * eta - eta * eta
        d21 = f + eta * fp - beta - 2.0 * eta
        db2 = alpha * fp - q - eta * qp
    else:
        a21 = f - beta * eta
        d21 = fp - beta
        db2 = alpha * fp - qp
    r1 = db1 - (d11 * fp + d12 * gp)
    r2 = db2 - (d21 * fp + d22 * gp)
    det = a11 * a22 - a12 * a21
    fpp = (r1 * a22 - a12 * r2) / det
    gpp = (a11 * r2 - a21 * r1) / det
    qpp = FOUR_PI * gp - qp / eta + q / eta**2
    return fpp, gpp, qpp
