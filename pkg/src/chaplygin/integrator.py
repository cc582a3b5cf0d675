"""Integration of the reduced system in the similarity variable.

Two schemes are provided: an adaptive Dormand-Prince 5(4) pair with PI step
control (the production path) and a fixed-step forward Euler march used as a
low-order cross-check.  In both, singular determinants, density collapse and
step-size underflow end the run and are recorded in
:attr:`SolutionTable.termination`; they are never raised.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _backend
from .dense import DenseSolution
from .errors import DomainError, SetupError
from .model import ChaplyginEos, SimilarityExponents
from .reduction import DEFAULT_SINGULAR_TOLERANCE, MomentumForm, second_derivatives

EVENT_TOLERANCE = 1e-10
RELATIVE_SINGULAR_THRESHOLD = 1e-6

_SAFE = 0.9
_EXPO1 = 0.2 - 0.04 * 0.75
_BETA = 0.04
_FACC1 = 5.0    # largest step shrink is h / 5
_FACC2 = 0.1    # largest step growth is h * 10
# Dormand-Prince continuous extension, used to locate events inside a step:
# b_i(theta) = sum_j P[i][j] theta**(j+1)
_DP_DENSE = (
    (1, Fraction(-8048581381, 2820520608), Fraction(8663915743, 2820520608),
     Fraction(-12715105075, 11282082432)),
    (0, 0, 0, 0),
    (0, Fraction(131558114200, 32700410799), Fraction(-68118460800, 10900136933),
     Fraction(87487479700, 32700410799)),
    (0, Fraction(-1754552775, 470086768), Fraction(14199869525, 1410260304),
     Fraction(-10690763975, 1880347072)),
    (0, Fraction(127303824393, 49829197408), Fraction(-318862633887, 49829197408),
     Fraction(701980252875, 199316789632)),
    (0, Fraction(-282668133, 205662961), Fraction(2019193451, 616988883),
     Fraction(-1453857185, 822651844)),
    (0, Fraction(40617522, 29380423), Fraction(-110615467, 29380423),
     Fraction(69997945, 29380423)),
)
_P = np.array([[float(v) for v in row] for row in _DP_DENSE])


@dataclass(frozen=True)
class Adaptive45:
    def __str__(self):
        return "adaptive45"


@dataclass(frozen=True)
class FixedEuler:
    step: float

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise DomainError(f"Euler step {self.step!r} must be positive")

    def __str__(self):
        return f"euler({self.step!r})"


Mode = Adaptive45 | FixedEuler


@dataclass(frozen=True)
class IntegrationConfig:
    eta_start: float = 1e-3
    eta_end: float = 5.0
    f0: float = 0.0
    g0: float = 1.0
    h0: float = 0.0
    q0: float = 0.0
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 10_000_000
    min_step: float = 1e-14
    mode: Mode = field(default_factory=Adaptive45)
    momentum_form: MomentumForm = MomentumForm.AS_PRINTED
    singular_tolerance: float = DEFAULT_SINGULAR_TOLERANCE
    g_floor: float = 1e-12
    output_points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "momentum_form", MomentumForm.parse(self.momentum_form))
        object.__setattr__(self, "output_points",
                           tuple(float(x) for x in self.output_points))
        for name in ("eta_start", "eta_end", "rtol", "atol", "min_step",
                     "singular_tolerance", "g_floor"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name}={value!r} must be a positive number")
        for name in ("f0", "g0", "h0", "q0"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not self.eta_start < self.eta_end:
            raise DomainError("eta_start must be smaller than eta_end")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise DomainError(f"max_steps={self.max_steps!r} must be a positive integer")
        if not isinstance(self.mode, (Adaptive45, FixedEuler)):
            raise DomainError(f"unknown integration mode {self.mode!r}")

    @property
    def initial(self):
        return (self.f0, self.g0, self.h0, self.q0)


class TerminationKind(enum.Enum):
    REACHED_END = "ReachedEnd"
    CRITICAL_POINT = "CriticalPoint"
    DENSITY_FLOOR = "DensityFloor"
    STEP_UNDERFLOW = "StepUnderflow"
    MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    eta: float | None = None

    def __str__(self):
        if self.eta is None:
            return self.kind.value
        return f"{self.kind.value}({self.eta!r})"


class Classification(enum.Enum):
    EXPANSION = "Expansion"
    COLLAPSE = "Collapse"
    INDETERMINATE = "Indeterminate"


COLUMNS = ("eta", "f", "g", "h", "q", "determinant")


@dataclass(eq=False)
class SolutionTable:
    """Sampled trajectory ``eta, f, g, h, q, determinant`` plus dense output."""

    rows: np.ndarray
    termination: Termination
    config: IntegrationConfig | None = None
    dense: DenseSolution | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, 6)
        if self.dense is None and len(self.rows) >= 2:
            eta = self.rows[:, 0]
            order = np.concatenate([[True], np.diff(eta) > 0])
            if order.sum() >= 2:
                self.dense = DenseSolution(eta[order], self.rows[order, 1:5])

    @classmethod
    def from_rows(cls, rows, termination=None, config=None):
        """Wrap hand-built rows; derivatives come from finite differences."""
        if termination is None:
            termination = Termination(TerminationKind.REACHED_END)
        return cls(np.asarray(rows, dtype=float), termination, config)

    def __len__(self):
        return len(self.rows)

    eta = property(lambda self: self.rows[:, 0])
    f = property(lambda self: self.rows[:, 1])
    g = property(lambda self: self.rows[:, 2])
    h = property(lambda self: self.rows[:, 3])
    q = property(lambda self: self.rows[:, 4])
    determinant = property(lambda self: self.rows[:, 5])

    def interpolate(self, eta, dtype=float, derivative=False):
        """Dense ``(f, g, h, q)`` (or derivatives) at ``eta``."""
        if self.dense is None:
            raise DomainError("table has fewer than two rows; nothing to interpolate")
        return self.dense(eta, dtype=dtype, derivative=derivative)

    def same_as(self, other) -> bool:
        """Bitwise equality of rows and termination."""
        return (self.termination == other.termination
                and self.rows.shape == other.rows.shape
                and self.rows.tobytes() == other.rows.tobytes())


def _params(exp: SimilarityExponents, eos: ChaplyginEos, form: MomentumForm):
    alpha, beta, gamma, _ = exp.as_floats()
    return (alpha, beta, gamma, float(eos.A), float(eos.n), form.code)


def _finite(values) -> bool:
    return all(math.isfinite(v) for v in values)


def _bisect(predicate, lo, hi, tol=EVENT_TOLERANCE):
    """Shrink ``[lo, hi]`` around the switch of ``predicate`` (true at lo,
    false at hi) until narrower than ``tol``; returns the bracket."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def _step_dense(eta, y, h, stages):
    K = np.asarray(stages, dtype=float).reshape(7, 4)
    Q = K.T @ _P                          # (4, 4)
    y = np.asarray(y, dtype=float)

    def at(x):
        theta = (x - eta) / h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return y + h * (Q @ powers)

    return at


def _locate(kern, params, tol, g_floor, state_at, lo, hi, det_lo):
    """Refine a critical-point or density-floor event inside ``[lo, hi]``.

    ``state_at(x)`` gives the continuous state inside the step.  Returns the
    event kind and position.
    """
    y_hi = state_at(hi)
    if y_hi[1] <= g_floor:
        lo, hi = _bisect(lambda x: state_at(x)[1] > g_floor, lo, hi)
        return TerminationKind.DENSITY_FLOOR, 0.5 * (lo + hi)

    def same_side(x):
        y = state_at(x)
        det = kern.rhs(x, y[0], y[1], y[3], params)[3]
        return abs(det) > tol and (det > 0) == (det_lo > 0)

    if same_side(hi):
        return TerminationKind.CRITICAL_POINT, hi
    lo, hi = _bisect(same_side, lo, hi)
    return TerminationKind.CRITICAL_POINT, 0.5 * (lo + hi)


def _relatively_singular(y, eta, params, threshold=RELATIVE_SINGULAR_THRESHOLD):
    """Whether the (f', g') system at ``y`` is numerically singular, judged by
    ``|det| / ||M||_F**2`` (a reciprocal condition estimate); used to
    attribute a step-size collapse to a critical point.

    The raw determinant can stall just above ``singular_tolerance`` when ``g``
    diverges while ``f - beta*eta`` vanishes; the matrix is then singular to
    working precision although neither term of ``det`` is small relative to
    the other.
    """
    _, beta, _, A, n, form = params
    f, g = y[0], y[1]
    if not g > 0:
        return False
    a12 = f - beta * eta
    a21 = eta * f - beta * eta - eta * eta if form == 0 else a12
    a22 = n * A * g ** (-(n + 2.0))
    det = g * a22 - a12 * a21
    frob2 = g * g + a12 * a12 + a21 * a21 + a22 * a22
    return frob2 > 0 and abs(det) <= threshold * frob2


def _initial_step(kern, params, eta, y, k1, cfg):
    sc = [cfg.atol + cfg.rtol * abs(v) for v in y]
    d0 = math.sqrt(sum((v / s) ** 2 for v, s in zip(y, sc)) / 4)
    d1 = math.sqrt(sum((v / s) ** 2 for v, s in zip(k1, sc)) / 4)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, cfg.eta_end - eta)
    y1 = [a + h0 * b for a, b in zip(y, k1)]
    fp, gp, qp, _ = kern.rhs(eta + h0, y1[0], y1[1], y1[3], params)
    k2 = (fp, gp, y1[3], qp)
    if not _finite(k2):
        return h0 * 1e-3
    d2 = math.sqrt(sum(((a - b) / s) ** 2 for a, b, s in zip(k2, k1, sc)) / 4) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, cfg.eta_end - eta)


def _adaptive(kern, params, cfg, eta, y, k1, det):
    rows = [(eta, *y, det)]
    derivs = [k1]
    h = _initial_step(kern, params, eta, y, k1, cfg)
    facold = 1e-4
    accepted = rejected = 0
    reject_streak = False
    termination = None
    while termination is None:
        remaining = cfg.eta_end - eta
        if remaining <= 0:
            termination = Termination(TerminationKind.REACHED_END)
            break
        if accepted >= cfg.max_steps:
            termination = Termination(TerminationKind.MAX_STEPS, eta)
            break
        last = h >= remaining * (1 - 1e-12)
        if last:
            h = remaining
        if h < cfg.min_step and not last:
            kind = (TerminationKind.CRITICAL_POINT if _relatively_singular(y, eta, params)
                    else TerminationKind.STEP_UNDERFLOW)
            termination = Termination(kind, eta)
            break
        y_new, err, K = kern.dp45_step(eta, y, h, k1, params)
        if not (_finite(y_new) and _finite(K)):
            h *= 0.25
            rejected += 1
            reject_streak = True
            continue
        errnorm = math.sqrt(sum(
            (e / (cfg.atol + cfg.rtol * max(abs(a), abs(b)))) ** 2
            for e, a, b in zip(err, y, y_new)) / 4)
        fac11 = errnorm ** _EXPO1
        if errnorm > 1.0:
            h /= min(_FACC1, fac11 / _SAFE)
            rejected += 1
            reject_streak = True
            continue
        eta_new = cfg.eta_end if last else eta + h
        k7 = tuple(K[24:28])
        det_new = kern.rhs(eta_new, y_new[0], y_new[1], y_new[3], params)[3]
        if (y_new[1] <= cfg.g_floor or not abs(det_new) > cfg.singular_tolerance
                or (det_new > 0) != (det > 0)):
            kind, where = _locate(kern, params, cfg.singular_tolerance, cfg.g_floor,
                                  _step_dense(eta, y, h, K), eta, eta_new, det)
            termination = Termination(kind, where)
            break
        rows.append((eta_new, *y_new, det_new))
        derivs.append(k7)
        accepted += 1
        eta, y, k1, det = eta_new, y_new, k7, det_new
        fac = max(_FACC2, min(_FACC1, fac11 / facold ** _BETA / _SAFE))
        h_next = h / fac
        if reject_streak:
            h_next = min(h_next, h)
        reject_streak = False
        facold = max(errnorm, 1e-4)
        h = h_next
    stats = {"accepted": accepted, "rejected": rejected}
    return np.array(rows, dtype=float), np.array(derivs, dtype=float), termination, stats


def _euler(kern, params, cfg, step):
    rows, derivs, code = kern.euler_march(
        cfg.eta_start, cfg.initial, step, cfg.eta_end, params,
        cfg.singular_tolerance, cfg.g_floor, int(cfg.max_steps))
    last = rows[-1]
    if code == 0:
        termination = Termination(TerminationKind.REACHED_END)
    elif code == 4:
        termination = Termination(TerminationKind.MAX_STEPS, float(last[0]))
    elif code == 3:
        termination = Termination(TerminationKind.STEP_UNDERFLOW, float(last[0]))
    else:
        eta0 = float(last[0])
        y0 = last[1:5].copy()
        d0 = derivs[-1]
        k = len(rows)
        hi = cfg.eta_end if k == math.ceil((cfg.eta_end - cfg.eta_start) / step - 1e-9) \
            else cfg.eta_start + k * step
        kind, where = _locate(kern, params, cfg.singular_tolerance, cfg.g_floor,
                              lambda x: y0 + (x - eta0) * d0, eta0, hi, float(last[5]))
        termination = Termination(kind, where)
    return rows, derivs, termination, {"accepted": len(rows) - 1, "rejected": 0}


def _merge_output_points(kern, params, rows, dense, points):
    lo, hi = rows[0, 0], rows[-1, 0]
    pts = np.array(sorted({p for p in points if lo <= p <= hi} - set(rows[:, 0])))
    if len(pts) == 0 or dense is None:
        return rows
    vals = dense(pts)
    dets = np.array([kern.rhs(x, v[0], v[1], v[3], params)[3] for x, v in zip(pts, vals)])
    extra = np.column_stack([pts, vals, dets])
    merged = np.concatenate([rows, extra])
    return merged[np.argsort(merged[:, 0], kind="stable")]


def integrate(config: IntegrationConfig, exp: SimilarityExponents, eos: ChaplyginEos,
              backend=None) -> SolutionTable:
    """Integrate the reduced system from ``eta_start`` towards ``eta_end``.

    Parameters
    ----------
    backend : str or kernel object, optional
        ``"compiled"`` or ``"python"``; defaults to the backend chosen at
        import time.  An object with ``NAME``, ``rhs`` and ``dp45_step``
        (the ``_purepy`` signatures) replaces the reduced system entirely.

    Raises
    ------
    DomainError
        If ``g0 <= g_floor``.
    SetupError
        If the derivatives at the initial point are not finite.
    """
    kern = _backend.kernels if backend is None else _backend.get(backend)
    cfg = config
    if not cfg.g0 > cfg.g_floor:
        raise DomainError(f"g0={cfg.g0!r} must exceed g_floor={cfg.g_floor!r}")
    params = _params(exp, eos, cfg.momentum_form)
    eta = cfg.eta_start
    y = cfg.initial
    fp, gp, qp, det = kern.rhs(eta, y[0], y[1], y[3], params)
    if not abs(det) > cfg.singular_tolerance:
        return SolutionTable(np.array([(eta, *y, det)]),
                             Termination(TerminationKind.CRITICAL_POINT, eta), cfg)
    k1 = (fp, gp, y[3], qp)
    if not _finite(k1):
        raise SetupError(f"non-finite derivatives at the initial point: {k1!r}")

    if isinstance(cfg.mode, FixedEuler):
        rows, derivs, termination, stats = _euler(kern, params, cfg, cfg.mode.step)
    else:
        rows, derivs, termination, stats = _adaptive(kern, params, cfg, eta, y, k1, det)
    dense = None
    if len(rows) >= 2:
        eta_n, f, g, _, q, _ = rows.T
        fpp, gpp, _ = second_derivatives(eta_n, f, g, q, derivs[:, 0], derivs[:, 1],
                                         derivs[:, 3], exp, eos, cfg.momentum_form)
        dense = DenseSolution(eta_n, rows[:, 1:5], derivs, np.column_stack([fpp, gpp]))
    if cfg.output_points:
        rows = _merge_output_points(kern, params, rows, dense, cfg.output_points)
    stats["backend"] = kern.NAME
    return SolutionTable(rows, termination, cfg, dense, stats)


def _pick(value, index):
    if isinstance(value, (list, tuple)):
        return value[index]
    return value


def sweep(configs: Sequence[IntegrationConfig], exp, eos, max_workers=1, backend=None):
    """Integrate several configurations.

    ``exp`` and ``eos`` may each be a single value or a sequence aligned with
    ``configs``.  Results keep input order; an element whose setup fails
    holds the raised exception instead of a table.
    """
    configs = list(configs)

    def one(k):
        try:
            return integrate(configs[k], _pick(exp, k), _pick(eos, k), backend=backend)
        except (DomainError, SetupError, ValueError, ArithmeticError) as exc:
            return exc

    if max_workers and max_workers > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, range(len(configs))))
    return [one(k) for k in range(len(configs))]


def classify(table: SolutionTable, atol=None) -> Classification:
    """Expansion / collapse verdict from the sign of the velocity shape ``f``.

    ``atol`` defaults to the absolute tolerance of the table's configuration
    (zero for hand-built tables).
    """
    if len(table) < 2:
        raise DomainError("classification needs at least two rows")
    if atol is None:
        atol = table.config.atol if table.config is not None else 0.0
    f = table.f
    if np.any(f[1:] < -atol):
        return Classification.COLLAPSE
    if np.all(f >= -atol) and table.termination.kind is TerminationKind.REACHED_END:
        return Classification.EXPANSION
    return Classification.INDETERMINATE

