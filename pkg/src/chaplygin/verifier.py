"""Independent checks of a computed trajectory.

* ODE residuals: the reduced equations evaluated with derivatives taken from
  the table's interpolant (or finite differences for hand-built tables).
* PDE residuals: the physical fields are rebuilt on an ``(r, t)`` grid and
  the cylindrical continuity, momentum and Poisson equations are evaluated
  with second-order central differences, in extended precision.
* Balance relations: the conditions on the exponents under which every term
  of an equation carries the same power of ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import ConvergenceError, DomainError
from .integrator import (
    Adaptive45,
    FixedEuler,
    IntegrationConfig,
    SolutionTable,
    TerminationKind,
    integrate,
)
from .model import ChaplyginEos, SimilarityExponents, as_fraction
from .reduction import MomentumForm, equation_terms

_LD = np.longdouble
_FOUR_PI_LD = 4 * np.arccos(_LD(-1))


@dataclass(frozen=True)
class GridSpec:
    r_min: float
    r_max: float
    t_center: float = 1.0
    spacing: float = 1e-3

    def __post_init__(self):
        if not self.r_min > 0:
            raise DomainError("grid r_min must be positive")
        if not self.t_center > 0:
            raise DomainError("grid t_center must be positive")
        if not (0 < self.spacing < (self.r_max - self.r_min) / 4):
            raise DomainError("grid spacing must be positive and below (r_max - r_min)/4")
        if not self.spacing < self.t_center:
            raise DomainError("grid spacing must be smaller than t_center")

    @property
    def n_intervals(self) -> int:
        return math.floor((self.r_max - self.r_min) / self.spacing + 1e-9)


@dataclass(frozen=True)
class BalanceRelation:
    name: str
    expression: str
    defect: Fraction

    @property
    def satisfied(self) -> bool:
        return self.defect == 0


@dataclass
class ResidualReport:
    ode_residual_max: dict
    balance: dict
    pde_residual_max: dict | None = None
    grid: GridSpec | None = None
    momentum_form: MomentumForm = MomentumForm.AS_PRINTED
    notes: list = field(default_factory=list)

    def lines(self):
        """``key: value`` lines for the plain-text report."""
        out = [f"momentum_form: {self.momentum_form.value}"]
        for key, value in self.ode_residual_max.items():
            out.append(f"ode_residual_{key}: {value!r}")
        for rel in self.balance.values():
            status = "satisfied" if rel.satisfied else "violated"
            out.append(f"balance_{rel.name}: {rel.defect} ({status}; {rel.expression})")
        if self.pde_residual_max is not None:
            g = self.grid
            out.append(f"grid: r_min={g.r_min!r} r_max={g.r_max!r} "
                       f"t_center={g.t_center!r} spacing={g.spacing!r}")
            for key, value in self.pde_residual_max.items():
                out.append(f"pde_residual_{key}: {value!r}")
        return out


def check_balance(exp: SimilarityExponents, n) -> dict:
    """Exact defects of the four power-matching relations.

    Substituting the ansatz, continuity terms scale as ``t^-(gamma+1)`` and
    ``t^-(gamma+alpha+beta)``; momentum terms as ``t^-(alpha+1)``,
    ``t^-(2 alpha+beta)``, ``t^(gamma(n+1)-beta)`` (pressure) and
    ``t^-(delta+beta)`` (gravity); the Poisson sides as ``t^-(delta+2 beta)``
    and ``t^-gamma``.  With ``alpha + beta = 1`` these reduce to the defects
    below, each zero when the relation holds.
    """
    if not (-1 < n <= 1):
        raise DomainError(f"Chaplygin exponent n={n!r} outside (-1, 1]")
    n = as_fraction(n)
    a, b, g, d = exp.alpha, exp.beta, exp.gamma, exp.delta
    relations = [
        BalanceRelation("continuity", "alpha+beta-1", a + b - 1),
        BalanceRelation("pressure", "gamma*(n+1)+2*alpha", g * (n + 1) + 2 * a),
        BalanceRelation("gravity", "delta-2*alpha", d - 2 * a),
        BalanceRelation("poisson", "delta+2*beta-gamma", d + 2 * b - g),
    ]
    return {rel.name: rel for rel in relations}


def _residual_arrays(table: SolutionTable, exp, eos, form, at):
    eta_rows = table.eta
    if len(np.unique(eta_rows)) < 3:
        raise DomainError("ODE residuals need at least three distinct eta samples")
    if np.any(table.g <= 0):
        raise DomainError("table contains rows with g <= 0")
    if at == "rows":
        x = eta_rows[1:-1]
        vals = table.rows[1:-1, 1:5]
    elif at == "midpoints":
        x = 0.5 * (eta_rows[1:] + eta_rows[:-1])
        vals = table.interpolate(x)
    else:
        raise ValueError(f"unknown sample set {at!r}")
    d = table.interpolate(x, derivative=True)
    f, g, _, _ = vals.T
    fp, gp, hp, qp = d.T
    terms = equation_terms(x, f, g, hp, fp, gp, qp, exp, eos, form)
    out = {}
    for key, ts in terms.items():
        stack = np.vstack([np.broadcast_to(t, x.shape) for t in ts])
        out[key] = (np.abs(stack.sum(axis=0)), np.abs(stack).max(axis=0))
    return out


def ode_residuals(table: SolutionTable, exp: SimilarityExponents, eos: ChaplyginEos,
                  form: MomentumForm = MomentumForm.AS_PRINTED, at: str = "rows",
                  relative: bool = False) -> dict:
    """Sup-norm of ``LHS - RHS`` of each reduced equation over the table.

    Parameters
    ----------
    at : {"rows", "midpoints"}
        Interior rows, or the midpoints between consecutive rows (where the
        interpolant is not pinned to the integrator's derivative values).
    relative : bool
        Divide each pointwise residual by the largest term magnitude there.
    """
    form = MomentumForm.parse(form)
    out = {}
    for key, (res, scale) in _residual_arrays(table, exp, eos, form, at).items():
        if relative:
            res = np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), 0.0)
        out[key] = float(res.max()) if res.size else 0.0
    return out


def _fields(table, exp, r, t):
    alpha, beta, gamma, delta = (_LD(float(v)) for v in
                                 (exp.alpha, exp.beta, exp.gamma, exp.delta))
    eta = r / t**beta
    vals = table.interpolate(eta, dtype=_LD)
    u = t ** (-alpha) * vals[..., 0]
    rho = t ** (-gamma) * vals[..., 1]
    phi = t ** (-delta) * vals[..., 2]
    return u, rho, phi


def pde_residuals(table: SolutionTable, exp: SimilarityExponents, eos: ChaplyginEos,
                  grid: GridSpec, form: MomentumForm = MomentumForm.AS_PRINTED,
                  pointwise: bool = False) -> dict:
    """Finite-difference residuals of the cylindrical Euler-Poisson equations.

    The shape functions are read from the table's dense output at
    ``eta = r / t^beta`` for ``t`` in ``t_center + (-s, 0, s)``; residuals are
    taken on interior radii at ``t_center``.  ``form`` only labels which
    reduced momentum equation produced ``table``; the PDEs themselves do not
    depend on it.

    Returns sup-norms keyed ``continuity``, ``momentum``, ``poisson``
    (arrays over the interior when ``pointwise``).
    """
    MomentumForm.parse(form)
    if table.dense is None:
        raise DomainError("table has no dense output")
    s = _LD(grid.spacing)
    r = _LD(grid.r_min) + s * np.arange(grid.n_intervals + 1, dtype=_LD)
    tc = _LD(grid.t_center)
    times = np.array([tc - s, tc, tc + s], dtype=_LD)
    beta = float(exp.beta)
    lo, hi = table.dense.span
    eta_all = np.concatenate([(r / t ** _LD(beta)).astype(float) for t in times])
    if eta_all.min() < lo or eta_all.max() > hi:
        raise DomainError(f"grid reaches eta in [{eta_all.min()!r}, {eta_all.max()!r}] "
                          f"outside the table span [{lo!r}, {hi!r}]")

    u_m, rho_m, _ = _fields(table, exp, r, times[0])
    u, rho, phi = _fields(table, exp, r, times[1])
    u_p, rho_p, _ = _fields(table, exp, r, times[2])
    i = slice(1, -1)
    two_s = 2 * s
    rho_t = (rho_p[i] - rho_m[i]) / two_s
    u_t = (u_p[i] - u_m[i]) / two_s
    rho_r = (rho[2:] - rho[:-2]) / two_s
    u_r = (u[2:] - u[:-2]) / two_s
    phi_r = (phi[2:] - phi[:-2]) / two_s
    rc, uc, rhoc = r[i], u[i], rho[i]

    continuity = rho_t + rho_r * uc + u_r * rhoc + uc * rhoc / rc
    n, A = _LD(float(eos.n)), _LD(float(eos.A))
    with np.errstate(divide="ignore", invalid="ignore"):
        pressure = np.where(rho_r == 0, _LD(0), n * A * rhoc ** (-n - 2) * rho_r)
    momentum = u_t + uc * u_r + pressure + phi_r
    half = s / 2
    laplacian = ((rc + half) * (phi[2:] - phi[1:-1])
                 - (rc - half) * (phi[1:-1] - phi[:-2])) / (rc * s * s)
    poisson = laplacian - _FOUR_PI_LD * rhoc

    out = {"continuity": continuity, "momentum": momentum, "poisson": poisson}
    if pointwise:
        return {k: np.abs(v).astype(float) for k, v in out.items()}
    return {k: float(np.abs(v).max()) for k, v in out.items()}


def poisson_defect_prediction(table: SolutionTable, exp: SimilarityExponents,
                              grid: GridSpec) -> float:
    """Predicted Poisson residual away from ``t = 1`` when the reduced Poisson
    equation holds: ``|t^-(delta+2 beta) - t^-gamma| * 4 pi * g`` at interior
    grid points (sup-norm)."""
    s = grid.spacing
    r = grid.r_min + s * np.arange(grid.n_intervals + 1)
    t = grid.t_center
    beta, gamma, delta = float(exp.beta), float(exp.gamma), float(exp.delta)
    g = table.interpolate(r[1:-1] / t**beta)[:, 1]
    factor = abs(t ** (-delta - 2 * beta) - t ** (-gamma))
    return float((factor * 4 * math.pi * np.abs(g)).max())


def residual_report(table: SolutionTable, exp: SimilarityExponents, eos: ChaplyginEos,
                    grid: GridSpec | None = None,
                    form: MomentumForm = MomentumForm.AS_PRINTED) -> ResidualReport:
    form = MomentumForm.parse(form)
    report = ResidualReport(ode_residual_max={}, balance=check_balance(exp, eos.n),
                            momentum_form=form, grid=grid)
    try:
        report.ode_residual_max = ode_residuals(table, exp, eos, form)
    except DomainError as exc:
        report.notes.append(f"ode residuals unavailable: {exc}")
    if grid is not None:
        try:
            report.pde_residual_max = pde_residuals(table, exp, eos, grid, form)
        except DomainError as exc:
            report.grid = None
            report.notes.append(f"pde residuals unavailable: {exc}")
    return report


@dataclass(frozen=True)
class ConvergenceStudy:
    levels: tuple
    steps: tuple
    errors: tuple
    order: float


ADAPTIVE_LEVELS = (1e-6, 1e-8, 1e-10)
ADAPTIVE_REFERENCE = 1e-12
EULER_LEVELS = (1e-3, 5e-4, 2.5e-4)


def convergence_study(problem: IntegrationConfig, exp: SimilarityExponents,
                      eos: ChaplyginEos, levels=None, backend=None) -> ConvergenceStudy:
    """Observed order of the scheme selected by ``problem.mode``.

    Each level is integrated to ``eta_end`` and its endpoint compared with an
    adaptive reference at ``rtol = 1e-12``.  The order is the least-squares
    slope of ``-log(error)`` against ``log(step count)``.
    """
    atol_ratio = problem.atol / problem.rtol
    euler = isinstance(problem.mode, FixedEuler)
    if levels is None:
        levels = EULER_LEVELS if euler else ADAPTIVE_LEVELS

    def run(cfg, label):
        table = integrate(cfg, exp, eos, backend=backend)
        if table.termination.kind is not TerminationKind.REACHED_END:
            raise ConvergenceError(label, f"terminated with {table.termination}")
        return table

    ref = run(replace(problem, mode=Adaptive45(), rtol=ADAPTIVE_REFERENCE,
                      atol=ADAPTIVE_REFERENCE * atol_ratio, output_points=()), "reference")
    steps, errors = [], []
    for level in levels:
        if euler:
            cfg = replace(problem, mode=FixedEuler(level), output_points=())
        else:
            cfg = replace(problem, mode=Adaptive45(), rtol=level, atol=level * atol_ratio,
                          output_points=())
        table = run(cfg, level)
        err = float(np.abs(table.rows[-1, 1:5] - ref.rows[-1, 1:5]).max())
        if not err > 0:
            raise ConvergenceError(level, "endpoint error is zero; order undefined")
        steps.append(table.stats["accepted"])
        errors.append(err)
    slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    return ConvergenceStudy(tuple(levels), tuple(steps), tuple(errors), float(-slope))


def convergence_order(problem: IntegrationConfig, exp: SimilarityExponents,
                      eos: ChaplyginEos, backend=None) -> float:
    """Estimated order of accuracy; see :func:`convergence_study`."""
    return convergence_study(problem, exp, eos, backend=backend).order
