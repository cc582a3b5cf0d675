"""Domain types: equation of state, similarity exponents and shape states.

The exponents of the three admissible solution variants are held as exact
:class:`fractions.Fraction` values so that balance checks can be carried out
in rational arithmetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import DomainError


def _check_n(n) -> None:
    if not (-1 < n <= 1):
        raise DomainError(f"Chaplygin exponent n={n!r} outside (-1, 1]")


def as_fraction(x) -> Fraction:
    """Exact rational value of ``x``.

    Floats are read through their shortest round-trip decimal form, so
    ``0.1`` becomes ``1/10``; converting back gives the same float.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{x!r} has no rational value")
    return Fraction(repr(x))


@dataclass(frozen=True)
class ChaplyginEos:
    """Barotropic closure ``P = -A * rho**(-n)``."""

    A: float
    n: float

    def __post_init__(self):
        if not (math.isfinite(self.A) and self.A > 0):
            raise DomainError(f"pressure scale A={self.A!r} must be positive")
        _check_n(self.n)


class VariantId(enum.Enum):
    I = "I"
    II = "II"
    III = "III"

    @classmethod
    def parse(cls, text) -> VariantId:
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper()
        aliases = {"1": "I", "2": "II", "3": "III"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown variant {text!r}; expected I, II or III") from None


@dataclass(frozen=True)
class SimilarityExponents:
    """Exponents of ``u = t^-alpha f``, ``rho = t^-gamma g``, ``Phi = t^-delta h``
    with ``eta = r / t^beta``."""

    alpha: Fraction
    beta: Fraction
    gamma: Fraction
    delta: Fraction
    variant: VariantId

    def as_floats(self) -> tuple[float, float, float, float]:
        return float(self.alpha), float(self.beta), float(self.gamma), float(self.delta)


@dataclass(frozen=True)
class ShapeState:
    eta: float
    f: float
    g: float
    h: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"eta={self.eta!r} must be positive")


def pressure(eos: ChaplyginEos, rho: float) -> float:
    """Chaplygin pressure ``-A rho^-n``; negative for every admissible density."""
    if not rho > 0:
        raise DomainError(f"density rho={rho!r} must be positive")
    return -eos.A * rho ** (-eos.n)


_ROWS = {
    VariantId.II: (Fraction(1), Fraction(0), Fraction(-1), Fraction(2)),
    VariantId.III: (Fraction(0), Fraction(1), Fraction(0), Fraction(0)),
}


def exponents_for(variant, n) -> SimilarityExponents:
    """Similarity exponents of one of the three admissible variants.

    Only variant I depends on ``n``, through ``gamma = -1/(n+1)``; that value
    is formed exactly from the decimal value of ``n`` (see :func:`as_fraction`).
    """
    variant = VariantId.parse(variant)
    _check_n(n)
    if variant is VariantId.I:
        half = Fraction(1, 2)
        gamma = Fraction(-1) / (as_fraction(n) + 1)
        return SimilarityExponents(half, half, gamma, Fraction(1), variant)
    return SimilarityExponents(*_ROWS[variant], variant)


def reconstruct_fields(state: ShapeState, exp: SimilarityExponents, t: float):
    """Physical ``(u, rho, phi, r)`` at time ``t`` from a shape state."""
    if not t > 0:
        raise DomainError(f"time t={t!r} must be positive")
    alpha, beta, gamma, delta = exp.as_floats()
    try:
        r = state.eta * t**beta
        u = t ** (-alpha) * state.f
        rho = t ** (-gamma) * state.g
        phi = t ** (-delta) * state.h
    except OverflowError:
        raise DomainError(f"fields at t={t!r} overflow double precision") from None
    return u, rho, phi, r
