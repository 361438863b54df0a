"""Closed-form regularity exponents for the porous medium equation.

Every function returns the supremum exponents of an open range ``[0, kappa)``;
callers subtract their own margin when they need an attained order.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .fields import DomainError

TOL = 1e-12


class Source(str, enum.Enum):
    THM1_GLOBAL = "Thm1Global"
    THM1_LOCAL = "Thm1Local"
    THM2_POWER = "Thm2Power"
    THM2_MIXED = "Thm2Mixed"
    AV_LEMMA = "AvLemma"
    AV_LEMMA_TIME = "AvLemmaTime"
    PRESCRIBED_P = "PrescribedP"


@dataclass(frozen=True)
class ExponentSet:
    p: float
    kappa_t: float
    kappa_x: float | None
    source: Source
    valid: bool = True
    reason: str = ""

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "kappa_t": self.kappa_t,
            "kappa_x": self.kappa_x,
            "source": self.source.value,
            "valid": self.valid,
            "reason": self.reason,
        }


def _require_m(m: float) -> None:
    if not m > 1:
        raise DomainError("nonlinearity must exceed 1")


def thm1_exponents(m: float, p: float) -> ExponentSet:
    """Space-time exponents for L^1 data: kappa_t = (m-p)/(p(m-1)), kappa_x = 2(p-1)/(p(m-1))."""
    _require_m(m)
    kt = (m - p) / p / (m - 1)
    kx = (p - 1) / p * 2 / (m - 1)
    if not (p > 1 + TOL and p <= m + TOL):
        return ExponentSet(p, kt, kx, Source.THM1_GLOBAL, False, f"p={p} not in (1, m={m}]")
    if abs(p - m) <= TOL:
        kt = 0.0
    return ExponentSet(p, kt, kx, Source.THM1_GLOBAL)


def thm1_local_exponents(m: float, s: float) -> ExponentSet:
    """Localised exponents parametrised by s in [0, 1]; p = s(m-1)+1."""
    _require_m(m)
    if not (-TOL <= s <= 1 + TOL):
        raise DomainError(f"interpolation parameter s={s} outside [0, 1]")
    if s <= TOL:
        return ExponentSet(1.0, 1.0, 0.0, Source.THM1_LOCAL)
    if s >= 1 - TOL:
        return ExponentSet(m, 0.0, 2.0 / m, Source.THM1_LOCAL)
    p = s * (m - 1) + 1
    return ExponentSet(p, (1 - s) / p, 2 * s / p, Source.THM1_LOCAL)


def thm2_exponents(m: float, rho: float, p: float, kind: str = "mixed", mu: float | None = None) -> ExponentSet:
    """Exponents for data in L^1 cap L^rho.

    ``kind="power"`` gives the spatial order of u^[mu] in L^p_t W^{s,p}_x
    (kappa_t is 0 by convention); ``kind="mixed"`` gives the space-time pair.
    """
    _require_m(m)
    if not rho > 1:
        return ExponentSet(p, 0.0, 0.0, _thm2_source(kind), False, f"rho={rho} must exceed 1")
    kind = kind.lower()
    if kind == "power":
        if mu is None:
            raise DomainError("power exponents need mu")
        kx = (mu * p - 1) / p * 2 / (m - 2 + rho)
        if not (1 - TOL <= mu <= m + TOL):
            return ExponentSet(p, 0.0, kx, Source.THM2_POWER, False, f"mu={mu} not in [1, m]")
        upper = (m - 1 + rho) / mu
        if not (1 + TOL < p < upper - TOL):
            return ExponentSet(p, 0.0, kx, Source.THM2_POWER, False, f"p={p} not in (1, {upper})")
        return ExponentSet(p, 0.0, kx, Source.THM2_POWER)
    if kind == "mixed":
        kt = (m - 1 + rho - p) / p / (m - 1)
        kx = (p - rho) / p * 2 / (m - 1)
        if not (rho + TOL < p < m - 1 + rho - TOL):
            return ExponentSet(p, kt, kx, Source.THM2_MIXED, False, f"p={p} must lie in (rho, m-1+rho) = ({rho}, {m - 1 + rho})")
        return ExponentSet(p, kt, kx, Source.THM2_MIXED)
    raise DomainError(f"unknown kind {kind!r}")


def _thm2_source(kind: str) -> Source:
    return Source.THM2_POWER if kind.lower() == "power" else Source.THM2_MIXED


def cor_power_local(m: float, mu: float) -> tuple[float, float]:
    """(sup sigma_x, max q) for local regularity of u^[mu]."""
    _require_m(m)
    if not (1 - TOL <= mu <= m + TOL):
        raise DomainError(f"mu={mu} not in [1, m]")
    return 2 * mu / m, m / mu


def averaging_constants(
    m: float, gamma: float, mu: float, rho: float, s: float = 1.0, time_only: bool = False
) -> ExponentSet:
    """Integrability and differentiability orders delivered by the averaging lemmas.

    rho = 1 is accepted as the continuous endpoint of the open range.
    """
    _require_m(m)
    if time_only:
        src = Source.AV_LEMMA_TIME
        denom = rho * mu + (1 - rho) * (1 - gamma)
        p = (1 - gamma + rho) / denom if denom != 0 else float("inf")
        kt = (mu - 1 + rho) / (1 - gamma + rho)
        problems = []
        if not gamma < 1:
            problems.append(f"gamma={gamma} must be < 1")
        if not (1 - TOL <= mu < 2 - gamma - TOL):
            problems.append(f"mu={mu} not in [1, 2-gamma)")
        if not (0 < rho <= 1 + TOL):
            problems.append(f"rho={rho} not in (0, 1]")
        return ExponentSet(p, kt, None, src, not problems, "; ".join(problems))

    src = Source.AV_LEMMA
    a = s * (m - 1) + 1 - gamma
    p = (a + rho) / (rho * mu + (1 - rho) * a)
    kt = (1 - s) * (mu - 1 + rho) / (a + rho)
    kx = 2 * s * (mu - 1 + rho) / (a + rho)
    problems = []
    if not gamma < m:
        problems.append(f"gamma={gamma} must be < m")
    if not (1 - TOL <= mu < m + 1 - gamma - TOL):
        problems.append(f"mu={mu} not in [1, m+1-gamma)")
    if not (0 < rho <= 1 + TOL):
        problems.append(f"rho={rho} not in (0, 1]")
    s_low = (mu - 2 + gamma) / (m - 1)
    lower_ok = s > s_low + TOL if s_low >= 0 else s >= -TOL
    if not lower_ok or s > 1 + TOL:
        problems.append(f"s={s} not in ({s_low}, 1] cap [0, 1]")
    if abs(s - 1) <= TOL:
        kt = 0.0
    return ExponentSet(p, kt, kx, src, not problems, "; ".join(problems))


def prescribed_p_exponents(m: float, gamma: float, mu: float, rho: float, p_tilde: float) -> tuple[float, float, float]:
    """Choose s so that the averaging exponent p equals ``p_tilde``.

    Returns ``(s, kappa_t, kappa_x)``.
    """
    _require_m(m)
    p = p_tilde
    denom = (m - 1) * (1 - p * (1 - rho))
    if denom <= 0:
        raise DomainError(f"(m-1)(1-p(1-rho)) = {denom} must be positive")
    top = (m + 1 - gamma) / mu
    bottom = (1 - gamma + rho) / (rho * mu + (1 - rho) * (1 - gamma))
    if not (max(bottom, 1.0) - TOL <= p <= top + TOL) or not p > 1 + TOL:
        raise DomainError(f"p_tilde={p} outside the admissible interval [{bottom}, {top}] cap (1, {top}]")
    s = (mu * p * rho + p * (1 - rho) * (1 - gamma) - 1 + gamma - rho) / denom
    kt = (m + rho - gamma - mu * p * rho + p * (1 - rho) * (gamma - m)) / (p * rho) / (m - 1)
    kx = (mu * p * rho + p * (1 - rho) * (1 - gamma) - 1 + gamma - rho) / (p * rho) * 2 / (m - 1)
    return s, kt, kx


@dataclass(frozen=True)
class ScalingVerdict:
    admissible: bool
    violated: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {"admissible": self.admissible, "violated": list(self.violated)}


def scaling_admissible(m: float, mu: float, p: float, sigma_t: float, sigma_x: float) -> ScalingVerdict:
    """Check the three dimensional-analysis constraints on an L^1-data estimate."""
    _require_m(m)
    if not (1 - TOL <= mu <= m + TOL):
        raise DomainError(f"mu={mu} not in [1, m]")
    if not p >= 1 - TOL:
        raise DomainError(f"p={p} must be >= 1")
    if sigma_t < 0 or sigma_x < 0:
        raise DomainError("orders must be nonnegative")
    violated = []
    if p > m / (mu + (m - 1) * sigma_t) + TOL:
        violated.append("p <= m/(mu+(m-1)sigma_t)")
    if sigma_t > (m - mu * p) / (p * (m - 1)) + TOL:
        violated.append("sigma_t <= (m-mu p)/(p(m-1))")
    if abs(sigma_x - (mu * p - 1) / p * 2 / (m - 1)) > TOL:
        violated.append("sigma_x = (mu p-1)/p * 2/(m-1)")
    return ScalingVerdict(not violated, tuple(violated))
