"""Barenblatt source-type solution u(t,x) = t^-alpha (C - k|x t^-beta|^2)_+^(1/(m-1))."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fields import DomainError, Field, Grid, SpaceTimeField


@dataclass(frozen=True)
class BarenblattParams:
    m: float
    d: int
    C: float
    alpha: float
    beta: float
    k: float

    def exponents_consistent(self) -> bool:
        ref = barenblatt_params(self.m, self.d, self.C)
        return (ref.alpha, ref.beta, ref.k) == (self.alpha, self.beta, self.k)


def barenblatt_params(m: float, d: int, C: float = 1.0) -> BarenblattParams:
    if not m > 1:
        raise DomainError("nonlinearity must exceed 1")
    if d not in (1, 2):
        raise DomainError(f"unsupported dimension d={d}")
    if not C > 0:
        raise DomainError("free constant C must be positive")
    alpha = d / (d * (m - 1) + 2)
    return BarenblattParams(m=m, d=d, C=C, alpha=alpha, beta=alpha / d, k=alpha * (m - 1) / (2 * m * d))


def barenblatt_eval(params: BarenblattParams, t, x, mu: float = 1.0):
    """u_BB(t, x)^mu. ``x`` is a scalar/array for d=1, or |x| for d=2."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("Barenblatt profile needs t > 0")
    x = np.asarray(x, dtype=float)
    core = np.maximum(params.C - params.k * (x * t ** (-params.beta)) ** 2, 0.0)
    return t ** (-params.alpha * mu) * core ** (mu / (params.m - 1))


def barenblatt_support_radius(params: BarenblattParams, t: float) -> float:
    if not t > 0:
        raise DomainError("Barenblatt profile needs t > 0")
    return float(np.sqrt(params.C / params.k) * t**params.beta)


def barenblatt_threshold(m: float, mu: float) -> float:
    """Sharp spatial order 2mu/m of u^[mu] in L^{m/mu}_t W^{s,m/mu}_x."""
    if not m > 1:
        raise DomainError("nonlinearity must exceed 1")
    if not 1 <= mu <= m:
        raise DomainError(f"mu={mu} not in [1, m]")
    return 2 * mu / m


def barenblatt_mass(params: BarenblattParams) -> float:
    """Closed-form total mass (time independent)."""
    from scipy.special import beta as beta_fn

    e = 1.0 / (params.m - 1)
    r = np.sqrt(params.C / params.k)
    # integral over the ball of (C - k|y|^2)^e in radial form
    if params.d == 1:
        return float(params.C**e * r * beta_fn(0.5, e + 1))
    return float(np.pi * params.C**e * r**2 / (e + 1))


def barenblatt_sample(params: BarenblattParams, grid: Grid, t: float, mu: float = 1.0) -> Field:
    """Point samples at cell centres; warns if the support touches the box edge."""
    if grid.dimension != params.d:
        raise DomainError("grid dimension does not match the profile")
    radius = barenblatt_support_radius(params, t)
    if radius >= 0.5 * grid.L:
        warnings.warn(f"support radius {radius:.4g} reaches the box edge L/2={0.5 * grid.L:.4g}", stacklevel=2)
    r = grid.nodes() if grid.dimension == 1 else grid.radius()
    return Field(grid, barenblatt_eval(params, t, r, mu))


def barenblatt_trajectory(params: BarenblattParams, grid: Grid, times, mu: float = 1.0) -> SpaceTimeField:
    times = np.asarray(times, dtype=float)
    r = grid.nodes() if grid.dimension == 1 else grid.radius()
    values = np.stack([barenblatt_eval(params, t, r, mu) for t in times])
    return SpaceTimeField(grid, times, values, {"source": "barenblatt", "m": params.m, "mu": mu})


def early_time_family(
    params: BarenblattParams,
    resolutions,
    *,
    L: float,
    T: float = 1.0,
    mu: float = 1.0,
    cells_at_start: float = 4.0,
    log_step: float = 0.25,
) -> dict[int, SpaceTimeField]:
    """Resolution-indexed samples of u_BB^mu on graded time levels reaching toward t = 0.

    At resolution n the earliest level is the time at which the support spans
    ``cells_at_start`` cells, so refining the grid exposes more of the t -> 0
    singularity while every retained slice stays resolved. Levels are shared
    between resolutions (uniform in log t, anchored at T).
    """
    r1 = np.sqrt(params.C / params.k)
    family = {}
    for n in sorted(resolutions):
        grid = Grid(params.d, L, n)
        t_start = (cells_at_start * grid.h / r1) ** (1.0 / params.beta)
        if t_start >= T:
            raise DomainError(f"resolution {n} too coarse for T={T}")
        count = int(np.floor(np.log(T / t_start) / log_step)) + 1
        times = T * np.exp(-log_step * np.arange(count)[::-1])
        family[n] = barenblatt_trajectory(params, grid, times, mu)
    return family
