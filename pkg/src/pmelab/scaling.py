"""Amplitude/dilation rescalings that map solutions to solutions.

Time kind:  u~(t, x) = eta u(gamma t, x),  gamma = eta^(m-1),  S~ = eta^m S(gamma t, x)
Space kind: u~(t, x) = eta u(t, gamma x),  gamma^2 = eta^(1-m),  S~ = eta S(t, gamma x)

``gamma_scale`` is the dilation factor throughout (``gamma`` is reserved for
the velocity moment exponent elsewhere in the package).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .fields import DomainError, SpaceTimeField, signed_power
from .norms import spacetime_sobolev_norm

KINDS = ("time", "space")


@dataclass(frozen=True)
class ScalingTransform:
    kind: str
    eta: float
    m: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown scaling kind {self.kind!r}")
        if not self.eta > 0:
            raise DomainError("eta must be positive")
        if not self.m > 1:
            raise DomainError("nonlinearity must exceed 1")

    @property
    def gamma_scale(self) -> float:
        if self.kind == "time":
            return self.eta ** (self.m - 1)
        return self.eta ** ((1 - self.m) / 2)

    def coupling_holds(self) -> bool:
        g = self.gamma_scale
        if self.kind == "time":
            return math.isclose(self.eta ** (self.m - 1), g, rel_tol=1e-14)
        return math.isclose(self.eta ** (1 - self.m), g * g, rel_tol=1e-14)

    def predicted_ratio(self, mu: float, p: float, sigma_t: float, sigma_x: float, d: int = 1) -> float:
        """Factor multiplying ||u^[mu]||^p in the homogeneous space-time norm."""
        g = self.gamma_scale
        if self.kind == "time":
            return self.eta ** (mu * p) * g ** (sigma_t * p - 1)
        return self.eta ** (mu * p) * g ** (sigma_x * p - d)


def _time_resample(values: np.ndarray, times: np.ndarray, new_times_src: np.ndarray) -> np.ndarray:
    """Linear interpolation in time at source times ``new_times_src``."""
    idx = np.clip(np.searchsorted(times, new_times_src, side="right") - 1, 0, len(times) - 2)
    t0, t1 = times[idx], times[idx + 1]
    w = ((new_times_src - t0) / (t1 - t0))[:, None]
    return (1.0 - w) * values[idx] + w * values[idx + 1]


def time_rescale(traj: SpaceTimeField, m: float, eta: float) -> SpaceTimeField:
    """eta u(gamma t, x) on [t0/gamma, t1/gamma].

    The new levels keep the source step, rounded so a whole number of steps
    spans the interval; values come from linear interpolation in time.
    """
    tr = ScalingTransform("time", eta, m)
    g = tr.gamma_scale
    t0, t1 = traj.times[0] / g, traj.times[-1] / g
    if not t1 > t0:
        raise DomainError("rescaled time range is empty")
    span = traj.times[-1] - traj.times[0]
    n_steps = max(1, int(round((t1 - t0) / (span / (traj.n_t - 1)))))
    new_times = np.linspace(t0, t1, n_steps + 1)
    src_times = np.clip(g * new_times, traj.times[0], traj.times[-1])
    values = eta * _time_resample(traj.values.reshape(traj.n_t, -1), traj.times, src_times)
    meta = dict(traj.meta, rescaled=("time", eta))
    return SpaceTimeField(traj.grid, new_times, values.reshape((len(new_times),) + traj.grid.shape), meta)


def _spatial_support(traj: SpaceTimeField) -> float:
    x = traj.grid.nodes()
    mask = np.any(traj.values != 0, axis=0)
    return float(np.abs(x[mask]).max() + 0.5 * traj.grid.h) if mask.any() else 0.0


def space_rescale(traj: SpaceTimeField, m: float, eta: float) -> SpaceTimeField:
    """eta u(t, gamma x) by periodic cubic splines; zero where gamma x leaves the box."""
    if traj.grid.dimension != 1:
        raise DomainError("spatial rescaling is implemented for d = 1")
    tr = ScalingTransform("space", eta, m)
    g = tr.gamma_scale
    grid = traj.grid
    half = 0.5 * grid.L
    if _spatial_support(traj) / g >= half:
        raise DomainError(f"rescaled support {_spatial_support(traj) / g:.4g} overflows the box half-width {half:.4g}")
    x = grid.nodes()
    xs = np.append(x, x[0] + grid.L)
    vals = np.concatenate([traj.values, traj.values[:, :1]], axis=1)
    spline = CubicSpline(xs, vals, axis=1, bc_type="periodic")
    y = g * x
    inside = np.abs(y) <= half
    y_wrapped = np.where(y < xs[0], y + grid.L, y)
    out = np.where(inside[None, :], spline(y_wrapped), 0.0)
    return traj.with_values(eta * out)


def rescale_source(S: SpaceTimeField, m: float, eta: float, kind: str) -> SpaceTimeField:
    """The source that makes the rescaled trajectory a solution."""
    if kind == "time":
        out = time_rescale(S, m, eta)
        return out.with_values(out.values * eta ** (m - 1))  # eta^m overall
    return space_rescale(S, m, eta)


@dataclass
class ScalingReport:
    kind: str
    eta: float
    gamma_scale: float
    measured: float
    predicted: float
    tolerance: float = 0.05
    inconclusive: bool = False

    @property
    def ratio(self) -> float:
        return self.measured / self.predicted if self.predicted else float("nan")

    @property
    def passed(self) -> bool:
        return not self.inconclusive and abs(self.ratio - 1.0) <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "eta": self.eta,
            "gamma_scale": self.gamma_scale,
            "measured": self.measured,
            "predicted": self.predicted,
            "ratio": self.ratio,
            "passed": self.passed,
            "inconclusive": self.inconclusive,
        }


def _homogeneous_power(traj, mu, p, sigma_t, sigma_x, extension):
    powered = traj.with_values(signed_power(traj.values, mu))
    return spacetime_sobolev_norm(powered, sigma_t, sigma_x, p, homogeneous=True, extension=extension).value ** p


def verify_norm_scaling(
    traj: SpaceTimeField,
    m: float,
    mu: float,
    p: float,
    sigma_t: float,
    sigma_x: float,
    eta: float,
    kind: str,
    *,
    extension: str = "zero",
    tolerance: float = 0.05,
) -> ScalingReport:
    """Compare ||u~^[mu]||^p / ||u^[mu]||^p in the homogeneous space-time norm with the closed-form factor."""
    tr = ScalingTransform(kind, eta, m)
    rescaled = time_rescale(traj, m, eta) if kind == "time" else space_rescale(traj, m, eta)
    before = _homogeneous_power(traj, mu, p, sigma_t, sigma_x, extension)
    after = _homogeneous_power(rescaled, mu, p, sigma_t, sigma_x, extension)
    predicted = tr.predicted_ratio(mu, p, sigma_t, sigma_x, traj.grid.dimension)
    scale = max(float(np.abs(traj.values).max()), 1e-300) ** (mu * p)
    inconclusive = before <= 1e-14 * scale and after <= 1e-14 * scale
    measured = after / before if before > 0 else float("nan")
    return ScalingReport(kind, eta, tr.gamma_scale, measured, predicted, tolerance, inconclusive)


def l1_identity(traj: SpaceTimeField, m: float, eta: float, kind: str) -> tuple[float, float]:
    """(measured, predicted) L^1 norm of the rescaled initial slice."""
    tr = ScalingTransform(kind, eta, m)
    rescaled = time_rescale(traj, m, eta) if kind == "time" else space_rescale(traj, m, eta)
    vol = traj.grid.cell_volume
    before = float(np.abs(traj.values[0]).sum() * vol)
    after = float(np.abs(rescaled.values[0]).sum() * vol)
    factor = eta if kind == "time" else eta * tr.gamma_scale ** (-traj.grid.dimension)
    return after, factor * before
