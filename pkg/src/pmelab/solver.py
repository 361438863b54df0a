"""Backward-Euler Newton scheme for du/dt - Lap(u^[m]) = S on a periodic grid.

Each step solves

    u_{n+1} - dt * Lap_h(u_{n+1}^[m]) = u_n + dt * S_n

with the centred second difference Lap_h. Columns of Lap_h sum to zero, so
the Jacobian I - dt*Lap_h*diag(.) has unit column sums and every full
Newton update preserves the cell sum of the right-hand side.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .fields import DomainError, Field, Grid, SpaceTimeField, signed_power

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Newton iteration failed to converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    dt: float
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    eps: float = 1e-12
    max_halvings: int = 30

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("time step must be positive")
        if self.eps < 0:
            raise DomainError("regularisation eps must be nonnegative")
        if self.newton_max_iter < 1:
            raise DomainError("newton_max_iter must be positive")


@lru_cache(maxsize=16)
def laplacian(grid: Grid) -> sp.csc_matrix:
    """Periodic centred second difference (3-point in 1-d, 5-point in 2-d)."""
    n = grid.n
    one = sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="lil")
    one[0, n - 1] = 1.0
    one[n - 1, 0] = 1.0
    one = one.tocsc() / grid.h**2
    if grid.dimension == 1:
        return one
    eye = sp.identity(n, format="csc")
    return (sp.kron(one, eye) + sp.kron(eye, one)).tocsc()


def _as_array(S, grid: Grid, t: float, k: int) -> np.ndarray | None:
    if S is None:
        return None
    if isinstance(S, Field):
        return S.values
    if isinstance(S, SpaceTimeField):
        return S.values[k]
    if callable(S):
        return np.asarray(S(t), dtype=float).reshape(grid.shape)
    return np.asarray(S, dtype=float).reshape(grid.shape)


def _newton(rhs: np.ndarray, guess: np.ndarray, A: sp.csc_matrix, dt: float, m: float, opts: SolverOptions):
    """Solve u - dt*A u^[m] = rhs; returns (u, iterations)."""
    scale = max(1.0, float(np.abs(rhs).max()))
    ident = sp.identity(rhs.size, format="csc")

    def F(u):
        return u - dt * (A @ signed_power(u, m)) - rhs

    def solve_lin(u, r):
        J = ident - dt * (A @ sp.diags(m * (np.abs(u) + opts.eps) ** (m - 1)))
        return spsolve(J.tocsc(), r)

    u = guess.copy()
    r = F(u)
    res = float(np.abs(r).max())
    it = 0
    while res > opts.newton_tol * scale:
        if it >= opts.newton_max_iter:
            raise SolverError(f"Newton did not converge in {opts.newton_max_iter} iterations", res)
        delta = solve_lin(u, r)
        lam = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = u - lam * delta
            r_trial = F(trial)
            res_trial = float(np.abs(r_trial).max())
            if np.isfinite(res_trial) and res_trial < res:
                break
            lam *= 0.5
        else:
            raise SolverError("damped Newton could not reduce the residual", res)
        u, r, res = trial, r_trial, res_trial
        it += 1
    # one undamped update restores the exact cell-sum balance after any damping
    if it == 0 or lam < 1.0:
        u = u - solve_lin(u, r)
        it += 1
    return u, it


def step(u_n: Field, dt: float, S_n, m: float, opts: SolverOptions | None = None) -> Field:
    """One backward-Euler step; ``S_n`` is a Field, array or None."""
    if not m > 1:
        raise DomainError("nonlinearity must exceed 1")
    opts = opts or SolverOptions(dt=dt)
    grid = u_n.grid
    src = _as_array(S_n, grid, 0.0, 0)
    if isinstance(S_n, Field) and S_n.grid != grid:
        raise DomainError("source and state live on different grids")
    rhs = u_n.values.ravel() + (0.0 if src is None else dt * src.ravel())
    u, _ = _newton(rhs, u_n.values.ravel(), laplacian(grid), dt, m, opts)
    return Field(grid, u.reshape(grid.shape))


def _support_warning(u0: Field, S, T: float, m: float) -> None:
    """Heuristic: spread of a Barenblatt profile carrying the same mass."""
    from .barenblatt import barenblatt_mass, barenblatt_params

    grid = u0.grid
    a = np.abs(u0.values)
    if not a.any():
        return
    mask = a > 0
    r0 = float(grid.radius()[mask].max()) if grid.dimension == 2 else float(np.abs(grid.nodes()[mask]).max())
    if r0 >= 0.5 * grid.L - grid.h:
        return  # data already fills the torus; nothing to estimate
    mass = float(a.sum() * grid.cell_volume)
    if isinstance(S, SpaceTimeField):
        mass += float(np.abs(S.values).sum() * grid.cell_volume * S.dt)
    ref = barenblatt_params(m, grid.dimension, 1.0)
    e = 1.0 / (m - 1)
    C = (mass / barenblatt_mass(ref)) ** (1.0 / (e + grid.dimension / 2.0))
    spread = np.sqrt(C / ref.k) * T**ref.beta
    if r0 + spread >= 0.5 * grid.L:
        warnings.warn(
            f"solution may reach the torus edge: estimated radius {r0 + spread:.3g} >= L/2 = {0.5 * grid.L:.3g}",
            stacklevel=3,
        )


def solve(u0: Field, S, T: float, m: float, opts: SolverOptions, *, t0: float = 0.0) -> SpaceTimeField:
    """March from ``u0`` at ``t0`` to ``t0 + T`` with steps of ``opts.dt``.

    ``S`` may be None, a Field (constant in time), a SpaceTimeField sampled at
    the step times, or a callable t -> array. The step count is T/dt rounded
    up; the step is shrunk so the last level lands on t0 + T.
    """
    if not m > 1:
        raise DomainError("nonlinearity must exceed 1")
    if not T > 0:
        raise DomainError("final time must be positive")
    grid = u0.grid
    n_steps = int(np.ceil(T / opts.dt - 1e-9))
    dt = T / n_steps
    times = t0 + dt * np.arange(n_steps + 1)
    if isinstance(S, SpaceTimeField):
        if S.grid != grid:
            raise DomainError("source and state live on different grids")
        if S.n_t < n_steps:
            raise DomainError(f"source has {S.n_t} levels, need at least {n_steps}")
    if isinstance(S, Field) and S.grid != grid:
        raise DomainError("source and state live on different grids")
    _support_warning(u0, S, T, m)

    A = laplacian(grid)
    values = np.empty((n_steps + 1,) + grid.shape)
    values[0] = u0.values
    iters = []
    u = u0.values.ravel().copy()
    for k in range(n_steps):
        src = _as_array(S, grid, times[k], k)
        rhs = u + (0.0 if src is None else dt * src.ravel())
        u, it = _newton(rhs, u, A, dt, m, opts)
        values[k + 1] = u.reshape(grid.shape)
        iters.append(it)
    log.debug("solved %d steps, mean Newton iterations %.2f", n_steps, np.mean(iters))
    meta = {"m": m, "dt": dt, "newton_iterations": iters, "source": "solver"}
    return SpaceTimeField(grid, times, values, meta)


def source_mass(S, grid: Grid, times: np.ndarray) -> np.ndarray:
    """Cell sum times cell volume of the source used at each step start."""
    out = np.zeros(len(times) - 1)
    for k in range(len(times) - 1):
        src = _as_array(S, grid, times[k], k)
        out[k] = 0.0 if src is None else float(src.sum() * grid.cell_volume)
    return out


def mass_defect(traj: SpaceTimeField, S=None) -> np.ndarray:
    """Per-step relative mass-balance error |M_{n+1} - M_n - dt*int S_n| / max(1, |u|_1)."""
    vol = traj.grid.cell_volume
    mass = traj.values.reshape(traj.n_t, -1).sum(axis=1) * vol
    dts = np.diff(traj.times)
    src = source_mass(S, traj.grid, traj.times)
    scale = np.maximum(1.0, np.abs(traj.values).reshape(traj.n_t, -1).sum(axis=1)[:-1] * vol)
    return np.abs(mass[1:] - mass[:-1] - dts * src) / scale


# ---------------------------------------------------------------------------
# weak residual


def _test_functions(grid: Grid, t0: float, T: float, kmax: int = 3, degree: int = 2):
    """Products a(t) b(x) of monomials in time and periodic trig modes in space."""
    x = grid.mesh()
    out = []
    waves = []
    for k in range(kmax + 1):
        w = 2.0 * np.pi * k / grid.L
        if grid.dimension == 1:
            waves.append((np.cos(w * x[0]), w**2))
            if k:
                waves.append((np.sin(w * x[0]), w**2))
        else:
            for kk in range(kmax + 1):
                v = 2.0 * np.pi * kk / grid.L
                for fa in (np.cos, np.sin):
                    for fb in (np.cos, np.sin):
                        if (fa is np.sin and k == 0) or (fb is np.sin and kk == 0):
                            continue
                        waves.append((fa(w * x[0]) * fb(v * x[1]), w**2 + v**2))
    span = T - t0
    for j in range(degree + 1):
        def a(t, j=j):
            return ((t - t0) / span) ** j

        def da(t, j=j):
            return j * ((t - t0) / span) ** (j - 1) / span if j else np.zeros_like(t)

        for b, lam in waves:
            out.append((a, da, b, lam))
    return out


def residual(traj: SpaceTimeField, m: float, S=None) -> float:
    """Largest weak-form defect against a fixed family of smooth test functions.

    For phi = a(t) b(x) the defect is
    |int int (u phi_t + u^[m] Lap(phi) + S phi) - [int u phi]_{t0}^{T}|,
    with the trapezoid rule in time and cell sums in space.
    """
    if traj.n_t < 3:
        raise DomainError("residual needs at least 3 time levels")
    grid = traj.grid
    vol = grid.cell_volume
    t = traj.times
    tw = traj.time_weights()
    um = signed_power(traj.values, m)
    src = None
    if S is not None:
        src = np.stack([_as_array(S, grid, t[k], k) for k in range(traj.n_t)])
    axes = tuple(range(1, traj.values.ndim))
    worst = 0.0
    for a, da, b, lam in _test_functions(grid, t[0], t[-1]):
        ub = np.sum(traj.values * b, axis=axes) * vol
        umb = np.sum(um * b, axis=axes) * vol
        integrand = ub * da(t) - lam * umb * a(t)
        if src is not None:
            integrand = integrand + np.sum(src * b, axis=axes) * vol * a(t)
        bulk = float(np.sum(tw * integrand))
        boundary = ub[-1] * a(t[-1]) - ub[0] * a(t[0])
        worst = max(worst, abs(bulk - boundary))
    return worst


# ---------------------------------------------------------------------------
# L1 contraction


@dataclass
class ContractionVerdict:
    holds: bool
    lhs: float
    rhs: float
    slack: float
    per_step: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"holds": self.holds, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}


def check_contraction(run1: SpaceTimeField, run2: SpaceTimeField, S1=None, S2=None) -> ContractionVerdict:
    """sup_n |u1_n - u2_n|_1 <= |u1_0 - u2_0|_1 + sum_n dt |S1_n - S2_n|_1 (left sums, as in the scheme)."""
    if run1.grid != run2.grid:
        raise DomainError("runs use different grids")
    if run1.n_t != run2.n_t or not np.allclose(run1.times, run2.times, rtol=0, atol=1e-12):
        raise DomainError("runs use different time levels")
    grid = run1.grid
    vol = grid.cell_volume
    diff = np.abs(run1.values - run2.values).reshape(run1.n_t, -1).sum(axis=1) * vol
    dts = np.diff(run1.times)
    sdiff = np.zeros(run1.n_t - 1)
    for k in range(run1.n_t - 1):
        a = _as_array(S1, grid, run1.times[k], k)
        b = _as_array(S2, grid, run1.times[k], k)
        a = np.zeros(grid.shape) if a is None else a
        b = np.zeros(grid.shape) if b is None else b
        sdiff[k] = float(np.abs(a - b).sum() * vol)
    rhs = float(diff[0] + np.sum(dts * sdiff))
    lhs = float(diff.max())
    slack = 1e-8 * (rhs + 1.0)
    return ContractionVerdict(lhs <= rhs + slack, lhs, rhs, slack, diff.tolist())
