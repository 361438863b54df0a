"""Reusable experiment pipelines shared by the CLI, scripts and acceptance tests."""
from __future__ import annotations

import numpy as np

from .barenblatt import BarenblattParams, barenblatt_params, barenblatt_sample, early_time_family
from .fields import Field, Grid, SpaceTimeField
from .kinetic import defect_measure, dissipation_oracle, level_mass, moment_constant
from .norms import SweepResult, norm_sweep
from .solver import SolverOptions, check_contraction, mass_defect, solve


def barenblatt_run(params: BarenblattParams, n: int, L: float, T: float = 1.0, t0: float = 1.0, dt_per_h: float = 1.0) -> SpaceTimeField:
    """Solver trajectory started from the Barenblatt profile at t0, dt = dt_per_h * h."""
    grid = Grid(params.d, L, n)
    u0 = barenblatt_sample(params, grid, t0)
    return solve(u0, None, T, params.m, SolverOptions(dt=dt_per_h * grid.h), t0=t0)


def solver_family(params, resolutions, *, L: float, T: float = 1.0, t0: float = 1.0, dt_per_h: float = 1.0) -> dict:
    return {n: barenblatt_run(params, n, L, T, t0, dt_per_h) for n in sorted(resolutions)}


def threshold_sweep(
    m: float = 2.0,
    mu: float = 1.0,
    p: float = 2.0,
    sigmas=(0.6, 0.8, 0.9, 1.0, 1.1, 1.2, 1.4),
    resolutions=(512, 1024, 2048, 4096),
    *,
    L: float = 8.0,
    T: float = 1.0,
    mode: str = "seminorm",
    extension: str = "zero",
) -> SweepResult:
    """Refinement sweep of L^p_t W^{sigma,p}_x norms of u_BB^mu on graded early times."""
    params = barenblatt_params(m, 1)
    family = early_time_family(params, resolutions, L=L, T=T, mu=mu)
    return norm_sweep(family, sigmas, p, mode, extension=extension, predicted=2.0 * mu / m)


def kinetic_study(m: float = 2.0, resolutions=(64, 128, 256), *, L: float = 16.0, T: float = 1.0, t0: float = 1.0, gamma: float = 0.5, v_fractions=(0.1, 0.3, 0.5, 0.7, 0.9)) -> dict:
    """Defect-measure checks on Barenblatt-driven runs at several resolutions (dt = h/4)."""
    params = barenblatt_params(m, 1)
    oracle = dissipation_oracle(params, t0, t0 + T)
    levels = []
    for n in sorted(resolutions):
        traj = barenblatt_run(params, n, L, T, t0, dt_per_h=0.25)
        qm = defect_measure(traj, m)
        mc = moment_constant(qm, gamma)
        levels.append(
            {
                "n": n,
                "h": traj.grid.h,
                "dt": traj.dt,
                "total_mass": qm.total_mass,
                "oracle": oracle,
                "relative_error": qm.total_mass / oracle - 1.0,
                "clipped_fraction": qm.clipped_fraction,
                "negative_mass": qm.negative_mass,
                "outside_support": qm.outside_support(),
                "moment": mc["moment"],
                "moment_constant": mc["constant"],
                "level_mass": [level_mass(qm, f * qm.u_max).as_dict() for f in v_fractions],
                "mass_defect": float(mass_defect(traj).max()),
                "measure": qm,
            }
        )
    return {"oracle": oracle, "levels": levels}


def random_pair(grid: Grid, rng: np.random.Generator, *, signed: bool = True):
    """Random initial data and constant-in-time source with compact support."""
    x = grid.nodes()
    window = np.exp(-((x / (0.2 * grid.L)) ** 4))

    def draw(scale):
        raw = rng.normal(size=grid.n) * window * scale
        return raw if signed else np.abs(raw)

    return Field(grid, draw(1.0)), Field(grid, draw(0.2))


def contraction_trials(trials: int = 20, ms=(1.5, 2.0, 3.0), *, n: int = 64, L: float = 8.0, T: float = 0.2, dt: float = 0.01, seed: int = 0) -> list[dict]:
    """Independent random (u0, S) pairs solved side by side; one verdict per trial."""
    rng = np.random.default_rng(seed)
    grid = Grid(1, L, n)
    opts = SolverOptions(dt=dt)
    out = []
    for k in range(trials):
        m = ms[k % len(ms)]
        u1, S1 = random_pair(grid, rng)
        u2, S2 = random_pair(grid, rng)
        r1 = solve(u1, S1, T, m, opts)
        r2 = solve(u2, S2, T, m, opts)
        verdict = check_contraction(r1, r2, S1, S2)
        out.append(
            {
                "trial": k,
                "m": m,
                **verdict.as_dict(),
                "mass_defect": float(max(mass_defect(r1, S1).max(), mass_defect(r2, S2).max())),
            }
        )
    return out
