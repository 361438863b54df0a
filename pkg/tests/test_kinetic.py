import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmelab.barenblatt import barenblatt_params
from pmelab.experiments import barenblatt_run, random_pair
from pmelab.fields import DomainError, Field, Grid, SpaceTimeField
from pmelab.kinetic import (
    MIN_BINS,
    VelocityGrid,
    defect_measure,
    dissipation_oracle,
    kinetic_function,
    level_mass,
    moment_constant,
    singular_moment,
    velocity_grid,
)
from pmelab.solver import SolverOptions, solve


def constant_traj(c, n_t=5):
    grid = Grid(1, 4.0, 16)
    return SpaceTimeField.constant_in_time(Field(grid, np.full(16, c)), np.linspace(0, 1, n_t))


@pytest.fixture(scope="module")
def bb_measure():
    traj = barenblatt_run(barenblatt_params(2, 1), 128, 16.0, T=1.0, dt_per_h=0.25)
    return defect_measure(traj, 2.0)


def test_velocity_grid_rule():
    vg = velocity_grid(2.0)
    assert vg.n_bins >= MIN_BINS and vg.n_bins % 2 == 0
    assert vg.v_max == pytest.approx(1.1 * 2.0 + vg.dv, rel=1e-14)
    with pytest.raises(DomainError):
        VelocityGrid(1.0, 7)


def test_kinetic_function_examples():
    vg = VelocityGrid(3.0, 64)
    assert not kinetic_function(constant_traj(0.0), vg).values.any()
    kf = kinetic_function(constant_traj(2.0), vg)
    row = kf.values[0, 0]
    c = vg.centers
    assert np.all(row[(c >= 0) & (c < 2)] == 1) and np.all(row[(c < 0) | (c >= 2)] == 0)
    assert abs(kf.velocity_integral()[0, 0] - 2.0) <= vg.dv
    row = kinetic_function(constant_traj(-1.0), vg).values[0, 0]
    assert np.all(row[(c >= -1) & (c < 0)] == -1) and np.all(row[(c < -1) | (c >= 0)] == 0)


def test_kinetic_range_error():
    with pytest.raises(DomainError):
        kinetic_function(constant_traj(5.0), VelocityGrid(1.0, 64))


@given(seed=st.integers(0, 2**31))
def test_marginal_and_sign(seed):
    rng = np.random.default_rng(seed)
    grid = Grid(1, 2.0, 16)
    traj = SpaceTimeField(grid, np.linspace(0, 1, 4), rng.normal(size=(4, 16)))
    kf = kinetic_function(traj)
    assert np.all(np.abs(kf.velocity_integral() - traj.values) <= kf.vgrid.dv)
    assert set(np.unique(kf.values)) <= {-1, 0, 1}
    assert np.all(kf.values * np.sign(kf.vgrid.centers) >= 0)


def test_constant_state_has_no_defect():
    qm = defect_measure(constant_traj(0.8), 2.0)
    assert np.abs(qm.bin_mass).max() <= 1e-12
    assert singular_moment(qm, 0.5) <= 1e-12
    assert level_mass(qm, 0.4).holds


def test_total_mass_against_oracle(bb_measure):
    oracle = dissipation_oracle(barenblatt_params(2, 1), 1.0, 2.0)
    assert abs(bb_measure.total_mass / oracle - 1) < 0.05


def test_oracle_closed_form():
    # m=2: u_x = -x/(6t), and int u u_x^2 dx = t^(-4/3) * 4 R^3 / (15 * 36) with R = sqrt(12)
    R = np.sqrt(12.0)
    space = 2.0 * 4.0 * R**3 / (15.0 * 36.0)
    time_ = 3.0 * (1.0 - 2.0 ** (-1.0 / 3.0))
    val = dissipation_oracle(barenblatt_params(2, 1), 1.0, 2.0)
    assert val == pytest.approx(space * time_, rel=1e-10)


def test_support_bound(bb_measure):
    assert bb_measure.outside_support() <= 1e-12


def test_gamma_zero_moment_is_total(bb_measure):
    assert singular_moment(bb_measure, 0.0) == pytest.approx(bb_measure.total_mass, rel=1e-12)
    with pytest.raises(DomainError):
        singular_moment(bb_measure, 1.0)


def test_level_mass_examples(bb_measure):
    v = level_mass(bb_measure, 0.5 * bb_measure.u_max)
    assert v.holds and v.rhs == pytest.approx(bb_measure.traj.values[0].sum() * bb_measure.traj.grid.h)
    c = bb_measure.vgrid.centers
    beyond = level_mass(bb_measure, min(1.05 * bb_measure.u_max + bb_measure.vgrid.dv, c[-1]))
    assert beyond.value == 0.0 and beyond.exact_level == 0.0
    with pytest.raises(DomainError):
        level_mass(bb_measure, 10 * bb_measure.vgrid.v_max)


def test_moment_constant_finite(bb_measure):
    mc = moment_constant(bb_measure, 0.5)
    assert np.isfinite(mc["constant"]) and 0 < mc["constant"] < 10


def test_defect_nonnegative_with_source(rng):
    grid = Grid(1, 8.0, 64)
    u0, S = random_pair(grid, rng)
    traj = solve(u0, S, 0.3, 2.0, SolverOptions(dt=0.02, newton_tol=1e-13))
    qm = defect_measure(traj, 2.0, S)
    assert qm.clipped_fraction < 1e-6


def test_kinetic_equation_residual_shrinks():
    # d_t f - m|v|^(m-1) Lap f = d_v q + S delta_0 tested against smooth phi(t) psi(x) zeta(v)
    params = barenblatt_params(2, 1)
    defects = []
    for n in (64, 128, 256):
        traj = barenblatt_run(params, n, 16.0, T=0.5, dt_per_h=0.25)
        qm = defect_measure(traj, 2.0, keep_density=True)
        kf = kinetic_function(traj, qm.vgrid)
        x = traj.grid.nodes()
        v = qm.vgrid.centers
        t = traj.times
        psi = np.cos(2 * np.pi * x / 16.0)
        d2psi = -(2 * np.pi / 16.0) ** 2 * psi
        zeta = np.exp(-((v - 0.3) ** 2) / 0.05)
        dzeta = -2 * (v - 0.3) / 0.05 * zeta
        dv, h = qm.vgrid.dv, traj.grid.h
        # discrete weak form on (t_k, t_{k+1}] with backward differences
        acc = 0.0
        for k in range(traj.n_t - 1):
            dt = t[k + 1] - t[k]
            df = (kf.values[k + 1] - kf.values[k]).astype(float)
            lhs = np.einsum("xv,x,v->", df, psi, zeta) * h * dv
            diff = np.einsum("xv,x,v->", kf.values[k + 1].astype(float), d2psi, 2 * np.abs(v) * zeta) * h * dv * dt
            q = np.einsum("xv,x,v->", qm.density[k], psi, dzeta) * h * dv * dt
            acc += lhs - diff - q
        defects.append(abs(acc))
    assert defects[2] < defects[0]
