import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmelab.fields import DomainError, Field, Grid, SpaceTimeField, read_pmef, signed_power, write_pmef


def test_grid_basics():
    g = Grid(1, 4.0, 8)
    assert g.h == 0.5 and g.shape == (8,)
    assert np.allclose(g.nodes(), [-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75])
    with pytest.raises(DomainError):
        Grid(3, 1.0, 8)


def test_field_shape_checked():
    with pytest.raises(DomainError):
        Field(Grid(1, 1.0, 8), np.zeros(9))


def test_graded_time_weights_sum():
    grid = Grid(1, 1.0, 8)
    times = np.geomspace(0.01, 1.0, 10)
    traj = SpaceTimeField(grid, times, np.zeros((10, 8)))
    w = traj.time_weights()
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(times[-1] ** 2 / np.sqrt(times[-1] * times[-2]) - times[0] ** 2 / np.sqrt(times[0] * times[1]))


@given(st.floats(-5, 5), st.floats(1.0, 4.0))
def test_signed_power(u, m):
    v = signed_power(u, m)
    assert v == 0.0 or np.sign(v) == np.sign(u)
    assert abs(abs(v) - abs(u) ** m) <= 1e-12 * max(1.0, abs(u) ** m)


@pytest.mark.parametrize("dim,n", [(1, 16), (2, 8)])
def test_pmef_round_trip(tmp_path, rng, dim, n):
    grid = Grid(dim, 3.0, n)
    times = 0.5 + 0.1 * np.arange(6)
    traj = SpaceTimeField(grid, times, rng.normal(size=(6,) + grid.shape))
    path = tmp_path / "run.pmef"
    write_pmef(path, traj)
    back = read_pmef(path, t0=0.5)
    assert back.grid == grid
    assert np.array_equal(back.values, traj.values)
    assert np.allclose(back.times, times, rtol=0, atol=1e-14)


def test_pmef_header_layout(tmp_path):
    grid = Grid(1, 2.0, 4)
    traj = SpaceTimeField(grid, np.array([0.0, 0.25]), np.arange(8, dtype=float).reshape(2, 4))
    path = tmp_path / "x.pmef"
    write_pmef(path, traj)
    raw = path.read_bytes()
    magic, version, dims, n_t, n_x, dt, h = struct.unpack_from("<4sIQQQdd", raw)
    assert (magic, version, dims, n_t, n_x, dt, h) == (b"PMEF", 1, 1, 2, 4, 0.25, 0.5)
    assert np.array_equal(np.frombuffer(raw[struct.calcsize("<4sIQQQdd"):], "<f8"), np.arange(8.0))


def test_pmef_bad_magic(tmp_path):
    path = tmp_path / "bad.pmef"
    path.write_bytes(b"XXXX" + bytes(60))
    with pytest.raises(DomainError):
        read_pmef(path)
