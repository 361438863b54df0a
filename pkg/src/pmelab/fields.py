"""Grids, fields and trajectories on a periodic box, plus the PMEF container."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PMEF_MAGIC = b"PMEF"
PMEF_VERSION = 1
# magic, version, dims, n_t, n_x, dt, h
_PMEF_HEADER = struct.Struct("<4sIQQQdd")


class DomainError(ValueError):
    """Raised when inputs fall outside the domain of an operation."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic cell-centred grid on [-L/2, L/2)^d.

    The same extent and cell count are used on every axis.
    """

    dimension: int
    L: float
    n: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DomainError(f"unsupported dimension {self.dimension}")
        if self.n < 4:
            raise DomainError("grid needs at least 4 cells per axis")
        if not self.L > 0:
            raise DomainError("extent must be positive")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.h**self.dimension

    def nodes(self) -> np.ndarray:
        """Cell centres along one axis."""
        return -0.5 * self.L + (np.arange(self.n) + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        x = self.nodes()
        if self.dimension == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def radius(self) -> np.ndarray:
        """|x| at every cell centre."""
        return np.sqrt(sum(c**2 for c in self.mesh()))

    def wavenumbers(self) -> np.ndarray:
        """Angular frequencies 2*pi*k/L in FFT order along one axis."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)


@dataclass
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise DomainError(
                f"values of shape {self.values.shape} do not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field contains non-finite values")

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def lp_norm(self, p: float = 1.0) -> float:
        return lp_norm(self.values, self.grid.cell_volume, p)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))


@dataclass
class SpaceTimeField:
    """Samples u(t_k, x) on a grid at increasing times t_0 < ... < t_N.

    Trajectories from the solver use a uniform step. Closed-form families
    may use graded time levels; operations that difference in time check
    uniformity through :attr:`dt`.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise DomainError("a trajectory needs at least two time levels")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("times must be strictly increasing")
        if self.values.shape != (len(self.times),) + self.grid.shape:
            raise DomainError(
                f"values of shape {self.values.shape} do not match "
                f"{(len(self.times),) + self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError("trajectory contains non-finite values")

    @property
    def n_t(self) -> int:
        return len(self.times)

    @property
    def is_uniform(self) -> bool:
        steps = np.diff(self.times)
        return bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))

    @property
    def dt(self) -> float:
        if not self.is_uniform:
            raise DomainError("trajectory does not have a uniform time step")
        return float((self.times[-1] - self.times[0]) / (self.n_t - 1))

    def time_weights(self) -> np.ndarray:
        """Quadrature weights for integrals over [t_0, t_N].

        Trapezoid weights on a uniform grid; on graded grids each level owns
        the interval between the geometric means of its neighbours, which is
        the midpoint rule in log t.
        """
        t = self.times
        if self.is_uniform:
            w = np.full(self.n_t, self.dt)
            w[0] = w[-1] = 0.5 * self.dt
            return w
        if np.any(t <= 0):
            raise DomainError("graded time levels must be positive")
        edges = np.sqrt(t[1:] * t[:-1])
        lo = np.concatenate([[t[0] ** 2 / edges[0]], edges])
        hi = np.concatenate([edges, [t[-1] ** 2 / edges[-1]]])
        return hi - lo

    def slice(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def with_values(self, values: np.ndarray, times: np.ndarray | None = None) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.times if times is None else times, values, dict(self.meta))

    @classmethod
    def constant_in_time(cls, fld: Field, times) -> "SpaceTimeField":
        times = np.asarray(times, dtype=float)
        return cls(fld.grid, times, np.broadcast_to(fld.values, (len(times),) + fld.grid.shape).copy())


def lp_norm(values: np.ndarray, weight: float, p: float) -> float:
    """Discrete L^p norm with uniform cell weight; p may be inf."""
    a = np.abs(np.asarray(values, dtype=float))
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float((np.sum(a**p) * weight) ** (1.0 / p))


def signed_power(u, m: float):
    """u^[m] = |u|^(m-1) u."""
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.abs(u) ** m


def write_pmef(path, traj: SpaceTimeField) -> None:
    """Write a uniform-step trajectory to the PMEF binary container."""
    g = traj.grid
    header = _PMEF_HEADER.pack(PMEF_MAGIC, PMEF_VERSION, g.dimension, traj.n_t, g.n, traj.dt, g.h)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(traj.values, dtype="<f8").tobytes())


def read_pmef(path, t0: float = 0.0) -> SpaceTimeField:
    """Read a PMEF container. The format carries no origin, so pass ``t0``."""
    raw = Path(path).read_bytes()
    if len(raw) < _PMEF_HEADER.size:
        raise DomainError(f"{path}: truncated PMEF header")
    magic, version, dims, n_t, n_x, dt, h = _PMEF_HEADER.unpack_from(raw)
    if magic != PMEF_MAGIC:
        raise DomainError(f"{path}: bad magic {magic!r}")
    if version != PMEF_VERSION:
        raise DomainError(f"{path}: unsupported PMEF version {version}")
    count = n_t * n_x**dims
    data = np.frombuffer(raw, dtype="<f8", offset=_PMEF_HEADER.size)
    if data.size != count:
        raise DomainError(f"{path}: expected {count} samples, found {data.size}")
    grid = Grid(int(dims), n_x * h, int(n_x))
    times = t0 + dt * np.arange(n_t)
    return SpaceTimeField(grid, times, data.reshape((n_t,) + grid.shape).astype(float))
