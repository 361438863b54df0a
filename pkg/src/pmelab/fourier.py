"""Dyadic Littlewood-Paley partitions, block filtering and multiplier checks.

Frequencies are angular (2*pi*k/L). Blocks are built by telescoping a
smooth cutoff chi (chi = 1 on |xi| <= 1, chi = 0 on |xi| >= 2):

    phi_j(xi) = chi(2^-j |xi|) - chi(2^-(j-1) |xi|),

so phi_j lives in the annulus 2^(j-1) <= |xi| <= 2^(j+1) and any run of
consecutive blocks sums to a difference of two cutoffs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .fields import DomainError, Field, Grid, SpaceTimeField

# ---------------------------------------------------------------------------
# profiles


def smooth_transition(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    mid = (s > 0.0) & (s < 1.0)
    if np.any(mid):
        sm = s[mid]
        a = np.exp(-1.0 / sm)
        b = np.exp(-1.0 / (1.0 - sm))
        out[mid] = a / (a + b)
    return out


def cutoff(r):
    """chi(r) = 1 for r <= 1, 0 for r >= 2."""
    return smooth_transition(2.0 - np.abs(np.asarray(r, dtype=float)))


def time_cutoff(times: np.ndarray, ramp: float = 0.1) -> np.ndarray:
    """Smooth window vanishing at both ends of the trajectory, one on the interior.

    ``ramp`` is the fraction of the interval used for each transition.
    """
    t = np.asarray(times, dtype=float)
    span = t[-1] - t[0]
    width = ramp * span
    return smooth_transition((t - t[0]) / width) * smooth_transition((t[-1] - t) / width)


# ---------------------------------------------------------------------------
# partitions


@dataclass
class DyadicPartition:
    """Tabulated block weights on one transform axis (or the spatial axes)."""

    mode: str
    abs_freq: np.ndarray
    j_min: int
    j_max: int
    weights: dict[int, np.ndarray]
    residual: np.ndarray
    axis: str = "space"

    @property
    def indices(self) -> list[int]:
        return sorted(self.weights)

    def total(self) -> np.ndarray:
        return sum(self.weights[j] for j in self.indices) + self.residual


def _partition(abs_freq: np.ndarray, mode: str, axis: str) -> DyadicPartition:
    nonzero = abs_freq[abs_freq > 0]
    if nonzero.size == 0:
        raise DomainError("no nonzero frequencies")
    top = int(math.ceil(math.log2(nonzero.max())))
    if mode == "homogeneous":
        low = int(math.floor(math.log2(nonzero.min())))
    elif mode == "inhomogeneous":
        low = 1
        top = max(top, 1)
    else:
        raise DomainError(f"unknown partition mode {mode!r}")

    chi = {j: cutoff(abs_freq * 2.0 ** (-j)) for j in range(low - 1, top + 1)}
    weights = {j: chi[j] - chi[j - 1] for j in range(low, top + 1)}
    if mode == "homogeneous":
        # everything below 2^low: only the zero frequency on a grid
        residual = 1.0 - chi[top] + chi[low - 1]
    else:
        weights[0] = chi[0]
        residual = 1.0 - chi[top]
    return DyadicPartition(mode, abs_freq, low if mode == "homogeneous" else 0, top, weights, residual, axis)


def build_partition(grid: Grid, mode: str = "homogeneous") -> DyadicPartition:
    """Spatial partition tabulated on the FFT frequencies of ``grid``."""
    if grid.n < 8:
        raise DomainError("partition needs at least 8 cells per axis")
    k = grid.wavenumbers()
    if grid.dimension == 1:
        absf = np.abs(k)
    else:
        kx, ky = np.meshgrid(k, k, indexing="ij")
        absf = np.sqrt(kx**2 + ky**2)
    return _partition(absf, mode, "space")


def build_time_partition(n_t: int, dt: float, mode: str = "homogeneous") -> DyadicPartition:
    if n_t < 8:
        raise DomainError("time partition needs at least 8 levels")
    tau = np.abs(2.0 * np.pi * np.fft.fftfreq(n_t, d=dt))
    return _partition(tau, mode, "time")


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class DyadicDecomposition:
    axis: str
    blocks: dict
    residual: np.ndarray
    source: np.ndarray
    cutoff: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def reconstruct(self) -> np.ndarray:
        return sum(self.blocks.values()) + self.residual

    def target(self) -> np.ndarray:
        """What the blocks add up to (the source, times the time cutoff if one was used)."""
        if self.cutoff is None:
            return self.source
        shape = (-1,) + (1,) * (self.source.ndim - 1)
        return self.source * self.cutoff.reshape(shape)


def _space_axes(ndim_values: int, dimension: int) -> tuple[int, ...]:
    return tuple(range(ndim_values - dimension, ndim_values))


def decompose(obj, partition, axis: str = "space", *, window: bool = True) -> DyadicDecomposition:
    """Littlewood-Paley blocks of a Field or SpaceTimeField.

    ``axis="mixed"`` expects ``partition = (time_partition, space_partition)``
    and returns blocks keyed by ``(l, j)``. Time and mixed blocks are taken
    of the trajectory times the smooth temporal cutoff; ``window=False``
    skips it for data that is already periodic in time.
    """
    if isinstance(obj, Field):
        values = obj.values
        grid = obj.grid
        if axis != "space":
            raise DomainError("a static field only has spatial blocks")
    elif isinstance(obj, SpaceTimeField):
        values = obj.values
        grid = obj.grid
    else:
        raise DomainError("decompose expects a Field or SpaceTimeField")

    spatial = _space_axes(values.ndim, grid.dimension)
    if axis == "space":
        _check_shape(partition.abs_freq.shape, values.shape[values.ndim - grid.dimension:])
        hat = np.fft.fftn(values, axes=spatial)
        blocks = {j: np.real(np.fft.ifftn(hat * partition.weights[j], axes=spatial)) for j in partition.indices}
        residual = np.real(np.fft.ifftn(hat * partition.residual, axes=spatial))
        return DyadicDecomposition("space", blocks, residual, values)

    if not isinstance(obj, SpaceTimeField):
        raise DomainError("time blocks need a trajectory")
    win = time_cutoff(obj.times) if window else np.ones(obj.n_t)
    shape = (-1,) + (1,) * grid.dimension
    cut = values * win.reshape(shape)
    if axis == "time":
        _check_shape(partition.abs_freq.shape, (obj.n_t,))
        hat = np.fft.fft(cut, axis=0)
        blocks = {l: np.real(np.fft.ifft(hat * partition.weights[l].reshape(shape), axis=0)) for l in partition.indices}
        residual = np.real(np.fft.ifft(hat * partition.residual.reshape(shape), axis=0))
        return DyadicDecomposition("time", blocks, residual, values, win)
    if axis == "mixed":
        tpart, xpart = partition
        _check_shape(tpart.abs_freq.shape, (obj.n_t,))
        axes = (0,) + spatial
        hat = np.fft.fftn(cut, axes=axes)
        blocks = {}
        for l, j in product(tpart.indices, xpart.indices):
            w = tpart.weights[l].reshape(shape) * xpart.weights[j][None, ...]
            blocks[(l, j)] = np.real(np.fft.ifftn(hat * w, axes=axes))
        residual = cut - sum(blocks.values())
        return DyadicDecomposition("mixed", blocks, residual, values, win)
    raise DomainError(f"unknown axis {axis!r}")


def _check_shape(a, b) -> None:
    if tuple(a) != tuple(b):
        raise DomainError(f"partition tabulated on {tuple(a)} but data has shape {tuple(b)}")


def block_norms(decomposition: DyadicDecomposition, weight: float, p: float) -> dict:
    """Discrete L^p norm of every block; ``weight`` is the cell measure."""
    out = {}
    for key, b in decomposition.blocks.items():
        a = np.abs(b)
        out[key] = float(a.max()) if np.isinf(p) else float((np.sum(a**p) * weight) ** (1.0 / p))
    return out


def parseval_energy(fld: Field) -> tuple[float, float]:
    """(physical L^2 energy, frequency-side energy) for a Field."""
    vol = fld.grid.cell_volume
    phys = float(np.sum(fld.values**2) * vol)
    hat = np.fft.fftn(fld.values)
    freq = float(np.sum(np.abs(hat) ** 2) * vol / hat.size)
    return phys, freq


# ---------------------------------------------------------------------------
# multiplier checks for 1/L, L(i tau, i xi, v) = i tau + |v|^(m-1) |xi|^2


def inverse_symbol(tau, xi, v, m: float):
    """1/L with xi given as an array whose last axis is the spatial dimension."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    a = np.abs(v) ** (m - 1)
    return 1.0 / (1j * np.asarray(tau) + a * np.sum(xi**2, axis=-1))


def _central_difference(func, points: np.ndarray, orders: tuple[int, ...], steps: np.ndarray):
    """Tensor-product central differences of the given orders at each row of ``points``.

    ``steps`` has the same shape as ``points``. Returns the estimates and the
    sums of |terms|, which set the round-off floor.
    """
    from math import comb

    stencils = []
    for axis, n in enumerate(orders):
        h = steps[:, axis]
        if n == 0:
            stencils.append([(axis, 0.0, None)])
        else:
            stencils.append([(axis, n / 2.0 - k, (-1) ** k * comb(n, k)) for k in range(n + 1)])
    total = np.zeros(len(points), dtype=complex)
    size = np.zeros(len(points))
    for combo in product(*stencils):
        shifted = points.copy()
        coef = np.ones(len(points))
        for axis, offset, c in combo:
            if c is None:
                continue
            h = steps[:, axis]
            shifted[:, axis] += offset * h
            coef = coef * c / h ** orders[axis]
        term = coef * func(shifted)
        total += term
        size += np.abs(term)
    return total, size


class FiniteDifferenceError(RuntimeError):
    pass


def _derivative(func, points, orders, scale, delta=2e-2):
    """Richardson-extrapolated derivatives at every row of ``points``.

    Raises if successive differences shrink by a factor far from 4 while
    still well above the round-off floor.
    """
    if sum(orders) == 0:
        return func(points)
    (d1, _), (d2, _), (d3, size) = (
        _central_difference(func, points, orders, scale * delta / 2**i) for i in range(3)
    )
    floor = 1e3 * np.finfo(float).eps * size
    e12, e23 = np.abs(d1 - d2), np.abs(d2 - d3)
    check = (e23 > floor) & (e12 > floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(check, e12 / e23, 4.0)
    bad = np.abs(ratio - 4.0) > 0.4
    if bad.any():
        k = int(np.argmax(bad))
        raise FiniteDifferenceError(f"Richardson ratio {ratio[k]:.3f} at {points[k]} for orders {orders}")
    return (4.0 * d3 - d2) / 3.0


@dataclass
class MultiplierBound:
    constant: float
    refined_constant: float
    alpha: tuple
    samples: int

    @property
    def stable(self) -> bool:
        return abs(self.refined_constant - self.constant) <= 0.05 * max(self.constant, 1e-300)

    def as_dict(self) -> dict:
        return {
            "alpha": [self.alpha[0], list(self.alpha[1])],
            "constant": self.constant,
            "refined_constant": self.refined_constant,
            "stable": self.stable,
            "samples": self.samples,
        }


DEFAULT_SAMPLES = {"tau": (-2.0, 2.0, 9), "xi": (-2.0, 2.0, 9), "v": (-2.0, 1.0, 7)}


def _sample_points(spec: dict, d: int, refine: int):
    def axis(key):
        lo, hi, n = spec[key]
        return np.logspace(lo, hi, refine * (int(n) - 1) + 1)

    taus = np.concatenate([-axis("tau"), axis("tau")])
    vs = np.concatenate([-axis("v"), axis("v")])
    radii = axis("xi")
    if d == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        angles = np.linspace(0.0, np.pi, 3 * refine + 1)
        dirs = [np.array([np.cos(a), np.sin(a)]) for a in angles]
    return taus, vs, [r * e for r in radii for e in dirs]


def _multiplier_constant(m, alpha, spec, refine):
    a_tau, a_xi = alpha
    d = len(a_xi)
    taus, vs, xis = _sample_points(spec, d, refine)
    orders = (a_tau,) + tuple(a_xi)
    xis = np.array(xis)
    T, X = np.meshgrid(np.arange(len(taus)), np.arange(len(xis)), indexing="ij")
    points = np.column_stack([taus[T.ravel()], xis[X.ravel()]])
    rxi = np.linalg.norm(points[:, 1:], axis=1)
    scale = np.column_stack([np.abs(points[:, 0])] + [rxi] * d)
    best = 0.0
    for v in vs:
        def f(z, v=v):
            return inverse_symbol(z[:, 0], z[:, 1:], v, m)

        der = _derivative(f, points, orders, scale)
        L = 1j * points[:, 0] + abs(v) ** (m - 1) * rxi**2
        val = np.abs(der) * np.abs(L) * np.abs(points[:, 0]) ** a_tau * rxi ** sum(a_xi)
        best = max(best, float(val.max()))
    return best, len(points) * len(vs)


def verify_multiplier_bound(m: float, alpha, sample_spec: dict | None = None) -> MultiplierBound:
    """max |d^alpha (1/L)| |L| |tau|^a_tau |xi|^|a_xi| over a log-spaced sample and a refined one.

    ``alpha = (a_tau, a_xi)`` with ``a_xi`` an int (d=1) or a tuple.
    """
    if not m > 1:
        raise DomainError("nonlinearity must exceed 1")
    a_tau, a_xi = alpha
    a_xi = (int(a_xi),) if np.isscalar(a_xi) else tuple(int(a) for a in a_xi)
    if a_tau < 0 or min(a_xi) < 0 or a_tau + sum(a_xi) > 4:
        raise DomainError("need 0 <= |alpha| <= 4")
    spec = dict(DEFAULT_SAMPLES, **(sample_spec or {}))
    c1, n1 = _multiplier_constant(m, (a_tau, a_xi), spec, 1)
    c2, _ = _multiplier_constant(m, (a_tau, a_xi), spec, 2)
    return MultiplierBound(c1, c2, (a_tau, a_xi), n1)


@dataclass
class UniformMultiplierTable:
    l_values: list[int]
    j_values: list[int]
    raw: np.ndarray
    normalized: np.ndarray

    @property
    def ratio(self) -> float:
        nz = self.normalized[self.normalized > 0]
        return float(nz.max() / nz.min()) if nz.size else 1.0

    def as_dict(self) -> dict:
        return {
            "l": self.l_values,
            "j": self.j_values,
            "raw": self.raw.tolist(),
            "normalized": self.normalized.tolist(),
            "ratio": self.ratio,
        }


def _fattened(absf: np.ndarray) -> np.ndarray:
    """phi_-1 + phi_0 + phi_1, supported in 1/4 <= |xi| <= 4."""
    return cutoff(absf / 2.0) - cutoff(4.0 * absf)


def verify_uniform_multiplier(
    symbol="inv_L",
    l_range=range(-3, 4),
    j_range=range(-3, 4),
    *,
    m: float = 2.0,
    v: float = 1.0,
    n: int = 512,
    box: float = 64.0 * np.pi,
    alias_fraction: float = 0.01,
) -> UniformMultiplierTable:
    """L^1 norms of the kernels of eta~_l phi~_j * symbol in one space dimension.

    By dilation the (l, j) kernel has the same L^1 norm as that of
    eta~_0 phi~_0 * symbol(2^l tau, 2^j xi), which is what is transformed,
    on an ``n x n`` periodic box of side ``box``. ``normalized`` divides by
    the sup of |symbol| on the block.
    """
    if symbol == "inv_L":
        def symbol(tau, xi):
            return inverse_symbol(tau, xi[..., None], v, m)
    elif symbol == "one":
        def symbol(tau, xi):
            return np.ones(np.broadcast(tau, xi).shape)
    elif symbol == "zero":
        def symbol(tau, xi):
            return np.zeros(np.broadcast(tau, xi).shape)

    freq = 2.0 * np.pi * np.fft.fftfreq(n, d=box / n)
    tau, xi = np.meshgrid(freq, freq, indexing="ij")
    window = _fattened(np.abs(tau)) * _fattened(np.abs(xi))
    support = window > 0
    coords = np.fft.fftfreq(n) * box
    far = (np.abs(coords)[:, None] > 0.4 * box) | (np.abs(coords)[None, :] > 0.4 * box)

    ls, js = list(l_range), list(j_range)
    raw = np.zeros((len(ls), len(js)))
    norm = np.zeros_like(raw)
    for a, l in enumerate(ls):
        for b, j in enumerate(js):
            with np.errstate(divide="ignore", invalid="ignore"):
                sym = np.where(support, symbol(2.0**l * tau, 2.0**j * xi), 0.0)
            kernel = np.fft.ifft2(window * sym)
            mass = np.abs(kernel)
            total = float(mass.sum())
            if total > 0 and mass[far].sum() > alias_fraction * total:
                raise DomainError(f"kernel for (l={l}, j={j}) is not resolved on the box (aliasing)")
            raw[a, b] = total
            peak = float(np.abs(sym[support]).max()) if np.any(support) else 0.0
            norm[a, b] = total / peak if peak > 0 else 0.0
    return UniformMultiplierTable(ls, js, raw, norm)
