"""Fractional Sobolev, Besov and mixed space-time norms of gridded data.

Quadrature norms are one-dimensional. Two readings of a finite box are
supported:

``extension="periodic"``
    the field is one period of a periodic function; the kernel is summed
    over all periodic images, so translation by whole cells is exact.
``extension="zero"``
    the field is the restriction of a function on the line that vanishes
    outside the box; pairs with one point outside are integrated exactly.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from . import _quadrature
from .fields import DomainError, Field, Grid, SpaceTimeField, lp_norm

EXTENSIONS = ("periodic", "zero")


@dataclass
class NormReport:
    value: float
    method: str
    sigma: float | tuple[float, float]
    p: float
    h: float
    dt: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "sigma": list(self.sigma) if isinstance(self.sigma, tuple) else self.sigma,
            "p": self.p,
            "h": self.h,
            "dt": self.dt,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# one-dimensional Gagliardo sums


@functools.lru_cache(maxsize=64)
def _periodic_weights(n: int, h: float, s: float) -> np.ndarray:
    """h^2 * sum over images of |r + jL|^-s at offsets r = k h, k = 0..n/2."""
    L = n * h
    k = np.arange(n // 2 + 1, dtype=float)
    r = k * h
    with np.errstate(divide="ignore"):
        direct = np.where(k > 0, r ** (-s), 0.0)
    images = L ** (-s) * (zeta(s, 1.0 + r / L) + zeta(s, 1.0 - r / L))
    w = h * h * (direct + images)
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=64)
def _line_weights(n: int, h: float, s: float) -> np.ndarray:
    k = np.arange(n, dtype=float)
    with np.errstate(divide="ignore"):
        w = np.where(k > 0, h * h * (k * h) ** (-s), 0.0)
    w.setflags(write=False)
    return w


def _exterior(n: int, h: float, s: float) -> np.ndarray:
    """2 h int_{y outside box} |x_i - y|^-s dy for each cell centre x_i."""
    i = np.arange(n, dtype=float)
    left = (i + 0.5) * h
    right = (n - i - 0.5) * h
    return 2.0 * h * (left ** (1.0 - s) + right ** (1.0 - s)) / (s - 1.0)


def _crop(f: np.ndarray, pad: int = 2) -> np.ndarray:
    nz = np.flatnonzero(f)
    if nz.size == 0:
        return f[:0]
    lo = max(nz[0] - pad, 0)
    hi = min(nz[-1] + pad + 1, f.size)
    return f[lo:hi]


@functools.lru_cache(maxsize=64)
def _near_field_constant(q: float, terms: int = 20000) -> float:
    """Exact minus midpoint sum of |x-y|^q over unit cell pairs at all offsets (needs -1 < q < 1).

    For a locally linear f the pairs near the diagonal contribute
    |f'|^p h^(2+q) times this constant beyond what the midpoint sum captures.
    """
    k = np.arange(1, terms + 1, dtype=float)
    a = q + 2.0
    exact = ((k + 1) ** a - 2.0 * k**a + (k - 1) ** a) / ((q + 1.0) * (q + 2.0))
    c2 = q * (q - 1.0) / 12.0
    c4 = q * (q - 1.0) * (q - 2.0) * (q - 3.0) / 360.0
    tail = c2 * zeta(2.0 - q, terms + 1) + c4 * zeta(4.0 - q, terms + 1)
    return float(2.0 / ((q + 1.0) * (q + 2.0)) + 2.0 * (np.sum(exact - k**q) + tail))


def _near_field(f: np.ndarray, h: float, sigma: float, p: float, periodic: bool) -> float:
    q = p - 1.0 - sigma * p
    if not q < 1.0:
        return 0.0
    if periodic:
        g = np.roll(f, -1) - np.roll(f, 1)
    else:
        padded = np.concatenate([[0.0], f, [0.0]])
        g = padded[2:] - padded[:-2]
    slope = np.abs(g) / (2.0 * h)
    return float(np.sum(slope**p) * h ** (2.0 + q) * _near_field_constant(q))


def gagliardo_sum(values: np.ndarray, h: float, sigma: float, p: float, extension: str = "periodic") -> float:
    """The p-th power of the W^{sigma,p} seminorm of 1-d samples, sigma in (0,1)."""
    if not 0 < sigma < 1:
        raise DomainError(f"sigma={sigma} must lie in (0, 1)")
    if not p >= 1:
        raise DomainError(f"p={p} must be >= 1")
    f = np.asarray(values, dtype=float)
    s = 1.0 + sigma * p
    if extension == "periodic":
        return _quadrature.periodic_pair_sum(f, _periodic_weights(f.size, h, s), p) + _near_field(f, h, sigma, p, True)
    if extension == "zero":
        f = _crop(f)
        if f.size == 0:
            return 0.0
        inner = _quadrature.line_pair_sum(f, _line_weights(f.size, h, s), p)
        outer = float(np.sum(np.abs(f) ** p * _exterior(f.size, h, s)))
        return inner + outer + _near_field(f, h, sigma, p, False)
    raise DomainError(f"unknown extension {extension!r}")


def difference_quotient(values: np.ndarray, h: float, extension: str = "periodic") -> np.ndarray:
    """Forward difference (f_{i+1} - f_i)/h; on the line the result has one extra cell."""
    f = np.asarray(values, dtype=float)
    if extension == "periodic":
        return (np.roll(f, -1) - f) / h
    padded = np.concatenate([[0.0], f, [0.0]])
    return np.diff(padded) / h


def _split(sigma: float) -> tuple[int, float]:
    k = int(math.floor(sigma + 1e-12))
    r = sigma - k
    if abs(r) < 1e-12:
        r = 0.0
    return k, r


def _require_1d(grid: Grid) -> None:
    if grid.dimension != 1:
        raise DomainError("quadrature norms are implemented for d = 1")


def _seminorm_power(values: np.ndarray, h: float, sigma: float, p: float, extension: str) -> float:
    """Homogeneous part of order sigma, raised to p: ||D^k f||_p^p or |D^k f|_{r,p}^p."""
    k, r = _split(sigma)
    g = np.asarray(values, dtype=float)
    for _ in range(k):
        g = difference_quotient(g, h, extension)
    if r == 0.0:
        return float(np.sum(np.abs(g) ** p) * h)
    return gagliardo_sum(g, h, r, p, extension)


def _full_power(values: np.ndarray, h: float, sigma: float, p: float, extension: str) -> float:
    k, r = _split(sigma)
    g = np.asarray(values, dtype=float)
    total = float(np.sum(np.abs(g) ** p) * h)
    for _ in range(k):
        g = difference_quotient(g, h, extension)
        total += float(np.sum(np.abs(g) ** p) * h)
    if r > 0:
        total += gagliardo_sum(g, h, r, p, extension)
    return total


def _coarsen(values: np.ndarray) -> np.ndarray:
    n = values.size - values.size % 2
    return 0.5 * (values[:n:2] + values[1:n:2])


def slobodeckii_seminorm(
    fld: Field, sigma: float, p: float, *, extension: str = "periodic", convergence_check: bool = True
) -> NormReport:
    """Gagliardo seminorm (int int |f(x)-f(y)|^p / |x-y|^{1+sigma p})^{1/p} by cell-pair midpoint sums."""
    _require_1d(fld.grid)
    h = fld.grid.h
    value = gagliardo_sum(fld.values, h, sigma, p, extension) ** (1.0 / p)
    diag = {"extension": extension}
    if convergence_check and fld.grid.n >= 8:
        coarse = gagliardo_sum(_coarsen(fld.values), 2 * h, sigma, p, extension) ** (1.0 / p)
        diag["refinement_delta"] = (value - coarse) / value if value > 0 else 0.0
    if sigma * p >= 1 and _looks_discontinuous(fld.values):
        diag["warning"] = "sigma*p >= 1 on data with jumps; value may diverge under refinement"
    return NormReport(value, "quadrature", sigma, p, h, diagnostics=diag)


def _looks_discontinuous(values: np.ndarray) -> bool:
    jumps = np.abs(np.diff(values))
    scale = np.abs(values).max(initial=0.0)
    if scale == 0 or jumps.size < 4:
        return False
    return bool(jumps.max() > 0.25 * scale and jumps.max() > 20 * np.median(jumps))


def sobolev_norm(fld: Field, sigma: float, p: float, *, extension: str = "periodic") -> NormReport:
    """Full W^{sigma,p} norm: L^p plus difference-quotient norms up to order k plus the fractional top part."""
    _require_1d(fld.grid)
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    h = fld.grid.h
    if sigma == 0:
        value = lp_norm(fld.values, h, p)
    else:
        value = _full_power(fld.values, h, sigma, p, extension) ** (1.0 / p)
    return NormReport(value, "quadrature", sigma, p, h, diagnostics={"extension": extension})


def sobolev_seminorm(fld: Field, sigma: float, p: float, *, extension: str = "periodic") -> NormReport:
    """Homogeneous part only; sigma in (1,2) uses the fractional seminorm of the difference quotient."""
    _require_1d(fld.grid)
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    h = fld.grid.h
    value = _seminorm_power(fld.values, h, sigma, p, extension) ** (1.0 / p)
    return NormReport(value, "quadrature", sigma, p, h, diagnostics={"extension": extension})


# ---------------------------------------------------------------------------
# spectral norms


def besov_space_norm(obj, sigma_x: float, p: float, partition=None) -> NormReport:
    """sup_j 2^(sigma_x j) ||Delta_j f||_p over the representable blocks.

    For a SpaceTimeField the block norms are taken in L^p of space-time
    (Chemin-Lerner form); the residual block is reported, not included.
    """
    from . import fourier

    grid = obj.grid
    if partition is None:
        partition = fourier.build_partition(grid, "homogeneous")
    dec = fourier.decompose(obj, partition, "space")
    if isinstance(obj, SpaceTimeField):
        tw = obj.time_weights()
        shape = (-1,) + (1,) * grid.dimension
        norms = {j: _weighted_lp(b, grid.cell_volume * tw.reshape(shape), p) for j, b in dec.blocks.items()}
        resid = _weighted_lp(dec.residual, grid.cell_volume * tw.reshape(shape), p)
        total = _weighted_lp(obj.values, grid.cell_volume * tw.reshape(shape), p)
        dt = None if not obj.is_uniform else obj.dt
    else:
        norms = fourier.block_norms(dec, grid.cell_volume, p)
        resid = lp_norm(dec.residual, grid.cell_volume, p)
        total = lp_norm(obj.values, grid.cell_volume, p)
        dt = None
    weighted = {j: 2.0 ** (sigma_x * j) * v for j, v in norms.items()}
    j_star = max(weighted, key=weighted.get)
    value = weighted[j_star]
    diag = {
        "mode": partition.mode,
        "argmax_j": int(j_star),
        "residual_norm": resid,
        "residual_share": resid / total if total > 0 else 0.0,
    }
    return NormReport(value, "spectral", sigma_x, p, grid.h, dt, diag)


def _weighted_lp(values: np.ndarray, weight, p: float) -> float:
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float(np.sum(a**p * weight) ** (1.0 / p))


def mixed_besov_norm(
    stfield: SpaceTimeField, sigma_t: float, sigma_x: float, p: float, partition=None, *, mode: str = "inhomogeneous"
) -> NormReport:
    """sup over (l, j) of 2^(sigma_t l) 2^(sigma_x j) ||block_(l,j)||_p.

    The trajectory is multiplied by a smooth temporal window and treated as
    periodic in time. ``partition`` is a (time, space) pair; by default both
    are built in ``mode``.
    """
    from . import fourier

    grid = stfield.grid
    dt = stfield.dt
    if partition is None:
        partition = (
            fourier.build_time_partition(stfield.n_t, dt, mode),
            fourier.build_partition(grid, mode),
        )
    tpart, xpart = partition
    window = fourier.time_cutoff(stfield.times)
    shape = (-1,) + (1,) * grid.dimension
    cut = stfield.values * window.reshape(shape)
    axes = tuple(range(cut.ndim))
    hat = np.fft.fftn(cut, axes=axes)
    weight = grid.cell_volume * dt
    best, arg = 0.0, None
    covered = np.zeros_like(hat)
    for l in tpart.indices:
        for j in xpart.indices:
            w = tpart.weights[l].reshape(shape) * xpart.weights[j][None, ...]
            if not np.any(w):
                continue
            covered += w * hat
            block = np.real(np.fft.ifftn(hat * w, axes=axes))
            val = 2.0 ** (sigma_t * l + sigma_x * j) * _weighted_lp(block, weight, p)
            if arg is None or val > best:
                best, arg = val, (int(l), int(j))
    residual = np.real(np.fft.ifftn(hat - covered, axes=axes))
    diag = {
        "mode": tpart.mode,
        "argmax_lj": list(arg) if arg else None,
        "residual_norm": _weighted_lp(residual, weight, p),
        "time_cutoff": "smoothstep ramps over 10% of the interval at each end",
    }
    return NormReport(best, "spectral", (sigma_t, sigma_x), p, grid.h, dt, diag)


# ---------------------------------------------------------------------------
# space-time Sobolev norms


def _spatial_power(values: np.ndarray, h: float, sigma_x: float, p: float, extension: str, homogeneous: bool) -> float:
    if sigma_x == 0:
        return float(np.sum(np.abs(values) ** p) * h)
    if homogeneous:
        return _seminorm_power(values, h, sigma_x, p, extension)
    return _full_power(values, h, sigma_x, p, extension)


def _spacetime_power(values, times, weights, h, sigma_t, sigma_x, p, extension, homogeneous):
    slices = np.array([_spatial_power(v, h, sigma_x, p, extension, homogeneous) for v in values])
    lp_part = float(np.sum(weights * slices))
    if sigma_t == 0:
        return lp_part, lp_part, 0.0
    s = 1.0 + sigma_t * p
    pair = 0.0
    n_t = len(times)
    for a in range(n_t - 1):
        for b in range(a + 1, n_t):
            diff = _spatial_power(values[a] - values[b], h, sigma_x, p, extension, homogeneous)
            pair += 2.0 * diff * weights[a] * weights[b] / (times[b] - times[a]) ** s
    total = pair if homogeneous else lp_part + pair
    return total, lp_part, pair


def spacetime_sobolev_norm(
    stfield: SpaceTimeField,
    sigma_t: float,
    sigma_x: float,
    p: float,
    *,
    homogeneous: bool = False,
    extension: str = "periodic",
    time_cutoff: bool = False,
) -> NormReport:
    """W^{sigma_t,p}(t0, T; W^{sigma_x,p}) by nested quadrature.

    Each slice gets the spatial (semi)norm; the temporal Gagliardo double
    integral runs over the sampled interval with gridwise differences of
    slices measured in the spatial norm. ``homogeneous`` drops the lower
    order parts in both variables. With ``time_cutoff`` the value for the
    windowed trajectory is reported in the diagnostics as well.
    """
    _require_1d(stfield.grid)
    if stfield.n_t < 8:
        raise DomainError("space-time norms need at least 8 time levels")
    if not 0 <= sigma_t < 1:
        raise DomainError(f"sigma_t={sigma_t} must lie in [0, 1)")
    if not 0 <= sigma_x < 2:
        raise DomainError(f"sigma_x={sigma_x} must lie in [0, 2)")
    if not p >= 1:
        raise DomainError(f"p={p} must be >= 1")
    h = stfield.grid.h
    w = stfield.time_weights()
    total, lp_part, pair = _spacetime_power(
        stfield.values, stfield.times, w, h, sigma_t, sigma_x, p, extension, homogeneous
    )
    diag = {"extension": extension, "homogeneous": homogeneous, "lp_part": lp_part, "time_pair_part": pair}
    if time_cutoff:
        from .fourier import time_cutoff as window

        cut = stfield.values * window(stfield.times)[:, None]
        ctotal, _, _ = _spacetime_power(cut, stfield.times, w, h, sigma_t, sigma_x, p, extension, homogeneous)
        diag["cutoff_value"] = ctotal ** (1.0 / p)
        diag["cutoff_share"] = ctotal / total if total > 0 else 0.0
    dt = stfield.dt if stfield.is_uniform else None
    return NormReport(total ** (1.0 / p), "quadrature", (sigma_t, sigma_x), p, h, dt, diag)


def lp_time_power(stfield: SpaceTimeField, sigma_x: float, p: float, *, extension: str = "zero", homogeneous: bool = True) -> float:
    """int ||u(t)||^p dt with the spatial (semi)norm of order sigma_x, as a p-th power."""
    _require_1d(stfield.grid)
    w = stfield.time_weights()
    h = stfield.grid.h
    return float(sum(wk * _spatial_power(v, h, sigma_x, p, extension, homogeneous) for wk, v in zip(w, stfield.values)))


# ---------------------------------------------------------------------------
# threshold sweep

SLOPE_LEVEL = 0.05


@dataclass
class SweepResult:
    """Norms over a (sigma, resolution) table and the detected divergence threshold.

    ``slopes[sigma]`` is the divergence rate: the fitted exponent of the
    successive increments of ||.||^p against 1/h, divided by p. A divergent
    norm behaving like h^-a has rate a (the log-log slope of the norm); a
    convergent one has a negative rate.
    """

    rows: list[dict]
    slopes: dict[float, float]
    slope_errs: dict[float, float]
    log_slopes: dict[float, float]
    threshold: float | None
    ci: tuple[float, float] | None
    predicted: float | None = None
    reason: str = ""
    level: float = SLOPE_LEVEL

    @property
    def detected(self) -> bool:
        return self.threshold is not None

    def summary(self) -> dict:
        return {
            "threshold": self.threshold,
            "ci_lo": None if self.ci is None else self.ci[0],
            "ci_hi": None if self.ci is None else self.ci[1],
            "predicted": self.predicted,
            "detected": self.detected,
            "reason": self.reason,
        }


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and its standard error (0 when the fit is exact)."""
    if x.size < 2:
        return 0.0, float("nan")
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if x.size == 2:
        return float(coef[0]), 0.0
    resid = y - A @ coef
    s2 = float(resid @ resid) / (x.size - 2)
    return float(coef[0]), float(np.sqrt(s2 / np.sum((x - x.mean()) ** 2)))


def divergence_rate(hs, powers, p: float) -> tuple[float, float]:
    """Rate and standard error from p-th powers of a norm at decreasing h."""
    hs = np.asarray(hs, dtype=float)
    powers = np.asarray(powers, dtype=float)
    order = np.argsort(-hs)
    hs, powers = hs[order], powers[order]
    inc = np.abs(np.diff(powers))
    floor = 1e-15 * max(np.abs(powers).max(), 1e-300)
    inc = np.maximum(inc, floor)
    slope, err = _fit(np.log(1.0 / hs[1:]), np.log(inc))
    return slope / p, err / p


def detect_threshold(sigmas, slopes, errs, level: float = SLOPE_LEVEL):
    """Linear interpolation of the single crossing of ``level``.

    Returns ``(threshold, (lo, hi), reason)``; threshold is None unless the
    rates sit below the level up to some sigma and above it afterwards.
    """
    sig = np.asarray(sigmas, dtype=float)
    sl = np.asarray(slopes, dtype=float)
    er = np.nan_to_num(np.asarray(errs, dtype=float))

    def crossing(values):
        above = values > level
        if not above.any():
            return None, "no rate exceeds the level"
        if above.all():
            return None, "every rate exceeds the level"
        k = int(np.argmax(above))
        if not above[k:].all():
            return None, "non-monotone rate pattern"
        a, b = k - 1, k
        t = sig[a] + (level - values[a]) * (sig[b] - sig[a]) / (values[b] - values[a])
        return float(t), ""

    theta, reason = crossing(sl)
    if theta is None:
        return None, None, reason
    lo, _ = crossing(sl + er)
    hi, _ = crossing(sl - er)
    k = int(np.argmax(sl > level))
    lo = float(sig[k - 1]) if lo is None else lo
    hi = float(sig[k]) if hi is None else hi
    return theta, (min(lo, theta), max(hi, theta)), ""


def _family_power(obj, sigma: float, p: float, mode: str, extension: str, sigma_t: float) -> float:
    if isinstance(obj, Field):
        _require_1d(obj.grid)
        return _spatial_power(obj.values, obj.grid.h, sigma, p, extension, mode != "norm")
    if mode in ("seminorm", "norm"):
        return lp_time_power(obj, sigma, p, extension=extension, homogeneous=mode == "seminorm")
    if mode == "spacetime":
        return spacetime_sobolev_norm(obj, sigma_t, sigma, p, extension=extension).value ** p
    raise DomainError(f"unknown sweep mode {mode!r}")


def norm_sweep(
    family: dict,
    sigmas,
    p: float,
    mode: str = "seminorm",
    *,
    extension: str = "zero",
    sigma_t: float = 0.0,
    predicted: float | None = None,
    level: float = SLOPE_LEVEL,
) -> SweepResult:
    """Evaluate the norm on every member of a resolution-indexed family and locate where it starts to diverge.

    ``mode`` selects L^p_t of the spatial seminorm (``"seminorm"``), of the
    full spatial norm (``"norm"``), or the space-time norm with fixed
    ``sigma_t`` (``"spacetime"``). Static Fields count as one unit time slice.
    """
    if len(family) < 3:
        raise DomainError("a sweep needs at least 3 resolutions")
    sigmas = sorted(float(s) for s in sigmas)
    keys = sorted(family, key=lambda k: -family[k].grid.h)
    rows, slopes, errs, logs = [], {}, {}, {}
    for sigma in sigmas:
        hs, powers = [], []
        for key in keys:
            obj = family[key]
            hs.append(obj.grid.h)
            powers.append(_family_power(obj, sigma, p, mode, extension, sigma_t))
        rate, err = divergence_rate(hs, powers, p)
        norms_ = np.asarray(powers) ** (1.0 / p)
        logs[sigma], _ = _fit(np.log(1.0 / np.asarray(hs)), np.log(np.maximum(norms_, 1e-300)))
        slopes[sigma], errs[sigma] = rate, err
        for key, hh, val in zip(keys, hs, norms_):
            obj = family[key]
            dt = obj.dt if isinstance(obj, SpaceTimeField) and obj.is_uniform else None
            rows.append({"sigma": sigma, "h": hh, "dt": dt, "norm": float(val), "slope": rate, "slope_err": err})
    if len(sigmas) < 5:
        theta, ci, reason = None, None, "fewer than 5 sigma values"
    else:
        theta, ci, reason = detect_threshold(sigmas, [slopes[s] for s in sigmas], [errs[s] for s in sigmas], level)
    return SweepResult(rows, slopes, errs, logs, theta, ci, predicted, reason, level)
