"""Batch entry point: validate a JSON config, run one experiment, write CSV/JSON artifacts.

Exit status: 0 on success, 2 on validation errors, 3 on numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .fields import DomainError, Grid, SpaceTimeField, read_pmef, write_pmef

SCHEMA_VERSION = "v1"
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("pmelab")


class ConfigError(ValueError):
    pass


# required keys and optional keys with defaults, per experiment kind
_NUMBER = (int, float)
SCHEMAS: dict[str, tuple[tuple[str, ...], dict]] = {
    "exponents": (
        ("m",),
        {"formula": "thm1", "p": None, "s": None, "rho": None, "mu": None, "gamma": None,
         "sigma_t": None, "sigma_x": None, "p_tilde": None, "time_only": False},
    ),
    "barenblatt": (("m", "d"), {"C": 1.0, "t": 1.0, "mu": 1.0, "n": 256, "L": None}),
    "solve": (
        ("m", "n", "L", "T", "dt"),
        {"d": 1, "data": "barenblatt", "t0": 1.0, "C": 1.0, "amplitude": 1.0, "source": "none",
         "format": "pmef", "newton_tol": 1e-10, "seed": 0},
    ),
    "norms": (
        ("p", "sigma_x"),
        {"norm": "spacetime", "sigma_t": 0.0, "input": None, "t0_input": 0.0, "m": 2.0, "mu": 1.0, "C": 1.0,
         "n": 512, "L": 16.0, "t0": 1.0, "T": 1.0, "n_t": 17, "extension": "periodic", "homogeneous": False},
    ),
    "sweep": (
        ("m", "mu", "p", "sigmas", "resolutions"),
        {"family": "barenblatt_early", "L": 8.0, "T": 1.0, "t0": 1.0, "mode": "seminorm", "extension": "zero",
         "sigma_t": 0.0, "predicted": None, "dt_per_h": 1.0},
    ),
    "kinetic": (
        ("m", "n", "L", "T", "dt"),
        {"t0": 1.0, "C": 1.0, "gamma": 0.5, "v0_fractions": [0.1, 0.3, 0.5, 0.7, 0.9], "n_bins": 64},
    ),
    "scaling-check": (
        ("m", "mu", "p", "sigma_x", "eta", "scaling_kind"),
        {"sigma_t": 0.0, "n": 512, "L": 16.0, "t0": 1.0, "T": 1.0, "n_t": 33, "C": 1.0, "extension": "zero"},
    ),
    "verify-appendix-b": (
        ("m",),
        {"alphas": [[0, 0], [1, 0], [0, 1], [1, 1], [0, 2], [2, 0]], "l_range": [-3, 3], "j_range": [-3, 3], "v": 1.0},
    ),
}
KINDS = tuple(SCHEMAS)
_COMMON = {"kind", "seed", "description"}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    raw: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def __getitem__(self, key):
        return self.params[key]


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def validate_config(raw: dict, kind: str | None = None) -> ExperimentConfig:
    """Check keys against the schema of ``kind`` (or ``raw['kind']``) and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    kind = kind or raw.get("kind")
    if kind is None:
        raise ConfigError("missing key: kind")
    if raw.get("kind", kind) != kind:
        raise ConfigError(f"config kind {raw['kind']!r} does not match subcommand {kind!r}")
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    required, optional = SCHEMAS[kind]
    unknown = sorted(set(raw) - set(required) - set(optional) - _COMMON)
    if unknown:
        raise ConfigError(f"unknown key: {unknown[0]}")
    for key in required:
        if key not in raw:
            raise ConfigError(f"missing key: {key}")
    params = dict(optional)
    params.update({k: v for k, v in raw.items() if k not in ("kind", "description")})
    for key, value in params.items():
        default = optional.get(key)
        if isinstance(default, bool) or isinstance(value, bool):
            continue
        if isinstance(default, _NUMBER) and not isinstance(value, _NUMBER):
            raise ConfigError(f"key {key} must be a number")
    canonical = dict(raw)
    canonical["kind"] = kind
    return ExperimentConfig(kind, params, canonical)


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict, cfg: ExperimentConfig | None) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "config_hash": cfg.hash if cfg else None}
    doc.update(_clean(payload))
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# experiments


def _exponents(cfg: ExperimentConfig, out: Path) -> None:
    from . import exponents as ex

    P = cfg.params
    m = P["m"]
    formula = P["formula"]

    def need(*keys):
        for k in keys:
            if P.get(k) is None:
                raise ConfigError(f"missing key: {k}")
        return [P[k] for k in keys]

    if formula == "thm1":
        (p,) = need("p")
        payload = ex.thm1_exponents(m, p).as_dict()
    elif formula == "thm1_local":
        (s,) = need("s")
        payload = ex.thm1_local_exponents(m, s).as_dict()
    elif formula in ("thm2_mixed", "thm2_power"):
        rho, p = need("rho", "p")
        kind = formula.split("_")[1]
        payload = ex.thm2_exponents(m, rho, p, kind, P.get("mu")).as_dict()
    elif formula == "cor_power_local":
        (mu,) = need("mu")
        sx, q = ex.cor_power_local(m, mu)
        payload = {"sigma_x_sup": sx, "q_max": q}
    elif formula == "averaging":
        gamma, mu, rho = need("gamma", "mu", "rho")
        s = 1.0 if P.get("s") is None else P["s"]
        payload = ex.averaging_constants(m, gamma, mu, rho, s, bool(P["time_only"])).as_dict()
    elif formula == "prescribed_p":
        gamma, mu, rho, pt = need("gamma", "mu", "rho", "p_tilde")
        s, kt, kx = ex.prescribed_p_exponents(m, gamma, mu, rho, pt)
        payload = {"s": s, "kappa_t": kt, "kappa_x": kx, "p": pt, "source": ex.Source.PRESCRIBED_P.value}
    elif formula == "scaling":
        mu, p, st, sx = need("mu", "p", "sigma_t", "sigma_x")
        payload = ex.scaling_admissible(m, mu, p, st, sx).as_dict()
    else:
        raise ConfigError(f"unknown formula {formula!r}")
    write_json(out / "exponents.json", payload, cfg)


def _barenblatt(cfg: ExperimentConfig, out: Path) -> None:
    from .barenblatt import barenblatt_params, barenblatt_sample, barenblatt_support_radius

    P = cfg.params
    params = barenblatt_params(P["m"], int(P["d"]), P["C"])
    radius = barenblatt_support_radius(params, P["t"])
    L = P["L"] if P["L"] is not None else 3.0 * radius
    grid = Grid(params.d, L, int(P["n"]))
    fld = barenblatt_sample(params, grid, P["t"], P["mu"])
    if grid.dimension == 1:
        write_csv(out / "barenblatt.csv", ["x", "value"], zip(grid.nodes(), fld.values))
    else:
        X, Y = grid.mesh()
        write_csv(out / "barenblatt.csv", ["x", "y", "value"], zip(X.ravel(), Y.ravel(), fld.values.ravel()))
    payload = {
        "m": params.m, "d": params.d, "C": params.C, "alpha": params.alpha, "beta": params.beta, "k": params.k,
        "t": P["t"], "mu": P["mu"], "support_radius": radius, "L": L, "n": grid.n,
        "discrete_mass": fld.integral(),
    }
    write_json(out / "barenblatt_params.json", payload, cfg)


def _initial_data(P, grid: Grid, rng):
    from .barenblatt import barenblatt_params, barenblatt_sample
    from .fields import Field

    data = P["data"]
    if data == "barenblatt":
        return barenblatt_sample(barenblatt_params(P["m"], grid.dimension, P["C"]), grid, P["t0"])
    r = grid.radius()
    window = np.exp(-((r / (0.2 * grid.L)) ** 4))
    if data == "bump":
        return Field(grid, P["amplitude"] * np.where(r < 1, np.exp(-1 / np.maximum(1 - r**2, 1e-300)), 0.0))
    if data == "random":
        return Field(grid, P["amplitude"] * rng.normal(size=grid.shape) * window)
    raise ConfigError(f"unknown data {data!r}")


def _solve(cfg: ExperimentConfig, out: Path) -> None:
    from .fields import Field
    from .solver import SolverOptions, mass_defect, solve

    P = cfg.params
    rng = np.random.default_rng(int(P["seed"]))
    grid = Grid(int(P["d"]), P["L"], int(P["n"]))
    u0 = _initial_data(P, grid, rng)
    S = None
    if P["source"] == "random":
        window = np.exp(-((grid.radius() / (0.2 * grid.L)) ** 4))
        S = Field(grid, 0.2 * rng.normal(size=grid.shape) * window)
    elif P["source"] != "none":
        raise ConfigError(f"unknown source {P['source']!r}")
    t0 = P["t0"] if P["data"] == "barenblatt" else 0.0
    traj = solve(u0, S, P["T"], P["m"], SolverOptions(dt=P["dt"], newton_tol=P["newton_tol"]), t0=t0)
    if P["format"] == "pmef":
        write_pmef(out / "trajectory.pmef", traj)
        if S is not None:
            src = SpaceTimeField.constant_in_time(S, traj.times)
            write_pmef(out / "source.pmef", src)
    elif P["format"] == "csv":
        if grid.dimension != 1:
            raise ConfigError("csv trajectories are written for d = 1 only")
        x = grid.nodes()
        write_csv(out / "trajectory.csv", ["t", "x", "value"],
                  ((t, xi, v) for t, row in zip(traj.times, traj.values) for xi, v in zip(x, row)))
    else:
        raise ConfigError(f"unknown format {P['format']!r}")
    iters = traj.meta["newton_iterations"]
    payload = {
        "t0": float(traj.times[0]), "T": P["T"], "dt": traj.dt, "n_t": traj.n_t, "m": P["m"],
        "d": grid.dimension, "n": grid.n, "L": grid.L, "has_source": S is not None,
        "newton_iterations_total": int(sum(iters)), "newton_iterations_max": int(max(iters)),
        "max_mass_defect": float(mass_defect(traj, S).max()),
    }
    write_json(out / "trajectory.json", payload, cfg)


def _norms(cfg: ExperimentConfig, out: Path) -> None:
    from . import norms
    from .barenblatt import barenblatt_params, barenblatt_trajectory
    from .fields import signed_power

    P = cfg.params
    if P["input"]:
        traj = read_pmef(P["input"], t0=P["t0_input"])
    else:
        params = barenblatt_params(P["m"], 1, P["C"])
        grid = Grid(1, P["L"], int(P["n"]))
        times = np.linspace(P["t0"], P["t0"] + P["T"], int(P["n_t"]))
        traj = barenblatt_trajectory(params, grid, times)
    traj = traj.with_values(signed_power(traj.values, P["mu"]))
    kind = P["norm"]
    p, sx, st = P["p"], P["sigma_x"], P["sigma_t"]
    ext = P["extension"]
    if kind == "spacetime":
        rep = norms.spacetime_sobolev_norm(traj, st, sx, p, homogeneous=bool(P["homogeneous"]), extension=ext)
    elif kind == "besov":
        rep = norms.besov_space_norm(traj, sx, p)
    elif kind == "mixed_besov":
        rep = norms.mixed_besov_norm(traj, st, sx, p)
    elif kind in ("slobodeckii", "sobolev"):
        fn = norms.slobodeckii_seminorm if kind == "slobodeckii" else norms.sobolev_norm
        rep = fn(traj.slice(traj.n_t - 1), sx, p, extension=ext)
    else:
        raise ConfigError(f"unknown norm {kind!r}")
    write_json(out / "norms.json", {"norm": kind, **rep.as_dict()}, cfg)


def _sweep(cfg: ExperimentConfig, out: Path) -> None:
    from .barenblatt import barenblatt_params, early_time_family
    from .experiments import solver_family
    from .norms import norm_sweep

    P = cfg.params
    params = barenblatt_params(P["m"], 1)
    res = [int(n) for n in P["resolutions"]]
    if P["family"] == "barenblatt_early":
        family = early_time_family(params, res, L=P["L"], T=P["T"], mu=P["mu"])
    elif P["family"] == "solver":
        family = solver_family(params, res, L=P["L"], T=P["T"], t0=P["t0"], dt_per_h=P["dt_per_h"])
        if P["mu"] != 1:
            from .fields import signed_power

            family = {n: f.with_values(signed_power(f.values, P["mu"])) for n, f in family.items()}
    else:
        raise ConfigError(f"unknown family {P['family']!r}")
    predicted = P["predicted"] if P["predicted"] is not None else 2.0 * P["mu"] / P["m"]
    result = norm_sweep(family, P["sigmas"], P["p"], P["mode"], extension=P["extension"],
                        sigma_t=P["sigma_t"], predicted=predicted)
    cols = ["sigma", "h", "dt", "norm", "slope", "slope_err"]
    write_csv(out / "sweep.csv", cols, ([r[c] for c in cols] for r in result.rows))
    write_json(out / "sweep.json", result.summary(), cfg)


def _kinetic(cfg: ExperimentConfig, out: Path) -> None:
    from .barenblatt import barenblatt_params, barenblatt_sample
    from .kinetic import defect_measure, dissipation_oracle, level_mass, moment_constant, velocity_grid
    from .solver import SolverOptions, solve

    P = cfg.params
    params = barenblatt_params(P["m"], 1, P["C"])
    grid = Grid(1, P["L"], int(P["n"]))
    traj = solve(barenblatt_sample(params, grid, P["t0"]), None, P["T"], P["m"], SolverOptions(dt=P["dt"]), t0=P["t0"])
    vg = velocity_grid(float(np.abs(traj.values).max()), int(P["n_bins"]))
    qm = defect_measure(traj, P["m"], None, vg)
    write_csv(out / "kinetic.csv", ["v_center", "mass"], qm.as_rows())
    oracle = dissipation_oracle(params, P["t0"], P["t0"] + P["T"])
    levels = [level_mass(qm, f * qm.u_max).as_dict() for f in P["v0_fractions"]]
    payload = {
        "total_mass": qm.total_mass,
        "signed_total": qm.signed_total,
        "dissipation_oracle": oracle,
        "relative_error": qm.total_mass / oracle - 1.0,
        "negative_mass": qm.negative_mass,
        "clipped_fraction": qm.clipped_fraction,
        "outside_support": qm.outside_support(),
        "moment": moment_constant(qm, P["gamma"]),
        "level_mass": levels,
        "level_mass_holds": all(lv["holds"] for lv in levels),
    }
    write_json(out / "kinetic.json", payload, cfg)


def _scaling(cfg: ExperimentConfig, out: Path) -> None:
    from .barenblatt import barenblatt_params, barenblatt_trajectory
    from .scaling import l1_identity, verify_norm_scaling

    P = cfg.params
    params = barenblatt_params(P["m"], 1, P["C"])
    grid = Grid(1, P["L"], int(P["n"]))
    traj = barenblatt_trajectory(params, grid, np.linspace(P["t0"], P["t0"] + P["T"], int(P["n_t"])))
    kind = P["scaling_kind"]
    if kind not in ("time", "space"):
        raise ConfigError("scaling_kind must be 'time' or 'space'")
    rep = verify_norm_scaling(traj, P["m"], P["mu"], P["p"], P["sigma_t"], P["sigma_x"], P["eta"], kind,
                              extension=P["extension"])
    measured, predicted = l1_identity(traj, P["m"], P["eta"], kind)
    payload = {**rep.as_dict(), "l1_measured": measured, "l1_predicted": predicted,
               "l1_ratio": measured / predicted if predicted else None}
    write_json(out / "scaling.json", payload, cfg)


def _appendix_b(cfg: ExperimentConfig, out: Path) -> None:
    from .fourier import verify_multiplier_bound, verify_uniform_multiplier

    P = cfg.params
    bounds = []
    for a in P["alphas"]:
        a_tau, a_xi = int(a[0]), a[1]
        bounds.append(verify_multiplier_bound(P["m"], (a_tau, a_xi)).as_dict())
    lo, hi = P["l_range"]
    jlo, jhi = P["j_range"]
    table = verify_uniform_multiplier("inv_L", range(int(lo), int(hi) + 1), range(int(jlo), int(jhi) + 1),
                                      m=P["m"], v=P["v"])
    write_json(out / "appendix_b.json", {"multiplier_bounds": bounds, "uniform_multiplier": table.as_dict()}, cfg)


RUNNERS = {
    "exponents": _exponents,
    "barenblatt": _barenblatt,
    "solve": _solve,
    "norms": _norms,
    "sweep": _sweep,
    "kinetic": _kinetic,
    "scaling-check": _scaling,
    "verify-appendix-b": _appendix_b,
}


# ---------------------------------------------------------------------------
# driver


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


def infer_kind(path) -> str | None:
    """Kind from a file name such as ``sweep_barenblatt.json``; longest matching prefix wins."""
    stem = Path(path).stem.replace("_", "-")
    hits = [k for k in KINDS if stem == k or stem.startswith(k + "-")]
    return max(hits, key=len) if hits else None


def run(config, out_dir, kind: str | None = None, seed: int | None = None) -> int:
    """Validate and execute; returns the exit status and writes error.json on failure.

    Without an explicit ``kind`` the config's ``kind`` key is used, falling
    back to the file name.
    """
    from .fourier import FiniteDifferenceError
    from .solver import SolverError

    out = Path(out_dir)
    cfg = None
    try:
        raw = load_config(config) if not isinstance(config, dict) else config
        if kind is None and isinstance(raw, dict) and "kind" not in raw and not isinstance(config, dict):
            kind = infer_kind(config)
        if seed is not None:
            raw = dict(raw, seed=int(seed))
        cfg = validate_config(raw, kind)
        out.mkdir(parents=True, exist_ok=True)
        RUNNERS[cfg.kind](cfg, out)
        return EXIT_OK
    except (ConfigError, DomainError, KeyError, TypeError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing key: {exc.args[0]}"
        return _fail(out, cfg, EXIT_INVALID, "validation", msg)
    except (SolverError, FiniteDifferenceError, FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        module = type(exc).__module__.split(".")[-1]
        return _fail(out, cfg, EXIT_NUMERIC, module, str(exc))


def _fail(out: Path, cfg, code: int, module: str, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", {"exit_code": code, "module": module, "error": message}, cfg)
    except OSError:
        pass
    return code


def compare(run_a, run_b, out_dir) -> int:
    """L^1 contraction check between two `solve` output directories."""
    from .solver import check_contraction

    out = Path(out_dir)
    try:
        runs = []
        for d in (Path(run_a), Path(run_b)):
            meta = json.loads((d / "trajectory.json").read_text(encoding="utf-8"))
            traj = read_pmef(d / "trajectory.pmef", t0=meta["t0"])
            src = read_pmef(d / "source.pmef", t0=meta["t0"]) if meta.get("has_source") else None
            runs.append((traj, src, meta))
        (t1, s1, m1), (t2, s2, m2) = runs
        if m1.get("m") != m2.get("m"):
            raise DomainError("runs use different nonlinearities")
        verdict = check_contraction(t1, t2, s1, s2)
    except (DomainError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        return _fail(out, None, EXIT_INVALID, "compare", str(exc))
    out.mkdir(parents=True, exist_ok=True)
    raw = {"kind": "compare", "run_a": str(run_a), "run_b": str(run_b)}
    cfg = ExperimentConfig("compare", raw, raw)
    write_json(out / "compare.json", verdict.as_dict(), cfg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmelab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--threads", type=int, default=None, help="worker threads (speed only)")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("-v", "--verbose", action="store_true")

    for kind in KINDS:
        common(sub.add_parser(kind, help=f"run a '{kind}' experiment"))
    p_run = sub.add_parser("run", help="run the experiment named by the config's kind")
    p_run.add_argument("config_path", nargs="?", help="JSON config file")
    common(p_run)
    p_cmp = sub.add_parser("compare", help="L1 contraction check between two solve outputs")
    p_cmp.add_argument("run_a")
    p_cmp.add_argument("run_b")
    p_cmp.add_argument("--out", default="out")
    p_cmp.add_argument("--threads", type=int, default=None)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads:
        from ._quadrature import set_threads

        set_threads(args.threads)
    if args.command == "compare":
        return compare(args.run_a, args.run_b, args.out)
    if args.command == "run":
        path = args.config_path or args.config
        kind = None
    else:
        path, kind = args.config, args.command
    if path is None:
        return _fail(Path(args.out), None, EXIT_INVALID, "validation", "missing --config")
    return run(path, args.out, kind, args.seed)


if __name__ == "__main__":
    sys.exit(main())
