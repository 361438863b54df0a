"""Refinement trend of the space-time seminorm on solver-computed Barenblatt runs."""
import argparse

from pmelab.barenblatt import barenblatt_params
from pmelab.experiments import solver_family
from pmelab.exponents import thm1_exponents
from pmelab.norms import norm_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=float, default=2.0)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--sigma-t", type=float, default=0.1)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0.4, 0.9, 1.2, 1.5, 1.8])
    ap.add_argument("--resolutions", type=int, nargs="+", default=[128, 256, 512, 1024])
    args = ap.parse_args()
    e = thm1_exponents(args.m, args.p)
    print(f"kappa_t={e.kappa_t:.4f} kappa_x={e.kappa_x:.4f}")
    family = solver_family(barenblatt_params(args.m, 1), args.resolutions, L=16.0, T=1.0, t0=1.0)
    res = norm_sweep(family, args.sigmas, args.p, "spacetime", extension="zero", sigma_t=args.sigma_t)
    for s in args.sigmas:
        print(f"sigma_x={s:<5g} rate={res.slopes[s]:+.4f} log_slope={res.log_slopes[s]:+.4f}")


if __name__ == "__main__":
    main()
