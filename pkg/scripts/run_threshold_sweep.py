"""Locate the Barenblatt regularity threshold by grid refinement."""
import argparse
import json

from pmelab.experiments import threshold_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=float, default=2.0)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0.6, 0.8, 0.9, 1.0, 1.1, 1.2, 1.4])
    ap.add_argument("--resolutions", type=int, nargs="+", default=[512, 1024, 2048, 4096])
    args = ap.parse_args()
    res = threshold_sweep(m=args.m, mu=args.mu, p=args.p, sigmas=args.sigmas, resolutions=args.resolutions)
    for s, r in res.slopes.items():
        print(f"sigma={s:<6g} rate={r:+.4f}")
    print(json.dumps({"threshold": res.threshold, "ci": list(res.ci), "predicted": 2 * args.mu / args.m}, indent=2))


if __name__ == "__main__":
    main()
