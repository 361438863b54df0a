"""Randomized L1 contraction and mass balance trials for the implicit solver."""
import argparse

from pmelab.experiments import contraction_trials


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    runs = contraction_trials(trials=args.trials, ms=(1.5, 2.0, 3.0), seed=args.seed)
    for i, t in enumerate(runs):
        print(f"{i:3d} m={t['m']:<4g} lhs={t['lhs']:.6e} rhs={t['rhs']:.6e} holds={t['holds']} mass_defect={t['mass_defect']:.1e}")
    print(f"{sum(t['holds'] for t in runs)}/{len(runs)} trials hold")


if __name__ == "__main__":
    main()
