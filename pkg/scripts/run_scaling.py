"""Check the time and space rescaling laws of the mixed norms on Barenblatt data."""
import argparse

import numpy as np

from pmelab.barenblatt import barenblatt_params, barenblatt_trajectory
from pmelab.fields import Grid
from pmelab.scaling import l1_identity, verify_norm_scaling

COMBOS = [
    (1.0, 2.0, 0.0, 0.5, 0.5, "space"),
    (1.0, 2.0, 0.0, 0.5, 2.0, "space"),
    (2.0, 1.0, 0.0, 1.5, 2.0, "space"),
    (1.0, 2.0, 0.0, 0.5, 2.0, "time"),
    (1.0, 1.5, 0.2, 0.4, 2.0, "time"),
    (1.0, 2.0, 0.3, 0.5, 0.5, "space"),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=float, default=2.0)
    ap.add_argument("--n", type=int, default=512)
    args = ap.parse_args()
    traj = barenblatt_trajectory(barenblatt_params(args.m, 1), Grid(1, 16.0, args.n), np.linspace(1.0, 2.0, 33))
    for mu, p, st, sx, eta, kind in COMBOS:
        rep = verify_norm_scaling(traj, args.m, mu, p, st, sx, eta, kind, tolerance=0.05)
        print(f"mu={mu:g} p={p:g} sigma_t={st:g} sigma_x={sx:g} eta={eta:g} {kind:5s} ratio={rep.ratio:.5f} passed={rep.passed}")
    for eta, kind in ((0.5, "space"), (2.0, "space"), (0.5, "time"), (2.0, "time")):
        measured, predicted = l1_identity(traj, args.m, eta, kind)
        print(f"L1 {kind:5s} eta={eta:g} measured/predicted={measured / predicted:.6f}")


if __name__ == "__main__":
    main()
