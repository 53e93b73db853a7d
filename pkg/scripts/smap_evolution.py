"""Evolve a small bump map and report energy drift, sphere defect and the
sup distance to the north pole over time; gauged residual convergence."""
import argparse

import numpy as np

from smaplab.caloric import HeatConfig, gauged_residual
from smaplab.data import gaussian_bump_map
from smaplab.grid import make_grid
from smaplab.sphere_map import SmapConfig, smap_evolve, sphere_defect


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--t-end", type=float, default=0.1)
    ap.add_argument("--residual", action="store_true", help="also run the gauged residual levels (slow)")
    args = ap.parse_args()
    g = make_grid(64, 20.0)
    u0 = gaussian_bump_map(g, args.eps)
    tr = smap_evolve(u0, SmapConfig(args.dt, args.t_end, sample_every=max(1, int(0.01 / args.dt))))
    for t, e, d, s in zip(tr.times, tr.energy, tr.sup_dist, tr.states):
        print(f"t={t:.3f}  E={e:.12e}  sup|u-Q|={d:.6e}  defect={sphere_defect(s.u):.1e}")
    print(f"relative energy drift {np.max(np.abs(tr.energy - tr.energy[0])) / tr.energy[0]:.2e}")
    if args.residual:
        for dt, ratio in [(1e-4, 1.1), (5e-5, 1.05), (2.5e-5, 1.025)]:
            st = smap_evolve(u0, SmapConfig(dt, 1600 * dt, sample_every=400))
            r = gauged_residual(st.states, 400 * dt, HeatConfig(ratio=ratio))
            print(f"dt={dt:.2e} ratio={ratio}: residual {r.relative:.2e}  compat {r.compatibility:.2e}  "
                  f"psi_t identity {r.psi_t_identity:.1e}")


if __name__ == "__main__":
    main()
