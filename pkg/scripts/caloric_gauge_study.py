"""Caloric gauge diagnostics: heat-flow energy decay, frame defects, the
A-integral residual against the s-grid ratio, and frequency-envelope linearity."""
import argparse

from smaplab.caloric import HeatConfig, band_psi_norms, caloric_gauge, verify_A_integral
from smaplab.data import envelope_map, gaussian_bump_map
from smaplab.grid import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--ratios", type=float, nargs="+", default=[1.1, 1.05, 1.025])
    args = ap.parse_args()
    g = make_grid(64, 20.0)
    u = gaussian_bump_map(g, args.eps)
    print("ratio   nodes  s_max   ortho     caloric   caloric(FD)  A-resid   tail")
    for ratio in args.ratios:
        cal, gauges = caloric_gauge(u, HeatConfig(ratio=ratio))
        rep = verify_A_integral(gauges, cal.heat.s_grid)
        print(f"{ratio:<7} {len(gauges):5d}  {cal.heat.s_max:6.1f}  {cal.orthonormality_defect():.1e}  "
              f"{cal.caloric_defect():.1e}  {cal.caloric_defect_fd():.1e}      {rep.residual:.2e}  {rep.tail:.1e}")

    print("\nenvelope linearity: band norms of psi_x(0) divided by eps")
    for eps in (0.01, 0.02, 0.04):
        _, gauges = caloric_gauge(envelope_map(g, eps, "bump", seed=3), HeatConfig(ratio=1.1))
        norms = band_psi_norms(g, gauges[0])
        print(f"eps={eps:<5} " + "  ".join(f"k={k}:{v / eps:.4f}" for k, v in sorted(norms.items())))


if __name__ == "__main__":
    main()
