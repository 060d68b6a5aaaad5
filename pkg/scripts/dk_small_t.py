"""Compare the lattice trace of D_k with the two small-t closed forms over a range of t.

Prints CSV: t, lattice (two grids), both closed forms and their relative deviations.
"""
import argparse
import csv
import sys

from warpedheat import geometry, oracle, spectral1d


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nu", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=2.0)
    ap.add_argument("--t", default="0.001,0.003,0.01,0.03,0.1")
    ap.add_argument("--h", type=float, default=0.002)
    args = ap.parse_args()

    w = geometry.make_cusp_warp(args.nu, args.alpha, args.b)
    Q = lambda y: spectral1d.potential_Qk(w, args.alpha, args.mu, y)  # noqa: E731
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["t", "lattice_h", "lattice_h2", "stated", "rel_dev_stated", "e1_form", "rel_dev_e1"])
    for t in (float(v) for v in args.t.split(",")):
        a = oracle.dk_trace_fd(Q, t, h=args.h)
        b = oracle.dk_trace_fd(Q, t, h=args.h / 2)
        stated = spectral1d.trace_Dk_smallt(w, args.alpha, args.mu, t)
        e1 = spectral1d.trace_Dk_smallt(w, args.alpha, args.mu, t, exact=True)
        out.writerow([f"{v:.10g}" for v in (t, a, b, stated, abs(b - stated) / abs(stated), e1,
                                             abs(b - e1) / abs(e1))])


if __name__ == "__main__":
    main()
