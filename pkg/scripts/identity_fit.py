"""Fit the power law of |LHS - RHS| for the small-t identity of the Poschl-Teller trace."""
import argparse
import json

from warpedheat.assembly import verify_trace_identity


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nu", default="1,1.5,2,2.5")
    ap.add_argument("--t", default="0.01,0.02,0.05,0.1,0.2")
    ap.add_argument("--k-trunc", type=int, default=2)
    args = ap.parse_args()
    t_grid = [float(v) for v in args.t.split(",")]
    for nu in (float(v) for v in args.nu.split(",")):
        rep = verify_trace_identity(nu, 1.0, t_grid, k_trunc=args.k_trunc)
        print(json.dumps({"nu": nu, "status": rep.status, "exponent": round(rep.exponent, 4),
                          "expected": rep.expected_exponent, "constant": rep.constant}))


if __name__ == "__main__":
    main()
