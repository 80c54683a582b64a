"""Iterations against the theoretical bound as eps shrinks, for every catalog problem.

    python scripts/eps_sweep.py --eps 0.4 0.2 0.1 0.05
"""
import argparse
import csv
import sys

from inexact_md.problems import build_problem, builtin_catalog
from inexact_md.solver import SOLVERS, iteration_bound


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05])
    ap.add_argument("--delta-noise", type=float, default=0.0)
    ap.add_argument("--out", default="eps_sweep.csv")
    args = ap.parse_args(argv)

    rows = []
    for spec in builtin_catalog():
        pb = build_problem(spec, args.delta_noise, seed=0)
        for eps in args.eps:
            bound = iteration_bound(pb.M_g, pb.theta0_sq, eps)
            for alg, solve in SOLVERS.items():
                res = solve(pb, eps)
                rows.append({
                    "problem": spec.name, "algorithm": alg, "eps": eps,
                    "iterations": res.iterations, "nonproductive": res.nonproductive_count,
                    "bound": bound, "ratio": res.iterations / bound,
                    "f_gap": pb.f(res.output_point) - pb.reference.f,
                    "stop": res.stop_reason.value,
                })

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    print(f"{'problem':<26s} {'alg':<9s} {'eps':>5s} {'iters':>6s} {'|J|':>5s} {'bound':>6s} {'ratio':>6s}")
    for r in rows:
        print(f"{r['problem']:<26s} {r['algorithm']:<9s} {r['eps']:>5g} {r['iterations']:>6d} "
              f"{r['nonproductive']:>5d} {r['bound']:>6d} {r['ratio']:>6.2f}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
