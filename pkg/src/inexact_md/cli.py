"""Command line front end.

    imd catalog
    imd solve  --problem p1-l1-box --algorithm adaptive --eps 0.2
    imd sweep  --problem p1-l1-box --algorithm weighted --eps 0.2 --delta-noise 0 0.01 0.1
    imd verify imd-runs/<run-name>

Exit codes: 0 all certificates pass, 2 some certificate fails, 1 usage or
config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import InexactMDError
from .problems import builtin_catalog
from .runner import (
    CERTIFICATE_GROUPS,
    RunConfig,
    default_out_dir,
    execute,
    sweep_row,
    verify_run,
)
from .solver import SOLVERS
from .tracefile import atomic_write_text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser, many: bool) -> None:
    nargs = "+" if many else None
    p.add_argument("--config", help="JSON run config (sweep: list of configs or {'runs': [...]})")
    p.add_argument("--problem", nargs=nargs, help="built-in problem name (see `catalog`)")
    p.add_argument("--algorithm", nargs=nargs, choices=list(SOLVERS))
    p.add_argument("--eps", nargs=nargs, type=float)
    p.add_argument("--delta-noise", dest="delta_noise", nargs=nargs, type=float,
                   help="oracle inexactness level delta reported by perturbed oracles")
    p.add_argument("--seed", nargs=nargs, type=int)
    p.add_argument("--out-dir", dest="out_dir", help="output root (default $IMD_OUT_DIR or ./imd-runs)")
    p.add_argument("--tolerance", type=float, help="absolute certificate tolerance")
    p.add_argument("--max-iter-factor", dest="max_iter_factor", type=int,
                   help="iteration cap as a multiple of the variant-B iteration bound")
    p.add_argument("--lemma1", action="store_true", help="also run the growth-modulus check")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="imd", description="Adaptive mirror descent with delta-subgradients.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    cat = sub.add_parser("catalog", help="list built-in problems")
    cat.add_argument("--json", action="store_true", help="dump full problem specs")

    solve = sub.add_parser("solve", help="run one solve and certify it")
    _add_run_flags(solve, many=False)

    sweep = sub.add_parser("sweep", help="run a grid of solves and tabulate them")
    _add_run_flags(sweep, many=True)
    sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    verify = sub.add_parser("verify", help="recompute certificates of a stored run")
    verify.add_argument("run_dir")
    return parser


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, ValueError) as e:
        raise InexactMDError(f"config: cannot read {path}: {e}") from e


def _overrides(args) -> dict:
    out = {}
    for key in ("out_dir", "tolerance", "max_iter_factor"):
        if getattr(args, key) is not None:
            out[key] = getattr(args, key)
    return out


def _apply_lemma1(cfg: RunConfig, args) -> RunConfig:
    if args.lemma1:
        cfg.certificates = {**cfg.certificates, "lemma1": True}
    return cfg


def _solve_config(args) -> RunConfig:
    base = _load_json(args.config) if args.config else {}
    for key in ("problem", "algorithm", "eps", "delta_noise", "seed"):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
            if key == "problem":
                base.pop("problem_inline", None)
    base.update(_overrides(args))
    return _apply_lemma1(RunConfig.from_dict(base), args)


def _sweep_configs(args) -> list[RunConfig]:
    configs = []
    if args.config:
        data = _load_json(args.config)
        runs = data.get("runs") if isinstance(data, dict) else data
        if not isinstance(runs, list):
            raise InexactMDError("config: sweep file must be a list or {'runs': [...]}")
        for d in runs:
            configs.append(RunConfig.from_dict({**d, **_overrides(args)}))
    if args.problem:
        axes = [
            args.problem,
            args.algorithm or ["adaptive"],
            args.eps or [0.2],
            args.delta_noise or [0.0],
            args.seed or [0],
        ]
        for prob, alg, eps, dn, seed in itertools.product(*axes):
            configs.append(RunConfig.from_dict({
                "problem": prob, "algorithm": alg, "eps": eps, "delta_noise": dn,
                "seed": seed, **_overrides(args)}))
    if not configs:
        raise InexactMDError("sweep: no runs given (use --config or --problem ...)")
    return [_apply_lemma1(c, args) for c in configs]


def _print_certs(outcome) -> None:
    summary = outcome.report["certificate_summary"]
    for name in sorted(summary):
        passed, total = summary[name]
        print(f"  {name:<20s} {passed}/{total}")


def cmd_catalog(args) -> int:
    specs = builtin_catalog()
    if args.json:
        print(json.dumps([s.to_dict() for s in specs], indent=1))
        return 0
    for s in specs:
        print(f"{s.name:<26s} dim={s.dimension} setup={s.setup.get('kind'):<9s} {s.description}")
    return 0


def cmd_solve(args) -> int:
    cfg = _solve_config(args)
    o = execute(cfg)
    r = o.report["result"]
    print(f"{cfg.name()}: {r['stop_reason']} after {r['iterations']} iterations "
          f"(|I|={r['productive_count']}, |J|={r['nonproductive_count']}), "
          f"f_gap={r['f_gap']}, g={r['g_output']}")
    _print_certs(o)
    print(f"wrote {o.run_dir}")
    return o.exit_code


SWEEP_COLUMNS = ["run", "problem", "algorithm", "eps", "delta", "seed", "iterations", "bound",
                 "stop_reason", "f_gap", "g_value", "certificates", "failed", "verdict"]


def _sweep_one(cfg: RunConfig) -> tuple[dict, int]:
    # oracles hold closures, so workers send back plain rows only
    o = execute(cfg)
    return sweep_row(o), o.exit_code


def cmd_sweep(args) -> int:
    configs = _sweep_configs(args)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            done = list(pool.map(_sweep_one, configs))
    else:
        done = [_sweep_one(c) for c in configs]
    rows = [row for row, _ in done]
    buf = io.StringIO()
    w = csv.DictWriter(buf, SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    out_dir = configs[0].out_dir or default_out_dir()
    atomic_write_text(f"{out_dir}/sweep.csv", buf.getvalue())
    print(f"{'problem':<26s} {'alg':<9s} {'eps':>6s} {'delta':>6s} {'iters':>6s} {'bound':>6s} "
          f"{'f_gap':>11s} {'g':>11s} verdict")
    for r in rows:
        f_gap = "-" if r["f_gap"] is None else f"{r['f_gap']:.4e}"
        print(f"{r['problem']:<26s} {r['algorithm']:<9s} {r['eps']:>6g} {r['delta']:>6g} "
              f"{r['iterations']:>6d} {r['bound']:>6d} {f_gap:>11s} {r['g_value']:>11.4e} "
              f"{r['verdict']}")
    print(f"wrote {out_dir}/sweep.csv")
    return 0 if all(code == 0 for _, code in done) else 2


def cmd_verify(args) -> int:
    certs, issues = verify_run(args.run_dir)
    failed = [c for c in certs if not c.satisfied]
    for msg in issues:
        print(f"mismatch: {msg}")
    for c in failed[:20]:
        print(f"FAILED {c.name}@{c.context}: lhs={c.lhs!r} rhs={c.rhs!r}")
    print(f"{len(certs) - len(failed)}/{len(certs)} certificates satisfied")
    return 0 if not failed and not issues else 2


COMMANDS = {"catalog": cmd_catalog, "solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InexactMDError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
