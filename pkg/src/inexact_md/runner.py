"""Run configs and the solve -> certify -> write pipeline behind the CLI."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import Certificate
from .errors import ConfigError, InexactMDError
from .problems import ProblemSpec, build_problem, get_spec
from .solver import (
    DEFAULT_MAX_ITER_FACTOR,
    SOLVERS,
    OutputRule,
    Problem,
    SolveResult,
    StopReason,
    Variant,
    iteration_bound,
)
from .tracefile import atomic_write_text, dumps_report, iterates_csv, read_trace, trace_csv

ALGORITHM_VARIANT = {"weighted": Variant.A, "adaptive": Variant.B, "fixed": Variant.C}
CERTIFICATE_GROUPS = ("steps", "terminal", "corollary", "lemma1")


def default_out_dir() -> str:
    return os.environ.get("IMD_OUT_DIR", "imd-runs")


@dataclass
class RunConfig:
    problem: str | None = "p1-l1-box"
    problem_inline: dict | None = None
    algorithm: str = "adaptive"
    eps: float = 0.2
    delta_noise: float = 0.0
    seed: int = 0
    out_dir: str | None = None
    run_name: str | None = None
    certificates: dict = field(default_factory=lambda: {
        "steps": True, "terminal": True, "corollary": True, "lemma1": False})
    tolerance: float = analysis.DEFAULT_TOL
    max_iter_factor: int = DEFAULT_MAX_ITER_FACTOR

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("run config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        cfg = cls(**d)
        if "problem_inline" in d and "problem" not in d:
            cfg.problem = None
        cfg.validate()
        return cfg

    def validate(self) -> "RunConfig":
        def num(name, cast):
            try:
                setattr(self, name, cast(getattr(self, name)))
            except (TypeError, ValueError):
                raise ConfigError(f"{name}: expected a number, got {getattr(self, name)!r}")

        for name, cast in (("eps", float), ("delta_noise", float), ("tolerance", float),
                           ("seed", int), ("max_iter_factor", int)):
            num(name, cast)
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps: must be a finite number > 0, got {self.eps}")
        if not (self.delta_noise >= 0 and math.isfinite(self.delta_noise)):
            raise ConfigError(f"delta_noise: must be >= 0, got {self.delta_noise}")
        if not self.tolerance >= 0:
            raise ConfigError(f"tolerance: must be >= 0, got {self.tolerance}")
        if self.max_iter_factor < 1:
            raise ConfigError(f"max_iter_factor: must be >= 1, got {self.max_iter_factor}")
        if self.algorithm not in SOLVERS:
            raise ConfigError(
                f"algorithm: must be one of {', '.join(SOLVERS)}, got {self.algorithm!r}")
        if self.problem_inline is None and not self.problem:
            raise ConfigError("problem: a problem name or problem_inline is required")
        if not isinstance(self.certificates, dict) or set(self.certificates) - set(CERTIFICATE_GROUPS):
            raise ConfigError(f"certificates: keys must be among {', '.join(CERTIFICATE_GROUPS)}")
        self.spec()  # unknown problem names fail here
        return self

    def spec(self) -> ProblemSpec:
        if self.problem_inline is not None:
            return ProblemSpec.from_dict(self.problem_inline)
        return get_spec(self.problem)

    def name(self) -> str:
        if self.run_name:
            return self.run_name
        return (f"{self.spec().name}-{self.algorithm}-eps{self.eps!r}"
                f"-dn{self.delta_noise!r}-seed{self.seed}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunOutcome:
    config: RunConfig
    problem: Problem
    result: SolveResult
    certificates: list[Certificate]
    report: dict
    run_dir: Path | None = None

    @property
    def exit_code(self) -> int:
        return 0 if analysis.all_satisfied(self.certificates) else 2


def compute_certificates(cfg: RunConfig, problem: Problem, result: SolveResult) -> list[Certificate]:
    toggles = {"steps": True, "terminal": True, "corollary": True, "lemma1": False}
    toggles.update(cfg.certificates)
    tol = cfg.tolerance
    ref = problem.reference
    certs: list[Certificate] = []
    if toggles["steps"] and ref is not None:
        certs += analysis.check_step_inequalities(
            result.trace, ref.x, problem.setup, eps=cfg.eps, variant=result.variant, tol=tol)
    if toggles["terminal"] and result.stop_reason is StopReason.CRITERION_MET:
        certs += analysis.check_terminal_guarantees(result, problem, cfg.eps, tol)
    if (toggles["corollary"] and ref is not None and result.variant is Variant.B
            and result.productive_count > 0):
        try:
            certs.append(analysis.check_corollary(problem, result, cfg.eps, tol=tol))
        except analysis.UnsupportedError:
            pass
    if toggles["lemma1"] and ref is not None:
        q = problem.setup.feasible_set
        top = 1.1 * q.diameter(problem.setup.norm_kind) + 0.1
        modulus = analysis.estimate_omega(problem, ref.x, ref.f, np.linspace(0.0, top, 513))
        certs += analysis.check_lemma1(problem, result.trace, modulus, tol)
    return certs


def _summary(problem: Problem, result: SolveResult, cfg: RunConfig) -> dict:
    ref = problem.reference
    prod = [r for r in result.trace if r.productive]
    out = result.output_point
    return {
        "variant": result.variant.value,
        "eps": cfg.eps,
        "iterations": result.iterations,
        "productive_count": result.productive_count,
        "nonproductive_count": result.nonproductive_count,
        "stop_reason": result.stop_reason.value,
        "output_rule": result.output_rule.value,
        "output_point": out,
        "final_point": result.final_point,
        "empty_productive": result.empty_productive,
        "iteration_bound": iteration_bound(problem.M_g, problem.theta0_sq, cfg.eps),
        "M_g": problem.M_g,
        "theta0_sq": problem.theta0_sq,
        "delta_max_objective": max((r.sub.delta for r in prod), default=0.0),
        "delta_max_constraint": max((r.g_delta for r in prod), default=0.0),
        "f_output": problem.f(out),
        "g_output": problem.g(out),
        "f_star": None if ref is None else ref.f,
        "f_gap": None if ref is None else problem.f(out) - ref.f,
        "reference_error_bound": None if ref is None else ref.error_bound,
    }


def build_report(cfg: RunConfig, spec: ProblemSpec, problem: Problem, result: SolveResult,
                 certs: list[Certificate]) -> dict:
    by_name: dict[str, list[int]] = {}
    for c in certs:
        passed, total = by_name.setdefault(c.name, [0, 0])
        by_name[c.name] = [passed + c.satisfied, total + 1]
    return {
        "config": cfg.to_dict(),
        "problem": spec.to_dict(),
        "result": _summary(problem, result, cfg),
        "certificates": [c.to_dict() for c in certs],
        "certificate_summary": by_name,
        "all_satisfied": analysis.all_satisfied(certs),
    }


def execute(cfg: RunConfig, write: bool = True) -> RunOutcome:
    cfg.validate()
    spec = cfg.spec()
    problem = build_problem(spec, cfg.delta_noise, cfg.seed, reference="grid")
    result = SOLVERS[cfg.algorithm](problem, cfg.eps, cfg.max_iter_factor)
    certs = compute_certificates(cfg, problem, result)
    report = build_report(cfg, spec, problem, result, certs)
    outcome = RunOutcome(cfg, problem, result, certs, report)
    if write:
        run_dir = Path(cfg.out_dir or default_out_dir()) / cfg.name()
        try:
            atomic_write_text(run_dir / "trace.csv", trace_csv(result.trace))
            atomic_write_text(run_dir / "iterates.csv", iterates_csv(result.trace, spec.dimension))
            atomic_write_text(run_dir / "report.json", dumps_report(report))
        except OSError as e:
            raise ConfigError(f"out_dir: cannot write to {run_dir}: {e}") from e
        outcome.run_dir = run_dir
    return outcome


def sweep_row(o: RunOutcome) -> dict:
    res = o.report["result"]
    bad = sum(not c.satisfied for c in o.certificates)
    return {
        "run": o.config.name(),
        "problem": o.report["problem"]["name"],
        "algorithm": o.config.algorithm,
        "eps": o.config.eps,
        "delta": o.config.delta_noise,
        "seed": o.config.seed,
        "iterations": res["iterations"],
        "bound": res["iteration_bound"],
        "stop_reason": res["stop_reason"],
        "f_gap": res["f_gap"],
        "g_value": res["g_output"],
        "certificates": len(o.certificates),
        "failed": bad,
        "verdict": "pass" if bad == 0 else "FAIL",
    }


def verify_run(run_dir) -> tuple[list[Certificate], list[str]]:
    """Recompute certificates from the files in ``run_dir``.

    Returns (certificates, problems) where ``problems`` lists disagreements
    between the stored report and the recomputation.
    """
    run_dir = Path(run_dir)
    try:
        report = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read report in {run_dir}: {e}") from e
    cfg = RunConfig.from_dict(report["config"])
    spec = ProblemSpec.from_dict(report["problem"])
    problem = build_problem(spec, cfg.delta_noise, cfg.seed, reference="grid")
    try:
        trace = read_trace(run_dir / "trace.csv", run_dir / "iterates.csv", spec.dimension)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read trace in {run_dir}: {e}") from e
    res = report["result"]
    n_prod = sum(r.productive for r in trace)
    result = SolveResult(
        variant=Variant(res["variant"]), eps=cfg.eps,
        output_point=np.asarray(res["output_point"], dtype=np.float64),
        output_rule=OutputRule(res["output_rule"]), iterations=len(trace),
        productive_count=n_prod, nonproductive_count=len(trace) - n_prod,
        stop_reason=StopReason(res["stop_reason"]), trace=trace,
        final_point=np.asarray(res["final_point"], dtype=np.float64),
        empty_productive=bool(res["empty_productive"]),
    )
    issues = []
    if res["iterations"] != len(trace):
        issues.append(f"report says {res['iterations']} iterations, trace has {len(trace)}")
    certs = compute_certificates(cfg, problem, result)
    stored = report["certificates"]
    if len(stored) != len(certs):
        issues.append(f"report lists {len(stored)} certificates, recomputed {len(certs)}")
    for s, c in zip(stored, certs):
        if (s["name"], s["context"], s["satisfied"]) != (c.name, c.context, c.satisfied):
            issues.append(f"{c.name}@{c.context}: report says satisfied={s['satisfied']}, "
                          f"recomputed {c.satisfied}")
    return certs, issues
