"""Command line entry point ``onecluster``."""

from __future__ import annotations

import argparse
import io
import json
import subprocess
import sys

import numpy as np

from . import harness
from .aggregate import AnalysisFunction, mean_analysis, median_analysis, sample_aggregate
from .center import PAPER_CONSTANTS, PRACTICAL_CONSTANTS, CenterConstants, good_center
from .cluster import solve_one_cluster
from .exceptions import InvalidParameter, SearchFailed
from .geometry import GridDomain
from .intpoint import int_point
from .privacy import (PrivacyBudget, amplify_by_subsampling, as_generator, compose_advanced,
                      compose_basic, gaussian_sigma, laplace_mechanism)
from .radius import good_radius
from .selection import (BASELINE, RECCONCAVE, AboveThreshold, QualityProblem,
                        quasiconcave_solve, stable_choice)

SOLVERS = {"baseline": BASELINE, "recconcave": RECCONCAVE}


def _budget(args) -> PrivacyBudget:
    return PrivacyBudget(args.eps, args.delta)


def _constants(args) -> CenterConstants:
    base = PRACTICAL_CONSTANTS if args.mode == "practical" else PAPER_CONSTANTS
    if getattr(args, "scale", None) not in (None, 1.0):
        scaled = {k: getattr(base, k) * args.scale
                  for k in ("box", "interval", "ball", "capture", "jl", "threshold", "loss")}
        base = base.with_(**scaled)
    if getattr(args, "max_rounds", None):
        base = base.with_(max_rounds=args.max_rounds)
    return base


def _emit(args, result, **meta) -> None:
    text = harness.emit_json(result, path=args.json, timestamp=not args.no_timestamp,
                             command=args.command, seed=args.seed, **meta)
    print(text)


def _read_points(args, d: int | None = None) -> tuple[np.ndarray, GridDomain]:
    points = harness.ingest_csv(args.input)
    dim = points.shape[1] if d is None else d
    domain = GridDomain(dim, args.grid)
    if args.snap:
        points = domain.snap(points)
    return domain.validate(points), domain


# -- subcommands ------------------------------------------------------------


def cmd_solve(args):
    points, domain = _read_points(args)
    res = solve_one_cluster(points, args.t, args.beta, _budget(args), as_generator(args.seed),
                            domain, constants=_constants(args), solver=SOLVERS[args.solver],
                            gamma_scale=args.gamma_scale, radius_share=args.radius_share)
    _emit(args, res)


def cmd_radius(args):
    points, domain = _read_points(args)
    res = good_radius(points, args.t, args.beta, _budget(args), as_generator(args.seed), domain,
                      solver=SOLVERS[args.solver], gamma_scale=args.gamma_scale)
    _emit(args, res)


def cmd_center(args):
    points = harness.ingest_csv(args.input)
    res = good_center(points, args.radius, args.t, args.beta, _budget(args),
                      as_generator(args.seed), _constants(args))
    _emit(args, res)


def _exec_analysis(command: str, domain: GridDomain) -> AnalysisFunction:
    def run(rows):
        buf = io.StringIO()
        np.savetxt(buf, np.atleast_2d(rows), delimiter=",", fmt="%.17g")
        proc = subprocess.run(command, input=buf.getvalue(), shell=True, capture_output=True,
                              text=True, check=False)
        if proc.returncode != 0:
            raise InvalidParameter(f"analysis command failed ({proc.returncode}): {proc.stderr}")
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != 1:
            raise InvalidParameter(f"analysis command must print one CSV row, got {len(lines)}")
        return np.array([float(v) for v in lines[0].split(",")])
    return AnalysisFunction(run, domain, "custom-exec")


def cmd_sa(args):
    data = harness.ingest_csv(args.input)
    d = data.shape[1] if args.out_dim is None else args.out_dim
    domain = GridDomain(d, args.grid)
    if args.analysis == "mean":
        f = mean_analysis(domain)
    elif args.analysis == "median":
        f = median_analysis(domain)
    else:
        if not args.exec:
            raise InvalidParameter("--analysis custom-exec needs --exec COMMAND")
        f = _exec_analysis(args.exec, domain)
    res = sample_aggregate(data, f, args.m, args.alpha, args.beta, _budget(args),
                           as_generator(args.seed), constants=_constants(args),
                           gamma_scale=args.gamma_scale,
                           enforce_generalization=not args.no_enforce,
                           workers=harness.thread_cap(1))
    _emit(args, res)


def cmd_intpoint(args):
    values = harness.ingest_csv(args.input)
    if values.shape[1] != 1:
        raise InvalidParameter("intpoint expects a single column of values")
    domain = GridDomain(1, args.grid)
    values = domain.snap(values) if args.snap else domain.validate(values)
    m = len(values)
    n = args.n if args.n else (2 * m) // 3
    t = args.t if args.t else max(1, (5 * n) // 6)
    res = int_point(values[:, 0], n, t, args.beta, _budget(args), as_generator(args.seed),
                    domain, constants=_constants(args), solver=SOLVERS[args.solver],
                    gamma_scale=args.gamma_scale)
    _emit(args, res, n=n, t=t)


def cmd_bench(args):
    domain = GridDomain(args.d, args.grid)
    budget = _budget(args)
    constants = _constants(args)
    spec = harness.ExperimentSpec(
        algorithm=args.algorithm, trials=args.trials, seed=args.seed,
        generator={"n": args.n, "t": args.t, "rho": args.rho, "d": args.d, "grid": args.grid},
        params={"eps": args.eps, "delta": args.delta, "beta": args.beta,
                "gamma_scale": args.gamma_scale},
        multipliers=constants.as_dict())

    def trial(rng):
        inst = harness.generate_planted(domain, args.n, args.t, args.rho, rng)
        oracle = harness.oracle_2approx(inst.points, args.t)
        try:
            if args.algorithm == "radius":
                res = good_radius(inst.points, args.t, args.beta, budget, rng, domain,
                                  gamma_scale=args.gamma_scale)
                count = harness.best_ball_count(inst.points, res.radius)
                ok = res.radius <= 4 * oracle.radius_2approx and \
                    count >= args.t - res.advertised_loss
                return {"ok": bool(ok), "radius": res.radius, "count": count}
            if args.algorithm == "center":
                res = good_center(inst.points, oracle.radius_2approx, args.t, args.beta,
                                  budget, rng, constants)
                need = args.t - res.advertised_loss
            else:
                res = solve_one_cluster(inst.points, args.t, args.beta, budget, rng, domain,
                                        constants=constants, gamma_scale=args.gamma_scale)
                need = res.found_count_bound
            center = res.center
            radius = res.capture_radius if args.algorithm == "center" else res.radius
            count = int(np.count_nonzero(np.linalg.norm(inst.points - center, axis=1) <= radius))
            return {"ok": bool(count >= need), "radius": float(radius), "count": count}
        except SearchFailed as exc:
            return {"ok": False, "error": str(exc)}

    summary = harness.run_trials(trial, spec.trials, spec.seed,
                                 success=lambda o: o["ok"])
    _emit(args, summary, spec={"algorithm": spec.algorithm, "generator": spec.generator,
                               "params": spec.params, "trials": spec.trials,
                               "multipliers": spec.multipliers})


def _parse_pair(text: str) -> PrivacyBudget:
    eps, _, delta = text.partition(",")
    return PrivacyBudget(float(eps), float(delta or 0.0))


def cmd_budget(args):
    out = {}
    if args.basic:
        out["basic"] = compose_basic([_parse_pair(p) for p in args.basic]).as_dict()
    if args.advanced:
        k, eps, delta, dprime = args.advanced
        out["advanced"] = compose_advanced(int(k), PrivacyBudget(eps, delta), dprime).as_dict()
    if args.amplify:
        eps, delta, m, n = args.amplify
        out["amplify"] = amplify_by_subsampling(PrivacyBudget(eps, delta), int(m), int(n)).as_dict()
    if args.gaussian:
        k, eps, delta = args.gaussian
        out["gaussian_sigma"] = gaussian_sigma(k, PrivacyBudget(eps, delta))
    if not out:
        raise InvalidParameter("give at least one of --basic, --advanced, --amplify, --gaussian")
    _emit(args, out)


def _verify_target(name: str, eps: float):
    """(mechanism, neighbouring pair, claimed budget) for the named target."""
    budget = PrivacyBudget(eps)
    if name in ("laplace", "laplace-broken"):
        claimed_scale = 1.0 if name == "laplace" else 0.5

        def mech(value, rng):
            return laplace_mechanism(value, 1.0, PrivacyBudget(eps / claimed_scale), rng)
        return mech, (0.0, 1.0), budget
    if name == "stable-choice":
        budget = PrivacyBudget(eps, 1e-6)
        s1 = [0] * 10 + [1] * 10 + [2] * 10
        s2 = [0] * 11 + [1] * 9 + [2] * 10

        def mech(db, rng):
            return stable_choice(db, budget, 0.1, rng, n=30)
        return mech, (s1, s2), budget
    if name == "baseline":
        s1 = np.arange(20) % 5
        s2 = s1.copy()
        s2[0] = 4

        def mech(db, rng):
            problem = QualityProblem(5, lambda x: np.array([np.count_nonzero(x == f)
                                                              for f in range(5)]), promise=0)
            return quasiconcave_solve(problem, db, budget, 0.1, rng, strict=False)
        return mech, (s1, s2), budget
    raise InvalidParameter(f"unknown mechanism {name!r}")


def cmd_verify_dp(args):
    mech, pair, budget = _verify_target(args.mechanism, args.eps)
    report = harness.dp_frequency_test(mech, pair, budget, args.samples,
                                       as_generator(args.seed), bins=args.bins)
    _emit(args, report, mechanism=args.mechanism)
    return 0 if report.passed else 1


def cmd_mech(args):
    rng = as_generator(args.seed)
    if args.kind == "laplace":
        out = {"output": laplace_mechanism(args.value, args.sensitivity, PrivacyBudget(args.eps),
                                           rng)}
    elif args.kind == "stable-choice":
        labels = [v.strip() for v in args.labels.split(",") if v.strip()]
        out = {"choice": stable_choice(labels, PrivacyBudget(args.eps, args.delta), args.beta,
                                       rng)}
    elif args.kind == "above-threshold":
        session = AboveThreshold(args.threshold, PrivacyBudget(args.eps), rng)
        answers = []
        for v in (float(x) for x in args.values.split(",")):
            answers.append(bool(session.query(v)))
            if session.halted:
                break
        out = {"answers": answers}
    else:
        scores = np.array([float(x) for x in args.values.split(",")])
        problem = QualityProblem(len(scores), lambda _: scores, promise=0)
        out = {"index": quasiconcave_solve(problem, None, PrivacyBudget(args.eps), args.beta,
                                           rng, strict=False)}
    _emit(args, out, kind=args.kind)


# -- parser -----------------------------------------------------------------


def _common(p, privacy=True, grid=True):
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json", metavar="OUT", help="also write the JSON report here")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit generated_at so reports are byte-identical")
    if privacy:
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--delta", type=float, default=1e-6)
        p.add_argument("--beta", type=float, default=0.1)
    if grid:
        p.add_argument("--grid", type=int, default=1025, help="grid levels per axis |X|")


def _algorithm_opts(p, center=True):
    p.add_argument("--gamma-scale", type=float, default=1.0)
    p.add_argument("--solver", choices=sorted(SOLVERS), default="baseline")
    if center:
        p.add_argument("--mode", choices=["paper", "practical"], default="practical",
                       help="GoodCenter constant set")
        p.add_argument("--scale", type=float, default=1.0,
                       help="multiply every GoodCenter constant")
        p.add_argument("--max-rounds", type=int, help="cap on box-search rounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onecluster",
                                     description="Differentially private 1-cluster tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="GoodRadius followed by GoodCenter")
    p.add_argument("--input", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--snap", action="store_true", help="round inputs to the grid")
    p.add_argument("--radius-share", type=float, default=0.5)
    _common(p)
    _algorithm_opts(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("radius", help="private radius estimate")
    p.add_argument("--input", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--snap", action="store_true")
    _common(p)
    _algorithm_opts(p, center=False)
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("center", help="private center for a given radius")
    p.add_argument("--input", required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--t", type=int, required=True)
    _common(p, grid=False)
    p.add_argument("--mode", choices=["paper", "practical"], default="practical")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--max-rounds", type=int, help="cap on box-search rounds")
    p.set_defaults(func=cmd_center)

    p = sub.add_parser("sa", help="sample and aggregate")
    p.add_argument("--input", required=True)
    p.add_argument("--analysis", choices=["mean", "median", "custom-exec"], required=True)
    p.add_argument("--exec", help="command reading a CSV fragment on stdin, printing one point")
    p.add_argument("--out-dim", type=int, help="output dimension of a custom analysis")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--no-enforce", action="store_true",
                   help="skip the eps <= alpha/72, delta <= beta*eps/3 check")
    _common(p)
    _algorithm_opts(p)
    p.set_defaults(func=cmd_sa)

    p = sub.add_parser("intpoint", help="interior point via the 1-cluster reduction")
    p.add_argument("--input", required=True)
    p.add_argument("--n", type=int, help="middle entries passed to the solver (default 2m/3)")
    p.add_argument("--t", type=int, help="cluster size (default 5n/6)")
    p.add_argument("--snap", action="store_true")
    _common(p)
    p.set_defaults(grid=2**16)
    _algorithm_opts(p)
    p.set_defaults(func=cmd_intpoint)

    p = sub.add_parser("bench", help="planted-instance trials with Wilson intervals")
    p.add_argument("--algorithm", choices=["radius", "center", "solve"], required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--t", type=int, default=1500)
    p.add_argument("--rho", type=float, default=0.02)
    p.add_argument("--trials", type=int, default=20)
    _common(p)
    _algorithm_opts(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("budget", help="privacy-budget arithmetic")
    p.add_argument("--basic", nargs="+", metavar="EPS,DELTA")
    p.add_argument("--advanced", nargs=4, type=float, metavar=("K", "EPS", "DELTA", "DELTA_PRIME"))
    p.add_argument("--amplify", nargs=4, type=float, metavar=("EPS", "DELTA", "M", "N"))
    p.add_argument("--gaussian", nargs=3, type=float, metavar=("SENS", "EPS", "DELTA"))
    p.add_argument("--json")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_budget, seed=None)

    p = sub.add_parser("verify-dp", help="empirical DP frequency test")
    p.add_argument("--mechanism", choices=["laplace", "laplace-broken", "stable-choice",
                                           "baseline"], required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_verify_dp)

    p = sub.add_parser("mech", help="run one primitive mechanism")
    p.add_argument("kind", choices=["laplace", "stable-choice", "above-threshold", "select"])
    p.add_argument("--value", type=float, default=0.0)
    p.add_argument("--sensitivity", type=float, default=1.0)
    p.add_argument("--labels", default="", help="comma separated cell labels")
    p.add_argument("--values", default="", help="comma separated query values or scores")
    p.add_argument("--threshold", type=float, default=0.0)
    _common(p, grid=False)
    p.set_defaults(func=cmd_mech)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except SearchFailed as exc:
        print(json.dumps({"error": "search failed", "message": str(exc),
                          "ledger": [e.as_dict() for e in exc.ledger]}), file=sys.stderr)
        return 3
    except InvalidParameter as exc:
        print(f"onecluster: error: {exc}", file=sys.stderr)
        return 2
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
