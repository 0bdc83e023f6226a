"""``weaksub`` command line: generate instances, run algorithms, verify properties, emit curves."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .algorithms import (
    MAX_BRUTE_N,
    FullLSParams,
    RunReport,
    brute_force_opt,
    distorted_guarantee,
    distorted_local_search_exact,
    distorted_local_search_full,
    guarantee_curve,
    ls_guarantee,
    plain_local_search,
    residual_random_greedy,
    rrg_guarantee,
)
from .errors import InstanceValidationError, WeaksubError
from .ratios import MAX_RATIO_N, empirical_ratios
from .set_functions import (
    RegressionInstance,
    WorstCaseInstance,
    generate_design_instance,
    generate_regression_instance,
    random_coverage,
)
from .verify import MASTER_SEED, SUITES, run_suite

ALGORITHMS = ("rrg", "ls", "dls-exact", "dls-full", "brute")
EXIT_FAIL, EXIT_CONFIG, EXIT_INSTANCE = 1, 2, 3


class ConfigError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"3"``, ``"1..100"`` (inclusive) or ``"1,5,9"``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            seeds = list(range(int(a), int(b) + 1))
        else:
            seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse seed list {text!r}") from None
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


# -- generate ---------------------------------------------------------------


def example_instance() -> RegressionInstance:
    r = 1 / math.sqrt(2)
    return RegressionInstance(np.array([[1.0, r], [r, 1.0]]), np.array([0.0, r]))


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "regression":
        inst = generate_regression_instance(args.n, args.m, args.noise, rng, mixing=args.mixing)
    elif args.kind == "aopt":
        inst = generate_design_instance(args.p, args.n, rng)
    elif args.kind == "worstcase":
        inst = WorstCaseInstance(args.k, args.gamma)
    elif args.kind == "coverage":
        inst = random_coverage(args.n, args.universe, rng)
    else:
        inst = example_instance()
    d = io.instance_to_dict(inst)
    text = json.dumps(io.round_floats(d, 17)) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -- run --------------------------------------------------------------------


def _run_one(job: dict) -> dict:
    """Execute one seed; a fresh oracle per seed keeps call counts independent."""
    f = io.make_oracle(job["instance"])
    M = io.matroid_from_dict(job["matroid"])
    alg, seed = job["alg"], job["seed"]
    if alg == "rrg":
        rep = residual_random_greedy(f, M, np.random.default_rng(seed), seed)
    elif alg == "ls":
        rep = plain_local_search(f, M, job["eps"], seed)
    elif alg == "dls-exact":
        rep = distorted_local_search_exact(f, M, job["gamma"], job["beta"], seed)
    elif alg == "dls-full":
        params = FullLSParams(**job["full_params"])
        rep = distorted_local_search_full(f, M, params, np.random.default_rng(seed), seed)
    else:
        t0, c0 = time.perf_counter(), f.calls
        S, v = brute_force_opt(f, M)
        rep = RunReport("brute", seed, S, v, f.calls - c0, wall_time=time.perf_counter() - t0)
    return rep.to_dict()


def _guarantee(alg, gamma, beta, eps):
    if gamma is None or beta is None:
        return None
    if alg == "rrg":
        return rrg_guarantee(gamma, beta)
    if alg in ("dls-exact", "dls-full"):
        return distorted_guarantee(gamma, max(beta, 1.0)) if gamma > 0 else 0.0
    if alg == "ls":
        return ls_guarantee(gamma, beta, eps)
    return 1.0


def build_run(args):
    """Resolve and validate a run configuration; returns (jobs, shared record fields)."""
    if args.alg not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {args.alg!r}; valid ids: {', '.join(ALGORITHMS)}")
    seeds = parse_seeds(args.seeds)
    if not Path(args.instance).is_file():
        raise ConfigError(f"instance file not found: {args.instance}")
    try:
        inst_dict = io.load_instance(args.instance)
    except json.JSONDecodeError as exc:
        raise InstanceValidationError(f"instance file is not valid JSON: {exc}") from None
    f = io.make_oracle(inst_dict)
    try:
        M = io.load_matroid(args.matroid)
    except FileNotFoundError:
        raise ConfigError(f"matroid file not found: {args.matroid}") from None
    except (json.JSONDecodeError, InstanceValidationError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad matroid spec: {exc}") from None
    if M.n != f.n:
        raise ConfigError(f"matroid ground set has {M.n} elements, instance has {f.n}")
    if args.verify_opt and f.n > MAX_BRUTE_N:
        raise ConfigError(f"--verify-opt needs n <= {MAX_BRUTE_N}, instance has n = {f.n}")
    if args.alg == "brute" and f.n > MAX_BRUTE_N:
        raise ConfigError(f"brute needs n <= {MAX_BRUTE_N}")
    if args.eps is not None and not 0 < args.eps <= 1:
        raise ConfigError("--eps must lie in (0, 1]")
    if args.gamma is not None and not 0 < args.gamma <= 1:
        raise ConfigError("--gamma must lie in (0, 1]")
    if args.beta is not None and args.beta < 1:
        raise ConfigError("--beta must be at least 1")

    need_ratios = args.ratios or (args.alg == "dls-exact" and (args.gamma is None or args.beta is None))
    ratios = None
    if need_ratios:
        if f.n > MAX_RATIO_N:
            raise ConfigError(f"ratio computation needs n <= {MAX_RATIO_N}; pass --gamma and --beta")
        ratios = empirical_ratios(f)
    gamma = args.gamma if args.gamma is not None else (ratios.gamma_hat if ratios else None)
    beta = args.beta if args.beta is not None else (ratios.beta_hat if ratios else None)

    eps = args.eps
    params: dict = {}
    full = None
    if args.alg in ("ls", "dls-full"):
        eps = 0.1 if eps is None else eps
        params["epsilon"] = eps
    if args.alg == "dls-exact":
        if gamma is None or gamma <= 0 or math.isinf(beta):
            raise ConfigError("dls-exact needs 0 < gamma and finite beta")
        beta = max(beta, 1.0)
        params.update(gamma=gamma, beta=beta)
    if args.alg == "dls-full":
        full = FullLSParams.derive(eps, M.rank, f.n).to_dict()

    opt = brute_force_opt(io.make_oracle(inst_dict), M)[1] if args.verify_opt else None
    shared = {
        "opt": opt,
        "ratios": ratios.to_dict() if ratios else None,
        "guarantee": _guarantee(args.alg, gamma, beta, eps) if (ratios or args.gamma is not None) else None,
        "params": {
            **params,
            "instance": args.instance,
            "matroid": M.to_dict(),
            **({"full": full} if full else {}),
        },
    }
    jobs = [
        {
            "instance": inst_dict,
            "matroid": M.to_dict(),
            "alg": args.alg,
            "seed": s,
            "eps": eps,
            "gamma": gamma,
            "beta": beta,
            "full_params": full,
        }
        for s in seeds
    ]
    return jobs, shared


def cmd_run(args) -> int:
    jobs, shared = build_run(args)
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))  # map keeps seed order
    else:
        results = [_run_one(j) for j in jobs]
    records = []
    for r in results:
        params = dict(shared["params"])
        params.update(r["params"])
        params["phi_guesses_used"] = r["phi_guesses_used"]
        if r["guarantee_used"] is not None:
            params["guarantee_used"] = r["guarantee_used"]
        records.append(
            {
                "algorithm": r["algorithm"],
                "seed": r["seed"],
                "solution": r["solution"],
                "value": r["value"],
                "oracle_calls": r["oracle_calls"],
                "improvements": r["improvements"],
                "opt": shared["opt"],
                "ratios": shared["ratios"],
                "guarantee": shared["guarantee"],
                "params": params,
                "wall_time_ms": r["wall_time"] * 1000 if args.timing else None,
            }
        )
    if args.out:
        io.dump_report(records, args.out)
    else:
        sys.stdout.write(json.dumps(io.round_floats(records), indent=2) + "\n")
    return 0


# -- verify / curve ---------------------------------------------------------


def cmd_verify(args) -> int:
    ids = list(SUITES) if not args.ids or args.ids == ["all"] else args.ids
    unknown = [i for i in ids if i not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite id(s) {', '.join(unknown)}; valid ids: {', '.join(SUITES)}")
    failed = 0
    for sid in ids:
        ok, worst = run_suite(sid, args.seed)
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {sid:<14} worst={worst:.3e}  tol={SUITES[sid].tol:.0e}  {SUITES[sid].description}")
    print(f"{len(ids) - failed}/{len(ids)} suites passed (seed {args.seed:#x})")
    return EXIT_FAIL if failed else 0


def cmd_curve(args) -> int:
    lo, hi, steps = args.gamma_min, args.gamma_max, args.steps
    if not (0 < lo <= hi <= 1):
        raise ConfigError("need 0 < gamma-min <= gamma-max <= 1")
    if steps < 2:
        raise ConfigError("steps must be at least 2")
    rows = guarantee_curve(np.linspace(lo, hi, steps))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["gamma", "rrg_old", "rrg_new", "distorted"])
        for row in rows:
            w.writerow([f"{x:.15g}" for x in row])
    finally:
        if args.out:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weaksub", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random or fixed instance as JSON")
    g.add_argument("kind", choices=["regression", "aopt", "worstcase", "coverage", "example1"])
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--m", type=int, default=100, help="samples (regression)")
    g.add_argument("--noise", type=float, default=0.5)
    g.add_argument("--mixing", type=float, default=1.0)
    g.add_argument("--p", type=int, default=3, help="parameter dimension (aopt)")
    g.add_argument("--k", type=int, default=3, help="size (worstcase)")
    g.add_argument("--gamma", type=float, default=0.5, help="ratio (worstcase)")
    g.add_argument("--universe", type=int, default=30, help="universe size (coverage)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run an algorithm over a list of seeds")
    r.add_argument("--instance", required=True)
    r.add_argument("--matroid", required=True, help="JSON file or inline JSON")
    r.add_argument("--alg", required=True, help=f"one of {', '.join(ALGORITHMS)}")
    r.add_argument("--eps", type=float)
    r.add_argument("--gamma", type=float)
    r.add_argument("--beta", type=float)
    r.add_argument("--seeds", default="0")
    r.add_argument("--verify-opt", action="store_true")
    r.add_argument("--ratios", action="store_true")
    r.add_argument("--out")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--timing", action="store_true", help="record wall_time_ms (breaks byte-identical reruns)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run randomized property suites")
    v.add_argument("ids", nargs="*", help="suite ids or 'all'")
    v.add_argument("--seed", type=lambda s: int(s, 0), default=MASTER_SEED)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("curve", help="guarantee curves for (gamma, 1/gamma)-weakly submodular objectives")
    c.add_argument("--gamma-min", type=float, default=0.05)
    c.add_argument("--gamma-max", type=float, default=1.0)
    c.add_argument("--steps", type=int, default=20)
    c.add_argument("--out")
    c.set_defaults(func=cmd_curve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstanceValidationError as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    except WeaksubError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
