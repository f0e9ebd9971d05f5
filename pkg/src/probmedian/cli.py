"""Command line front end: solve JSON instances, run the reference oracles,
and benchmark approximation ratios.

Exit codes: 0 success, 2 instance or configuration problem, 3 solver error
(for example an exhausted rejection-sampling budget).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from .geometry import SetFamily
from .instances import random_prob_instance, random_set_family
from .kernels import ImplicitCenter, Kernel, solve_psvdd
from .oracle import oracle_pseb, oracle_set_median
from .probseb import ProbInstance, SamplingBudgetError, expected_cost, solve_pseb
from .setmedian import SolverConfig, solve_set_median

EXIT_OK = 0
EXIT_BAD_INSTANCE = 2
EXIT_SOLVER_ERROR = 3


class InstanceError(Exception):
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _parse_set_family(payload: dict) -> SetFamily:
    if not isinstance(payload, dict):
        raise InstanceError("instance must be a JSON object")
    d = payload.get("d")
    if not isinstance(d, int) or d < 1:
        raise InstanceError('field "d" must be a positive integer')
    sets = payload.get("sets")
    if not isinstance(sets, list) or not sets:
        raise InstanceError('field "sets" must be a non-empty list of point lists')
    for i, s in enumerate(sets):
        if not isinstance(s, list) or not s:
            raise InstanceError(f"sets[{i}] must be a non-empty list of points")
        for j, p in enumerate(s):
            if not isinstance(p, list) or len(p) != d:
                raise InstanceError(f"sets[{i}][{j}] must be a list of {d} coordinates")
    try:
        return SetFamily(sets)
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc


def _parse_prob_instance(payload: dict) -> ProbInstance:
    try:
        return ProbInstance.from_dict(payload)
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="instance", required=True, help="JSON instance file")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["paper", "practical"], default="practical")
    p.add_argument("--repetitions", type=int, default=None,
                   help="override the ceil(log2(1/eta)) repetition count")
    p.add_argument("--c-iters", type=float, default=None)
    p.add_argument("--c-select", type=float, default=None)
    p.add_argument("--candidate-budget", type=int, default=64)
    p.add_argument("--threads", type=int, default=0,
                   help="parallelism across repetitions and oracle starts (0 = sequential)")
    p.add_argument("--out", default=None, help="write the JSON result here instead of stdout")


def _config_from_args(args) -> SolverConfig:
    try:
        return SolverConfig(
            epsilon=args.epsilon,
            eta=args.eta,
            seed=args.seed,
            mode=args.mode,
            c_iters=args.c_iters,
            c_select=args.c_select,
            candidate_budget=args.candidate_budget,
            repetitions=args.repetitions,
        )
    except ValueError as exc:
        raise InstanceError(f"invalid configuration: {exc}") from exc


def _config_echo(cfg: SolverConfig, args, **extra) -> dict:
    echo = {
        "epsilon": cfg.epsilon,
        "eta": cfg.eta,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "c_iters": cfg.c_iters,
        "c_select": cfg.c_select,
        "candidate_budget": cfg.candidate_budget,
        "repetitions": cfg.num_repetitions,
        "threads": args.threads,
    }
    echo.update(extra)
    return echo


def _result_payload(result, cfg, args, **extra) -> dict:
    payload = {
        "cost": result.cost_estimate,
        "diagnostics": result.diagnostics,
        "config_echo": _config_echo(cfg, args, **extra),
    }
    if isinstance(result.center, ImplicitCenter):
        payload["implicit_center"] = [
            {"gamma": float(g), "loc": [float(v) for v in loc]}
            for g, loc in zip(result.center.gammas, result.center.locations)
        ]
    else:
        payload["center"] = [float(v) for v in np.asarray(result.center)]
    return _jsonable(payload)


def _write_payload(payload: dict, out_path: str | None) -> None:
    _emit(json.dumps(payload, sort_keys=True) + "\n", out_path)


def _cmd_setmedian(args) -> int:
    family = _parse_set_family(_load_json(args.instance))
    cfg = _config_from_args(args)
    result = solve_set_median(family, cfg, reduce_eps=args.reduce_sets, threads=args.threads)
    payload = _result_payload(result, cfg, args, reduce_sets=args.reduce_sets)
    _write_payload(payload, args.out)
    return EXIT_OK


def _cmd_pseb(args) -> int:
    inst = _parse_prob_instance(_load_json(args.instance))
    cfg = _config_from_args(args)
    result = solve_pseb(inst, cfg, max_trials=args.max_trials, threads=args.threads)
    result.diagnostics["expected_cost"] = expected_cost_or_none(result.center, inst)
    payload = _result_payload(result, cfg, args, max_trials=args.max_trials)
    _write_payload(payload, args.out)
    return EXIT_OK


def expected_cost_or_none(center, inst, cap: int = 1_000_000):
    """Exact expected cost when the instance is enumerable, else None."""
    try:
        return expected_cost(center, inst, max_realizations=cap)
    except ValueError:
        return None


def _kernel_from_args(args) -> Kernel:
    try:
        if args.kernel == "linear":
            return Kernel.linear()
        if args.kernel == "poly":
            return Kernel.polynomial(args.poly_degree, args.poly_offset)
        return Kernel.rbf(args.rbf_sigma)
    except ValueError as exc:
        raise InstanceError(f"invalid kernel: {exc}") from exc


def _cmd_psvdd(args) -> int:
    inst = _parse_prob_instance(_load_json(args.instance))
    cfg = _config_from_args(args)
    kernel = _kernel_from_args(args)
    result = solve_psvdd(inst, kernel, cfg, max_trials=args.max_trials, threads=args.threads)
    payload = _result_payload(
        result, cfg, args,
        max_trials=args.max_trials,
        kernel=args.kernel,
        poly_degree=args.poly_degree,
        poly_offset=args.poly_offset,
        rbf_sigma=args.rbf_sigma,
    )
    _write_payload(payload, args.out)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    payload = _load_json(args.instance)
    if "sets" in payload:
        family = _parse_set_family(payload)
        center, cost = oracle_set_median(family, budget=args.budget, seed=args.seed)
    elif "distributions" in payload:
        inst = _parse_prob_instance(payload)
        center, cost = oracle_pseb(inst, grid_step=args.grid_step)
    else:
        raise InstanceError('instance must contain either "sets" or "distributions"')
    out = {"center": [float(v) for v in center], "cost": float(cost)}
    _emit(json.dumps(out, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _bench_smoke():
    """Deterministic smoke benchmark: a few set median and pSEB instances."""
    cases = []
    for i, seed in enumerate((101, 102, 103)):
        fam = random_set_family(np.random.default_rng(seed), 20, 3, 2)
        cases.append((f"setmedian-{i}", "setmedian", fam, 0.1, "practical"))
    fam = random_set_family(np.random.default_rng(104), 8, 2, 2)
    cases.append(("setmedian-paper", "setmedian", fam, 0.3, "paper"))
    inst1 = random_prob_instance(np.random.default_rng(105), 5, 3, 2, presence_mass=0.08)
    cases.append(("pseb-sparse", "pseb", inst1, 0.1, "practical"))
    inst2 = random_prob_instance(np.random.default_rng(106), 5, 3, 2)
    cases.append(("pseb-dense", "pseb", inst2, 0.1, "practical"))
    return cases


def _cmd_bench(args) -> int:
    if args.suite != "smoke":
        raise InstanceError(f"unknown suite {args.suite!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "eps", "mode", "cost", "oracle_cost", "ratio", "millis"])
    for name, kind, instance, eps, mode in _bench_smoke():
        cfg = SolverConfig(epsilon=eps, eta=0.1, seed=args.seed, mode=mode)
        start = time.perf_counter()
        if kind == "setmedian":
            res = solve_set_median(instance, cfg, threads=args.threads)
            cost = res.cost_estimate
            _, oracle_cost = oracle_set_median(instance, budget=400, seed=args.seed)
        else:
            res = solve_pseb(instance, cfg, threads=args.threads)
            cost = expected_cost(res.center, instance)
            _, oracle_cost = oracle_pseb(instance, grid_step=0.5)
        millis = (time.perf_counter() - start) * 1000.0
        ratio = cost / oracle_cost if oracle_cost > 0 else 1.0
        writer.writerow([name, eps, mode, f"{cost:.6f}", f"{oracle_cost:.6f}",
                         f"{ratio:.4f}", f"{millis:.1f}"])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probmedian",
        description="Solvers for the set median, probabilistic smallest enclosing "
                    "ball, and probabilistic SVDD problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setmedian", help="solve a set median instance")
    _add_solver_flags(p)
    p.add_argument("--reduce-sets", type=float, default=None, metavar="EPS_MEB",
                   help="replace each set by an approximate enclosing ball")
    p.set_defaults(func=_cmd_setmedian)

    p = sub.add_parser("pseb", help="solve a probabilistic smallest enclosing ball instance")
    _add_solver_flags(p)
    p.add_argument("--max-trials", type=int, default=None,
                   help="rejection sampling budget (default ceil(8k/epsilon))")
    p.set_defaults(func=_cmd_pseb)

    p = sub.add_parser("psvdd", help="solve a probabilistic SVDD instance in kernel space")
    _add_solver_flags(p)
    p.add_argument("--max-trials", type=int, default=None)
    p.add_argument("--kernel", choices=["linear", "poly", "rbf"], default="rbf")
    p.add_argument("--poly-degree", type=int, default=2)
    p.add_argument("--poly-offset", type=float, default=0.0)
    p.add_argument("--rbf-sigma", type=float, default=1.0)
    p.set_defaults(func=_cmd_psvdd)

    p = sub.add_parser("oracle", help="brute-force reference optimum for a small instance")
    p.add_argument("--in", dest="instance", required=True)
    p.add_argument("--budget", type=int, default=600, help="set median oracle iterations")
    p.add_argument("--grid-step", type=float, default=0.5, help="pSEB oracle grid step")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("bench", help="run a benchmark suite, writing CSV")
    p.add_argument("--suite", default="smoke")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INSTANCE
    except SamplingBudgetError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_ERROR
    except ValueError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_ERROR


if __name__ == "__main__":
    sys.exit(main())
