"""Command-line interface: problem/result files, batch experiments, trace
export.

File formats are JSON (human-readable nested key-value with arrays),
matrices row-major. Floats serialize through Python's shortest round-trip
representation, so results reload bit-exactly.

Commands:
    solve <problem.json>        compute capacity and optimal covariance
    batch --m --n1 --n2 ...     seeded random-channel step-count statistics
    dual <problem.json> --rate  minimum power for a target secrecy rate
    trace-export <result.json>  flat CSV of the convergence trace

Exit codes: 0 success, 1 input error, 2 solver non-convergence (a partial
result with the trace collected so far is still written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .barrier_solver import (
    SaddleSolution,
    SolverConfig,
    solve_degraded,
    solve_minimax,
)
from .channel import ChannelPair, Degradedness, classify_degraded
from .errors import BracketError, SingularKktError, SolverError
from .variants import DualTarget, PerAntennaBudget, solve_dual, solve_per_antenna

__all__ = [
    "ProblemFile",
    "ResultFile",
    "ProblemFormatError",
    "load_problem",
    "dump_problem",
    "main",
]

MODES = ("auto", "minimax", "degraded", "per_antenna", "dual")
SOLVER_KEYS = ("alpha", "beta", "t0", "mu", "t_max", "eps_gap", "eps_newton")


class ProblemFormatError(ValueError):
    """Problem file failed validation; message names the offending field."""


@dataclass
class ProblemFile:
    """Parsed problem description.

    power is a scalar for total-power modes or a per-antenna vector;
    power_total optionally adds a total cap on top of per-antenna caps.
    """

    h1: np.ndarray
    h2: np.ndarray
    power: float | np.ndarray
    mode: str = "auto"
    power_total: float | None = None
    solver: dict = field(default_factory=dict)
    dual_rate: float | None = None
    dual_tol_rate: float | None = None

    @property
    def per_antenna(self) -> bool:
        return isinstance(self.power, np.ndarray)

    def channel(self) -> ChannelPair:
        return ChannelPair(self.h1, self.h2)

    def config(self, overrides: dict | None = None) -> SolverConfig:
        merged = dict(self.solver)
        if overrides:
            merged.update({k: v for k, v in overrides.items() if v is not None})
        return SolverConfig(**merged)


def _matrix_field(data: dict, name: str) -> np.ndarray:
    if name not in data:
        raise ProblemFormatError(f"missing field '{name}'")
    raw = data[name]
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise ProblemFormatError(f"field '{name}' must be a non-empty list of rows")
    widths = {len(r) for r in raw}
    if len(widths) != 1 or 0 in widths:
        raise ProblemFormatError(f"field '{name}' has ragged or empty rows")
    try:
        mat = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field '{name}' has non-numeric entries") from exc
    if not np.all(np.isfinite(mat)):
        raise ProblemFormatError(f"field '{name}' has non-finite entries")
    return mat


def parse_problem(data: dict) -> ProblemFile:
    if not isinstance(data, dict):
        raise ProblemFormatError("problem file must be a JSON object")
    h1 = _matrix_field(data, "H1")
    h2 = _matrix_field(data, "H2")
    if h1.shape[1] != h2.shape[1]:
        raise ProblemFormatError(
            f"column mismatch: H1 has {h1.shape[1]} columns, H2 has {h2.shape[1]}"
        )
    m = h1.shape[1]

    if "power" not in data:
        raise ProblemFormatError("missing field 'power'")
    raw_power = data["power"]
    if isinstance(raw_power, list):
        power = np.asarray(raw_power, dtype=float)
        if power.size != m:
            raise ProblemFormatError(
                f"field 'power' has {power.size} entries, need {m} (one per antenna)"
            )
        if not np.all(np.isfinite(power)) or np.any(power <= 0):
            raise ProblemFormatError("field 'power' entries must be finite and positive")
    else:
        try:
            power = float(raw_power)
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError("field 'power' must be a number or list") from exc
        if not math.isfinite(power) or power <= 0:
            raise ProblemFormatError("field 'power' must be finite and positive")

    mode = data.get("mode", "auto")
    if mode not in MODES:
        raise ProblemFormatError(f"field 'mode' must be one of {MODES}, got '{mode}'")

    power_total = data.get("power_total")
    if power_total is not None:
        try:
            power_total = float(power_total)
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError("field 'power_total' must be a number") from exc
        if not math.isfinite(power_total) or power_total <= 0:
            raise ProblemFormatError("field 'power_total' must be finite and positive")
        if not isinstance(power, np.ndarray):
            raise ProblemFormatError(
                "field 'power_total' only applies with per-antenna 'power'"
            )

    solver = data.get("solver", {})
    if not isinstance(solver, dict):
        raise ProblemFormatError("field 'solver' must be an object")
    unknown = set(solver) - set(SOLVER_KEYS)
    if unknown:
        raise ProblemFormatError(f"unknown solver override(s): {sorted(unknown)}")
    for key, val in solver.items():
        if val is not None and not isinstance(val, (int, float)):
            raise ProblemFormatError(f"solver override '{key}' must be numeric")

    dual_rate = data.get("dual_rate")
    if dual_rate is not None:
        dual_rate = float(dual_rate)
        if not math.isfinite(dual_rate) or dual_rate <= 0:
            raise ProblemFormatError("field 'dual_rate' must be finite and positive")
    dual_tol = data.get("dual_tol_rate")
    if dual_tol is not None:
        dual_tol = float(dual_tol)
        if not math.isfinite(dual_tol) or dual_tol <= 0:
            raise ProblemFormatError("field 'dual_tol_rate' must be finite and positive")

    return ProblemFile(
        h1=h1,
        h2=h2,
        power=power,
        mode=mode,
        power_total=power_total,
        solver=dict(solver),
        dual_rate=dual_rate,
        dual_tol_rate=dual_tol,
    )


def load_problem(path: str) -> ProblemFile:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ProblemFormatError(f"cannot read '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(
            f"invalid JSON in '{path}' at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from exc
    return parse_problem(data)


def problem_to_dict(prob: ProblemFile) -> dict:
    out = {
        "H1": prob.h1.tolist(),
        "H2": prob.h2.tolist(),
        "power": prob.power.tolist() if prob.per_antenna else prob.power,
        "mode": prob.mode,
    }
    if prob.power_total is not None:
        out["power_total"] = prob.power_total
    if prob.solver:
        out["solver"] = dict(prob.solver)
    if prob.dual_rate is not None:
        out["dual_rate"] = prob.dual_rate
    if prob.dual_tol_rate is not None:
        out["dual_tol_rate"] = prob.dual_tol_rate
    return out


def dump_problem(prob: ProblemFile, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(prob), fh, indent=2)
        fh.write("\n")


@dataclass
class ResultFile:
    """Solver output in serializable form; see :func:`result_to_dict`."""

    capacity_nats: float
    capacity_bits: float
    capacity_upper_nats: float
    gap_bound: float
    gap_bound_heuristic: bool
    R_star: list
    K21_star: list
    lam: float | None
    R_star_eigenvalues: list
    difference_eigenvalues: list
    trace: list
    wall_time: float
    config: dict
    mode: str
    converged: bool
    t_final: float | None
    newton_steps_total: int
    p_star: float | None = None


def _config_echo(cfg: SolverConfig, mode: str, power) -> dict:
    echo = asdict(cfg)
    echo["mode"] = mode
    echo["power"] = power.tolist() if isinstance(power, np.ndarray) else power
    return echo


def result_from_solution(sol: SaddleSolution, ch: ChannelPair,
                         cfg: SolverConfig, power, wall_time: float,
                         p_star: float | None = None) -> ResultFile:
    diff_eigs = np.linalg.eigvalsh(ch.W1 - ch.W2)
    return ResultFile(
        capacity_nats=sol.capacity_achievable,
        capacity_bits=sol.capacity_achievable / math.log(2.0),
        capacity_upper_nats=sol.capacity_upper,
        gap_bound=sol.gap_bound,
        gap_bound_heuristic=sol.gap_bound_heuristic,
        R_star=sol.R_star.R.tolist(),
        K21_star=sol.K21_star.tolist(),
        lam=sol.lambda_star,
        R_star_eigenvalues=np.linalg.eigvalsh(sol.R_star.R).tolist(),
        difference_eigenvalues=diff_eigs.tolist(),
        trace=[r.as_dict() for r in sol.trace],
        wall_time=wall_time,
        config=_config_echo(cfg, sol.mode, power),
        mode=sol.mode,
        converged=sol.converged,
        t_final=sol.t_final if math.isfinite(sol.t_final) else None,
        newton_steps_total=sol.newton_steps_total,
        p_star=p_star,
    )


def result_to_dict(res: ResultFile) -> dict:
    out = asdict(res)
    out["lambda"] = out.pop("lam")
    if res.p_star is None:
        out.pop("p_star")
    return out


def result_from_dict(data: dict) -> ResultFile:
    data = dict(data)
    data["lam"] = data.pop("lambda")
    data.setdefault("p_star", None)
    return ResultFile(**data)


def write_result(res: ResultFile, path: str | None) -> None:
    text = json.dumps(result_to_dict(res), indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def load_result(path: str) -> ResultFile:
    with open(path) as fh:
        return result_from_dict(json.load(fh))


def _partial_result(exc: SolverError, ch: ChannelPair, cfg: SolverConfig,
                    power, wall_time: float) -> ResultFile:
    diff_eigs = np.linalg.eigvalsh(ch.W1 - ch.W2)
    trace = [r.as_dict() for r in exc.trace]
    return ResultFile(
        capacity_nats=math.nan,
        capacity_bits=math.nan,
        capacity_upper_nats=math.nan,
        gap_bound=math.nan,
        gap_bound_heuristic=False,
        R_star=[],
        K21_star=[],
        lam=None,
        R_star_eigenvalues=[],
        difference_eigenvalues=diff_eigs.tolist(),
        trace=trace,
        wall_time=wall_time,
        config=_config_echo(cfg, "failed", power),
        mode="failed",
        converged=False,
        t_final=None,
        newton_steps_total=len(trace),
    )


def _dispatch_solve(prob: ProblemFile, cfg: SolverConfig) -> SaddleSolution:
    ch = prob.channel()
    if prob.mode == "dual":
        raise ProblemFormatError("mode 'dual' is handled by the dual command")
    if prob.per_antenna or prob.mode == "per_antenna":
        if not prob.per_antenna:
            raise ProblemFormatError(
                "mode 'per_antenna' needs a per-antenna 'power' vector"
            )
        budget = PerAntennaBudget(caps=prob.power, total=prob.power_total)
        return solve_per_antenna(ch, budget, cfg)
    power = float(prob.power)
    if prob.mode == "minimax":
        return solve_minimax(ch, power, cfg)
    if prob.mode == "degraded":
        return solve_degraded(ch, power, cfg)
    # auto: pick the cheapest applicable solver
    kind, _ = classify_degraded(ch)
    if kind is Degradedness.DEGRADED:
        return solve_degraded(ch, power, cfg)
    return solve_minimax(ch, power, cfg)


def cmd_solve(args) -> int:
    try:
        prob = load_problem(args.problem)
        if args.mode is not None:
            prob.mode = args.mode
        cfg = prob.config(_cli_overrides(args))
    except (ProblemFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ch = prob.channel()
    start = time.perf_counter()
    try:
        sol = _dispatch_solve(prob, cfg)
    except SingularKktError as exc:
        wall = time.perf_counter() - start
        print(f"error: {exc}", file=sys.stderr)
        write_result(_partial_result(SolverError(str(exc)), ch, cfg,
                                     prob.power, wall), args.output)
        return 2
    except SolverError as exc:
        wall = time.perf_counter() - start
        print(f"error: {exc}", file=sys.stderr)
        write_result(_partial_result(exc, ch, cfg, prob.power, wall), args.output)
        return 2
    except (ProblemFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - start
    write_result(result_from_solution(sol, ch, cfg, prob.power, wall), args.output)
    return 0


def cmd_dual(args) -> int:
    try:
        prob = load_problem(args.problem)
        cfg = prob.config(_cli_overrides(args))
        rate = args.rate if args.rate is not None else prob.dual_rate
        if rate is None:
            raise ProblemFormatError("dual mode needs --rate or a 'dual_rate' field")
        tol = args.tol_rate
        if tol is None:
            tol = prob.dual_tol_rate if prob.dual_tol_rate is not None else 1e-6
        p_hi = float(prob.power) if not prob.per_antenna else None
        target = DualTarget(rate=float(rate), p_hi=p_hi, tol_rate=float(tol))
    except (ProblemFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ch = prob.channel()
    start = time.perf_counter()
    try:
        p_star, sol = solve_dual(ch, target, cfg)
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SingularKktError as exc:
        wall = time.perf_counter() - start
        print(f"error: {exc}", file=sys.stderr)
        write_result(_partial_result(SolverError(str(exc)), ch, cfg,
                                     prob.power, wall), args.output)
        return 2
    except SolverError as exc:
        wall = time.perf_counter() - start
        print(f"error: {exc}", file=sys.stderr)
        write_result(_partial_result(exc, ch, cfg, prob.power, wall), args.output)
        return 2
    wall = time.perf_counter() - start
    res = result_from_solution(sol, ch, cfg, prob.power, wall, p_star=p_star)
    write_result(res, args.output)
    return 0


# -- batch experiments -------------------------------------------------------

GENERATOR_NOTE = (
    "numpy default_rng(seed) [PCG64]; per channel: H1 = standard_normal((n1, m)), "
    "then H2 = standard_normal((n2, m)), row-major entry order"
)


def _batch_channels(m: int, n1: int, n2: int, count: int, seed: int):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        h1 = rng.standard_normal((n1, m))
        h2 = rng.standard_normal((n2, m))
        out.append(ChannelPair(h1, h2))
    return out


def _solve_one_batch(idx_ch_pw_cfg):
    idx, ch, power, cfg = idx_ch_pw_cfg
    try:
        sol = solve_minimax(ch, power, cfg)
        return {
            "index": idx,
            "steps": sol.newton_steps_total,
            "converged": True,
            "capacity_nats": sol.capacity_achievable,
        }
    except SolverError as exc:
        return {
            "index": idx,
            "steps": len(exc.trace),
            "converged": False,
            "capacity_nats": None,
        }
    except SingularKktError:
        return {
            "index": idx,
            "steps": 0,
            "converged": False,
            "capacity_nats": None,
        }


def run_batch(m: int, n1: int, n2: int, count: int, seed: int, power: float,
              cfg: SolverConfig, jobs: int = 1) -> dict:
    """Seeded random-channel sweep; deterministic summary for a fixed seed."""
    channels = _batch_channels(m, n1, n2, count, seed)
    work = [(i, ch, power, cfg) for i, ch in enumerate(channels)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_solve_one_batch, work))
    else:
        rows = [_solve_one_batch(w) for w in work]
    rows.sort(key=lambda r: r["index"])

    steps = [r["steps"] for r in rows if r["converged"]]
    failures = sum(1 for r in rows if not r["converged"])
    histogram: dict[str, int] = {}
    for s in steps:
        lo = 10 * (s // 10)
        key = f"{lo}-{lo + 9}"
        histogram[key] = histogram.get(key, 0) + 1
    histogram = dict(sorted(histogram.items(), key=lambda kv: int(kv[0].split("-")[0])))
    stats = {}
    if steps:
        stats = {
            "median": float(np.median(steps)),
            "min": int(min(steps)),
            "max": int(max(steps)),
        }
    return {
        "params": {
            "m": m,
            "n1": n1,
            "n2": n2,
            "count": count,
            "seed": seed,
            "power": power,
            "target_residual": cfg.eps_newton,
            "t0": cfg.t0,
            "mu": cfg.mu,
            "t_max": cfg.t_max,
        },
        "generator": GENERATOR_NOTE,
        "per_channel": rows,
        "histogram": histogram,
        "stats": stats,
        "failures": failures,
    }


def cmd_batch(args) -> int:
    if args.count < 1:
        print("error: --count must be at least 1", file=sys.stderr)
        return 1
    try:
        cfg = SolverConfig(
            alpha=args.alpha if args.alpha is not None else 0.3,
            beta=args.beta if args.beta is not None else 0.5,
            t0=args.t0 if args.t0 is not None else 100.0,
            mu=args.mu if args.mu is not None else 10.0,
            t_max=args.t_max if args.t_max is not None else 1e5,
            eps_gap=args.eps_gap,
            eps_newton=args.target_residual,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = run_batch(args.m, args.n1, args.n2, args.count, args.seed,
                        args.power, cfg, jobs=args.jobs)
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return 0 if summary["failures"] == 0 else 2


# -- trace export ------------------------------------------------------------

TRACE_COLUMNS = ("t", "iter", "residual", "f", "C", "step_size")


def cmd_trace_export(args) -> int:
    if args.format != "csv":
        print(f"error: unsupported format '{args.format}'", file=sys.stderr)
        return 1
    try:
        res = load_result(args.result)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: cannot read result file: {exc}", file=sys.stderr)
        return 1
    if not res.trace:
        print("error: result has no trace", file=sys.stderr)
        return 1
    lines = [",".join(TRACE_COLUMNS)]
    for row in res.trace:
        lines.append(
            ",".join(
                format(float(row[c]), ".17e") if c != "iter" else str(int(row[c]))
                for c in TRACE_COLUMNS
            )
        )
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return 0


# -- argument parsing ---------------------------------------------------------

def _cli_overrides(args) -> dict:
    return {
        "alpha": args.alpha,
        "beta": args.beta,
        "t0": args.t0,
        "mu": args.mu,
        "t_max": args.t_max,
        "eps_gap": args.eps_gap,
        "eps_newton": args.eps_newton,
    }


def _add_solver_flags(p: argparse.ArgumentParser, with_newton_eps=True):
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--t-max", dest="t_max", type=float, default=None)
    p.add_argument("--eps-gap", dest="eps_gap", type=float, default=None)
    if with_newton_eps:
        p.add_argument("--eps-newton", dest="eps_newton", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="secrecap",
        description="Secrecy capacity of Gaussian MIMO wiretap channels via "
        "a saddle-point barrier method.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("problem")
    p_solve.add_argument("--mode", choices=MODES, default=None)
    _add_solver_flags(p_solve)
    p_solve.add_argument("-o", "--output", default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_batch = sub.add_parser("batch", help="seeded random-channel experiments")
    p_batch.add_argument("--m", type=int, required=True)
    p_batch.add_argument("--n1", type=int, required=True)
    p_batch.add_argument("--n2", type=int, required=True)
    p_batch.add_argument("--count", type=int, required=True)
    p_batch.add_argument("--seed", type=int, required=True)
    p_batch.add_argument("--jobs", type=int, default=1)
    p_batch.add_argument("--power", type=float, default=10.0)
    p_batch.add_argument("--target-residual", dest="target_residual",
                         type=float, default=1e-10)
    _add_solver_flags(p_batch, with_newton_eps=False)
    p_batch.add_argument("-o", "--output", default=None)
    p_batch.set_defaults(func=cmd_batch)

    p_dual = sub.add_parser("dual", help="minimum power for a target rate")
    p_dual.add_argument("problem")
    p_dual.add_argument("--rate", type=float, default=None,
                        help="target secrecy rate in nats")
    p_dual.add_argument("--tol-rate", dest="tol_rate", type=float, default=None)
    _add_solver_flags(p_dual)
    p_dual.add_argument("-o", "--output", default=None)
    p_dual.set_defaults(func=cmd_dual)

    p_tr = sub.add_parser("trace-export", help="export a result trace as a table")
    p_tr.add_argument("result")
    p_tr.add_argument("--format", default="csv")
    p_tr.add_argument("-o", "--output", default=None)
    p_tr.set_defaults(func=cmd_trace_export)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
