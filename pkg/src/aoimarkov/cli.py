"""Command line entry point: ``aoimarkov {analyze,optimize,simulate,experiment,roots}``.

Parameters come from ``--config FILE`` (``key = value`` lines), then the
``AOI_SEED`` environment variable (for ``base_seed``), then explicit flags.
CSV goes to ``--output`` or stdout and starts with a ``#`` provenance line;
human-readable summaries go to stderr.

Exit codes: 0 success, 2 usage or invalid parameter, 3 numeric domain error
(divergent series, degenerate process), 4 internal inconsistency.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import os
import sys
from contextlib import contextmanager

from . import __version__
from .core import (
    InternalInconsistencyError,
    InvalidParameterError,
    NetworkConfig,
    NumericDomainError,
    params_from_rs,
)
from .experiment import ROW_FIELDS, ExperimentManifest, SimulationCache, run_experiment
from .optimize import cubic_roots, objective, optimize_theorem3, silent_after_transmit
from .policies import (
    AGE_THRESHOLD_ALOHA,
    OPTIMAL_ALOHA,
    POLICY_KINDS,
    make_policy,
    select_optimal_aloha,
)
from .second_order import DEFAULT_CONTROL
from .sim import SimParams, run_once, simulate, write_trace

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_INTERNAL = 4

CONFIG_KEYS = {
    "N": int, "C": int, "z": int, "w": float, "r": float, "s": float, "lambda": float,
    "precision": float, "slots": int, "runs": int, "warmup": int, "batch_length": int,
    "base_seed": int, "policies": str, "w_grid": str,
}
DEFAULTS = {
    "N": 7, "C": 2, "z": 1, "w": 0.5, "precision": 0.01, "slots": 100_000, "runs": 10,
    "warmup": 1_000, "batch_length": 1_000, "base_seed": 0,
    "policies": ",".join(POLICY_KINDS), "w_grid": ",".join(str(i / 10) for i in range(11)),
}


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InvalidParameterError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise InvalidParameterError(f"config line {lineno}: bad value for {key}: {value!r}") from exc
    return values


def resolve(args) -> dict:
    values = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            values.update(parse_config_text(fh.read()))
    env_seed = os.environ.get("AOI_SEED")
    if env_seed:
        try:
            values["base_seed"] = int(env_seed)
        except ValueError as exc:
            raise InvalidParameterError(f"AOI_SEED must be an integer, got {env_seed!r}") from exc
    for key in CONFIG_KEYS:
        flag = getattr(args, key.replace("lambda", "lam"), None)
        if flag is not None:
            values[key] = flag
    return values


def _config(v: dict) -> NetworkConfig:
    return NetworkConfig(N=v["N"], C=v["C"], z=v["z"], w=v["w"])


def _sim_params(v: dict) -> SimParams:
    return SimParams(
        slots=v["slots"], runs=v["runs"], base_seed=v["base_seed"],
        warmup_slots=v["warmup"], batch_length=v["batch_length"],
    )


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise InvalidParameterError(f"not a list of numbers: {text!r}") from exc


def _provenance(v: dict, keys) -> str:
    canonical = "".join(f"{k} = {fmt(v[k])}\n" for k in keys if k in v)
    digest = hashlib.sha256(canonical.encode()).hexdigest()[:16]
    return f"tool_version={__version__} seed={v.get('base_seed', 0)} manifest={digest}"


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_csv(fh, provenance: str, header, rows) -> None:
    fh.write(f"# {provenance}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    fh.flush()


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_analyze(args) -> int:
    v = resolve(args)
    cfg = _config(v)
    if v.get("r") is not None or v.get("s") is not None:
        if v.get("r") is None or v.get("s") is None:
            raise InvalidParameterError("analyze needs both r and s (or lambda alone for the s = 1 chain)")
        params = params_from_rs(v["r"], v["s"])
        keys = ("N", "C", "z", "w", "r", "s")
    elif v.get("lambda") is not None:
        params = silent_after_transmit(v["lambda"])
        keys = ("N", "C", "z", "w", "lambda")
    else:
        raise InvalidParameterError("analyze needs r and s, or lambda")
    if abs(params.theta) >= 1.0:
        from .core import DivergentSeriesError

        raise DivergentSeriesError(f"theta = {params.theta:.6g}: the second-order series diverge")
    mom = objective(cfg, params, DEFAULT_CONTROL)
    act, pas = mom.active_stats, mom.passive_stats
    nan = float("nan")
    row = [
        params.r, params.s, params.lam, params.theta,
        act.mean if act else nan, act.temporal_variance if act else nan,
        pas.mean if pas else nan, pas.temporal_variance if pas else nan,
        mom.active_moment, mom.passive_moment, mom.objective,
    ]
    header = ["r", "s", "lambda", "theta", "m_a", "v2_a", "m_p", "v2_p", "E_AoI_a_z", "E_AoI_p_z", "F"]
    for name, value in zip(header, row):
        _say(f"{name:>10} = {fmt(value)}")
    if act is None:
        _say("note: lam = 0 or 1 is degenerate; moments are the limiting values")
    with _sink(args.output) as fh:
        _write_csv(fh, _provenance(v, keys), header, [row])
    return 0


def cmd_optimize(args) -> int:
    v = resolve(args)
    cfg = _config(v)
    res = optimize_theorem3(cfg, v["precision"], DEFAULT_CONTROL)
    _say(f"lambda* = {fmt(res.lambda_star)}  r* = {fmt(res.r_star)}  s* = {fmt(res.s_star)}  F = {fmt(res.objective_value)}")
    rows = []
    for lam, f in res.search_trace:
        chain = silent_after_transmit(lam)
        rows.append([lam, chain.r, chain.s, f])
    with _sink(args.output) as fh:
        _write_csv(fh, _provenance(v, ("N", "C", "z", "w", "precision")),
                   ["lambda", "r", "s", "F_theoretical"], rows)
    return 0


def cmd_simulate(args) -> int:
    v = resolve(args)
    cfg = _config(v)
    sim = _sim_params(v)
    kind = args.policy
    if kind == OPTIMAL_ALOHA:
        policy = select_optimal_aloha(cfg, sim, v["precision"])
    else:
        policy = make_policy(kind, cfg, v["precision"])
    _say(f"policy: {policy.describe()}")
    out = simulate(cfg, policy, sim)
    rows = [
        [rec.run_index, rec.active_moment, rec.passive_moment, rec.objective,
         rec.m_a, rec.v2_a, rec.m_p, rec.v2_p]
        for rec in out.per_run
    ]
    rows.append(["mean", out.empirical_active_moment, out.empirical_passive_moment, out.empirical_objective,
                 out.empirical_m_a, out.empirical_v2_a, out.empirical_m_p, out.empirical_v2_p])
    header = ["run_index", "empirical_active_moment", "empirical_passive_moment", "empirical_F",
              "m_hat_a", "v2_hat_a", "m_hat_p", "v2_hat_p"]
    v["policy"] = kind
    keys = ("N", "C", "z", "w", "policy", "precision", "slots", "runs", "warmup", "batch_length", "base_seed")
    with _sink(args.output) as fh:
        _write_csv(fh, _provenance(v, keys) + f" generator={out.generator!r}", header, rows)
    _say(f"empirical F = {fmt(out.empirical_objective)} (runs: {sim.runs}, slots: {sim.slots})")
    if args.trace:
        run = run_once(policy, cfg.N, cfg.C, sim, 0, cfg.z, keep_trace=True)
        with open(args.trace, "w") as fh:
            write_trace(fh, run, cfg.N, cfg.C)
    return 0


def _read_done(path: str, provenance: str):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != f"# {provenance}":
        raise InvalidParameterError(f"{path} was produced by a different manifest; refusing to resume")
    reader = csv.DictReader(io.StringIO("\n".join(lines[1:])))
    return {(float(row["w"]), row["policy"]) for row in reader}


def cmd_experiment(args) -> int:
    v = resolve(args)
    policies = tuple(p.strip() for p in v["policies"].split(",") if p.strip())
    w_grid = _float_list(v["w_grid"])
    if not w_grid:
        raise InvalidParameterError("w_grid is empty")
    manifest = ExperimentManifest(
        config=NetworkConfig(N=v["N"], C=v["C"], z=v["z"]), policies=policies, w_grid=w_grid,
        sim=_sim_params(v), precision=v["precision"], output_path=args.output,
    )
    if AGE_THRESHOLD_ALOHA in policies:
        make_policy(AGE_THRESHOLD_ALOHA, manifest.config)
    provenance = manifest.provenance()
    done = set()
    if args.resume and args.output and os.path.exists(args.output):
        done = _read_done(args.output, provenance)
        fh = open(args.output, "a", newline="")
    else:
        fh = sys.stdout if args.output is None else open(args.output, "w", newline="")
        fh.write(f"# {provenance}\n")
        fh.write(",".join(ROW_FIELDS) + "\n")
    writer = csv.writer(fh, lineterminator="\n")

    def emit(row):
        writer.writerow([fmt(row.w), row.policy, fmt(row.actual_F), fmt(row.theoretical_F_our_solution), fmt(row.ratio)])
        fh.flush()
        _say(f"w={row.w:<4} {row.policy:<22} ratio={row.ratio:.4f}  {row.detail}")

    try:
        run_experiment(manifest, SimulationCache(max_order=manifest.config.z), skip=done, on_row=emit)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_roots(args) -> int:
    v = resolve(args)
    roots = cubic_roots(v["C"], v["N"], args.tol)
    _say(f"alpha = {fmt(roots.alpha)}  beta = {fmt(roots.beta)}  1/N = {fmt(1 / v['N'])}")
    with _sink(args.output) as fh:
        _write_csv(fh, _provenance(v, ("N", "C")), ["N", "C", "alpha", "beta", "inv_N"],
                   [[v["N"], v["C"], roots.alpha, roots.beta, 1 / v["N"]]])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoimarkov", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value parameter file")
    common.add_argument("--output", "-o", help="CSV destination (default: stdout)")
    for key in ("N", "C", "z"):
        common.add_argument(f"--{key}", type=int)
    common.add_argument("--w", type=float)
    common.add_argument("--precision", type=float)

    sim_flags = argparse.ArgumentParser(add_help=False)
    for key in ("slots", "runs", "warmup", "batch_length", "base_seed"):
        sim_flags.add_argument(f"--{key}", type=int)

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", parents=[common], help="theoretical moments for one chain")
    p.add_argument("--r", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--lambda", dest="lam", type=float, help="use the s = 1 chain with this lambda")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize", parents=[common], help="line search over lambda with s = 1")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", parents=[common, sim_flags], help="Monte Carlo runs of one policy")
    p.add_argument("--policy", choices=POLICY_KINDS, default="second_order_optimal")
    p.add_argument("--trace", help="write the slot trace of run 0 to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", parents=[common, sim_flags], help="policy comparison over a w sweep")
    p.add_argument("--policies")
    p.add_argument("--w_grid")
    p.add_argument("--resume", action="store_true", help="skip (w, policy) rows already in --output")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("roots", parents=[common], help="smallest positive roots alpha and beta")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_roots)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
    except NumericDomainError as exc:
        _say(f"numeric domain error: {exc}")
        return EXIT_NUMERIC
    except InternalInconsistencyError as exc:
        _say(f"internal inconsistency: {exc}")
        return EXIT_INTERNAL
    except OSError as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
