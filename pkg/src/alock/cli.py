"""Command-line entry point: ``alock {check,bench,sweep,trace}``."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from itertools import product
from pathlib import Path

from . import __version__
from .bench import (
    ALGOS,
    Algo,
    LatencyModel,
    WorkloadSpec,
    budget_sweep,
    long_format,
    metrics_csv,
    run,
    sweep_csv,
)
from .checker import CheckerConfig, run_checks
from .core import BudgetPolicy
from .scenarios import SCENARIOS, golden

DEFAULT_SEED = 42
MUTATIONS = ("no_victim_write", "skip_next_wait", "no_decrement", "no_reacquire")

_WORKLOAD_KEYS = {f.name: f.type for f in dataclasses.fields(WorkloadSpec)}
_MODEL_KEYS = {f.name: f.type for f in dataclasses.fields(LatencyModel)}
# keys that may hold comma-separated lists; bench runs their cartesian product
_LIST_KEYS = ("algo", "nodes", "threads_per_node", "lock_count", "locality_pct")
_SWEEP_KEYS = ("local_budgets", "remote_budgets", "localities")
_ALIASES = {"threads": "threads_per_node", "locks": "lock_count", "locality": "locality_pct"}


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; later keys win."""
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _ALIASES.get(key, key)
        known = set(_WORKLOAD_KEYS) | set(_MODEL_KEYS) | {"algo", "budget_local", "budget_remote"} | set(_SWEEP_KEYS)
        if key not in known:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        out[key] = value
    return out


def _scalar(key: str, raw: str):
    kind = _WORKLOAD_KEYS.get(key) or _MODEL_KEYS.get(key) or "int"
    try:
        return int(raw) if kind == "int" else float(raw)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {raw!r}") from None


def _values(cfg: dict[str, str], key: str, default) -> list:
    if key not in cfg:
        return [default]
    items = [v.strip() for v in cfg[key].split(",") if v.strip()]
    if not items:
        raise ConfigError(f"{key}: empty value")
    if key not in _LIST_KEYS and key not in _SWEEP_KEYS and len(items) > 1:
        raise ConfigError(f"{key}: lists are not allowed here")
    return items if key == "algo" else [_scalar(key, v) for v in items]


def _model(cfg: dict[str, str]) -> LatencyModel:
    kw = {k: _scalar(k, cfg[k]) for k in _MODEL_KEYS if k in cfg}
    return LatencyModel(**kw)


def _base_workload(cfg: dict[str, str], seed: int | None) -> dict:
    kw = {k: _values(cfg, k, None)[0] for k in _WORKLOAD_KEYS if k in cfg and k not in _LIST_KEYS}
    if seed is not None:
        kw["seed"] = seed
    return kw


def _policy(cfg: dict[str, str]) -> BudgetPolicy:
    d = BudgetPolicy()
    return BudgetPolicy(
        _values(cfg, "budget_local", d.local_budget)[0],
        _values(cfg, "budget_remote", d.remote_budget)[0],
    )


def _effective(header: str, items: dict) -> list[str]:
    return [f"# {header}"] + [f"# {k}={items[k]}" for k in sorted(items)]


def _out_dir(args) -> Path | None:
    target = args.out or os.environ.get("ALOCK_OUT")
    if not target:
        return None
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, name: str, text: str) -> None:
    sys.stdout.write(text)
    out = _out_dir(args)
    if out is not None:
        (out / name).write_text(text)


def _load(args) -> dict[str, str]:
    path = Path(args.config)
    if not path.is_file():
        # argparse-style usage failure
        args.parser.print_usage(sys.stderr)
        print(f"alock: error: config file not found: {args.config}", file=sys.stderr)
        raise SystemExit(2)
    return parse_config(path.read_text())


def cmd_check(args) -> int:
    cfg = CheckerConfig(
        num_processes=args.np,
        initial_budget=args.budget,
        algo=args.algo,
        max_states=args.max_states,
        mutations=frozenset(args.mutation or ()),
    )
    result = run_checks(cfg)
    lines = _effective("check", {
        "algo": cfg.algo, "np": cfg.num_processes, "budget": cfg.initial_budget,
        "max_states": cfg.max_states, "mutations": ",".join(sorted(cfg.mutations)) or "-",
    })
    lines.append(f"states={result.states} complete={int(result.complete)}")
    width = max(len(r.name) for r in result.required + result.informational)
    for r in result.required:
        lines.append(f"{r.name:<{width}}  {r.verdict}")
    for r in result.informational:
        lines.append(f"{r.name:<{width}}  {r.verdict} (informational)")
    lines += result.lines()
    for r in result.required:
        if not r.holds and (r.trace or r.cycle):
            lines.append(f"counterexample {r.name}:")
            lines += ["  " + s for s in r.counterexample()]
    _emit(args, "check.txt", "\n".join(lines) + "\n")
    return 0 if result.ok else 1


def cmd_bench(args) -> int:
    cfg = _load(args)
    model = _model(cfg)
    base = _base_workload(cfg, args.seed)
    policy = _policy(cfg)
    algos = _values(cfg, "algo", "alock")
    for a in algos:
        if a not in ALGOS:
            raise ConfigError(f"algo: unknown algorithm {a!r}")
    d = WorkloadSpec()
    axes = [_values(cfg, k, getattr(d, k)) for k in ("nodes", "threads_per_node", "lock_count", "locality_pct")]
    runs = []
    for algo, nodes, threads, locks, loc in product(algos, *axes):
        w = WorkloadSpec(**{**base, "nodes": nodes, "threads_per_node": threads,
                            "lock_count": locks, "locality_pct": loc})
        runs.append(run(w, model, Algo(algo, policy)))
    shown = {**{k: cfg[k] for k in cfg}, **dataclasses.asdict(model)}
    shown.update(budget_local=policy.local_budget, budget_remote=policy.remote_budget,
                 seed=base.get("seed", d.seed), duration=base.get("duration", d.duration),
                 cs_cost=base.get("cs_cost", d.cs_cost))
    text = "\n".join(_effective("bench", shown)) + "\n" + metrics_csv(runs)
    sys.stdout.write(text)
    out = _out_dir(args)
    if out is not None:
        (out / "bench.csv").write_text(metrics_csv(runs))
        (out / "bench.dat").write_text(long_format(runs))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    model = _model(cfg)
    base = _base_workload(cfg, args.seed)
    d = WorkloadSpec()
    for k in ("nodes", "threads_per_node", "lock_count"):
        base.setdefault(k, _values(cfg, k, getattr(d, k))[0])
    lbs = _values(cfg, "local_budgets", 5) if "local_budgets" in cfg else [5]
    rbs = _values(cfg, "remote_budgets", 5) if "remote_budgets" in cfg else [5, 10, 20]
    locs = _values(cfg, "localities", 0) if "localities" in cfg else [95, 90, 85]
    try:
        table = budget_sweep(WorkloadSpec(**base), model, [int(x) for x in lbs], [int(x) for x in rbs], locs)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    shown = {**base, **dataclasses.asdict(model), "local_budgets": lbs, "remote_budgets": rbs, "localities": locs}
    shown = {k: (",".join(str(x) for x in v) if isinstance(v, list) else v) for k, v in shown.items()}
    lines = _effective("sweep", shown)
    _emit(args, "sweep.csv", "\n".join(lines) + "\n" + sweep_csv(table))
    return 0


def cmd_trace(args) -> int:
    lines = SCENARIOS[args.scenario]()
    text = "\n".join(lines) + "\n"
    _emit(args, f"{args.scenario}.log", text)
    expected = golden(args.scenario)
    if lines == expected:
        print(f"# golden {args.scenario}: identical", file=sys.stderr)
        return 0
    for n, (a, b) in enumerate(zip(expected, lines), start=1):
        if a != b:
            print(f"# golden {args.scenario}: first difference at line {n}", file=sys.stderr)
            print(f"-{a}\n+{b}", file=sys.stderr)
            break
    else:
        print(f"# golden {args.scenario}: length {len(lines)} != {len(expected)}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: $ALOCK_OUT, else stdout only)")
    common.add_argument("--seed", type=int, default=None, help=f"rng seed (default {DEFAULT_SEED})")

    p = argparse.ArgumentParser(prog="alock", description="ALock model, checker and simulator")
    p.add_argument("--version", action="version", version=f"alock {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="exhaustively check a lock model")
    c.add_argument("--np", type=int, default=2)
    c.add_argument("--budget", type=int, default=1)
    c.add_argument("--algo", choices=ALGOS, default="alock")
    c.add_argument("--max-states", type=int, default=10_000_000)
    c.add_argument("--mutation", action="append", choices=MUTATIONS, help="seed a bug (repeatable)")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", parents=[common], help="simulate a lock table workload")
    b.add_argument("--config", required=True)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("sweep", parents=[common], help="relative speedup across budget pairs")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("trace", parents=[common], help="replay a scripted scenario")
    t.add_argument("--scenario", choices=sorted(SCENARIOS), default="fig2")
    t.set_defaults(func=cmd_trace)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    args.parser = parser
    try:
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except (ConfigError, ValueError) as e:
        print(f"alock: invalid configuration: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
