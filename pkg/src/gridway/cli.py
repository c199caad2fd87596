"""Command-line entry points.

Every subcommand takes ``--config <json>``, ``--seed`` and ``--out <dir>``
and leaves its artifacts (report JSON, CSV curves, checkpoints) in the
output directory.  Config files are plain JSON; omitted sections fall back
to package defaults, and ``--seed`` overrides any seed in the file.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dqn import AgentConfig, ConfigError, DqnPolicy, train
from .harness import (baseline, evaluate, expand_grid, sweep, variance_study,
                      write_variance_csv)
from .neural import load_checkpoint, save_checkpoint
from .sim.world import WorldConfig


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ConfigError("", "config file must hold a JSON object")
    return doc


def _agent_from(doc: dict) -> AgentConfig:
    return AgentConfig.from_json(doc.get("agent", {}))


def _world_from(doc: dict) -> WorldConfig:
    world = WorldConfig.from_json(doc.get("world", {}))
    world.validate()
    return world


def _seed_from(doc: dict, args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    return int(doc.get("seed", 0))


def _out_dir(args: argparse.Namespace, command: str) -> Path:
    out = Path(args.out) if args.out else Path("gridway-out") / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(doc: dict, path: Path) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, allow_nan=False)
        f.write("\n")


def _policy_from(doc: dict, base_dir: Path):
    """A named baseline, or a trained network named by a checkpoint path."""
    name = doc.get("policy")
    if name is not None:
        return baseline(name)
    ckpt = doc.get("checkpoint")
    if ckpt is None:
        raise ConfigError("policy",
                          "config needs either 'policy' (baseline name) or "
                          "'checkpoint' (path to trained weights)")
    with open(Path(ckpt) if Path(ckpt).is_absolute() else base_dir / ckpt) as f:
        net = load_checkpoint(f)
    return DqnPolicy(_agent_from(doc), net)


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_train(args: argparse.Namespace) -> int:
    doc = _load_config(args.config)
    agent = _agent_from(doc)
    world = _world_from(doc)
    seed = _seed_from(doc, args)
    steps = int(doc.get("steps",
                        agent.learning_steps_total * world.default_decision_period))
    out = _out_dir(args, "train")
    report, net = train(agent, world, steps, seed)
    _dump(report.to_json(), out / "report.json")
    with open(out / "curves.csv", "w", newline="") as f:
        report.write_curves_csv(f)
    with open(out / "checkpoint.json", "w") as f:
        save_checkpoint(net, f)
    status = ("diverged at step " + str(report.diverged_at)
              if report.diverged_at is not None else "ok")
    print(f"train: {report.decisions} decisions over {steps} frames "
          f"in {report.wall_time:.1f}s ({status}) -> {out}")
    return 0 if report.diverged_at is None else 1


def _cmd_evaluate(args: argparse.Namespace) -> int:
    doc = _load_config(args.config)
    world = _world_from(doc)
    seed = _seed_from(doc, args)
    base_dir = Path(args.config).parent if args.config else Path(".")
    policy = _policy_from(doc, base_dir)
    report = evaluate(policy, world,
                      runs=int(doc.get("runs", 100)),
                      steps_per_run=int(doc.get("steps_per_run", 10_000)),
                      base_seed=seed,
                      workers=int(doc.get("workers", 1)))
    out = _out_dir(args, "evaluate")
    _dump(report.to_json(), out / "report.json")
    with open(out / "runs.csv", "w", newline="") as f:
        report.write_csv(f)
    print(f"evaluate: median {report.median_score:.2f} mph over "
          f"{report.run_count} runs (std {report.score_std:.3f}) -> {out}")
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    doc = _load_config(args.config)
    name = doc.get("name", "noop")
    policy = baseline(name)
    world = _world_from(doc)
    seed = _seed_from(doc, args)
    report = evaluate(policy, world,
                      runs=int(doc.get("runs", 30)),
                      steps_per_run=int(doc.get("steps_per_run", 10_000)),
                      base_seed=seed,
                      workers=int(doc.get("workers", 1)))
    out = _out_dir(args, "baseline")
    _dump({"name": name, **report.to_json()}, out / "report.json")
    with open(out / "runs.csv", "w", newline="") as f:
        report.write_csv(f)
    print(f"baseline {name}: median {report.median_score:.2f} mph over "
          f"{report.run_count} runs -> {out}")
    return 0


def _cmd_variance_study(args: argparse.Namespace) -> int:
    doc = _load_config(args.config)
    world = _world_from(doc)
    seed = _seed_from(doc, args)
    base_dir = Path(args.config).parent if args.config else Path(".")
    policy = (_policy_from(doc, base_dir) if ("policy" in doc or "checkpoint" in doc)
              else baseline("greedy-gap"))
    rows = variance_study(policy, world,
                          runs_grid=[int(n) for n in doc.get("run_counts", [1, 10, 100])],
                          trials=int(doc.get("trials", 30)),
                          steps_per_run=int(doc.get("steps_per_run", 10_000)),
                          seed=seed,
                          workers=int(doc.get("workers", 1)))
    out = _out_dir(args, "variance-study")
    with open(out / "variance.csv", "w", newline="") as f:
        write_variance_csv(rows, f)
    _dump({"rows": [row.__dict__ for row in rows]}, out / "report.json")
    for row in rows:
        print(f"variance-study: runs={row.runs:<4d} std={row.score_std:.4f} "
              f"median~{row.median_of_medians:.2f}")
    print(f"-> {out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    doc = _load_config(args.config)
    world = _world_from(doc)
    seed = _seed_from(doc, args)
    base = AgentConfig.from_json(doc.get("base", doc.get("agent", {})))
    grid = doc.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid", "must map config fields to value lists")
    seed_count = int(doc.get("seeds_per_point", 3))
    seeds = [seed + i for i in range(seed_count)]
    points = expand_grid(base, grid, seeds)
    out = _out_dir(args, "sweep")
    train_steps = int(doc.get("train_steps",
                              base.learning_steps_total * world.default_decision_period))
    results = sweep(points, world,
                    train_steps=train_steps,
                    eval_runs=int(doc.get("runs", 30)),
                    eval_steps=int(doc.get("steps_per_run", 10_000)),
                    journal_path=str(out / "journal.jsonl"),
                    budget=doc.get("budget"),
                    workers=int(doc.get("workers", 1)))
    _dump({"points": [p.to_json() for p in results]}, out / "summary.json")
    done = sum(1 for p in results if p.error is None)
    print(f"sweep: {done}/{len(results)} points scored -> {out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceConfig, run_server

    doc = _load_config(args.config)
    svc = ServiceConfig.from_json(doc.get("service", {}))
    if args.out:
        svc.data_dir = str(Path(args.out))
    if args.seed is not None:
        svc.base_seed = args.seed
    run_server(svc, host=str(doc.get("host", "127.0.0.1")),
               port=int(doc.get("port", 8000)))
    return 0


_COMMANDS = {
    "train": (_cmd_train, "train one agent and write report/curves/checkpoint"),
    "evaluate": (_cmd_evaluate, "score a trained checkpoint with the median-of-runs protocol"),
    "sweep": (_cmd_sweep, "train+evaluate a config grid with a resumable journal"),
    "variance-study": (_cmd_variance_study, "measure score-median spread vs evaluation run count"),
    "baseline": (_cmd_baseline, "score a built-in reference policy"),
    "serve": (_cmd_serve, "run the competition HTTP service"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridway",
                                     description="highway DQN sandbox")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler, _ = _COMMANDS[args.command]
    try:
        return handler(args)
    except (ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
