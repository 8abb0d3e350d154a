"""Command-line front-end.

Commands: compose, aot, run, audit, simulate, golden-diff. Exit codes:
0 success, 2 configuration error, 3 AOT analysis flagged out-of-memory,
4 audit failure. golden-diff always exits 0; its output is the diff itself.
The device catalog resolves from --catalog when given, else the
COMPOSER_CATALOG environment variable, else the built-in table.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .audit import run_audit
from .config import golden_diff, serialize_golden
from .errors import ComposerError, MutatedCodeError
from .experiments import compose, load_experiment_dir, synthetic_batch
from .mesh import aot_analyze, load_catalog
from .module import init_state, instantiate, invoke
from .prng import child_key, root_key
from .runtime_sim import (
    Shard,
    ShardManifest,
    WatchdogConfig,
    parse_scenario,
    parse_trace,
    plan_checkpoint,
    recovery_scenario_from_mapping,
    simulate_recovery,
    simulate_save,
    watchdog_scan,
)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_OOM = 3
EXIT_AUDIT_FAILURE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="composer",
        description="Compose, analyze, run, audit, and simulate training-system configs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="build an experiment config for an instance type")
    p.add_argument("--experiment", required=True)
    p.add_argument("--instance-type", required=True)
    p.add_argument("--rules", help="JSON mesh-rules file overriding the embedded rules")
    p.add_argument("--catalog", help="device catalog file")
    p.add_argument("--emit-golden", help="write the golden text to this path instead of stdout")

    p = sub.add_parser("aot", help="estimate memory/flops/step time without executing")
    p.add_argument("--experiment", required=True)
    p.add_argument("--instance-type", required=True)
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--seq-len", type=int, required=True)
    p.add_argument("--catalog", help="device catalog file")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("run", help="run forward steps on synthetic data")
    p.add_argument("--experiment", required=True)
    p.add_argument("--instance-type", required=True)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--catalog", help="device catalog file")

    p = sub.add_parser("audit", help="apply a feature mutator across the experiment registry")
    p.add_argument("--feature", required=True, choices=("moe", "rope"))
    p.add_argument("--registry", help="directory of <name>.golden files (default: built-in registry)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("simulate", help="run a runtime simulation from a scenario file")
    p.add_argument("kind", choices=("save", "recovery", "watchdog"))
    p.add_argument("--scenario", required=True)

    p = sub.add_parser("golden-diff", help="diff two golden config files")
    p.add_argument("old")
    p.add_argument("new")

    return parser


def _catalog(args) -> dict:
    return load_catalog(getattr(args, "catalog", None))


def _cmd_compose(args) -> int:
    cfg = compose(args.experiment, args.instance_type, args.rules, _catalog(args))
    text = serialize_golden(cfg)
    if args.emit_golden:
        with open(args.emit_golden, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {args.emit_golden}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_aot(args) -> int:
    catalog = _catalog(args)
    cfg = compose(args.experiment, args.instance_type, None, catalog)
    report = aot_analyze(cfg, args.instance_type, args.batch, args.seq_len, catalog, args.experiment)
    print(report.to_json() if args.json else report.format_text())
    return EXIT_OOM if report.oom else EXIT_OK


def _cmd_run(args) -> int:
    cfg = compose(args.experiment, args.instance_type, None, _catalog(args))
    module = instantiate(cfg)
    run_key = root_key(args.seed)
    state = init_state(module, run_key)
    batch_size = cfg.get("batch_size")
    seq_len = cfg.get("seq_len")
    vocab = cfg.get("model.vocab_size")
    collection = None
    for step in range(args.steps):
        batch = synthetic_batch(args.seed, step, batch_size, seq_len, vocab)
        loss, collection = invoke(module, state, child_key(run_key, "step", step), batch)
        print(f"step {step} loss {loss!r}")
    if collection is not None:
        print("final summaries:")
        for key, values in sorted(collection.flat_summaries().items()):
            for value in values:
                print(f"  {key}: {value!r}")
    return EXIT_OK


def _cmd_audit(args) -> int:
    experiments = load_experiment_dir(args.registry) if args.registry else None
    try:
        report = run_audit(args.feature, experiments, strict=False)
    except MutatedCodeError as exc:
        print(f"audit failed: {exc}", file=sys.stderr)
        return EXIT_AUDIT_FAILURE
    print(report.to_json() if args.json else report.format_text())
    return EXIT_OK if report.ok else EXIT_AUDIT_FAILURE


def _split_csv(raw: str) -> list[str]:
    return [part.strip() for part in str(raw).split(",") if part.strip()]


def _cmd_simulate(args) -> int:
    with open(args.scenario, "r", encoding="utf-8") as fh:
        values = parse_scenario(fh.read())

    if args.kind == "recovery":
        report = simulate_recovery(recovery_scenario_from_mapping(values))
        print(f"mode:               {report.mode.value}")
        print(f"lost work seconds:  {report.lost_work_seconds!r}")
        print(f"restore seconds:    {report.restore_seconds!r}")
        print(f"reschedule seconds: {report.reschedule_seconds!r}")
        print(f"total downtime:     {report.total_downtime!r}")
        return EXIT_OK

    if args.kind == "save":
        sizes = [int(p) for p in _split_csv(values["shard_bytes"])]
        replicated = (
            [p not in ("0", "false") for p in _split_csv(values["replicated"])]
            if "replicated" in values
            else [True] * len(sizes)
        )
        owners = (
            [int(p) for p in _split_csv(values["owners"])]
            if "owners" in values
            else [0] * len(sizes)
        )
        if not len(sizes) == len(replicated) == len(owners):
            raise ValueError("shard_bytes, replicated, and owners must have equal lengths")
        shards = tuple(
            Shard(name=f"shard{i}", nbytes=sizes[i], replicated=replicated[i], owner=owners[i])
            for i in range(len(sizes))
        )
        manifest = ShardManifest(shards, replicas=int(values.get("replicas", 1)))
        plan = plan_checkpoint(manifest)
        report = simulate_save(
            plan, int(values["concurrency_bound"]), float(values["copy_rate_bps"])
        )
        print(f"shards:          {report.num_shards}")
        print(f"total bytes:     {report.total_bytes}")
        print(f"duration s:      {report.duration_s!r}")
        print(f"peak host bytes: {report.peak_host_bytes}")
        return EXIT_OK

    # watchdog
    trace_path = str(values["trace_file"])
    if not os.path.isabs(trace_path):
        trace_path = os.path.join(os.path.dirname(os.path.abspath(args.scenario)), trace_path)
    with open(trace_path, "r", encoding="utf-8") as fh:
        records = parse_trace(fh.read())
    cfg = WatchdogConfig(
        slow_factor=float(values.get("slow_factor", 3.0)),
        window=int(values.get("window", 5)),
        low_util_threshold=float(values.get("low_util_threshold", 0.5)),
        consecutive=int(values.get("consecutive", 3)),
        action=str(values.get("action", "alert")),
    )
    events = watchdog_scan(records, cfg)
    if not events:
        print("no events")
    for event in events:
        print(f"step {event.step} {event.kind} action={event.action} ({event.detail})")
    return EXIT_OK


def _cmd_golden_diff(args) -> int:
    with open(args.old, "r", encoding="utf-8") as fh:
        old = fh.read()
    with open(args.new, "r", encoding="utf-8") as fh:
        new = fh.read()
    diffs = golden_diff(old, new)
    if not diffs:
        print("identical")
    for path, before, after in diffs:
        print(f"{path}: {'<absent>' if before is None else before} -> "
              f"{'<absent>' if after is None else after}")
    return EXIT_OK


_COMMANDS = {
    "compose": _cmd_compose,
    "aot": _cmd_aot,
    "run": _cmd_run,
    "audit": _cmd_audit,
    "simulate": _cmd_simulate,
    "golden-diff": _cmd_golden_diff,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ComposerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
