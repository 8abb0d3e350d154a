"""Deterministic simulation of the runtime layer.

Checkpoint planning, bounded-concurrency save simulation, retention policy,
step-trace watchdog scanning, repeated-computation corruption checks, and an
analytic recovery-time model. Everything runs on a simulated clock: equal
inputs always produce equal outputs, and nothing touches real storage.
"""

from __future__ import annotations

import heapq
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import ShortTraceError

# --- Checkpoint planning --------------------------------------------------------


@dataclass(frozen=True)
class Shard:
    """One saveable piece of model state.

    Replicated shards exist identically on every replica; non-replicated
    shards live only on `owner` and must be saved from there.
    """

    name: str
    nbytes: int
    replicated: bool = True
    owner: int = 0


@dataclass(frozen=True)
class ShardManifest:
    shards: tuple[Shard, ...]
    replicas: int = 1

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError(f"replicas must be >= 1, got {self.replicas}")
        seen = set()
        for shard in self.shards:
            if shard.nbytes <= 0:
                raise ValueError(f"shard {shard.name!r} has non-positive bytes")
            if shard.name in seen:
                raise ValueError(f"duplicate shard name {shard.name!r}")
            seen.add(shard.name)
            if not 0 <= shard.owner < self.replicas:
                raise ValueError(
                    f"shard {shard.name!r} owner {shard.owner} outside [0, {self.replicas})"
                )

    @property
    def total_bytes(self) -> int:
        return sum(s.nbytes for s in self.shards)


def plan_checkpoint(manifest: ShardManifest) -> dict[int, list[Shard]]:
    """Assigns every shard to exactly one saving replica.

    Replicated shards spread round-robin across replicas so no single host
    absorbs the whole write; non-replicated shards can only be saved by their
    owner. The result is an exact partition of the manifest.
    """
    plan: dict[int, list[Shard]] = {r: [] for r in range(manifest.replicas)}
    next_replica = 0
    for shard in manifest.shards:
        if shard.replicated and manifest.replicas > 1:
            plan[next_replica % manifest.replicas].append(shard)
            next_replica += 1
        else:
            plan[shard.owner].append(shard)
    return plan


# --- Save simulation -------------------------------------------------------------


@dataclass(frozen=True)
class SaveReport:
    duration_s: float
    peak_host_bytes: int
    num_shards: int
    total_bytes: int


def simulate_save(
    plan: Mapping[int, Sequence[Shard]], concurrency_bound: int, copy_rate: float
) -> SaveReport:
    """Discrete-event simulation of a bounded-concurrency checkpoint save.

    At most `concurrency_bound` shards are staged in host memory at once;
    each copy takes nbytes / copy_rate seconds on its own link. Shards start
    in plan order (replica id, then list order), so the result is fully
    deterministic.
    """
    if concurrency_bound < 1:
        raise ValueError(f"concurrency bound must be >= 1, got {concurrency_bound}")
    if copy_rate <= 0:
        raise ValueError(f"copy rate must be positive, got {copy_rate}")
    queue = [shard for replica in sorted(plan) for shard in plan[replica]]
    clock = 0.0
    in_flight: list[tuple[float, int, int]] = []  # (end time, admit order, bytes)
    staged = 0
    peak = 0
    duration = 0.0
    for order, shard in enumerate(queue):
        if len(in_flight) == concurrency_bound:
            end, _, done_bytes = heapq.heappop(in_flight)
            clock = max(clock, end)
            staged -= done_bytes
        end = clock + shard.nbytes / copy_rate
        heapq.heappush(in_flight, (end, order, shard.nbytes))
        staged += shard.nbytes
        peak = max(peak, staged)
        duration = max(duration, end)
    return SaveReport(
        duration_s=duration,
        peak_host_bytes=peak,
        num_shards=len(queue),
        total_bytes=sum(s.nbytes for s in queue),
    )


# --- Retention policy -------------------------------------------------------------


@dataclass(frozen=True)
class GcPolicy:
    """Which checkpoint steps survive garbage collection."""

    keep_last_n: int = 0
    keep_every_k: int = 0

    def __post_init__(self):
        if self.keep_last_n < 0 or self.keep_every_k < 0:
            raise ValueError("retention counts must be >= 0")
        if self.keep_last_n == 0 and self.keep_every_k == 0:
            raise ValueError("at least one retention criterion must be enabled")


def gc_retained(checkpoint_steps: Sequence[int], policy: GcPolicy) -> set[int]:
    """Steps to keep: the newest keep_last_n plus every multiple of keep_every_k."""
    steps = list(checkpoint_steps)
    if steps != sorted(steps):
        raise ValueError("checkpoint steps must be sorted ascending")
    retained: set[int] = set()
    if policy.keep_last_n:
        retained.update(steps[-policy.keep_last_n :])
    if policy.keep_every_k:
        retained.update(s for s in steps if s % policy.keep_every_k == 0)
    return retained


# --- Watchdog ----------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    step: int
    duration_s: float
    utilization: float


WATCHDOG_ACTIONS = ("restart", "alert", "dump_stacks")


@dataclass(frozen=True)
class WatchdogConfig:
    slow_factor: float = 3.0
    window: int = 5
    low_util_threshold: float = 0.5
    consecutive: int = 3
    action: str = "alert"

    def __post_init__(self):
        if self.slow_factor <= 0 or self.window < 1 or self.consecutive < 1:
            raise ValueError("watchdog thresholds must be positive")
        if not 0.0 <= self.low_util_threshold <= 1.0:
            raise ValueError("low_util_threshold must lie in [0, 1]")
        if self.action not in WATCHDOG_ACTIONS:
            raise ValueError(f"action must be one of {WATCHDOG_ACTIONS}, got {self.action!r}")


@dataclass(frozen=True)
class WatchdogEvent:
    step: int
    kind: str  # "slow_step" | "low_util"
    action: str
    detail: str


def _check_increasing(records: Sequence[StepRecord]) -> None:
    for prev, cur in zip(records, records[1:]):
        if cur.step <= prev.step:
            raise ValueError(f"trace steps must be strictly increasing at step {cur.step}")


def watchdog_scan(records: Sequence[StepRecord], cfg: WatchdogConfig) -> list[WatchdogEvent]:
    """Flags abnormal steps in a trace.

    A step is slow when its duration exceeds slow_factor times the median of
    the `window` steps before it. Utilization below the threshold for
    `consecutive` steps fires one low-utilization event at the last step of
    the streak, then the streak counter re-arms.
    """
    if len(records) < cfg.window:
        raise ShortTraceError(
            f"trace has {len(records)} steps but the watchdog window is {cfg.window}"
        )
    _check_increasing(records)
    events: list[WatchdogEvent] = []
    for i in range(cfg.window, len(records)):
        med = statistics.median(r.duration_s for r in records[i - cfg.window : i])
        if records[i].duration_s > cfg.slow_factor * med:
            events.append(
                WatchdogEvent(
                    step=records[i].step,
                    kind="slow_step",
                    action=cfg.action,
                    detail=f"duration {records[i].duration_s:g}s > {cfg.slow_factor:g} x median {med:g}s",
                )
            )
    streak = 0
    for rec in records:
        if rec.utilization < cfg.low_util_threshold:
            streak += 1
            if streak == cfg.consecutive:
                events.append(
                    WatchdogEvent(
                        step=rec.step,
                        kind="low_util",
                        action=cfg.action,
                        detail=(
                            f"utilization < {cfg.low_util_threshold:g} "
                            f"for {cfg.consecutive} consecutive steps"
                        ),
                    )
                )
                streak = 0
        else:
            streak = 0
    events.sort(key=lambda e: (e.step, e.kind))
    return events


def parse_trace(text: str) -> list[StepRecord]:
    """Parses "step duration utilization" lines; # starts a comment."""
    records: list[StepRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"trace line {lineno}: expected 'step duration utilization'")
        try:
            records.append(StepRecord(int(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError:
            raise ValueError(f"trace line {lineno}: non-numeric field in {line!r}") from None
    _check_increasing(records)
    return records


# --- Silent-corruption check ----------------------------------------------------------


class Verdict(Enum):
    CLEAN = "clean"
    CORRUPT = "corrupt"


@dataclass(frozen=True)
class SdcReport:
    verdict: Verdict
    repeats: int
    mismatched_runs: tuple[int, ...]  # runs whose result differs from run 0


def _canonical_bytes(value: Any) -> bytes:
    """Stable byte encoding used to compare repeated results exactly."""
    if isinstance(value, np.ndarray):
        arr = np.ascontiguousarray(value)
        head = f"ndarray:{arr.dtype.str}:{arr.shape}:".encode()
        return head + arr.tobytes()
    if isinstance(value, (bytes, bytearray)):
        return b"bytes:" + bytes(value)
    if isinstance(value, (list, tuple)):
        return b"seq:" + b"|".join(_canonical_bytes(v) for v in value)
    if isinstance(value, dict):
        return b"map:" + b"|".join(
            _canonical_bytes(k) + b"=" + _canonical_bytes(value[k]) for k in sorted(value)
        )
    return f"scalar:{type(value).__name__}:{value!r}".encode()


def sdc_check(
    comm: Callable[[], Any],
    repeats: int = 3,
    fault_injector: Callable[[int, Any], Any] | None = None,
) -> SdcReport:
    """Runs a deterministic computation repeatedly and compares results exactly.

    Any pairwise mismatch is corruption. A fault that corrupts every run
    identically is invisible to this check, by construction.
    """
    if repeats < 2:
        raise ValueError(f"repeats must be >= 2, got {repeats}")
    encodings: list[bytes] = []
    for run in range(repeats):
        result = comm()
        if fault_injector is not None:
            result = fault_injector(run, result)
        encodings.append(_canonical_bytes(result))
    mismatched = tuple(i for i in range(1, repeats) if encodings[i] != encodings[0])
    distinct = len(set(encodings))
    return SdcReport(
        verdict=Verdict.CORRUPT if distinct > 1 else Verdict.CLEAN,
        repeats=repeats,
        mismatched_runs=mismatched,
    )


# --- Recovery model ---------------------------------------------------------------------


class RestoreMode(Enum):
    REMOTE_RESTORE = "remote_restore"
    PEER_BROADCAST = "peer_broadcast"


@dataclass(frozen=True)
class RecoveryScenario:
    state_bytes: float
    checkpoint_interval_steps: int
    step_time_s: float
    remote_bps: float
    interconnect_bps: float
    failure_step: int
    mode: RestoreMode
    reschedule_s: float = 0.0

    def __post_init__(self):
        if self.remote_bps <= 0 or self.interconnect_bps <= 0:
            raise ValueError("bandwidths must be positive")
        if self.checkpoint_interval_steps < 1:
            raise ValueError("checkpoint interval must be >= 1 step")
        if self.state_bytes < 0 or self.failure_step < 0 or self.step_time_s < 0:
            raise ValueError("scenario quantities must be nonnegative")


@dataclass(frozen=True)
class RecoveryReport:
    mode: RestoreMode
    lost_work_seconds: float
    restore_seconds: float
    reschedule_seconds: float
    total_downtime: float


def simulate_recovery(scenario: RecoveryScenario) -> RecoveryReport:
    """Analytic downtime model: lost work + state restore + reschedule latency.

    Peer broadcast restores over the cluster interconnect from a healthy
    replica; remote restore pulls the checkpoint over the remote-storage link.
    """
    last_ckpt = (
        scenario.failure_step // scenario.checkpoint_interval_steps
    ) * scenario.checkpoint_interval_steps
    lost = (scenario.failure_step - last_ckpt) * scenario.step_time_s
    rate = (
        scenario.interconnect_bps
        if scenario.mode is RestoreMode.PEER_BROADCAST
        else scenario.remote_bps
    )
    restore = scenario.state_bytes / rate
    return RecoveryReport(
        mode=scenario.mode,
        lost_work_seconds=lost,
        restore_seconds=restore,
        reschedule_seconds=scenario.reschedule_s,
        total_downtime=lost + restore + scenario.reschedule_s,
    )


# --- Scenario files -----------------------------------------------------------------------


def parse_scenario(text: str) -> dict[str, Any]:
    """Parses key=value lines into typed values; # starts a comment.

    Values become int when they look like integers, float when numeric,
    otherwise the raw string.
    """
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"scenario line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ValueError(f"scenario line {lineno}: empty key")
        if key in out:
            raise ValueError(f"scenario line {lineno}: duplicate key {key!r}")
        out[key] = _coerce_scalar(value)
    return out


def _coerce_scalar(value: str) -> Any:
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def recovery_scenario_from_mapping(values: Mapping[str, Any]) -> RecoveryScenario:
    """Builds a recovery scenario from parsed key=value pairs."""
    required = {
        "state_bytes",
        "checkpoint_interval_steps",
        "step_time_s",
        "remote_bps",
        "interconnect_bps",
        "failure_step",
        "mode",
    }
    missing = sorted(required - set(values))
    if missing:
        raise ValueError(f"recovery scenario missing keys: {', '.join(missing)}")
    return RecoveryScenario(
        state_bytes=float(values["state_bytes"]),
        checkpoint_interval_steps=int(values["checkpoint_interval_steps"]),
        step_time_s=float(values["step_time_s"]),
        remote_bps=float(values["remote_bps"]),
        interconnect_bps=float(values["interconnect_bps"]),
        failure_step=int(values["failure_step"]),
        mode=RestoreMode(str(values["mode"])),
        reschedule_s=float(values.get("reschedule_s", 0.0)),
    )
