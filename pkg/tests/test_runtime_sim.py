"""Checkpoint planning/saving, retention, watchdog, corruption checks, recovery."""

import numpy as np
import pytest

from composer.errors import ShortTraceError
from composer.runtime_sim import (
    GcPolicy,
    RecoveryScenario,
    RestoreMode,
    SdcReport,
    Shard,
    ShardManifest,
    StepRecord,
    Verdict,
    WatchdogConfig,
    gc_retained,
    parse_scenario,
    parse_trace,
    plan_checkpoint,
    recovery_scenario_from_mapping,
    sdc_check,
    simulate_recovery,
    simulate_save,
    watchdog_scan,
)


def _shards(*sizes, replicated=True):
    return tuple(
        Shard(name=f"s{i}", nbytes=n, replicated=replicated) for i, n in enumerate(sizes)
    )


# --- Manifest validation ---------------------------------------------------------


def test_manifest_rejects_bad_shards():
    with pytest.raises(ValueError):
        ShardManifest((Shard("a", 0),))
    with pytest.raises(ValueError):
        ShardManifest((Shard("a", 1), Shard("a", 2)))
    with pytest.raises(ValueError):
        ShardManifest((Shard("a", 1, owner=2),), replicas=2)
    with pytest.raises(ValueError):
        ShardManifest((), replicas=0)


def test_manifest_total_bytes():
    assert ShardManifest(_shards(3, 4, 5)).total_bytes == 12


# --- Checkpoint planning ----------------------------------------------------------


def test_plan_round_robin_replicated():
    plan = plan_checkpoint(ShardManifest(_shards(1, 1, 1, 1, 1, 1), replicas=3))
    assert [len(plan[r]) for r in range(3)] == [2, 2, 2]
    assert [s.name for s in plan[0]] == ["s0", "s3"]


def test_plan_uneven_split():
    plan = plan_checkpoint(ShardManifest(_shards(1, 1, 1, 1, 1), replicas=3))
    assert [len(plan[r]) for r in range(3)] == [2, 2, 1]


def test_plan_single_replica_takes_all():
    plan = plan_checkpoint(ShardManifest(_shards(1, 1, 1), replicas=1))
    assert [s.name for s in plan[0]] == ["s0", "s1", "s2"]


def test_plan_non_replicated_stays_with_owner():
    shards = (
        Shard("a", 1, replicated=False, owner=2),
        Shard("b", 1, replicated=True),
        Shard("c", 1, replicated=False, owner=1),
    )
    plan = plan_checkpoint(ShardManifest(shards, replicas=3))
    assert [s.name for s in plan[2]] == ["a"]
    assert [s.name for s in plan[1]] == ["c"]
    assert [s.name for s in plan[0]] == ["b"]


def test_plan_is_exact_partition_property():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 30))
        replicas = int(rng.integers(1, 6))
        shards = tuple(
            Shard(
                name=f"s{i}",
                nbytes=int(rng.integers(1, 1000)),
                replicated=bool(rng.integers(0, 2)),
                owner=int(rng.integers(0, replicas)),
            )
            for i in range(n)
        )
        manifest = ShardManifest(shards, replicas=replicas)
        plan = plan_checkpoint(manifest)
        assert set(plan) == set(range(replicas))
        flat = [s for r in sorted(plan) for s in plan[r]]
        assert sorted(s.name for s in flat) == sorted(s.name for s in shards)
        assert sum(s.nbytes for s in flat) == manifest.total_bytes
        for r, bucket in plan.items():
            for s in bucket:
                if not s.replicated:
                    assert r == s.owner


# --- Save simulation ---------------------------------------------------------------


def test_save_bounded_concurrency_example():
    plan = {0: list(_shards(10, 10, 10, 10))}
    report = simulate_save(plan, concurrency_bound=2, copy_rate=10.0)
    assert report.peak_host_bytes == 20
    assert report.duration_s == pytest.approx(2.0)
    assert report.num_shards == 4
    assert report.total_bytes == 40


def test_save_serial_bound_sums_durations():
    plan = {0: list(_shards(10, 20, 30))}
    report = simulate_save(plan, concurrency_bound=1, copy_rate=10.0)
    assert report.duration_s == pytest.approx(6.0)
    assert report.peak_host_bytes == 30


def test_save_unbounded_is_longest_single_copy():
    plan = {0: list(_shards(10, 20, 30))}
    report = simulate_save(plan, concurrency_bound=10, copy_rate=10.0)
    assert report.duration_s == pytest.approx(3.0)
    assert report.peak_host_bytes == 60


def test_save_rejects_bad_arguments():
    plan = {0: list(_shards(10))}
    with pytest.raises(ValueError):
        simulate_save(plan, concurrency_bound=0, copy_rate=1.0)
    with pytest.raises(ValueError):
        simulate_save(plan, concurrency_bound=1, copy_rate=0.0)


def test_save_peak_bounded_by_concurrency_times_largest():
    rng = np.random.default_rng(23)
    for _ in range(100):
        sizes = [int(rng.integers(1, 500)) for _ in range(int(rng.integers(1, 20)))]
        bound = int(rng.integers(1, 6))
        plan = {0: list(_shards(*sizes))}
        report = simulate_save(plan, bound, copy_rate=float(rng.uniform(0.5, 100)))
        assert report.peak_host_bytes <= bound * max(sizes)
        assert report.total_bytes == sum(sizes)


def test_save_duration_monotone_in_concurrency():
    sizes = (17, 3, 250, 99, 42, 11, 8)
    plan = {0: list(_shards(*sizes))}
    durations = [
        simulate_save(plan, bound, copy_rate=7.0).duration_s for bound in range(1, 9)
    ]
    for slower, faster in zip(durations, durations[1:]):
        assert faster <= slower + 1e-12


def test_save_deterministic():
    plan = plan_checkpoint(ShardManifest(_shards(5, 10, 15, 20), replicas=2))
    a = simulate_save(plan, 2, 3.0)
    b = simulate_save(plan, 2, 3.0)
    assert a == b


# --- Retention ------------------------------------------------------------------------


def test_gc_keep_last_n():
    steps = [100, 500, 800, 900, 1000]
    assert gc_retained(steps, GcPolicy(keep_last_n=3)) == {800, 900, 1000}


def test_gc_keep_every_k_adds_multiples():
    steps = [100, 500, 800, 900, 1000]
    policy = GcPolicy(keep_last_n=3, keep_every_k=500)
    assert gc_retained(steps, policy) == {500, 800, 900, 1000}


def test_gc_every_k_alone():
    steps = [100, 250, 500, 750, 1000]
    assert gc_retained(steps, GcPolicy(keep_every_k=500)) == {500, 1000}


def test_gc_empty_history():
    assert gc_retained([], GcPolicy(keep_last_n=2)) == set()


def test_gc_requires_sorted_steps():
    with pytest.raises(ValueError):
        gc_retained([300, 100], GcPolicy(keep_last_n=1))


def test_gc_policy_validation():
    with pytest.raises(ValueError):
        GcPolicy()
    with pytest.raises(ValueError):
        GcPolicy(keep_last_n=-1, keep_every_k=5)


def test_gc_retained_monotone_in_n():
    steps = list(range(0, 1300, 100))
    previous: set[int] = set()
    for n in range(1, 14):
        current = gc_retained(steps, GcPolicy(keep_last_n=n))
        assert previous <= current
        assert len(current) == min(n, len(steps))
        previous = current


# --- Watchdog ---------------------------------------------------------------------------


def _records(durations, utils=None):
    utils = utils if utils is not None else [1.0] * len(durations)
    return [
        StepRecord(step=i + 1, duration_s=float(d), utilization=float(u))
        for i, (d, u) in enumerate(zip(durations, utils))
    ]


def test_watchdog_quiet_trace_has_no_events():
    records = _records([1.0] * 12)
    assert watchdog_scan(records, WatchdogConfig()) == []


def test_watchdog_flags_single_spike():
    durations = [1.0] * 6 + [10.0] + [1.0] * 4
    events = watchdog_scan(_records(durations), WatchdogConfig())
    assert len(events) == 1
    assert events[0].kind == "slow_step"
    assert events[0].step == 7
    assert events[0].action == "alert"


def test_watchdog_spike_within_warmup_window_is_not_scored():
    # the first `window` steps have no preceding median to compare against
    durations = [9.0] + [1.0] * 9
    events = watchdog_scan(_records(durations), WatchdogConfig())
    assert events == []


def test_watchdog_low_util_streak_fires_once_then_rearms():
    utils = [1.0, 0.2, 0.1, 0.3, 1.0, 0.2, 0.1, 0.3, 0.2, 1.0]
    events = watchdog_scan(
        _records([1.0] * 10, utils), WatchdogConfig(consecutive=3)
    )
    kinds = [(e.step, e.kind) for e in events]
    assert kinds == [(4, "low_util"), (8, "low_util")]


def test_watchdog_short_trace_raises():
    with pytest.raises(ShortTraceError):
        watchdog_scan(_records([1.0] * 3), WatchdogConfig(window=5))


def test_watchdog_action_carried_on_events():
    durations = [1.0] * 6 + [10.0] + [1.0] * 4
    cfg = WatchdogConfig(action="restart")
    events = watchdog_scan(_records(durations), cfg)
    assert events[0].action == "restart"


def test_watchdog_config_validation():
    with pytest.raises(ValueError):
        WatchdogConfig(action="page_everyone")
    with pytest.raises(ValueError):
        WatchdogConfig(low_util_threshold=1.5)
    with pytest.raises(ValueError):
        WatchdogConfig(window=0)


def test_watchdog_events_sorted_by_step():
    durations = [1.0] * 6 + [10.0] + [1.0] * 5
    utils = [1.0, 1.0, 0.1, 0.1, 0.1, 1.0] + [1.0] * 6
    events = watchdog_scan(_records(durations, utils), WatchdogConfig())
    assert [e.step for e in events] == sorted(e.step for e in events)
    assert {e.kind for e in events} == {"slow_step", "low_util"}


def test_parse_trace_and_validation():
    records = parse_trace("# header\n1 1.0 0.9\n2 1.5 0.8\n")
    assert records == [StepRecord(1, 1.0, 0.9), StepRecord(2, 1.5, 0.8)]
    with pytest.raises(ValueError):
        parse_trace("1 1.0 0.9\n1 1.0 0.9\n")  # steps must increase
    with pytest.raises(ValueError):
        parse_trace("1 1.0\n")
    with pytest.raises(ValueError):
        parse_trace("one 1.0 0.9\n")


# --- Silent corruption -----------------------------------------------------------------


def test_sdc_clean_run():
    report = sdc_check(lambda: np.arange(8.0), repeats=3)
    assert report.verdict is Verdict.CLEAN
    assert report.mismatched_runs == ()
    assert report.repeats == 3


def test_sdc_detects_single_flipped_run():
    def flip_second(run, result):
        if run == 1:
            result = result.copy()
            result[3] += 1e-9
        return result

    report = sdc_check(lambda: np.arange(8.0), repeats=3, fault_injector=flip_second)
    assert report.verdict is Verdict.CORRUPT
    assert report.mismatched_runs == (1,)


def test_sdc_identical_fault_every_run_is_invisible():
    def always_flip(run, result):
        result = result.copy()
        result[0] += 1.0
        return result

    report = sdc_check(lambda: np.arange(4.0), repeats=4, fault_injector=always_flip)
    assert report.verdict is Verdict.CLEAN


def test_sdc_corruption_of_reference_run_marks_others():
    def flip_first(run, result):
        if run == 0:
            result = result.copy()
            result[0] = -1.0
        return result

    report = sdc_check(lambda: np.arange(4.0), repeats=3, fault_injector=flip_first)
    assert report.verdict is Verdict.CORRUPT
    assert report.mismatched_runs == (1, 2)


def test_sdc_handles_nested_results():
    report = sdc_check(lambda: {"a": [np.ones(3), 2], "b": "x"}, repeats=3)
    assert report.verdict is Verdict.CLEAN


def test_sdc_requires_at_least_two_repeats():
    with pytest.raises(ValueError):
        sdc_check(lambda: 1, repeats=1)


# --- Recovery -------------------------------------------------------------------------------


def test_recovery_zero_state_restores_instantly():
    scenario = RecoveryScenario(
        state_bytes=0.0, checkpoint_interval_steps=10, step_time_s=1.0,
        remote_bps=1e9, interconnect_bps=1e11, failure_step=5,
        mode=RestoreMode.REMOTE_RESTORE,
    )
    report = simulate_recovery(scenario)
    assert report.restore_seconds == 0.0
    assert report.lost_work_seconds == pytest.approx(5.0)
    assert report.total_downtime == pytest.approx(5.0)


def test_recovery_failure_on_checkpoint_boundary_loses_nothing():
    scenario = RecoveryScenario(
        state_bytes=1e9, checkpoint_interval_steps=100, step_time_s=2.0,
        remote_bps=1e9, interconnect_bps=1e11, failure_step=300,
        mode=RestoreMode.PEER_BROADCAST,
    )
    report = simulate_recovery(scenario)
    assert report.lost_work_seconds == 0.0
    assert report.restore_seconds == pytest.approx(1e9 / 1e11)


def test_recovery_mode_selects_bandwidth():
    kwargs = dict(
        state_bytes=1e12, checkpoint_interval_steps=100, step_time_s=1.0,
        remote_bps=1e9, interconnect_bps=1e11, failure_step=100,
    )
    remote = simulate_recovery(RecoveryScenario(mode=RestoreMode.REMOTE_RESTORE, **kwargs))
    peer = simulate_recovery(RecoveryScenario(mode=RestoreMode.PEER_BROADCAST, **kwargs))
    assert remote.restore_seconds == pytest.approx(1000.0)
    assert peer.restore_seconds == pytest.approx(10.0)


def test_recovery_reschedule_added_to_total():
    scenario = RecoveryScenario(
        state_bytes=1e9, checkpoint_interval_steps=10, step_time_s=1.0,
        remote_bps=1e9, interconnect_bps=1e9, failure_step=15,
        mode=RestoreMode.REMOTE_RESTORE, reschedule_s=120.0,
    )
    report = simulate_recovery(scenario)
    assert report.total_downtime == pytest.approx(5.0 + 1.0 + 120.0)


def test_recovery_peer_never_slower_when_interconnect_at_least_remote():
    rng = np.random.default_rng(31)
    for _ in range(200):
        remote = float(rng.uniform(1e6, 1e12))
        interconnect = remote * float(rng.uniform(1.0, 1e4))
        kwargs = dict(
            state_bytes=float(rng.uniform(0, 1e13)),
            checkpoint_interval_steps=int(rng.integers(1, 1000)),
            step_time_s=float(rng.uniform(0, 10)),
            remote_bps=remote,
            interconnect_bps=interconnect,
            failure_step=int(rng.integers(0, 5000)),
            reschedule_s=float(rng.uniform(0, 300)),
        )
        peer = simulate_recovery(RecoveryScenario(mode=RestoreMode.PEER_BROADCAST, **kwargs))
        rem = simulate_recovery(RecoveryScenario(mode=RestoreMode.REMOTE_RESTORE, **kwargs))
        assert peer.total_downtime <= rem.total_downtime + 1e-9


def test_recovery_scenario_validation():
    with pytest.raises(ValueError):
        RecoveryScenario(
            state_bytes=1.0, checkpoint_interval_steps=0, step_time_s=1.0,
            remote_bps=1e9, interconnect_bps=1e9, failure_step=1,
            mode=RestoreMode.REMOTE_RESTORE,
        )
    with pytest.raises(ValueError):
        RecoveryScenario(
            state_bytes=1.0, checkpoint_interval_steps=1, step_time_s=1.0,
            remote_bps=0.0, interconnect_bps=1e9, failure_step=1,
            mode=RestoreMode.REMOTE_RESTORE,
        )


# --- Scenario files ----------------------------------------------------------------------------


def test_parse_scenario_types_and_comments():
    text = "# demo\nstate_bytes=4e12\nfailure_step=1050\nmode=peer_broadcast\n"
    values = parse_scenario(text)
    assert values == {"state_bytes": 4e12, "failure_step": 1050, "mode": "peer_broadcast"}
    assert isinstance(values["failure_step"], int)


def test_parse_scenario_rejects_bad_lines():
    with pytest.raises(ValueError):
        parse_scenario("no equals sign\n")
    with pytest.raises(ValueError):
        parse_scenario("=5\n")
    with pytest.raises(ValueError):
        parse_scenario("a=1\na=2\n")


def test_recovery_scenario_from_mapping_round_trip():
    values = parse_scenario(
        "state_bytes=4e12\ncheckpoint_interval_steps=100\nstep_time_s=1.0\n"
        "remote_bps=1e9\ninterconnect_bps=1e11\nfailure_step=1050\n"
        "mode=peer_broadcast\nreschedule_s=120\n"
    )
    scenario = recovery_scenario_from_mapping(values)
    assert scenario.mode is RestoreMode.PEER_BROADCAST
    report = simulate_recovery(scenario)
    assert report.total_downtime == pytest.approx(50.0 + 40.0 + 120.0)


def test_recovery_scenario_from_mapping_missing_keys():
    with pytest.raises(ValueError, match="missing"):
        recovery_scenario_from_mapping({"state_bytes": 1.0})
