"""End-to-end command-line interface tests (in-process via main)."""

import json
import os

import pytest

from composer.cli import main
from composer.config import serialize_golden
from composer.experiments import compose
from composer.mesh import DEFAULT_CATALOG

DATA_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "data")
GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "goldens")


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- compose -----------------------------------------------------------------------


def test_compose_prints_golden_text(capsys):
    code, out, err = _run(capsys, "compose", "--experiment", "txf_base",
                          "--instance-type", "cpu-sim-1")
    assert code == 0
    assert out == serialize_golden(compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG))
    assert out.endswith("\n")
    assert err == ""


def test_compose_emit_golden_writes_identical_bytes(tmp_path, capsys):
    target = tmp_path / "txf_base.golden"
    code, out, _ = _run(capsys, "compose", "--experiment", "txf_base",
                        "--instance-type", "cpu-sim-1", "--emit-golden", str(target))
    assert code == 0
    assert "wrote" in out
    expected = serialize_golden(compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG))
    assert target.read_text(encoding="utf-8") == expected


def test_compose_unknown_experiment_exits_2(capsys):
    code, _, err = _run(capsys, "compose", "--experiment", "txf_missing",
                        "--instance-type", "cpu-sim-1")
    assert code == 2
    assert "error:" in err


def test_compose_unknown_instance_exits_2(capsys):
    code, _, err = _run(capsys, "compose", "--experiment", "txf_base",
                        "--instance-type", "gpu-Z999-1")
    assert code == 2
    assert "error:" in err


def test_compose_with_rules_file_overrides_embedded(capsys):
    rules = os.path.join(DATA_DIR, "extra_rules.json")
    code, out, _ = _run(capsys, "compose", "--experiment", "txf_base",
                        "--instance-type", "gpu-H100-8", "--rules", rules)
    assert code == 0
    # the override maps every instance to a single fsdp axis
    assert 'mesh_axis_names[0]: "fsdp"' in out
    assert "mesh_shape[0]: 64" in out
    assert "mesh_shape[1]" not in out


def test_compose_with_catalog_file(tmp_path, capsys):
    catalog = tmp_path / "fleet.txt"
    catalog.write_text("my-box-4 4 8000000000 1e12 1e10 1e10\n")
    code, out, _ = _run(capsys, "compose", "--experiment", "txf_base",
                        "--instance-type", "my-box-4", "--catalog", str(catalog))
    assert code == 0
    assert "mesh_shape[0]: 4" in out


# --- aot ----------------------------------------------------------------------------


def test_aot_json_output(capsys):
    code, out, _ = _run(capsys, "aot", "--experiment", "txf_base",
                        "--instance-type", "cpu-sim-1", "--batch", "4", "--seq-len", "8",
                        "--json")
    assert code == 0
    data = json.loads(out)
    assert data["oom"] is False
    assert data["devices"] == 1
    assert data["param_bytes"] > 0


def test_aot_text_output(capsys):
    code, out, _ = _run(capsys, "aot", "--experiment", "txf_base",
                        "--instance-type", "gpu-H100-8", "--batch", "8", "--seq-len", "16")
    assert code == 0
    assert "mfu:" in out
    assert "oom:               no" in out


def test_aot_oom_exits_3(capsys):
    code, out, _ = _run(capsys, "aot", "--experiment", "txf_d64_l3_swiglu",
                        "--instance-type", "test-1gb-8",
                        "--batch", "4096", "--seq-len", "2048", "--json")
    assert code == 3
    assert json.loads(out)["oom"] is True


# --- run ---------------------------------------------------------------------------------


def test_run_prints_losses_and_summaries(capsys):
    code, out, _ = _run(capsys, "run", "--experiment", "txf_d16_l1_relu",
                        "--instance-type", "cpu-sim-1", "--steps", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("step 0 loss ")
    assert lines[1].startswith("step 1 loss ")
    assert "final summaries:" in out
    assert any("loss:" in line for line in lines)


def test_run_is_deterministic(capsys):
    args = ("run", "--experiment", "txf_moe", "--instance-type", "cpu-sim-1",
            "--steps", "2", "--seed", "7")
    code_a, out_a, _ = _run(capsys, *args)
    code_b, out_b, _ = _run(capsys, *args)
    assert code_a == code_b == 0
    assert out_a == out_b


def test_run_moe_reports_load_balance(capsys):
    code, out, _ = _run(capsys, "run", "--experiment", "txf_moe",
                        "--instance-type", "cpu-sim-1", "--steps", "1")
    assert code == 0
    assert "load_balance_loss" in out


# --- audit -------------------------------------------------------------------------------


def test_audit_moe_ok(capsys):
    code, out, _ = _run(capsys, "audit", "--feature", "moe", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["ok"] is True
    assert data["nodes_replaced"] == 52
    assert data["digest_before"] == data["digest_after"]


def test_audit_rope_text(capsys):
    code, out, _ = _run(capsys, "audit", "--feature", "rope")
    assert code == 0
    assert "result:           ok" in out


def test_audit_custom_registry_directory(capsys):
    code, out, _ = _run(capsys, "audit", "--feature", "moe", "--registry", GOLDEN_DIR,
                        "--json")
    assert code == 0
    assert json.loads(out)["num_experiments"] == 27


def test_audit_broken_registry_exits_4(tmp_path, capsys):
    # head dim 18/2 = 9 is odd: the rotary swap cannot finalize
    from composer.config import default_config
    from composer.experiments import compose_config

    layer = default_config("TransformerLayer")
    bad = (
        default_config("Trainer")
        .set("model.dim", 18)
        .set("model.vocab_size", 64)
        .set("model.decoder.transformer.layer", (layer,))
        .set("learner.lr", 1e-3)
    )
    finalized = compose_config(bad, "cpu-sim-1", rules=(), catalog=DEFAULT_CATALOG)
    (tmp_path / "bad.golden").write_text(serialize_golden(finalized), encoding="utf-8")
    code, out, _ = _run(capsys, "audit", "--feature", "rope", "--registry", str(tmp_path),
                        "--json")
    assert code == 4
    data = json.loads(out)
    assert data["ok"] is False
    assert data["failures"][0][0] == "bad"


def test_audit_missing_registry_exits_2(capsys):
    code, _, err = _run(capsys, "audit", "--feature", "moe", "--registry", "/no/such/dir")
    assert code == 2
    assert "error:" in err


# --- simulate ------------------------------------------------------------------------------


def test_simulate_save_scenario(capsys):
    scenario = os.path.join(DATA_DIR, "save_small.scenario")
    code, out, _ = _run(capsys, "simulate", "save", "--scenario", scenario)
    assert code == 0
    assert "duration s:      2.0" in out
    assert "peak host bytes: 20" in out
    assert "shards:          4" in out


def test_simulate_recovery_peer_scenario(capsys):
    scenario = os.path.join(DATA_DIR, "recovery_peer.scenario")
    code, out, _ = _run(capsys, "simulate", "recovery", "--scenario", scenario)
    assert code == 0
    assert "total downtime:     210.0" in out
    assert "mode:               peer_broadcast" in out


def test_simulate_recovery_remote_scenario(capsys):
    scenario = os.path.join(DATA_DIR, "recovery_remote.scenario")
    code, out, _ = _run(capsys, "simulate", "recovery", "--scenario", scenario)
    assert code == 0
    assert "total downtime:     4170.0" in out


def test_simulate_watchdog_scenario(capsys):
    scenario = os.path.join(DATA_DIR, "watchdog_demo.scenario")
    code, out, _ = _run(capsys, "simulate", "watchdog", "--scenario", scenario)
    assert code == 0
    lines = [line for line in out.splitlines() if line.startswith("step")]
    assert len(lines) == 2
    assert lines[0].startswith("step 7 slow_step action=alert")
    assert lines[1].startswith("step 10 low_util action=alert")


def test_simulate_missing_scenario_exits_2(capsys):
    code, _, err = _run(capsys, "simulate", "save", "--scenario", "/no/such.scenario")
    assert code == 2
    assert "error:" in err


def test_simulate_bad_scenario_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.scenario"
    bad.write_text("state_bytes=1\n")  # recovery keys missing
    code, _, err = _run(capsys, "simulate", "recovery", "--scenario", str(bad))
    assert code == 2
    assert "missing" in err


# --- golden-diff ----------------------------------------------------------------------------


def test_golden_diff_identical_files(capsys):
    path = os.path.join(GOLDEN_DIR, "txf_base.golden")
    code, out, _ = _run(capsys, "golden-diff", path, path)
    assert code == 0
    assert out.strip() == "identical"


def test_golden_diff_reports_changed_paths(tmp_path, capsys):
    base = compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    a = tmp_path / "a.golden"
    b = tmp_path / "b.golden"
    a.write_text(serialize_golden(base), encoding="utf-8")
    b.write_text(serialize_golden(base.set("batch_size", 16)), encoding="utf-8")
    code, out, _ = _run(capsys, "golden-diff", str(a), str(b))
    assert code == 0
    assert "batch_size: 4 -> 16" in out


def test_installed_console_script_matches_main():
    import subprocess

    result = subprocess.run(
        ["composer", "compose", "--experiment", "txf_base", "--instance-type", "cpu-sim-1"],
        capture_output=True,
        text=True,
        check=True,
    )
    expected = serialize_golden(compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG))
    assert result.stdout == expected
