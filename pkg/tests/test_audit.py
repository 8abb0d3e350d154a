"""The extensibility audit: one mutator, every experiment, no code edits."""

import json
import os

import pytest

from composer.audit import MUTATORS, moe_mutator, rope_mutator, run_audit
from composer.config import default_config
from composer.errors import BrokenConfigError, ConfigError, MutatedCodeError
from composer.experiments import (
    build_experiment,
    compose,
    experiment_names,
    load_experiment_dir,
)
from composer.mesh import DEFAULT_CATALOG
from composer.module import Behavior, register_behavior

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "goldens")


def test_known_features():
    assert set(MUTATORS) == {"moe", "rope"}


def test_unknown_feature_rejected():
    with pytest.raises(ConfigError):
        run_audit("quantization", experiments={})


def test_moe_mutator_replaces_every_feed_forward():
    cfg = compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    mutated, report = moe_mutator(cfg)
    assert len(report.replaced_paths) == 2
    for path in report.replaced_paths:
        assert mutated.get(path).kind == "MoE"
        assert mutated.get(f"{path}.num_experts") == 4
        assert mutated.get(f"{path}.top_k") == 2
    # the old node's sizes survive the swap
    assert ("model.decoder.transformer.layer[0].feed_forward", "input_dim") in report.copied_fields


def test_rope_mutator_replaces_every_identity_pos_emb():
    cfg = compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    mutated, report = rope_mutator(cfg)
    assert len(report.replaced_paths) == 2
    for path in report.replaced_paths:
        assert mutated.get(path).kind == "RoPE"


def test_full_audit_moe():
    report = run_audit("moe")
    assert report.ok
    assert report.num_experiments == len(experiment_names())
    assert report.num_experiments >= 20
    assert report.num_variants == report.num_experiments
    assert report.mutators_used == 1
    assert report.digest_before == report.digest_after
    assert report.nodes_replaced == 52
    assert report.failures == ()


def test_full_audit_rope():
    report = run_audit("rope")
    assert report.ok
    assert report.nodes_replaced == 52
    assert report.digest_before == report.digest_after


def test_audit_on_golden_directory():
    experiments = load_experiment_dir(GOLDEN_DIR)
    report = run_audit("moe", experiments=experiments)
    assert report.ok
    assert report.num_experiments == len(experiments)
    assert report.nodes_replaced == 52


def test_audit_zero_replacement_experiment_is_a_no_op():
    # an experiment already using the feature offers nothing to replace
    experiments = {"already_moe": compose("txf_moe", "cpu-sim-1", catalog=DEFAULT_CATALOG)}
    report = run_audit("moe", experiments=experiments)
    assert report.ok
    assert report.num_variants == 1
    assert report.nodes_replaced == 0


def _odd_head_dim_trainer():
    """A trainer whose attention head dim is odd: rotary swap cannot finalize."""
    layer = default_config("TransformerLayer")
    return (
        default_config("Trainer")
        .set("model.dim", 18)  # 2 heads -> head dim 9
        .set("model.vocab_size", 64)
        .set("model.decoder.transformer.layer", (layer,))
        .set("learner.lr", 1e-3)
    )


def test_audit_strict_raises_on_broken_experiment():
    experiments = {"bad": _odd_head_dim_trainer()}
    with pytest.raises(BrokenConfigError):
        run_audit("rope", experiments=experiments, strict=True)


def test_audit_non_strict_collects_failures():
    experiments = {
        "bad": _odd_head_dim_trainer(),
        "good": compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG),
    }
    report = run_audit("rope", experiments=experiments, strict=False)
    assert not report.ok
    assert report.num_variants == 1
    assert len(report.failures) == 1
    assert report.failures[0][0] == "bad"
    assert "even" in report.failures[0][1]


def test_audit_detects_behavior_registry_mutation(isolated_registry):
    class _Imposter(Behavior):
        def forward(self, module):
            return None

    def naughty(cfg):
        register_behavior(f"Imposter{len(cfg.field_names())}", _Imposter())
        return moe_mutator(cfg)

    experiments = {"base": compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)}
    with pytest.raises(MutatedCodeError):
        run_audit("moe", experiments=experiments, mutator=naughty)


def test_audit_report_serialization():
    experiments = {"base": compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)}
    report = run_audit("moe", experiments=experiments)
    data = json.loads(report.to_json())
    assert data["ok"] is True
    assert data["feature"] == "moe"
    assert data["nodes_replaced"] == 2
    text = report.format_text()
    assert "result:           ok" in text
    assert "digest unchanged: True" in text


def test_audit_diff_containment_guards_against_leaky_mutators():
    # a mutator that also edits an unrelated field must be rejected
    def leaky(cfg):
        mutated, report = moe_mutator(cfg)
        return mutated.set("batch_size", 99), report

    experiments = {"base": compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)}
    with pytest.raises(BrokenConfigError, match="leaked"):
        run_audit("moe", experiments=experiments, mutator=leaky)


def test_registry_experiments_unchanged_by_audit():
    before = build_experiment("txf_base")
    run_audit("moe", experiments={"x": compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)})
    after = build_experiment("txf_base")
    from composer.config import serialize_golden

    assert serialize_golden(before) == serialize_golden(after)
