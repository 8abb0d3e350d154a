"""The experiment registry, the compose pipeline, and synthetic data."""

import os

import numpy as np
import pytest

from composer.config import serialize_golden
from composer.errors import UnknownExperimentError, UnknownInstanceError
from composer.experiments import (
    DEFAULT_MESH_RULES,
    EXPERIMENTS,
    build_experiment,
    compose,
    compose_config,
    experiment_names,
    load_experiment_dir,
    register_experiment,
    synthetic_batch,
)
from composer.mesh import DEFAULT_CATALOG, MeshRule, MeshShapeModifier
from composer.module import init_state, instantiate, invoke
from composer.prng import root_key

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "goldens")


def test_registry_has_at_least_twenty_experiments():
    names = experiment_names()
    assert len(names) >= 20
    assert {"txf_base", "txf_moe", "txf_rope"} <= set(names)
    assert list(names) == sorted(names)


def test_register_rejects_duplicates():
    with pytest.raises(UnknownExperimentError):
        register_experiment("txf_base", lambda: None)


def test_build_unknown_experiment():
    with pytest.raises(UnknownExperimentError):
        build_experiment("txf_nonexistent")


def test_every_experiment_builds_a_trainer():
    for name in experiment_names():
        cfg = build_experiment(name)
        assert cfg.kind == "Trainer", name
        assert cfg.get("mesh_rules"), name


def test_every_experiment_composes_on_every_builtin_instance():
    for name in experiment_names():
        for instance in ("gpu-H100-8", "tpu-v5e-256", "cpu-sim-1"):
            cfg = compose(name, instance, catalog=DEFAULT_CATALOG)
            module = instantiate(cfg)
            assert module.kind == "Trainer", (name, instance)


def test_compose_h100_applies_first_rule():
    cfg = compose("txf_base", "gpu-H100-8", catalog=DEFAULT_CATALOG)
    assert tuple(cfg.get("mesh_axis_names")) == ("fsdp", "model")
    assert tuple(cfg.get("mesh_shape")) == (8, 8)
    assert cfg.get("model.decoder.emb.dtype") == "fp8"
    assert cfg.get("dtype_params") == {"fp8_amax_history_length": 128}
    policy = cfg.get("model.decoder.transformer.layer[0].remat_policy")
    assert policy["q_proj"] == "save" and policy["*"] == "recompute"


def test_compose_tpu_rule():
    cfg = compose("txf_base", "tpu-v5e-256", catalog=DEFAULT_CATALOG)
    assert tuple(cfg.get("mesh_shape")) == (16, 16)
    assert cfg.get("model.decoder.emb.dtype") == "bf16"
    assert cfg.get("model.decoder.transformer.layer[0].remat_policy") == {"*": "offload"}


def test_compose_fallback_rule_on_cpu():
    cfg = compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    assert tuple(cfg.get("mesh_axis_names")) == ("fsdp",)
    assert tuple(cfg.get("mesh_shape")) == (1,)


def test_compose_is_deterministic_and_idempotent():
    first = serialize_golden(compose("txf_moe", "gpu-H100-8", catalog=DEFAULT_CATALOG))
    second = serialize_golden(compose("txf_moe", "gpu-H100-8", catalog=DEFAULT_CATALOG))
    assert first == second
    composed = compose("txf_moe", "gpu-H100-8", catalog=DEFAULT_CATALOG)
    again = compose_config(composed, "gpu-H100-8", catalog=DEFAULT_CATALOG)
    assert serialize_golden(again) == first


def test_compose_finalizes_deferred_sizes():
    cfg = compose("txf_base", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    # 32 * 8/3 rounded half away from zero
    assert cfg.get("model.decoder.transformer.layer[0].feed_forward.hidden_dim") == 85
    relu = compose("txf_d16_l1_relu", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    assert relu.get("model.decoder.transformer.layer[0].feed_forward.hidden_dim") == 64
    assert relu.get("model.decoder.transformer.layer[0].self_attention.num_heads") == 2


def test_compose_explicit_rules_override_embedded_ones():
    rules = (MeshRule("*", (MeshShapeModifier.of(data=-1),)),)
    cfg = compose_config(
        build_experiment("txf_base"), "gpu-H100-8", rules=rules, catalog=DEFAULT_CATALOG
    )
    assert tuple(cfg.get("mesh_axis_names")) == ("data",)
    assert tuple(cfg.get("mesh_shape")) == (64,)


def test_compose_unknown_names():
    with pytest.raises(UnknownExperimentError):
        compose("mystery", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    with pytest.raises(UnknownInstanceError):
        compose("txf_base", "gpu-Z999-1", catalog=DEFAULT_CATALOG)


def test_default_mesh_rules_have_catchall_last():
    assert DEFAULT_MESH_RULES[-1].pattern == "*"
    assert len(DEFAULT_MESH_RULES) == 3


def test_composed_experiment_trains_one_step():
    cfg = compose("txf_d16_l1_relu", "cpu-sim-1", catalog=DEFAULT_CATALOG)
    module = instantiate(cfg)
    state = init_state(module, root_key(0))
    batch = synthetic_batch(0, 0, cfg.get("batch_size"), cfg.get("seq_len"))
    loss, collection = invoke(module, state, root_key(1), batch)
    assert np.isfinite(loss)
    assert "loss" in collection.flat_summaries()


def test_synthetic_batch_is_pure():
    a = synthetic_batch(0, 5, 4, 8)
    b = synthetic_batch(0, 5, 4, 8)
    assert np.array_equal(a["tokens"], b["tokens"])
    c = synthetic_batch(0, 6, 4, 8)
    assert not np.array_equal(a["tokens"], c["tokens"])
    d = synthetic_batch(1, 5, 4, 8)
    assert not np.array_equal(a["tokens"], d["tokens"])


def test_synthetic_batch_shape_and_range():
    batch = synthetic_batch(3, 0, 4, 8, vocab_size=64)
    tokens = batch["tokens"]
    assert tokens.shape == (4, 8)
    assert tokens.dtype == np.int64
    assert tokens.min() >= 0 and tokens.max() < 64


def test_load_experiment_dir_reads_goldens(tmp_path):
    experiments = load_experiment_dir(GOLDEN_DIR)
    assert len(experiments) == len(EXPERIMENTS)
    assert set(experiments) == set(experiment_names())
    for cfg in experiments.values():
        assert cfg.kind == "Trainer"
    with pytest.raises(UnknownExperimentError):
        load_experiment_dir(str(tmp_path))
