"""The experiment registry and the compose pipeline.

An experiment is a named builder returning a trainer config. Builders carry
their own mesh rules as plain data inside the config, so a composed golden
file is self-contained: compose = build, apply the first mesh rule matching
the instance type, resolve the mesh wildcard against the catalog's device
count, then finalize (propagate dims, resolve deferred sizes).
"""

from __future__ import annotations

import os
from typing import Callable, Iterable, Mapping

import numpy as np

from .config import ConfigNode, FunctionSpec, default_config, parse_golden
from .errors import UnknownExperimentError
from .mesh import (
    DeviceSpec,
    DtypePolicyModifier,
    MeshRule,
    MeshShapeModifier,
    RematSpecModifier,
    apply_modifiers,
    catalog_entry,
    load_catalog,
    load_rules_file,
    resolve_mesh,
    rules_from_plain,
    rules_to_plain,
    select_mesh_rule,
)
from .module import instantiate
from .prng import child_key, generator, root_key

VOCAB_SIZE = 64
SWIGLU = ("linear", "silu")
SWIGLU_SCALE = 8.0 / 3.0

# One rule per hardware family; the first matching pattern wins. The fallback
# shards the single fsdp axis over however many devices the instance has, so
# every partition spec in the registry stays valid on every catalog entry.
DEFAULT_MESH_RULES: tuple[MeshRule, ...] = (
    MeshRule(
        "gpu-H100-*",
        (
            MeshShapeModifier.of(fsdp=-1, model=8),
            RematSpecModifier.of({"model.decoder.transformer.layer": "save_qkvo_flash"}),
            DtypePolicyModifier.of("fp8", fp8_amax_history_length=128),
        ),
    ),
    MeshRule(
        "tpu-v5e-*",
        (
            MeshShapeModifier.of(fsdp=16, model=-1),
            RematSpecModifier.of({"model.decoder.transformer.layer": "offload_dots"}),
            DtypePolicyModifier.of("bf16"),
        ),
    ),
    MeshRule("*", (MeshShapeModifier.of(fsdp=-1),)),
)

_HEADS_FOR_DIM = {16: 2, 32: 4, 48: 4, 64: 4}

ExperimentBuilder = Callable[[], ConfigNode]
EXPERIMENTS: dict[str, ExperimentBuilder] = {}


def register_experiment(name: str, builder: ExperimentBuilder) -> None:
    if name in EXPERIMENTS:
        raise UnknownExperimentError(f"experiment {name!r} already registered")
    EXPERIMENTS[name] = builder


def experiment_names() -> tuple[str, ...]:
    return tuple(sorted(EXPERIMENTS))


def build_experiment(name: str) -> ConfigNode:
    try:
        builder = EXPERIMENTS[name]
    except KeyError:
        raise UnknownExperimentError(f"unknown experiment {name!r}") from None
    return builder()


def _transformer_trainer(
    dim: int,
    num_layers: int,
    activation,
    hidden_scale: float | None = None,
    feed_forward_kind: str = "FeedForward",
    pos_kind: str = "NoPos",
    num_experts: int = 4,
    top_k: int = 2,
) -> ConfigNode:
    sharded = ("fsdp", None)
    layer = (
        default_config("TransformerLayer")
        .set("self_attention.num_heads", _HEADS_FOR_DIM[dim])
        .set("self_attention.param_partition_spec", sharded)
    )
    if pos_kind != "NoPos":
        layer = layer.set("self_attention.pos_emb", default_config(pos_kind))
    if feed_forward_kind != "FeedForward":
        ffn = (
            default_config(feed_forward_kind)
            .set("num_experts", num_experts)
            .set("top_k", top_k)
        )
        layer = layer.set("feed_forward", ffn)
    layer = layer.set("feed_forward.activation", activation).set(
        "feed_forward.param_partition_spec", sharded
    )
    if hidden_scale is not None:
        layer = layer.set(
            "feed_forward.hidden_dim", FunctionSpec("scaled_hidden_dim", scale=hidden_scale)
        )
    return (
        default_config("Trainer")
        .set("model.dim", dim)
        .set("model.vocab_size", VOCAB_SIZE)
        .set("model.decoder.emb.param_partition_spec", sharded)
        .set("model.decoder.transformer.layer", (layer,) * num_layers)
        .set("learner.lr", 1e-3)
        .set("mesh_rules", rules_to_plain(DEFAULT_MESH_RULES))
    )


def _register_builtin() -> None:
    register_experiment(
        "txf_base", lambda: _transformer_trainer(32, 2, SWIGLU, hidden_scale=SWIGLU_SCALE)
    )
    register_experiment(
        "txf_moe",
        lambda: _transformer_trainer(
            32, 2, SWIGLU, hidden_scale=SWIGLU_SCALE, feed_forward_kind="MoE"
        ),
    )
    register_experiment(
        "txf_rope",
        lambda: _transformer_trainer(32, 2, SWIGLU, hidden_scale=SWIGLU_SCALE, pos_kind="RoPE"),
    )
    for dim in (16, 32, 48, 64):
        for layers in (1, 2, 3):

            def _relu(dim=dim, layers=layers):
                return _transformer_trainer(dim, layers, "relu")

            def _swiglu(dim=dim, layers=layers):
                return _transformer_trainer(dim, layers, SWIGLU, hidden_scale=SWIGLU_SCALE)

            register_experiment(f"txf_d{dim}_l{layers}_relu", _relu)
            register_experiment(f"txf_d{dim}_l{layers}_swiglu", _swiglu)


_register_builtin()


# --- Composition ---------------------------------------------------------------


def compose_config(
    cfg: ConfigNode,
    instance_type: str,
    rules: Iterable[MeshRule] | None = None,
    catalog: Mapping[str, DeviceSpec] | None = None,
) -> ConfigNode:
    """Applies mesh rules for the instance type and finalizes the config.

    Rules default to the config's own embedded mesh_rules. The mesh wildcard
    is resolved against the catalog's device count so the finalized config is
    concrete, reviewable, and stable under re-composition.
    """
    catalog = catalog if catalog is not None else load_catalog()
    entry = catalog_entry(catalog, instance_type)
    rule_list = tuple(rules) if rules is not None else rules_from_plain(cfg.get("mesh_rules"))
    cfg = apply_modifiers(cfg, select_mesh_rule(rule_list, instance_type))
    mesh = resolve_mesh(cfg.get("mesh_shape"), cfg.get("mesh_axis_names"), entry.devices)
    cfg = cfg.set("mesh_shape", mesh.shape)
    return instantiate(cfg).config


def compose(
    experiment: str,
    instance_type: str,
    rules_file: str | None = None,
    catalog: Mapping[str, DeviceSpec] | None = None,
) -> ConfigNode:
    """Builds a registered experiment and composes it for an instance type."""
    rules = load_rules_file(rules_file) if rules_file else None
    return compose_config(build_experiment(experiment), instance_type, rules, catalog)


# --- Synthetic data and golden directories ----------------------------------------


def synthetic_batch(
    seed: int, step: int, batch_size: int, seq_len: int, vocab_size: int = VOCAB_SIZE
) -> dict[str, np.ndarray]:
    """Deterministic token batch: a pure function of (seed, step, shapes)."""
    key = child_key(root_key(seed), "data", step)
    gen = generator(key)
    tokens = gen.integers(0, vocab_size, size=(batch_size, seq_len), dtype=np.int64)
    return {"tokens": tokens}


def load_experiment_dir(path: str) -> dict[str, ConfigNode]:
    """Loads every <name>.golden file in a directory as an experiment config."""
    experiments: dict[str, ConfigNode] = {}
    for entry in sorted(os.listdir(path)):
        if not entry.endswith(".golden"):
            continue
        with open(os.path.join(path, entry), "r", encoding="utf-8") as fh:
            experiments[entry[: -len(".golden")]] = parse_golden(fh.read())
    if not experiments:
        raise UnknownExperimentError(f"no .golden files found in {path!r}")
    return experiments
