"""Desk-scale reference layers with metadata for planning.

Numerics are float64 numpy, batch-major, exact enough to serve as the
behavioral contract for any production port. Each behavior also declares
parameter shapes, partition specs, matmul flops, and named activation
checkpoints ("remat tags"), so the AOT planner prices configs without
running them.

Dimension plumbing follows one rule: a parent finalizes its children's size
fields before the children are instantiated, so experiments set sizes once
at the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import (
    ComponentSchema,
    ConfigNode,
    FieldSpec,
    FunctionSpec,
    ValueKind,
    register_component,
    register_factory,
)
from .errors import (
    BadPathError,
    BadTopKError,
    OddDimError,
    ShapeError,
    UnknownActivationError,
)
from .mesh import DTYPE_BYTES, infer_bias_spec
from .module import (
    Behavior,
    RematTag,
    add_summary,
    get_shared_state,
    invoke_child,
    param,
    param_key,
    register_behavior,
    register_spec_function,
)
from .prng import RngKey, uniform

# --- Activations -------------------------------------------------------------


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "linear": lambda x: x,
    "relu": lambda x: np.maximum(x, 0.0),
    "silu": lambda x: x * _sigmoid(x),
    "sigmoid": _sigmoid,
    "tanh": np.tanh,
}


def get_activation(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise UnknownActivationError(f"unknown activation {name!r}") from None


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


def scaled_hidden_dim(fields, scale: float) -> int:
    """Hidden size as a multiple of the input size, rounded half away from zero."""
    base = fields.get("input_dim")
    if not isinstance(base, int) or isinstance(base, bool):
        raise ValueError("input_dim is not set yet")
    return int(math.floor(base * scale + 0.5))


def _activation_pair(value) -> tuple[str, str] | None:
    """Returns (linear_branch, gate_branch) names for gated configs, else None."""
    if isinstance(value, str):
        return None
    if isinstance(value, tuple) and len(value) == 2 and all(isinstance(a, str) for a in value):
        return (value[0], value[1])
    raise ShapeError(f"activation must be a name or a pair of names, got {value!r}")


def _checked_3d(x: np.ndarray, dim: int, who: str) -> tuple[int, int]:
    if not isinstance(x, np.ndarray) or x.ndim != 3 or x.shape[-1] != dim:
        raise ShapeError(f"{who} expects [batch, seq, {dim}] input")
    return x.shape[0], x.shape[1]


def _fan_in_uniform(key: RngKey, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return uniform(key, -bound, bound, shape)


def _pspec(cfg: ConfigNode) -> tuple:
    return tuple(cfg.get("param_partition_spec"))


def _dtype_bytes(cfg: ConfigNode) -> int:
    return DTYPE_BYTES[cfg.get("dtype")]


# --- Linear -------------------------------------------------------------------


class LinearBehavior(Behavior):
    """y = x @ weight + bias, weight [in, out]."""

    def param_shapes(self, cfg):
        shapes = {"weight": (cfg.get("input_dim"), cfg.get("output_dim"))}
        if cfg.get("bias"):
            shapes["bias"] = (cfg.get("output_dim"),)
        return shapes

    def param_specs(self, cfg):
        spec = _pspec(cfg)
        specs = {"weight": spec}
        if cfg.get("bias"):
            specs["bias"] = infer_bias_spec(spec)
        return specs

    def init_params(self, cfg, key):
        fan_in = cfg.get("input_dim")
        params = {"weight": _fan_in_uniform(param_key(key, "weight"), self.param_shapes(cfg)["weight"], fan_in)}
        if cfg.get("bias"):
            params["bias"] = np.zeros((cfg.get("output_dim"),), dtype=np.float64)
        return params

    def own_flops(self, cfg, batch, seq_len):
        return 2 * batch * seq_len * cfg.get("input_dim") * cfg.get("output_dim")

    def remat_tags(self, cfg, batch, seq_len):
        rows = batch * seq_len
        out = cfg.get("output_dim")
        return [RematTag("output", rows * out * _dtype_bytes(cfg), self.own_flops(cfg, batch, seq_len))]

    def forward(self, module, x):
        cfg = module.config
        if x.shape[-1] != cfg.get("input_dim"):
            raise ShapeError(
                f"Linear expects trailing dim {cfg.get('input_dim')}, got {x.shape[-1]}"
            )
        y = x @ param("weight")
        if cfg.get("bias"):
            y = y + param("bias")
        return y


# --- RMSNorm ------------------------------------------------------------------


class RMSNormBehavior(Behavior):
    """x / sqrt(mean(x^2) + eps) * scale over the trailing dim."""

    def param_shapes(self, cfg):
        return {"scale": (cfg.get("input_dim"),)}

    def param_specs(self, cfg):
        return {"scale": (None,)}

    def init_params(self, cfg, key):
        return {"scale": np.ones((cfg.get("input_dim"),), dtype=np.float64)}

    def forward(self, module, x):
        cfg = module.config
        if x.shape[-1] != cfg.get("input_dim"):
            raise ShapeError(f"RMSNorm expects trailing dim {cfg.get('input_dim')}")
        ms = np.mean(np.square(x), axis=-1, keepdims=True)
        return x / np.sqrt(ms + cfg.get("eps")) * param("scale")


# --- Embedding ----------------------------------------------------------------


class EmbeddingBehavior(Behavior):
    """Token id -> row of an [num_embeddings, dim] table."""

    def param_shapes(self, cfg):
        return {"weight": (cfg.get("num_embeddings"), cfg.get("dim"))}

    def param_specs(self, cfg):
        return {"weight": _pspec(cfg)}

    def init_params(self, cfg, key):
        # fan-in is the embedding dim: the table is also read transposed by
        # weight-tied output heads.
        return {
            "weight": _fan_in_uniform(
                param_key(key, "weight"), self.param_shapes(cfg)["weight"], cfg.get("dim")
            )
        }

    def remat_tags(self, cfg, batch, seq_len):
        rows = batch * seq_len
        return [RematTag("output", rows * cfg.get("dim") * _dtype_bytes(cfg), 0)]

    def forward(self, module, ids):
        cfg = module.config
        ids = np.asarray(ids)
        if not np.issubdtype(ids.dtype, np.integer):
            raise ShapeError("Embedding expects integer token ids")
        vocab = cfg.get("num_embeddings")
        if ids.size and (ids.min() < 0 or ids.max() >= vocab):
            raise ShapeError(f"token ids out of range [0, {vocab})")
        return param("weight")[ids]


# --- Positional embeddings ----------------------------------------------------


def rope_apply(x: np.ndarray, positions: np.ndarray, base: float = 10000.0) -> np.ndarray:
    """Rotates adjacent feature pairs by position-scaled angles.

    x has shape [..., seq, dim] with even dim; pair i rotates by
    pos * base^(-2i/dim). Pure rotation: norms are preserved and position 0
    is the identity.
    """
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1]
    if d % 2:
        raise OddDimError(f"rotary embedding needs an even dim, got {d}")
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 1 or positions.shape[0] != x.shape[-2]:
        raise ShapeError("positions must be a vector matching the seq dim")
    half = d // 2
    freqs = base ** (-2.0 * np.arange(half) / d)  # [half]
    angles = positions[:, None] * freqs[None, :]  # [seq, half]
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = x[..., 0::2], x[..., 1::2]
    out = np.empty_like(x)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


class NoPosBehavior(Behavior):
    """Identity positional embedding: queries and keys pass through."""

    def forward(self, module, q, k, positions):
        return q, k


class RoPEBehavior(Behavior):
    """Rotary positional embedding applied to queries and keys."""

    def validate(self, cfg):
        if cfg.get("dim") % 2:
            raise OddDimError(f"rotary embedding needs an even dim, got {cfg.get('dim')}")

    def forward(self, module, q, k, positions):
        base = module.config.get("base")
        return rope_apply(q, positions, base), rope_apply(k, positions, base)


# --- Attention ----------------------------------------------------------------


class AttentionBehavior(Behavior):
    """Multi-head scaled dot-product attention with a swappable positional child.

    Projections are bias-free [dim, dim] matrices; attention is unmasked and
    probabilities per query row sum to one.
    """

    def propagate(self, cfg):
        dim, heads = cfg.get("input_dim"), cfg.get("num_heads")
        if isinstance(dim, int) and isinstance(heads, int):
            if heads < 1 or dim % heads:
                raise ShapeError(f"input_dim {dim} must divide into num_heads {heads}")
            cfg = cfg.set("pos_emb.dim", dim // heads)
        return cfg

    def param_shapes(self, cfg):
        d = cfg.get("input_dim")
        return {"wq": (d, d), "wk": (d, d), "wv": (d, d), "wo": (d, d)}

    def param_specs(self, cfg):
        spec = _pspec(cfg)
        rev = tuple(reversed(spec))
        return {"wq": spec, "wk": spec, "wv": spec, "wo": rev}

    def init_params(self, cfg, key):
        d = cfg.get("input_dim")
        return {
            name: _fan_in_uniform(param_key(key, name), (d, d), d)
            for name in ("wq", "wk", "wv", "wo")
        }

    def own_flops(self, cfg, batch, seq_len):
        d = cfg.get("input_dim")
        rows = batch * seq_len
        return 8 * rows * d * d + 4 * rows * seq_len * d

    def remat_tags(self, cfg, batch, seq_len):
        d = cfg.get("input_dim")
        rows = batch * seq_len
        nbytes = rows * d * _dtype_bytes(cfg)
        proj = 2 * rows * d * d
        return [
            RematTag("q_proj", nbytes, proj),
            RematTag("k_proj", nbytes, proj),
            RematTag("v_proj", nbytes, proj),
            RematTag("context", nbytes, 4 * rows * seq_len * d),
            RematTag("o_proj", nbytes, proj),
        ]

    def forward(self, module, x):
        cfg = module.config
        d, heads = cfg.get("input_dim"), cfg.get("num_heads")
        b, t = _checked_3d(x, d, "Attention")
        hd = d // heads

        def split(y):  # [b, t, d] -> [b, heads, t, hd]
            return y.reshape(b, t, heads, hd).transpose(0, 2, 1, 3)

        q = split(x @ param("wq"))
        k = split(x @ param("wk"))
        v = split(x @ param("wv"))
        q, k = invoke_child("pos_emb", q, k, np.arange(t))
        scores = q @ k.swapaxes(-1, -2) / math.sqrt(hd)
        probs = softmax(scores, axis=-1)
        context = probs @ v  # [b, heads, t, hd]
        merged = context.transpose(0, 2, 1, 3).reshape(b, t, d)
        return merged @ param("wo")


# --- Feed-forward -------------------------------------------------------------


class FeedForwardBehavior(Behavior):
    """Position-wise MLP: w2(act(w1 x)), or the gated form
    w2(act0(w1 x) * act1(w1_gate x)) when activation is a pair."""

    def validate(self, cfg):
        pair = _activation_pair(cfg.get("activation"))
        names = pair if pair else (cfg.get("activation"),)
        for n in names:
            get_activation(n)

    def param_shapes(self, cfg):
        d, h = cfg.get("input_dim"), cfg.get("hidden_dim")
        shapes = {"w1": (d, h), "w2": (h, d)}
        if _activation_pair(cfg.get("activation")):
            shapes["w1_gate"] = (d, h)
        return shapes

    def param_specs(self, cfg):
        spec = _pspec(cfg)
        rev = tuple(reversed(spec))
        specs = {"w1": spec, "w2": rev}
        if _activation_pair(cfg.get("activation")):
            specs["w1_gate"] = spec
        return specs

    def init_params(self, cfg, key):
        d, h = cfg.get("input_dim"), cfg.get("hidden_dim")
        params = {
            "w1": _fan_in_uniform(param_key(key, "w1"), (d, h), d),
            "w2": _fan_in_uniform(param_key(key, "w2"), (h, d), h),
        }
        if _activation_pair(cfg.get("activation")):
            params["w1_gate"] = _fan_in_uniform(param_key(key, "w1_gate"), (d, h), d)
        return params

    def own_flops(self, cfg, batch, seq_len):
        d, h = cfg.get("input_dim"), cfg.get("hidden_dim")
        rows = batch * seq_len
        branches = 2 if _activation_pair(cfg.get("activation")) else 1
        return branches * 2 * rows * d * h + 2 * rows * h * d

    def remat_tags(self, cfg, batch, seq_len):
        d, h = cfg.get("input_dim"), cfg.get("hidden_dim")
        rows = batch * seq_len
        nbytes = _dtype_bytes(cfg)
        branches = 2 if _activation_pair(cfg.get("activation")) else 1
        return [
            RematTag("hidden", branches * rows * h * nbytes, branches * 2 * rows * d * h),
            RematTag("output", rows * d * nbytes, 2 * rows * h * d),
        ]

    def forward(self, module, x):
        cfg = module.config
        if x.shape[-1] != cfg.get("input_dim"):
            raise ShapeError(f"FeedForward expects trailing dim {cfg.get('input_dim')}")
        pair = _activation_pair(cfg.get("activation"))
        if pair:
            a0, a1 = get_activation(pair[0]), get_activation(pair[1])
            hidden = a0(x @ param("w1")) * a1(x @ param("w1_gate"))
        else:
            act = get_activation(cfg.get("activation"))
            hidden = act(x @ param("w1"))
        return hidden @ param("w2")


# --- Mixture of experts -------------------------------------------------------


@dataclass(frozen=True)
class GateDecision:
    """Routing outcome for one batch of tokens."""

    indices: np.ndarray  # [batch, seq, k] expert ids, best first
    weights: np.ndarray  # [batch, seq, k] renormalized gate weights
    dispatch_fractions: np.ndarray  # [experts] fraction of assignments per expert
    mean_probs: np.ndarray  # [experts] mean router probability


def route_tokens(probs: np.ndarray, top_k: int) -> GateDecision:
    """Picks top-k experts per token; ties break to the lowest expert id."""
    experts = probs.shape[-1]
    if not 1 <= top_k <= experts:
        raise BadTopKError(f"top_k={top_k} must lie in [1, {experts}]")
    order = np.argsort(-probs, axis=-1, kind="stable")
    indices = order[..., :top_k]
    picked = np.take_along_axis(probs, indices, axis=-1)
    weights = picked / np.sum(picked, axis=-1, keepdims=True)
    counts = np.bincount(indices.ravel(), minlength=experts).astype(np.float64)
    dispatch = counts / indices.size
    return GateDecision(indices, weights, dispatch, probs.reshape(-1, experts).mean(axis=0))


def load_balance_loss(decision: GateDecision) -> float:
    """experts * sum_e dispatch_e * mean_prob_e; 1.0 under uniform routing."""
    experts = decision.dispatch_fractions.shape[0]
    return float(experts * np.sum(decision.dispatch_fractions * decision.mean_probs))


class MoEBehavior(Behavior):
    """Token-choice mixture of experts sharing the feed-forward structure.

    Router logits are x @ router; the top-k softmax probabilities are
    renormalized to sum to one per token. Every forward records a
    load_balance_loss summary.
    """

    def validate(self, cfg):
        experts, top_k = cfg.get("num_experts"), cfg.get("top_k")
        if experts < 1 or not 1 <= top_k <= experts:
            raise BadTopKError(f"top_k={top_k} must lie in [1, {experts}]")
        pair = _activation_pair(cfg.get("activation"))
        for n in pair if pair else (cfg.get("activation"),):
            get_activation(n)

    def param_shapes(self, cfg):
        d, h, e = cfg.get("input_dim"), cfg.get("hidden_dim"), cfg.get("num_experts")
        shapes = {"router": (d, e), "w1": (e, d, h), "w2": (e, h, d)}
        if _activation_pair(cfg.get("activation")):
            shapes["w1_gate"] = (e, d, h)
        return shapes

    def param_specs(self, cfg):
        spec = _pspec(cfg)
        rev = tuple(reversed(spec))
        specs = {"router": (spec[0], None), "w1": (None,) + spec, "w2": (None,) + rev}
        if _activation_pair(cfg.get("activation")):
            specs["w1_gate"] = (None,) + spec
        return specs

    def init_params(self, cfg, key):
        d, h, e = cfg.get("input_dim"), cfg.get("hidden_dim"), cfg.get("num_experts")
        params = {
            "router": _fan_in_uniform(param_key(key, "router"), (d, e), d),
            "w1": _fan_in_uniform(param_key(key, "w1"), (e, d, h), d),
            "w2": _fan_in_uniform(param_key(key, "w2"), (e, h, d), h),
        }
        if _activation_pair(cfg.get("activation")):
            params["w1_gate"] = _fan_in_uniform(param_key(key, "w1_gate"), (e, d, h), d)
        return params

    def own_flops(self, cfg, batch, seq_len):
        d, h, e = cfg.get("input_dim"), cfg.get("hidden_dim"), cfg.get("num_experts")
        k = cfg.get("top_k")
        rows = batch * seq_len
        branches = 2 if _activation_pair(cfg.get("activation")) else 1
        return 2 * rows * d * e + k * (branches * 2 * rows * d * h + 2 * rows * h * d)

    def remat_tags(self, cfg, batch, seq_len):
        d, h, e = cfg.get("input_dim"), cfg.get("hidden_dim"), cfg.get("num_experts")
        k = cfg.get("top_k")
        rows = batch * seq_len
        nbytes = _dtype_bytes(cfg)
        branches = 2 if _activation_pair(cfg.get("activation")) else 1
        return [
            RematTag("router_logits", rows * e * nbytes, 2 * rows * d * e),
            RematTag("expert_hidden", k * branches * rows * h * nbytes, k * branches * 2 * rows * d * h),
            RematTag("expert_output", k * rows * d * nbytes, k * 2 * rows * h * d),
        ]

    def forward(self, module, x):
        cfg = module.config
        b, t = _checked_3d(x, cfg.get("input_dim"), "MoE")
        probs = softmax(x @ param("router"), axis=-1)
        decision = route_tokens(probs, cfg.get("top_k"))
        pair = _activation_pair(cfg.get("activation"))
        hidden = np.einsum("btd,edh->ebth", x, param("w1"))
        if pair:
            a0, a1 = get_activation(pair[0]), get_activation(pair[1])
            hidden = a0(hidden) * a1(np.einsum("btd,edh->ebth", x, param("w1_gate")))
        else:
            hidden = get_activation(cfg.get("activation"))(hidden)
        expert_out = np.einsum("ebth,ehd->ebtd", hidden, param("w2"))
        bi = np.arange(b)[:, None]
        ti = np.arange(t)[None, :]
        out = np.zeros_like(x)
        for slot in range(cfg.get("top_k")):
            eid = decision.indices[..., slot]
            out = out + decision.weights[..., slot][..., None] * expert_out[eid, bi, ti]
        add_summary("load_balance_loss", load_balance_loss(decision))
        return out


# --- Transformer layer and stack ----------------------------------------------


class TransformerLayerBehavior(Behavior):
    """Pre-norm residual block: x + attn(norm(x)), then + ffn(norm(.))."""

    def propagate(self, cfg):
        dim = cfg.get("input_dim")
        if isinstance(dim, int):
            for child in ("self_attention", "feed_forward", "self_attention_norm", "feed_forward_norm"):
                cfg = cfg.set(f"{child}.input_dim", dim)
        return cfg

    def forward(self, module, x):
        h = x + invoke_child("self_attention", invoke_child("self_attention_norm", x))
        return h + invoke_child("feed_forward", invoke_child("feed_forward_norm", h))


class TransformerStackBehavior(Behavior):
    """Sequential stack over a sub-config collection field "layer"."""

    def propagate(self, cfg):
        dim = cfg.get("input_dim")
        if isinstance(dim, int):
            for i in range(len(cfg.get("layer"))):
                cfg = cfg.set(f"layer[{i}].input_dim", dim)
        return cfg

    def forward(self, module, x):
        for i in range(len(module.config.get("layer"))):
            x = invoke_child(f"layer[{i}]", x)
        return x


# --- Language model assembly ---------------------------------------------------


class TiedLmHeadBehavior(Behavior):
    """Logit head that reads the embedding table through shared state."""

    def own_flops(self, cfg, batch, seq_len):
        return 2 * batch * seq_len * cfg.get("dim") * cfg.get("vocab_size")

    def remat_tags(self, cfg, batch, seq_len):
        rows = batch * seq_len
        return [
            RematTag(
                "logits",
                rows * cfg.get("vocab_size") * _dtype_bytes(cfg),
                self.own_flops(cfg, batch, seq_len),
            )
        ]

    def forward(self, module, h):
        cfg = module.config
        if h.shape[-1] != cfg.get("dim"):
            raise ShapeError(f"TiedLmHead expects trailing dim {cfg.get('dim')}")
        shared = get_shared_state(cfg.get("tied_to"))
        table = shared.get("weight") if isinstance(shared, dict) else shared
        if not isinstance(table, np.ndarray) or table.ndim != 2 or table.shape[1] != cfg.get("dim"):
            raise BadPathError(f"tied_to path {cfg.get('tied_to')!r} does not hold an embedding table")
        return h @ table.T


class DecoderBehavior(Behavior):
    """Embedding -> transformer stack -> final norm -> tied logit head."""

    def propagate(self, cfg):
        dim, vocab = cfg.get("dim"), cfg.get("vocab_size")
        if isinstance(dim, int):
            cfg = (
                cfg.set("emb.dim", dim)
                .set("transformer.input_dim", dim)
                .set("output_norm.input_dim", dim)
                .set("lm_head.dim", dim)
            )
        if isinstance(vocab, int):
            cfg = cfg.set("emb.num_embeddings", vocab).set("lm_head.vocab_size", vocab)
        return cfg

    def forward(self, module, ids):
        h = invoke_child("emb", ids)
        h = invoke_child("transformer", h)
        h = invoke_child("output_norm", h)
        return invoke_child("lm_head", h)


class CausalLMBehavior(Behavior):
    """Thin model wrapper so trainer-level paths start at "model"."""

    def propagate(self, cfg):
        dim, vocab = cfg.get("dim"), cfg.get("vocab_size")
        if isinstance(dim, int):
            cfg = cfg.set("decoder.dim", dim)
        if isinstance(vocab, int):
            cfg = cfg.set("decoder.vocab_size", vocab)
        return cfg

    def forward(self, module, ids):
        return invoke_child("decoder", ids)


class TrainerBehavior(Behavior):
    """Root container: owns the model, learner, mesh fields, and loss."""

    def forward(self, module, batch):
        tokens = np.asarray(batch["tokens"])
        if tokens.ndim != 2 or tokens.shape[1] < 2:
            raise ShapeError("trainer expects integer tokens of shape [batch, seq>=2]")
        logits = invoke_child("model", tokens)
        logp = log_softmax(logits[:, :-1, :], axis=-1)
        targets = tokens[:, 1:]
        picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
        loss = float(-np.mean(picked))
        add_summary("loss", loss)
        return loss


# --- Optimizer factory ----------------------------------------------------------


@dataclass(frozen=True)
class OptimizerSpec:
    """Product of the adamw external factory; carried on the module tree."""

    lr: float
    beta1: float
    beta2: float


# --- Registration ----------------------------------------------------------------

_UNSHARDED_2D = (None, None)


def _register_all() -> None:
    register_spec_function("scaled_hidden_dim", scaled_hidden_dim)

    register_component(ComponentSchema("Linear", {
        "input_dim": FieldSpec(ValueKind.INT),
        "output_dim": FieldSpec(ValueKind.INT),
        "bias": FieldSpec(ValueKind.BOOL, True),
        "param_partition_spec": FieldSpec(ValueKind.SEQ, _UNSHARDED_2D),
        "dtype": FieldSpec(ValueKind.TEXT, "f32"),
    }))
    register_behavior("Linear", LinearBehavior())

    register_component(ComponentSchema("RMSNorm", {
        "input_dim": FieldSpec(ValueKind.INT),
        "eps": FieldSpec(ValueKind.FLOAT, 1e-6),
    }))
    register_behavior("RMSNorm", RMSNormBehavior())

    register_component(ComponentSchema("Embedding", {
        "num_embeddings": FieldSpec(ValueKind.INT),
        "dim": FieldSpec(ValueKind.INT),
        "param_partition_spec": FieldSpec(ValueKind.SEQ, _UNSHARDED_2D),
        "dtype": FieldSpec(ValueKind.TEXT, "f32"),
    }))
    register_behavior("Embedding", EmbeddingBehavior())

    register_component(ComponentSchema("NoPos", {
        "dim": FieldSpec(ValueKind.INT),
    }))
    register_behavior("NoPos", NoPosBehavior())

    register_component(ComponentSchema("RoPE", {
        "dim": FieldSpec(ValueKind.INT),
        "base": FieldSpec(ValueKind.FLOAT, 10000.0),
    }))
    register_behavior("RoPE", RoPEBehavior())

    register_component(ComponentSchema("Attention", {
        "input_dim": FieldSpec(ValueKind.INT),
        "num_heads": FieldSpec(ValueKind.INT, 2),
        "pos_emb": FieldSpec(ValueKind.CONFIG, "NoPos"),
        "param_partition_spec": FieldSpec(ValueKind.SEQ, _UNSHARDED_2D),
        "dtype": FieldSpec(ValueKind.TEXT, "f32"),
    }))
    register_behavior("Attention", AttentionBehavior())

    register_component(ComponentSchema("FeedForward", {
        "input_dim": FieldSpec(ValueKind.INT),
        "hidden_dim": FieldSpec(ValueKind.INT, FunctionSpec("scaled_hidden_dim", scale=4.0)),
        "activation": FieldSpec(ValueKind.ANY, "relu"),
        "param_partition_spec": FieldSpec(ValueKind.SEQ, _UNSHARDED_2D),
        "dtype": FieldSpec(ValueKind.TEXT, "f32"),
    }))
    register_behavior("FeedForward", FeedForwardBehavior())

    register_component(ComponentSchema("MoE", {
        "input_dim": FieldSpec(ValueKind.INT),
        "hidden_dim": FieldSpec(ValueKind.INT, FunctionSpec("scaled_hidden_dim", scale=4.0)),
        "num_experts": FieldSpec(ValueKind.INT, 8),
        "top_k": FieldSpec(ValueKind.INT, 2),
        "activation": FieldSpec(ValueKind.ANY, "relu"),
        "param_partition_spec": FieldSpec(ValueKind.SEQ, _UNSHARDED_2D),
        "dtype": FieldSpec(ValueKind.TEXT, "f32"),
    }))
    register_behavior("MoE", MoEBehavior())

    register_component(ComponentSchema("TransformerLayer", {
        "input_dim": FieldSpec(ValueKind.INT),
        "self_attention": FieldSpec(ValueKind.CONFIG, "Attention"),
        "feed_forward": FieldSpec(ValueKind.CONFIG, "FeedForward"),
        "self_attention_norm": FieldSpec(ValueKind.CONFIG, "RMSNorm"),
        "feed_forward_norm": FieldSpec(ValueKind.CONFIG, "RMSNorm"),
        "remat_policy": FieldSpec(ValueKind.MAP, {}),
    }))
    register_behavior("TransformerLayer", TransformerLayerBehavior())

    register_component(ComponentSchema("TransformerStack", {
        "input_dim": FieldSpec(ValueKind.INT),
        "layer": FieldSpec(ValueKind.CONFIG_LIST, ()),
    }))
    register_behavior("TransformerStack", TransformerStackBehavior())

    register_component(ComponentSchema("TiedLmHead", {
        "dim": FieldSpec(ValueKind.INT),
        "vocab_size": FieldSpec(ValueKind.INT),
        "tied_to": FieldSpec(ValueKind.TEXT, "model.decoder.emb"),
        "dtype": FieldSpec(ValueKind.TEXT, "f32"),
    }))
    register_behavior("TiedLmHead", TiedLmHeadBehavior())

    register_component(ComponentSchema("Decoder", {
        "dim": FieldSpec(ValueKind.INT),
        "vocab_size": FieldSpec(ValueKind.INT),
        "emb": FieldSpec(ValueKind.CONFIG, "Embedding"),
        "transformer": FieldSpec(ValueKind.CONFIG, "TransformerStack"),
        "output_norm": FieldSpec(ValueKind.CONFIG, "RMSNorm"),
        "lm_head": FieldSpec(ValueKind.CONFIG, "TiedLmHead"),
    }))
    register_behavior("Decoder", DecoderBehavior())

    register_component(ComponentSchema("CausalLM", {
        "dim": FieldSpec(ValueKind.INT),
        "vocab_size": FieldSpec(ValueKind.INT),
        "decoder": FieldSpec(ValueKind.CONFIG, "Decoder"),
    }))
    register_behavior("CausalLM", CausalLMBehavior())

    register_factory("adamw", {
        "lr": FieldSpec(ValueKind.FLOAT),
        "beta1": FieldSpec(ValueKind.FLOAT, 0.9),
        "beta2": FieldSpec(ValueKind.FLOAT, 0.999),
    }, lambda lr, beta1, beta2: OptimizerSpec(lr, beta1, beta2))

    register_component(ComponentSchema("Trainer", {
        "model": FieldSpec(ValueKind.CONFIG, "CausalLM"),
        "learner": FieldSpec(ValueKind.CONFIG, "fn:adamw"),
        "batch_size": FieldSpec(ValueKind.INT, 4),
        "seq_len": FieldSpec(ValueKind.INT, 8),
        "mesh_axis_names": FieldSpec(ValueKind.SEQ, ("data",)),
        "mesh_shape": FieldSpec(ValueKind.SEQ, (-1,)),
        "mesh_rules": FieldSpec(ValueKind.SEQ, ()),
        "optimizer_state_multiplier": FieldSpec(ValueKind.INT, 2),
        "offload_optimizer_state": FieldSpec(ValueKind.BOOL, False),
        "dtype_params": FieldSpec(ValueKind.MAP, {}),
    }))
    register_behavior("Trainer", TrainerBehavior())


_register_all()
