"""Device meshes, parameter sharding, config modifiers, and AOT planning.

A mesh names its axes and assigns a size to each; partition specs map tensor
dimensions to axis names (or None for unsharded). Mesh rules pair an
instance-type glob with a modifier list so one experiment composes for many
fleet targets without edits. aot_analyze prices a composed config against a
device catalog entry (memory, flops, a crude comm model) without
materializing any tensor data.
"""

from __future__ import annotations

import fnmatch
import json
import math
import os
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .config import ConfigNode, visit
from .errors import (
    ComposerError,
    IndivisibleError,
    MeshError,
    MultipleWildcardsError,
    NoMatchError,
    TypeMismatchError,
    UnknownInstanceError,
)
from .module import Module, RematTag, instantiate

DTYPE_BYTES = {"f32": 4, "bf16": 2, "int8": 1, "fp8": 1}


@dataclass(frozen=True)
class Mesh:
    """A named logical device mesh with a concrete size per axis."""

    axis_names: tuple[str, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        if len(self.axis_names) != len(self.shape):
            raise MeshError("mesh axis names and shape lengths differ")
        if len(set(self.axis_names)) != len(self.axis_names):
            raise MeshError("mesh axis names must be unique")
        if any(s < 1 for s in self.shape):
            raise MeshError("mesh axis sizes must be positive")

    def axis_size(self, name: str) -> int:
        try:
            return self.shape[self.axis_names.index(name)]
        except ValueError:
            raise MeshError(f"mesh has no axis {name!r}") from None

    @property
    def device_count(self) -> int:
        return math.prod(self.shape)


def resolve_mesh(shape: Sequence[int], axis_names: Sequence[str], total_devices: int) -> Mesh:
    """Resolves at most one -1 wildcard so the product equals total devices."""
    shape = tuple(int(s) for s in shape)
    names = tuple(axis_names)
    wildcards = [i for i, s in enumerate(shape) if s == -1]
    if len(wildcards) > 1:
        raise MultipleWildcardsError(f"mesh shape {shape} has multiple -1 wildcards")
    if any(s < 1 and s != -1 for s in shape):
        raise MeshError(f"mesh shape {shape} has non-positive axis sizes")
    if wildcards:
        rest = math.prod(s for s in shape if s != -1)
        if rest == 0 or total_devices % rest:
            raise IndivisibleError(
                f"cannot fill wildcard: {total_devices} devices not divisible by {rest}"
            )
        filled = list(shape)
        filled[wildcards[0]] = total_devices // rest
        shape = tuple(filled)
    if math.prod(shape) != total_devices:
        raise IndivisibleError(
            f"mesh shape {shape} covers {math.prod(shape)} devices, catalog has {total_devices}"
        )
    return Mesh(axis_names=names, shape=shape)


PartitionSpec = tuple


def validate_partition_spec(spec: Sequence[str | None], mesh: Mesh) -> tuple:
    spec = tuple(spec)
    named = [a for a in spec if a is not None]
    if len(set(named)) != len(named):
        raise MeshError(f"partition spec {spec} repeats a mesh axis")
    for a in named:
        mesh.axis_size(a)  # raises on unknown axes
    return spec

def infer_bias_spec(weight_spec: Sequence[str | None]) -> tuple:
    """A bias is laid out like the output dim of its weight: the last entry."""
    weight_spec = tuple(weight_spec)
    if not weight_spec:
        raise MeshError("weight spec must have at least one entry")
    return (weight_spec[-1],)


def shard_shape(shape: Sequence[int], spec: Sequence[str | None], mesh: Mesh) -> tuple[int, ...]:
    """Per-device shard shape: each dim divided by its axis size exactly."""
    shape = tuple(int(d) for d in shape)
    spec = validate_partition_spec(spec, mesh)
    if len(spec) != len(shape):
        raise MeshError(f"partition spec {spec} does not match tensor rank {len(shape)}")
    out = []
    for dim, axis in zip(shape, spec):
        if axis is None:
            out.append(dim)
            continue
        size = mesh.axis_size(axis)
        if dim % size:
            raise IndivisibleError(f"dim {dim} not divisible by axis {axis!r} of size {size}")
        out.append(dim // size)
    return tuple(out)


# --- Device catalog ---------------------------------------------------------


@dataclass(frozen=True)
class DeviceSpec:
    """One catalog row: a fleet instance type and its per-device numbers."""

    instance_type: str
    devices: int
    hbm_bytes: int
    peak_flops: float
    interconnect_bps: float
    hostlink_bps: float


DEFAULT_CATALOG: dict[str, DeviceSpec] = {
    spec.instance_type: spec
    for spec in [
        DeviceSpec("gpu-H100-8", devices=64, hbm_bytes=80_000_000_000, peak_flops=9.89e14,
                   interconnect_bps=4.5e11, hostlink_bps=6.4e10),
        DeviceSpec("tpu-v5e-256", devices=256, hbm_bytes=16_000_000_000, peak_flops=1.97e14,
                   interconnect_bps=2.0e11, hostlink_bps=3.2e10),
        DeviceSpec("cpu-sim-1", devices=1, hbm_bytes=8_000_000_000, peak_flops=1.0e12,
                   interconnect_bps=1.0e10, hostlink_bps=1.0e10),
        DeviceSpec("test-1gb-8", devices=8, hbm_bytes=1_000_000_000, peak_flops=1.0e14,
                   interconnect_bps=1.0e11, hostlink_bps=1.0e10),
    ]
}

CATALOG_ENV_VAR = "COMPOSER_CATALOG"


def parse_catalog(text: str) -> dict[str, DeviceSpec]:
    """Parses catalog text: one row per line,
    "instance_type devices hbm_bytes flops interconnect_Bps hostlink_Bps";
    blank lines and #-comments are skipped.
    """
    out: dict[str, DeviceSpec] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ComposerError(f"catalog line {lineno}: expected 6 columns, got {len(parts)}")
        name = parts[0]
        try:
            devices = int(parts[1])
            hbm = int(float(parts[2]))
            flops = float(parts[3])
            inter = float(parts[4])
            host = float(parts[5])
        except ValueError as e:
            raise ComposerError(f"catalog line {lineno}: {e}") from None
        if min(devices, hbm) <= 0 or min(flops, inter, host) <= 0:
            raise ComposerError(f"catalog line {lineno}: all quantities must be positive")
        out[name] = DeviceSpec(name, devices, hbm, flops, inter, host)
    return out


def load_catalog(path: str | None = None) -> dict[str, DeviceSpec]:
    """Loads the device catalog from a path, $COMPOSER_CATALOG, or built-ins."""
    path = path or os.environ.get(CATALOG_ENV_VAR)
    if not path:
        return dict(DEFAULT_CATALOG)
    with open(path, "r", encoding="utf-8") as f:
        return parse_catalog(f.read())


def catalog_entry(catalog: Mapping[str, DeviceSpec], instance_type: str) -> DeviceSpec:
    try:
        return catalog[instance_type]
    except KeyError:
        raise UnknownInstanceError(f"instance type {instance_type!r} not in catalog") from None


# --- Config modifiers and mesh rules ----------------------------------------


class RematDecision:
    SAVE = "save"
    RECOMPUTE = "recompute"
    OFFLOAD = "offload"
    ALL = (SAVE, RECOMPUTE, OFFLOAD)


# Named remat policies: mapping of tag pattern -> decision. An exact tag key
# beats glob keys; among globs the longest pattern wins; unmatched tags are
# saved.
POLICY_ALIASES: dict[str, dict[str, str]] = {
    "save_all": {},
    "recompute_all": {"*": RematDecision.RECOMPUTE},
    "offload_dots": {"*": RematDecision.OFFLOAD},
    "save_qkvo_flash": {
        "q_proj": RematDecision.SAVE,
        "k_proj": RematDecision.SAVE,
        "v_proj": RematDecision.SAVE,
        "o_proj": RematDecision.SAVE,
        "context": RematDecision.SAVE,
        "*": RematDecision.RECOMPUTE,
    },
}


def resolve_policy(policy: str | Mapping[str, str]) -> dict[str, str]:
    if isinstance(policy, str):
        try:
            return dict(POLICY_ALIASES[policy])
        except KeyError:
            raise TypeMismatchError(f"unknown remat policy alias {policy!r}") from None
    out = {}
    for tag, decision in policy.items():
        if decision not in RematDecision.ALL:
            raise TypeMismatchError(f"unknown remat decision {decision!r} for tag {tag!r}")
        out[tag] = decision
    return out


def decide_tag(tag: str, policy: Mapping[str, str]) -> str:
    """Applies a policy map to one tag name."""
    if tag in policy:
        return policy[tag]
    globs = [p for p in policy if ("*" in p or "?" in p) and fnmatch.fnmatchcase(tag, p)]
    if globs:
        globs.sort(key=lambda p: (-len(p), p))
        return policy[globs[0]]
    return RematDecision.SAVE


class ConfigModifier:
    """A pure config rewrite selected by mesh rules."""

    def apply(self, cfg: ConfigNode, on_no_match: str = "error") -> ConfigNode:
        raise NotImplementedError

    def to_plain(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class MeshShapeModifier(ConfigModifier):
    """Sets the root mesh axes; sizes may include one -1 wildcard."""

    axes: tuple[tuple[str, int], ...]

    @staticmethod
    def of(**axes: int) -> "MeshShapeModifier":
        return MeshShapeModifier(tuple(axes.items()))

    def apply(self, cfg: ConfigNode, on_no_match: str = "error") -> ConfigNode:
        names = tuple(n for n, _ in self.axes)
        sizes = tuple(int(s) for _, s in self.axes)
        return cfg.set(mesh_axis_names=names).set(mesh_shape=sizes)

    def to_plain(self) -> dict:
        return {"kind": "mesh_shape", "axes": {n: s for n, s in self.axes}}


def _canonical_path(path: str) -> str:
    """Drops [i] collection indices so one pattern covers repeated layers."""
    return re.sub(r"\[\d+\]", "", path)


def _warn_or_raise(message: str, on_no_match: str) -> None:
    if on_no_match == "warn":
        import warnings

        warnings.warn(message, stacklevel=3)
    else:
        raise NoMatchError(message)


@dataclass(frozen=True)
class RematSpecModifier(ConfigModifier):
    """Attaches per-tag remat decisions at glob-matched config paths."""

    policies: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]

    @staticmethod
    def of(policies: Mapping[str, str | Mapping[str, str]]) -> "RematSpecModifier":
        rows = []
        for pattern, policy in policies.items():
            resolved = resolve_policy(policy)
            rows.append((pattern, tuple(sorted(resolved.items()))))
        return RematSpecModifier(tuple(rows))

    def apply(self, cfg: ConfigNode, on_no_match: str = "error") -> ConfigNode:
        capable: list[tuple[str, ConfigNode]] = []

        def enter(path, node):
            if "remat_policy" in node.schema().fields:
                capable.append((path, node))

        visit(cfg, enter_fn=enter)
        for pattern, policy in self.policies:
            policy_map = dict(policy)
            matched = [
                p for p, _ in capable
                if fnmatch.fnmatchcase(_canonical_path(p), pattern) or fnmatch.fnmatchcase(p, pattern)
            ]
            if not matched:
                _warn_or_raise(f"remat pattern {pattern!r} matched no module path", on_no_match)
                continue
            for p in matched:
                cfg = cfg.set(f"{p}.remat_policy" if p else "remat_policy", policy_map)
        return cfg

    def to_plain(self) -> dict:
        return {
            "kind": "remat_spec",
            "policies": {pattern: {t: d for t, d in policy} for pattern, policy in self.policies},
        }


@dataclass(frozen=True)
class DtypePolicyModifier(ConfigModifier):
    """Sets the compute dtype tag on every matmul-bearing layer config.

    Opaque parameters ride along on the root config for the runtime to
    interpret (for example fp8 amax history length); AOT only reads the tag.
    """

    tag: str
    params: tuple[tuple[str, Any], ...] = ()

    @staticmethod
    def of(tag: str, **params: Any) -> "DtypePolicyModifier":
        return DtypePolicyModifier(tag, tuple(sorted(params.items())))

    def apply(self, cfg: ConfigNode, on_no_match: str = "error") -> ConfigNode:
        if self.tag not in DTYPE_BYTES:
            raise TypeMismatchError(f"unknown dtype tag {self.tag!r}")
        targets: list[str] = []

        def enter(path, node):
            if "dtype" in node.schema().fields:
                targets.append(path)

        visit(cfg, enter_fn=enter)
        if not targets:
            _warn_or_raise("dtype policy matched no matmul-bearing layer", on_no_match)
        for p in targets:
            cfg = cfg.set(f"{p}.dtype" if p else "dtype", self.tag)
        if "dtype_params" in cfg.schema().fields:
            cfg = cfg.set(dtype_params=dict(self.params))
        return cfg

    def to_plain(self) -> dict:
        return {"kind": "dtype", "tag": self.tag, "params": {k: v for k, v in self.params}}


@dataclass(frozen=True)
class MeshRule:
    """Pairs an instance-type glob with the modifiers to apply for it."""

    pattern: str
    modifiers: tuple[ConfigModifier, ...]


def select_mesh_rule(rules: Iterable[MeshRule], instance_type: str) -> tuple[ConfigModifier, ...]:
    """First-match-wins modifier selection; empty when nothing matches."""
    for rule in rules:
        if fnmatch.fnmatchcase(instance_type, rule.pattern):
            return tuple(rule.modifiers)
    return ()


def apply_modifiers(cfg: ConfigNode, modifiers: Iterable[ConfigModifier], on_no_match: str = "error") -> ConfigNode:
    """Applies modifiers left to right; later modifiers win on conflict."""
    for m in modifiers:
        cfg = m.apply(cfg, on_no_match=on_no_match)
    return cfg


def modifier_from_plain(data: Mapping[str, Any]) -> ConfigModifier:
    kind = data.get("kind")
    if kind == "mesh_shape":
        axes = data.get("axes")
        if not isinstance(axes, Mapping) or not axes:
            raise TypeMismatchError("mesh_shape modifier needs a non-empty 'axes' mapping")
        return MeshShapeModifier(tuple((str(k), int(v)) for k, v in axes.items()))
    if kind == "remat_spec":
        policies = data.get("policies")
        if not isinstance(policies, Mapping) or not policies:
            raise TypeMismatchError("remat_spec modifier needs a non-empty 'policies' mapping")
        return RematSpecModifier.of(policies)
    if kind == "dtype":
        tag = data.get("tag")
        if not isinstance(tag, str):
            raise TypeMismatchError("dtype modifier needs a 'tag'")
        params = data.get("params", {})
        if not isinstance(params, Mapping):
            raise TypeMismatchError("dtype modifier 'params' must be a mapping")
        return DtypePolicyModifier(tag, tuple(sorted(params.items())))
    raise TypeMismatchError(f"unknown modifier kind {kind!r}")


def rules_from_plain(data: Iterable[Any]) -> tuple[MeshRule, ...]:
    rules = []
    for row in data:
        if isinstance(row, Mapping):
            pattern = row.get("match")
            mods = row.get("modifiers", ())
        else:
            pattern, mods = row
        if not isinstance(pattern, str):
            raise TypeMismatchError("mesh rule needs a 'match' glob")
        rules.append(MeshRule(pattern, tuple(modifier_from_plain(m) for m in mods)))
    return tuple(rules)


def rules_to_plain(rules: Iterable[MeshRule]) -> tuple[dict, ...]:
    return tuple(
        {"match": r.pattern, "modifiers": tuple(m.to_plain() for m in r.modifiers)} for r in rules
    )


def load_rules_file(path: str) -> tuple[MeshRule, ...]:
    """Reads mesh rules from a JSON file: a list of {match, modifiers} rows."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise TypeMismatchError("rules file must contain a JSON list")
    return rules_from_plain(data)


# --- Ahead-of-time analysis ---------------------------------------------------


@dataclass(frozen=True)
class ParamRecord:
    path: str
    name: str
    shape: tuple[int, ...]
    spec: tuple
    shard: tuple[int, ...]
    dtype: str
    shard_bytes: int
    full_bytes: int
    fsdp_sharded: bool


@dataclass
class AotReport:
    """Per-device footprint and step-time estimate for one composed config.

    Batch is the global batch; compute and activation footprints assume the
    workload parallelizes perfectly across all devices, while parameter and
    optimizer bytes follow the declared partition specs exactly. The comm
    model is deliberately crude: each fsdp-sharded parameter is gathered and
    reduced once per step (2x its full bytes) at interconnect speed.
    """

    experiment: str
    instance_type: str
    mesh_axis_names: tuple[str, ...]
    mesh_shape: tuple[int, ...]
    devices: int
    batch: int
    seq_len: int
    param_bytes: int
    optimizer_bytes: int
    saved_activation_bytes: int
    offloaded_host_bytes: int
    model_flops: int
    recompute_flops: int
    total_flops: int
    comm_bytes: int
    compute_time_s: float
    comm_time_s: float
    offload_time_s: float
    step_time_s: float
    mfu: float
    hbm_bytes: int
    per_device_bytes: int
    oom: bool
    params: list[ParamRecord] = field(default_factory=list)

    def to_json(self) -> str:
        data = {k: v for k, v in self.__dict__.items() if k != "params"}
        data["mesh_axis_names"] = list(self.mesh_axis_names)
        data["mesh_shape"] = list(self.mesh_shape)
        data["params"] = [
            {
                "path": p.path,
                "name": p.name,
                "shape": list(p.shape),
                "spec": [a if a is not None else None for a in p.spec],
                "shard": list(p.shard),
                "dtype": p.dtype,
                "shard_bytes": p.shard_bytes,
                "full_bytes": p.full_bytes,
            }
            for p in self.params
        ]
        return json.dumps(data, indent=2, sort_keys=True)

    def format_text(self) -> str:
        mesh = ", ".join(f"{n}={s}" for n, s in zip(self.mesh_axis_names, self.mesh_shape))
        lines = [
            f"experiment:        {self.experiment}",
            f"instance type:     {self.instance_type} ({self.devices} devices)",
            f"mesh:              ({mesh})",
            f"workload:          batch={self.batch} seq_len={self.seq_len}",
            f"param bytes:       {self.param_bytes:,} per device",
            f"optimizer bytes:   {self.optimizer_bytes:,} per device",
            f"saved activations: {self.saved_activation_bytes:,} per device",
            f"offloaded to host: {self.offloaded_host_bytes:,} per device",
            f"per-device bytes:  {self.per_device_bytes:,} of {self.hbm_bytes:,} HBM",
            f"step flops:        {self.total_flops:,} per device"
            f" (recompute {self.recompute_flops:,})",
            f"comm bytes:        {self.comm_bytes:,} per device",
            f"step time:         {self.step_time_s:.6f} s"
            f" (compute {self.compute_time_s:.6f}, comm {self.comm_time_s:.6f},"
            f" offload {self.offload_time_s:.6f})",
            f"mfu:               {self.mfu:.4f}",
            f"oom:               {'yes' if self.oom else 'no'}",
        ]
        return "\n".join(lines)


def _governing_policy(inherited: dict[str, str] | None, cfg: ConfigNode) -> dict[str, str] | None:
    if "remat_policy" in cfg.schema().fields:
        own = cfg.get("remat_policy")
        if own:
            return dict(own)
    return inherited


def _node_dtype(cfg: ConfigNode) -> str:
    if "dtype" in cfg.schema().fields:
        tag = cfg.get("dtype")
        if tag not in DTYPE_BYTES:
            raise TypeMismatchError(f"unknown dtype tag {tag!r}")
        return tag
    return "f32"


def aot_analyze(
    cfg: ConfigNode,
    instance_type: str,
    batch: int,
    seq_len: int,
    catalog: Mapping[str, DeviceSpec] | None = None,
    experiment: str = "",
    backward_multiplier: int = 2,
) -> AotReport:
    """Prices a composed root config against one device catalog entry.

    Never materializes tensor data: instantiation builds only metadata-backed
    modules, and all sizes come from declared shapes and partition specs.
    An out-of-memory outcome is reported via the oom flag, not an error.
    """
    device = catalog_entry(catalog if catalog is not None else load_catalog(), instance_type)
    tree = instantiate(cfg)
    root_cfg = tree.config
    if root_cfg.has_field("mesh_shape") and root_cfg.has_field("mesh_axis_names"):
        mesh = resolve_mesh(root_cfg.get("mesh_shape"), root_cfg.get("mesh_axis_names"), device.devices)
    else:
        mesh = resolve_mesh((-1,), ("data",), device.devices)
    devices = device.devices

    opt_multiplier = root_cfg.get("optimizer_state_multiplier") if root_cfg.has_field("optimizer_state_multiplier") else 2
    offload_opt = bool(root_cfg.get("offload_optimizer_state")) if root_cfg.has_field("offload_optimizer_state") else False

    param_bytes = 0
    comm_bytes = 0
    records: list[ParamRecord] = []
    saved_bytes = 0.0
    offload_bytes = 0.0
    fwd_flops = 0
    recompute_flops = 0

    def subtree_tag_names(module: Module) -> set[str]:
        names: set[str] = set()
        for _, m in module.walk():
            names.update(t.name for t in m.behavior.remat_tags(m.config, batch, seq_len))
        return names

    def walk(module: Module, path: str, policy: dict[str, str] | None) -> None:
        nonlocal param_bytes, comm_bytes, saved_bytes, offload_bytes, fwd_flops, recompute_flops
        mcfg = module.config
        own_policy = _governing_policy(None, mcfg)
        if own_policy is not None:
            # Exact tag keys must name a checkpoint somewhere under this node.
            available = subtree_tag_names(module)
            for key in own_policy:
                if "*" not in key and "?" not in key and key not in available:
                    raise NoMatchError(f"remat policy tag {key!r} not defined under {path or '<root>'!r}")
            policy = own_policy
        dtype = _node_dtype(mcfg)
        dsize = DTYPE_BYTES[dtype]
        shapes = module.behavior.param_shapes(mcfg)
        specs = module.behavior.param_specs(mcfg)
        for name, shape in shapes.items():
            spec = tuple(specs.get(name, (None,) * len(shape)))
            shard = shard_shape(shape, spec, mesh)
            shard_b = math.prod(shard) * dsize
            full_b = math.prod(shape) * dsize
            fsdp = "fsdp" in spec
            param_bytes += shard_b
            if fsdp:
                comm_bytes += 2 * full_b
            records.append(ParamRecord(path, name, tuple(shape), spec, shard, dtype, shard_b, full_b, fsdp))
        fwd_flops += module.behavior.own_flops(mcfg, batch, seq_len)
        tags = module.behavior.remat_tags(mcfg, batch, seq_len)
        for tag in tags:
            decision = decide_tag(tag.name, policy) if policy else RematDecision.SAVE
            if decision == RematDecision.SAVE:
                saved_bytes += tag.saved_bytes
            elif decision == RematDecision.RECOMPUTE:
                recompute_flops += tag.recompute_flops
            else:
                offload_bytes += tag.saved_bytes
        for name, child in module.children.items():
            walk(child, f"{path}.{name}" if path else name, policy)

    walk(tree, "", None)

    model_flops_total = (1 + backward_multiplier) * fwd_flops
    model_flops = model_flops_total // devices
    recompute = recompute_flops // devices
    total_flops = (model_flops_total + recompute_flops) // devices
    saved_act = int(saved_bytes // devices)
    offload_act = int(offload_bytes // devices)

    optimizer_bytes = opt_multiplier * param_bytes
    host_bytes = offload_act + (optimizer_bytes if offload_opt else 0)
    device_bytes = param_bytes + (0 if offload_opt else optimizer_bytes) + saved_act

    compute_time = total_flops / device.peak_flops
    comm_time = comm_bytes / device.interconnect_bps
    offload_time = host_bytes / device.hostlink_bps
    step_time = max(compute_time, comm_time) + offload_time
    mfu = (model_flops / (step_time * device.peak_flops)) if step_time > 0 else 0.0

    return AotReport(
        experiment=experiment,
        instance_type=instance_type,
        mesh_axis_names=mesh.axis_names,
        mesh_shape=mesh.shape,
        devices=devices,
        batch=batch,
        seq_len=seq_len,
        param_bytes=param_bytes,
        optimizer_bytes=optimizer_bytes,
        saved_activation_bytes=saved_act,
        offloaded_host_bytes=host_bytes,
        model_flops=model_flops,
        recompute_flops=recompute,
        total_flops=total_flops,
        comm_bytes=comm_bytes,
        compute_time_s=compute_time,
        comm_time_s=comm_time,
        offload_time_s=offload_time,
        step_time_s=step_time,
        mfu=mfu,
        hbm_bytes=device.hbm_bytes,
        per_device_bytes=device_bytes,
        oom=device_bytes > device.hbm_bytes,
        params=records,
    )
