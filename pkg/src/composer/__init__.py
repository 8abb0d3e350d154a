"""composer: config-driven composition, planning, and audit of training systems.

Everything starts from a typed config tree: experiments build one, modifiers
rewrite it per hardware, the golden serializer freezes it to reviewable text,
and the module runtime instantiates and runs it deterministically. The AOT
planner prices a config (memory, flops, step time) without allocating model
state, and the runtime simulator covers checkpoint, watchdog, and recovery
planning.
"""

from __future__ import annotations

from .config import (
    REQUIRED,
    VISIT_STOP,
    ComponentSchema,
    ConfigNode,
    FieldSpec,
    FunctionSpec,
    Registry,
    ReplaceReport,
    ValueKind,
    config_from_factory,
    default_config,
    golden_diff,
    parse_golden,
    register_component,
    register_factory,
    replace_config,
    serialize_golden,
    visit,
)
from .errors import (
    BrokenConfigError,
    ComposerError,
    ConfigError,
    IndivisibleError,
    MeshError,
    MutatedCodeError,
    NoMatchError,
    ResolutionError,
    ShapeError,
    ShortTraceError,
    TypeMismatchError,
    UnknownExperimentError,
    UnknownInstanceError,
    UnknownKindError,
    UnsetFieldError,
)
from .mesh import (
    AotReport,
    DeviceSpec,
    DtypePolicyModifier,
    Mesh,
    MeshRule,
    MeshShapeModifier,
    RematDecision,
    RematSpecModifier,
    aot_analyze,
    apply_modifiers,
    infer_bias_spec,
    load_catalog,
    resolve_mesh,
    select_mesh_rule,
    shard_shape,
)
from .module import (
    Behavior,
    Module,
    OutputCollection,
    RematTag,
    add_state_update,
    add_summary,
    get_shared_state,
    init_state,
    instantiate,
    invoke,
    invoke_child,
    module_registry_digest,
    param,
    register_behavior,
    register_spec_function,
)
from .prng import RngKey, child_key, generator, root_key
from .runtime_sim import (
    GcPolicy,
    RecoveryReport,
    RecoveryScenario,
    RestoreMode,
    SaveReport,
    SdcReport,
    Shard,
    ShardManifest,
    StepRecord,
    Verdict,
    WatchdogConfig,
    WatchdogEvent,
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

from . import layers as layers  # noqa: F401  (registers the reference components)
from .experiments import (
    EXPERIMENTS,
    build_experiment,
    compose,
    compose_config,
    experiment_names,
    load_experiment_dir,
    register_experiment,
    synthetic_batch,
)
from .audit import MUTATORS, AuditReport, run_audit

__version__ = "0.1.0"

__all__ = [
    "EXPERIMENTS",
    "MUTATORS",
    "REQUIRED",
    "VISIT_STOP",
    "AotReport",
    "AuditReport",
    "Behavior",
    "BrokenConfigError",
    "ComponentSchema",
    "ComposerError",
    "ConfigError",
    "ConfigNode",
    "DeviceSpec",
    "DtypePolicyModifier",
    "FieldSpec",
    "FunctionSpec",
    "GcPolicy",
    "IndivisibleError",
    "Mesh",
    "MeshError",
    "MeshRule",
    "MeshShapeModifier",
    "Module",
    "MutatedCodeError",
    "NoMatchError",
    "OutputCollection",
    "RecoveryReport",
    "RecoveryScenario",
    "Registry",
    "RematDecision",
    "RematSpecModifier",
    "RematTag",
    "ReplaceReport",
    "ResolutionError",
    "RestoreMode",
    "RngKey",
    "SaveReport",
    "SdcReport",
    "ShapeError",
    "Shard",
    "ShardManifest",
    "ShortTraceError",
    "StepRecord",
    "TypeMismatchError",
    "UnknownExperimentError",
    "UnknownInstanceError",
    "UnknownKindError",
    "UnsetFieldError",
    "ValueKind",
    "Verdict",
    "WatchdogConfig",
    "WatchdogEvent",
    "add_state_update",
    "add_summary",
    "aot_analyze",
    "apply_modifiers",
    "build_experiment",
    "child_key",
    "compose",
    "compose_config",
    "config_from_factory",
    "default_config",
    "experiment_names",
    "gc_retained",
    "generator",
    "get_shared_state",
    "golden_diff",
    "infer_bias_spec",
    "init_state",
    "instantiate",
    "invoke",
    "invoke_child",
    "layers",
    "load_catalog",
    "load_experiment_dir",
    "module_registry_digest",
    "param",
    "parse_golden",
    "parse_scenario",
    "parse_trace",
    "plan_checkpoint",
    "recovery_scenario_from_mapping",
    "register_behavior",
    "register_component",
    "register_experiment",
    "register_factory",
    "register_spec_function",
    "replace_config",
    "resolve_mesh",
    "root_key",
    "run_audit",
    "sdc_check",
    "select_mesh_rule",
    "serialize_golden",
    "shard_shape",
    "simulate_recovery",
    "simulate_save",
    "synthetic_batch",
    "visit",
    "watchdog_scan",
]
