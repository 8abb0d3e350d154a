"""Module runtime: instantiation, state init, and pure invocation.

instantiate() turns a config tree into a ModuleTree of behavior-backed
modules. Parents finalize child fields (dimension propagation) before the
child is built, then deferred fn: scalars are resolved, so a user sets sizes
once at the root and the tree fills itself in.

Invocation is pure: module behaviors read parameters from an ambient
per-thread InvocationContext stack and report summaries and state updates
through an OutputCollection instead of mutating anything. Contexts reference
modules; modules never hold context references, so a ModuleTree is plain
data between invocations.
"""

from __future__ import annotations

import hashlib
import inspect
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .config import ConfigNode, _normalize, join_path, parse_path
from .errors import (
    BadPathError,
    ComposerError,
    ConfigError,
    DuplicateKindError,
    NoActiveContextError,
    ResolutionError,
    UnknownKindError,
    UnsetFieldError,
)
from .config import REQUIRED, FunctionSpec
from .prng import RngKey, child_key


@dataclass(frozen=True)
class RematTag:
    """A named activation checkpoint: bytes if saved, flops if recomputed."""

    name: str
    saved_bytes: int
    recompute_flops: int


class Behavior:
    """Runtime definition of one component kind.

    Subclasses override the hooks they need; metadata hooks (shapes, specs,
    tags, flops) describe the layer without materializing tensors so the
    ahead-of-time planner can consume them directly.
    """

    def propagate(self, cfg: ConfigNode) -> ConfigNode:
        """Finalizes child fields before children are instantiated."""
        return cfg

    def validate(self, cfg: ConfigNode) -> None:
        """Raises if the resolved config violates layer constraints."""

    def param_shapes(self, cfg: ConfigNode) -> dict[str, tuple[int, ...]]:
        return {}

    def param_specs(self, cfg: ConfigNode) -> dict[str, tuple]:
        return {}

    def init_params(self, cfg: ConfigNode, key: RngKey) -> dict[str, np.ndarray]:
        return {}

    def remat_tags(self, cfg: ConfigNode, batch: int, seq_len: int) -> list[RematTag]:
        return []

    def own_flops(self, cfg: ConfigNode, batch: int, seq_len: int) -> int:
        """Matmul flops of this module alone; tree walkers sum children."""
        return 0

    def forward(self, module: "Module", *args, **kwargs):
        raise ComposerError(f"module kind {module.kind!r} is not invokable")


class _FactoryBehavior(Behavior):
    """Placeholder behavior for external-factory nodes (fn: kinds)."""


_FACTORY_BEHAVIOR = _FactoryBehavior()

BEHAVIORS: dict[str, Behavior] = {}

SPEC_FUNCTIONS: dict[str, Callable[..., Any]] = {}


def register_behavior(kind: str, behavior: Behavior, registry: dict[str, Behavior] | None = None) -> None:
    reg = BEHAVIORS if registry is None else registry
    if kind in reg:
        raise DuplicateKindError(f"behavior for kind {kind!r} already registered")
    reg[kind] = behavior


def register_spec_function(name: str, fn: Callable[..., Any]) -> None:
    """Registers a resolver for FunctionSpec values with this name."""
    if name in SPEC_FUNCTIONS:
        raise DuplicateKindError(f"spec function {name!r} already registered")
    SPEC_FUNCTIONS[name] = fn


def module_registry_digest(behaviors: Mapping[str, Behavior] | None = None) -> str:
    """Content hash of every registered behavior definition.

    Config-only feature audits assert this digest is identical before and
    after mutation: integrating a variant must not touch module code.
    """
    reg = BEHAVIORS if behaviors is None else behaviors
    h = hashlib.sha256()
    for kind in sorted(reg):
        h.update(kind.encode("utf-8"))
        h.update(b"\x00")
        beh = reg[kind]
        try:
            src = inspect.getsource(type(beh))
        except (OSError, TypeError):
            src = repr(type(beh))
        h.update(src.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


@dataclass
class Module:
    """One node of an instantiated module tree."""

    kind: str
    name: str
    config: ConfigNode
    children: dict[str, "Module"]
    behavior: Behavior
    impl: Any = None  # external factory product, if any

    def child(self, path: str) -> "Module":
        node = self
        for seg in _state_segments(path):
            if seg not in node.children:
                raise BadPathError(f"module path {path!r} does not resolve at {seg!r}")
            node = node.children[seg]
        return node

    def walk(self, prefix: str = ""):
        """Yields (path, module) pairs in depth-first schema order."""
        yield prefix, self
        for name, child in self.children.items():
            yield from child.walk(join_path(prefix, name))


ModuleTree = Module


def _state_segments(path: str) -> list[str]:
    """Splits a dotted path into state keys, keeping [i] with its segment."""
    segs: list[str] = []
    for step in parse_path(path):
        tag, key = step
        if tag == "f":
            segs.append(key)
        elif not segs:
            raise BadPathError(f"path {path!r} cannot start with a subscript")
        elif tag == "i":
            segs[-1] += f"[{key}]"
        else:
            segs[-1] += f"[{key}]"
    return segs


def _resolve_functions(cfg: ConfigNode, path: str) -> ConfigNode:
    """Resolves fn: field values against the node's finalized fields."""
    view = dict(cfg.items())
    schema = cfg.schema()
    for name, value in cfg.items():
        if not isinstance(value, FunctionSpec):
            continue
        where = join_path(path, name)
        fn = SPEC_FUNCTIONS.get(value.name)
        if fn is None:
            raise ResolutionError(where, f"unknown function {value.name!r}")
        try:
            resolved = fn(view, **value.kwargs())
        except ComposerError:
            raise
        except Exception as e:  # unset inputs, bad arithmetic
            raise ResolutionError(where, str(e)) from e
        resolved = _normalize(schema.fields[name].kind, resolved, cfg.registry(), where)
        view[name] = resolved
        cfg = cfg.set(**{name: resolved})
    return cfg


def _check_unset(cfg: ConfigNode, path: str) -> None:
    for name, value in cfg.items():
        if value is REQUIRED:
            raise UnsetFieldError(join_path(path, name))


def instantiate(cfg: ConfigNode, name: str = "", _path: str = "") -> Module:
    """Builds the ModuleTree for a config tree.

    Order per node: look up the behavior, let it finalize child fields,
    resolve deferred fn: scalars, reject leftover REQUIRED fields, validate,
    then recurse into sub-configs. The resulting tree carries a finalized
    config (children embedded) at every node.
    """
    reg = cfg.registry()
    adapter = reg.adapters.get(cfg.kind)
    if adapter is None and cfg.kind not in BEHAVIORS:
        raise UnknownKindError(f"no behavior registered for kind {cfg.kind!r}")
    behavior = BEHAVIORS.get(cfg.kind, _FACTORY_BEHAVIOR)

    cfg = behavior.propagate(cfg)
    cfg = _resolve_functions(cfg, _path)
    _check_unset(cfg, _path)
    behavior.validate(cfg)

    impl = None
    if adapter is not None:
        impl = adapter(**dict(cfg.items()))

    children: dict[str, Module] = {}
    updates: dict[str, Any] = {}
    for fname, value in cfg.items():
        if isinstance(value, ConfigNode):
            child = instantiate(value, fname, join_path(_path, fname))
            children[fname] = child
            updates[fname] = child.config
        elif isinstance(value, tuple) and any(isinstance(v, ConfigNode) for v in value):
            elems = []
            for i, elem in enumerate(value):
                cname = f"{fname}[{i}]"
                child = instantiate(elem, cname, join_path(_path, cname))
                children[cname] = child
                elems.append(child.config)
            updates[fname] = tuple(elems)
    if updates:
        cfg = cfg.set(**updates)

    overlap = set(behavior.param_shapes(cfg)) & set(children)
    if overlap:
        raise ConfigError(f"{cfg.kind}: param names collide with child names: {sorted(overlap)}")

    return Module(kind=cfg.kind, name=name, config=cfg, children=children, behavior=behavior, impl=impl)


class _AllocationCounter:
    """Counts every model-state array the runtime materializes."""

    def __init__(self):
        self.count = 0

    def bump(self, n: int = 1) -> None:
        self.count += n


PARAM_ALLOCATIONS = _AllocationCounter()


def param_key(key: RngKey, name: str) -> RngKey:
    """Derives the init key for one named parameter of a module."""
    return child_key(key, "param:" + name, 0)


StateTree = dict


def init_state(module: Module, key: RngKey) -> StateTree:
    """Initializes the parameter tree for a module, keyed deterministically.

    Child subtrees derive their keys as child_key(parent, name, 0), so the
    state of any subtree depends only on the root key and its path.
    """
    state: StateTree = {}
    params = module.behavior.init_params(module.config, key)
    declared = module.behavior.param_shapes(module.config)
    for name, arr in params.items():
        if arr.dtype != np.float64:
            raise ComposerError(f"param {name!r} of {module.kind} must be float64")
        if name in declared and tuple(arr.shape) != tuple(declared[name]):
            raise ComposerError(
                f"param {name!r} of {module.kind}: init shape {arr.shape} != declared {declared[name]}"
            )
        PARAM_ALLOCATIONS.bump()
        state[name] = arr
    for name, child in module.children.items():
        state[name] = init_state(child, child_key(key, name, 0))
    return state


@dataclass
class OutputCollection:
    """Side outputs of one invocation: summaries, outputs, state updates."""

    summaries: dict[str, list[tuple[str, Any]]] = field(default_factory=dict)
    module_outputs: dict[str, Any] = field(default_factory=dict)
    state_updates: dict[str, Any] = field(default_factory=dict)

    def summary_keys(self) -> set[str]:
        return {
            f"{path}/{key}" if path else key
            for path, entries in self.summaries.items()
            for key, _ in entries
        }

    def flat_summaries(self) -> dict[str, list[Any]]:
        out: dict[str, list[Any]] = {}
        for path in sorted(self.summaries):
            for key, value in self.summaries[path]:
                out.setdefault(f"{path}/{key}" if path else key, []).append(value)
        return out


@dataclass
class InvocationContext:
    """Ambient state for the module currently executing."""

    module: Module
    path: str
    state: Mapping[str, Any]
    key: RngKey
    collection: OutputCollection
    parent: "InvocationContext | None"
    child_counts: dict[str, int] = field(default_factory=dict)


class _ContextStack(threading.local):
    def __init__(self):
        self.stack: list[InvocationContext] = []


_CTX = _ContextStack()


def current_context() -> InvocationContext:
    if not _CTX.stack:
        raise NoActiveContextError("no module invocation is active on this thread")
    return _CTX.stack[-1]


def context_stack_paths() -> tuple[str, ...]:
    """Paths of the live context stack on this thread, outermost first."""
    return tuple(ctx.path for ctx in _CTX.stack)


def invoke(module: Module, state: StateTree, key: RngKey, *args, **kwargs) -> tuple[Any, OutputCollection]:
    """Runs a module's forward computation purely.

    Equal (tree, state, key, inputs) produce bit-identical outputs and
    collections; nothing is mutated.
    """
    collection = OutputCollection()
    ctx = InvocationContext(module=module, path="", state=state, key=key, collection=collection, parent=None)
    _CTX.stack.append(ctx)
    try:
        out = module.behavior.forward(module, *args, **kwargs)
    finally:
        popped = _CTX.stack.pop()
        assert popped is ctx, "invocation context stack corrupted"
    return out, collection


def invoke_child(name: str, *args, **kwargs) -> Any:
    """Invokes a named child of the currently executing module.

    The child runs under a derived key (parent key, child name, invocation
    index) and its collection is merged into the parent's on completion.
    """
    ctx = current_context()
    child = ctx.module.children.get(name)
    if child is None:
        raise BadPathError(f"{ctx.module.kind} has no child {name!r}")
    index = ctx.child_counts.get(name, 0)
    ctx.child_counts[name] = index + 1
    child_path = join_path(ctx.path, name)
    child_state = ctx.state.get(name, {})
    cctx = InvocationContext(
        module=child,
        path=child_path,
        state=child_state,
        key=child_key(ctx.key, name, index),
        collection=OutputCollection(),
        parent=ctx,
    )
    _CTX.stack.append(cctx)
    try:
        out = child.behavior.forward(child, *args, **kwargs)
    finally:
        popped = _CTX.stack.pop()
        assert popped is cctx, "invocation context stack corrupted"
    for path, entries in cctx.collection.summaries.items():
        ctx.collection.summaries.setdefault(path, []).extend(entries)
    ctx.collection.module_outputs.update(cctx.collection.module_outputs)
    ctx.collection.state_updates.update(cctx.collection.state_updates)
    ctx.collection.module_outputs[child_path] = out
    return out


def param(name: str) -> np.ndarray:
    """Reads one of the current module's own parameters."""
    ctx = current_context()
    value = ctx.state.get(name)
    if not isinstance(value, np.ndarray):
        raise BadPathError(f"module at {ctx.path!r} has no param {name!r}")
    return value


def add_summary(key: str, value: Any) -> None:
    """Records a summary under the current module's path."""
    ctx = current_context()
    if "/" in key:
        raise BadPathError("summary keys must not contain '/'")
    if isinstance(value, np.ndarray):
        value = np.array(value, copy=True)
    ctx.collection.summaries.setdefault(ctx.path, []).append((key, value))


def add_state_update(name: str, value: np.ndarray) -> None:
    """Stages an update to one of the current module's own state entries.

    Modules may only update state they own; dotted or subscripted names are
    rejected so a parent cannot reach into a child's slice.
    """
    ctx = current_context()
    if any(c in name for c in "./["):
        raise BadPathError(f"state update {name!r} escapes the module's own scope")
    if not isinstance(ctx.state.get(name), np.ndarray):
        raise BadPathError(f"module at {ctx.path!r} owns no state entry {name!r}")
    flat = f"{ctx.path}.{name}" if ctx.path else name
    ctx.collection.state_updates[flat] = np.array(value, copy=True)


def get_shared_state(path: str) -> Any:
    """Resolves a state slice by path from the invocation root.

    This is how weight sharing works: a module reads another module's
    parameters by path without holding a reference to that module.
    """
    ctx = current_context()
    root = ctx
    while root.parent is not None:
        root = root.parent
    value: Any = root.state
    for seg in _state_segments(path):
        if not isinstance(value, dict) or seg not in value:
            raise BadPathError(f"shared state path {path!r} does not resolve at {seg!r}")
        value = value[seg]
    return value
