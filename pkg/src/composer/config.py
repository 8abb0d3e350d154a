"""Hierarchical, strictly-encapsulated component configuration trees.

A component kind registers a ComponentSchema: an ordered set of typed fields
with defaults. default_config materializes a ConfigNode tree. Nodes are
value-semantic: set() returns a new tree and never aliases or mutates the
input, so a composed experiment can be cloned and specialized freely.

Field values are plain data (bool/int/float/str/None, tuples, string-keyed
mappings), nested sub-configs, the REQUIRED placeholder, or a FunctionSpec
that defers a scalar to instantiation time. Sub-configs may also appear as a
declared list field ("sub-config collection"); plain sequences and mappings
must not contain ConfigNodes.

The golden serialization is a canonical, line-oriented, byte-deterministic
text form used for review diffs and committed fixtures.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping

from .errors import (
    BadPathError,
    DuplicateKindError,
    MalformedGoldenError,
    TypeMismatchError,
    UnknownFactoryError,
    UnknownKindError,
)


class ValueKind(Enum):
    """Declared type of a schema field."""

    BOOL = "bool"
    INT = "int"
    FLOAT = "float"
    TEXT = "text"
    SEQ = "seq"
    MAP = "map"
    CONFIG = "config"
    CONFIG_LIST = "config_list"
    ANY = "any"


class _Required:
    """Placeholder for fields that must be set before instantiation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "REQUIRED"


REQUIRED = _Required()

_SCALARS = (bool, int, float, str)


@dataclass(frozen=True)
class FunctionSpec:
    """A deferred scalar: factory function name plus scalar keyword args."""

    name: str
    args: tuple[tuple[str, Any], ...] = ()

    def __init__(self, name: str, args: Mapping[str, Any] | None = None, **kwargs):
        merged = dict(args or {})
        merged.update(kwargs)
        for k, v in merged.items():
            if not isinstance(v, _SCALARS):
                raise TypeMismatchError(
                    f"FunctionSpec arg {k!r} must be a scalar, got {type(v).__name__}"
                )
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "args", tuple(sorted(merged.items())))

    def kwargs(self) -> dict[str, Any]:
        return dict(self.args)


@dataclass(frozen=True)
class FieldSpec:
    """Declared kind and default for one schema field."""

    kind: ValueKind
    default: Any = REQUIRED


@dataclass(frozen=True)
class ComponentSchema:
    """Ordered field schema for one component kind."""

    kind: str
    fields: Mapping[str, FieldSpec]
    factory_id: str = ""


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class Registry:
    """Holds component schemas and external-factory adapters."""

    def __init__(self):
        self.components: dict[str, ComponentSchema] = {}
        self.adapters: dict[str, Callable[..., Any]] = {}

    def schema(self, kind: str) -> ComponentSchema:
        try:
            return self.components[kind]
        except KeyError:
            raise UnknownKindError(f"unknown component kind {kind!r}") from None

    def kinds(self) -> list[str]:
        return sorted(self.components)


DEFAULT_REGISTRY = Registry()


def _registry(registry: Registry | None) -> Registry:
    return DEFAULT_REGISTRY if registry is None else registry


def register_component(schema: ComponentSchema, registry: Registry | None = None) -> None:
    """Registers a component schema; duplicate kinds are rejected."""
    reg = _registry(registry)
    if schema.kind in reg.components:
        raise DuplicateKindError(f"component kind {schema.kind!r} already registered")
    for name, fs in schema.fields.items():
        if name == "klass" or not _NAME_RE.match(name):
            raise TypeMismatchError(f"invalid field name {name!r} in schema {schema.kind!r}")
        if fs.kind in (ValueKind.CONFIG, ValueKind.CONFIG_LIST):
            continue  # sub-config defaults are materialized lazily by kind name
        if fs.default is not REQUIRED:
            _normalize(fs.kind, fs.default, reg, f"{schema.kind}.{name}")
    reg.components[schema.kind] = schema


def register_factory(
    factory_id: str,
    params: Mapping[str, FieldSpec],
    adapter: Callable[..., Any],
    registry: Registry | None = None,
) -> None:
    """Registers an external factory as a component kind "fn:<factory_id>".

    The adapter is called at instantiation time with the node's resolved
    field values and its return value is carried on the module tree.
    """
    reg = _registry(registry)
    kind = "fn:" + factory_id
    register_component(ComponentSchema(kind=kind, fields=dict(params), factory_id=factory_id), reg)
    reg.adapters[kind] = adapter


def config_from_factory(factory_id: str, registry: Registry | None = None) -> "ConfigNode":
    """Returns the default config node for a registered external factory."""
    reg = _registry(registry)
    kind = "fn:" + factory_id
    if kind not in reg.components:
        raise UnknownFactoryError(f"unknown external factory {factory_id!r}")
    return default_config(kind, reg)


def _check_plain(value: Any, where: str) -> Any:
    """Validates scalar/sequence/mapping data and returns a frozen copy."""
    if value is None or isinstance(value, _SCALARS):
        return value
    if isinstance(value, (_Required, FunctionSpec)):
        raise TypeMismatchError(
            f"{where}: REQUIRED and fn: values are field values, not sequence or mapping elements"
        )
    if isinstance(value, ConfigNode):
        raise TypeMismatchError(f"{where}: sub-configs are not allowed inside plain values")
    if isinstance(value, (list, tuple)):
        return tuple(_check_plain(v, f"{where}[{i}]") for i, v in enumerate(value))
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise TypeMismatchError(f"{where}: mapping keys must be text")
            out[k] = _check_plain(v, f"{where}[{k}]")
        return out
    raise TypeMismatchError(f"{where}: unsupported value type {type(value).__name__}")


def _normalize(kind: ValueKind, value: Any, reg: Registry, where: str) -> Any:
    """Validates a value against a declared field kind; returns stored form."""
    if value is REQUIRED or isinstance(value, _Required):
        return REQUIRED
    if isinstance(value, FunctionSpec):
        return value  # deferred scalar; checked against the kind at resolution
    if kind is ValueKind.BOOL:
        if isinstance(value, bool):
            return value
    elif kind is ValueKind.INT:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif kind is ValueKind.FLOAT:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif kind is ValueKind.TEXT:
        if isinstance(value, str):
            return value
    elif kind is ValueKind.SEQ:
        if isinstance(value, (list, tuple)):
            return _check_plain(value, where)
    elif kind is ValueKind.MAP:
        if isinstance(value, dict):
            return _check_plain(value, where)
    elif kind is ValueKind.CONFIG:
        if isinstance(value, ConfigNode):
            return value.clone()
    elif kind is ValueKind.CONFIG_LIST:
        if isinstance(value, (list, tuple)) and all(isinstance(v, ConfigNode) for v in value):
            return tuple(v.clone() for v in value)
    elif kind is ValueKind.ANY:
        return _check_plain(value, where)
    raise TypeMismatchError(
        f"{where}: value of type {type(value).__name__} does not satisfy kind {kind.value!r}"
    )


def _clone_value(value: Any) -> Any:
    if isinstance(value, ConfigNode):
        return value.clone()
    if isinstance(value, tuple):
        return tuple(_clone_value(v) for v in value)
    if isinstance(value, dict):
        return {k: _clone_value(v) for k, v in value.items()}
    return value


# Dotted-path steps: ("f", field_name) | ("i", index) | ("k", mapping_key).
_Step = tuple[str, Any]


def parse_path(path: str) -> list[_Step]:
    """Tokenizes a dotted path with [index] and [key] subscripts."""
    steps: list[_Step] = []
    i, n = 0, len(path)
    if n == 0:
        return steps
    while i < n:
        j = i
        while j < n and path[j] not in ".[":
            j += 1
        name = path[i:j]
        if not name:
            raise BadPathError(f"malformed path {path!r}")
        steps.append(("f", name))
        i = j
        while i < n and path[i] == "[":
            end = path.find("]", i)
            if end < 0:
                raise BadPathError(f"malformed path {path!r}")
            token = path[i + 1 : end]
            if re.fullmatch(r"-?\d+", token):
                steps.append(("i", int(token)))
            else:
                steps.append(("k", token))
            i = end + 1
        if i < n:
            if path[i] != ".":
                raise BadPathError(f"malformed path {path!r}")
            i += 1
            if i == n:
                raise BadPathError(f"malformed path {path!r}")
    return steps


def join_path(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


class ConfigNode:
    """One node of a configuration tree: a kind plus ordered typed fields."""

    __slots__ = ("_kind", "_fields", "_registry_ref")

    def __init__(self, kind: str, fields: dict[str, Any], registry: Registry):
        self._kind = kind
        self._fields = fields
        self._registry_ref = registry

    @property
    def kind(self) -> str:
        return self._kind

    def schema(self) -> ComponentSchema:
        return self._registry_ref.schema(self._kind)

    def registry(self) -> Registry:
        return self._registry_ref

    def items(self) -> Iterable[tuple[str, Any]]:
        return list(self._fields.items())

    def field_names(self) -> list[str]:
        return list(self._fields)

    def has_field(self, name: str) -> bool:
        return name in self._fields

    def clone(self) -> "ConfigNode":
        return ConfigNode(self._kind, {k: _clone_value(v) for k, v in self._fields.items()}, self._registry_ref)

    def get(self, path: str) -> Any:
        """Returns the value at a dotted path; sub-config steps recurse."""
        value: Any = self
        for step in parse_path(path):
            tag, key = step
            if tag == "f":
                if not isinstance(value, ConfigNode) or key not in value._fields:
                    raise BadPathError(f"path {path!r} does not resolve at {key!r}")
                value = value._fields[key]
            elif tag == "i":
                if not isinstance(value, tuple) or not -len(value) <= key < len(value):
                    raise BadPathError(f"path {path!r}: bad sequence index {key}")
                value = value[key]
            else:
                if not isinstance(value, dict) or key not in value:
                    raise BadPathError(f"path {path!r}: bad mapping key {key!r}")
                value = value[key]
        return value

    def set(self, *pair, **fields) -> "ConfigNode":
        """Returns a new tree with updates applied; the input is unmodified.

        Accepts either a ("dotted.path", value) positional pair or keyword
        field updates applied at this node.
        """
        if pair:
            if len(pair) != 2 or fields:
                raise BadPathError("set() takes ('path', value) or keyword fields, not both")
            path, value = pair
            return self._set_steps(parse_path(path), value, path)
        node = self
        for name, value in fields.items():
            node = node._set_steps([("f", name)], value, name)
        return node

    def _set_steps(self, steps: list[_Step], value: Any, path: str) -> "ConfigNode":
        if not steps or steps[0][0] != "f":
            raise BadPathError(f"path {path!r} must start at a field")
        name = steps[0][1]
        schema = self.schema()
        if name not in schema.fields:
            raise BadPathError(f"{self._kind} has no field {name!r}")
        fs = schema.fields[name]
        rest = steps[1:]
        current = self._fields[name]
        if not rest:
            new_value = _normalize(fs.kind, value, self._registry_ref, f"{self._kind}.{name}")
        elif rest[0][0] == "i":
            if fs.kind is not ValueKind.CONFIG_LIST or not isinstance(current, tuple):
                raise BadPathError(f"path {path!r}: {name!r} is not a sub-config collection")
            idx = rest[0][1]
            if not 0 <= idx < len(current):
                raise BadPathError(f"path {path!r}: index {idx} out of range")
            elems = list(current)
            if len(rest) == 1:
                if not isinstance(value, ConfigNode):
                    raise TypeMismatchError(f"path {path!r}: collection elements must be sub-configs")
                elems[idx] = value.clone()
            else:
                elems[idx] = elems[idx]._set_steps(rest[1:], value, path)
            new_value = tuple(elems)
        else:
            if not isinstance(current, ConfigNode):
                raise BadPathError(f"path {path!r} does not resolve through sub-configs at {name!r}")
            new_value = current._set_steps(rest, value, path)
        new_fields = dict(self._fields)
        new_fields[name] = new_value
        return ConfigNode(self._kind, new_fields, self._registry_ref)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfigNode):
            return NotImplemented
        return self._kind == other._kind and self._fields == other._fields

    __hash__ = None  # value-semantic but mutable-shaped; not hashable

    def __repr__(self) -> str:
        return f"<Config {self._kind} fields={list(self._fields)}>"


def default_config(kind: str, registry: Registry | None = None) -> ConfigNode:
    """Materializes the default config tree for a registered kind."""
    reg = _registry(registry)
    schema = reg.schema(kind)
    fields: dict[str, Any] = {}
    for name, fs in schema.fields.items():
        where = f"{kind}.{name}"
        if fs.default is REQUIRED or isinstance(fs.default, _Required):
            fields[name] = REQUIRED
        elif fs.kind is ValueKind.CONFIG:
            if isinstance(fs.default, str):
                fields[name] = default_config(fs.default, reg)
            else:
                raise TypeMismatchError(f"{where}: sub-config defaults are given as kind names")
        elif fs.kind is ValueKind.CONFIG_LIST:
            if not isinstance(fs.default, (list, tuple)) or not all(isinstance(k, str) for k in fs.default):
                raise TypeMismatchError(f"{where}: collection defaults are given as kind names")
            fields[name] = tuple(default_config(k, reg) for k in fs.default)
        else:
            fields[name] = _normalize(fs.kind, fs.default, reg, where)
    return ConfigNode(kind, fields, reg)


class _Stop:
    def __repr__(self) -> str:
        return "VISIT_STOP"


VISIT_STOP = _Stop()

VisitFn = Callable[[str, ConfigNode], Any]


def visit(cfg: ConfigNode, enter_fn: VisitFn | None = None, exit_fn: VisitFn | None = None) -> bool:
    """Depth-first traversal over the sub-config tree.

    enter_fn runs pre-order and exit_fn post-order, with children visited in
    schema field order. Either callback may return VISIT_STOP to abort the
    whole traversal. Returns True when the traversal was aborted.
    """

    def rec(node: ConfigNode, path: str) -> bool:
        if enter_fn is not None and enter_fn(path, node) is VISIT_STOP:
            return True
        for name, value in node.items():
            if isinstance(value, ConfigNode):
                if rec(value, join_path(path, name)):
                    return True
            elif isinstance(value, tuple) and any(isinstance(v, ConfigNode) for v in value):
                for i, elem in enumerate(value):
                    if rec(elem, f"{join_path(path, name)}[{i}]"):
                        return True
        return exit_fn is not None and exit_fn(path, node) is VISIT_STOP

    return rec(cfg, "")


@dataclass
class ReplaceReport:
    """What replace_config changed: paths swapped, fields carried or lost."""

    replaced_paths: list[str] = field(default_factory=list)
    copied_fields: list[tuple[str, str]] = field(default_factory=list)
    dropped_fields: list[tuple[str, str]] = field(default_factory=list)


def replace_config(
    cfg: ConfigNode,
    target: str | Iterable[str],
    template: ConfigNode,
) -> tuple[ConfigNode, ReplaceReport]:
    """Swaps every sub-config whose kind matches for a clone of the template.

    Fields present on both the old node and the template's schema are copied
    from the old node when their value satisfies the template's declared
    kind; everything else is dropped and reported. Replaced subtrees are not
    re-scanned, so the result is stable under re-application as long as the
    template does not itself contain a target kind.
    """
    targets = {target} if isinstance(target, str) else set(target)
    report = ReplaceReport()
    reg = template.registry()
    tschema = reg.schema(template.kind)

    def replace_one(node: ConfigNode, path: str) -> ConfigNode:
        new = template.clone()
        for name, value in node.items():
            if name not in tschema.fields:
                report.dropped_fields.append((path, name))
                continue
            try:
                new = new.set(**{name: value})
            except TypeMismatchError:
                report.dropped_fields.append((path, name))
                continue
            report.copied_fields.append((path, name))
        report.replaced_paths.append(path)
        return new

    def rec(node: ConfigNode, path: str) -> ConfigNode:
        if node.kind in targets:
            return replace_one(node, path)
        updates: dict[str, Any] = {}
        for name, value in node.items():
            if isinstance(value, ConfigNode):
                new_child = rec(value, join_path(path, name))
                if new_child is not value:
                    updates[name] = new_child
            elif isinstance(value, tuple) and any(isinstance(v, ConfigNode) for v in value):
                elems = [rec(v, f"{join_path(path, name)}[{i}]") for i, v in enumerate(value)]
                if any(a is not b for a, b in zip(elems, value)):
                    updates[name] = tuple(elems)
        return node.set(**updates) if updates else node

    return rec(cfg, ""), report


def _render_scalar(value: Any) -> str:
    if value is REQUIRED or isinstance(value, _Required):
        return "REQUIRED"
    if isinstance(value, FunctionSpec):
        args = ",".join(f"{k}={_render_scalar(v)}" for k, v in value.args)
        return f"fn:{value.name}({args})"
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)  # shortest round-trip decimal form
    if isinstance(value, str):
        return json.dumps(value)
    raise TypeMismatchError(f"cannot render value of type {type(value).__name__}")


def _emit_value(value: Any, path: str, lines: list[tuple[str, str]]) -> None:
    if isinstance(value, ConfigNode):
        _emit_node(value, path, lines)
    elif isinstance(value, tuple):
        if any(isinstance(v, ConfigNode) for v in value):
            for i, elem in enumerate(value):
                _emit_node(elem, f"{path}[{i}]", lines)
        elif not value:
            lines.append((path, "[]"))
        else:
            for i, elem in enumerate(value):
                _emit_value(elem, f"{path}[{i}]", lines)
    elif isinstance(value, dict):
        if not value:
            lines.append((path, "{}"))
        else:
            for k in sorted(value):
                _emit_value(value[k], f"{path}[{k}]", lines)
    else:
        lines.append((path, _render_scalar(value)))


def _emit_node(node: ConfigNode, path: str, lines: list[tuple[str, str]]) -> None:
    lines.append((f"{path}.klass", node.kind))
    for name, value in node.items():
        _emit_value(value, join_path(path, name), lines)


def serialize_golden(cfg: ConfigNode) -> str:
    """Renders a config tree to canonical golden text.

    One "<path>.klass: <kind>" line per node and one "<path>: <value>" line
    per leaf; lines sorted lexicographically by path; LF joined with a
    trailing newline. Floats use shortest round-trip decimals, text is
    double-quoted, unset fields render as REQUIRED, deferred scalars as
    fn:<name>(k=v,...) with sorted keys. Empty sequences and mappings render
    as [] and {} so the line set is a complete description of the tree.
    """
    lines: list[tuple[str, str]] = []
    _emit_node(cfg, "", lines)
    lines.sort(key=lambda pv: pv[0])
    return "\n".join(f"{p}: {v}" for p, v in lines) + "\n"


def _golden_lines(text: str, where: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        sep = line.find(": ")
        if sep <= 0:
            raise MalformedGoldenError(f"{where}:{lineno}: expected '<path>: <value>'")
        path, value = line[:sep], line[sep + 2 :]
        if path in out:
            raise MalformedGoldenError(f"{where}:{lineno}: duplicate path {path!r}")
        out[path] = value
    if not out:
        raise MalformedGoldenError(f"{where}: empty golden text")
    return out


def golden_diff(old_text: str, new_text: str) -> list[tuple[str, str | None, str | None]]:
    """Line-set diff of two golden texts as (path, old, new) triples.

    Missing sides are None; an empty result means byte-identical content up
    to line order (which the canonical form fixes anyway).
    """
    old = _golden_lines(old_text, "old")
    new = _golden_lines(new_text, "new")
    out: list[tuple[str, str | None, str | None]] = []
    for path in sorted(set(old) | set(new)):
        a, b = old.get(path), new.get(path)
        if a != b:
            out.append((path, a, b))
    return out


_FN_RE = re.compile(r"fn:([A-Za-z_][A-Za-z0-9_.]*)\((.*)\)$")
_INT_RE = re.compile(r"-?\d+$")


def _split_args(body: str) -> list[str]:
    parts, depth, quoted, start = [], 0, False, 0
    i = 0
    while i < len(body):
        c = body[i]
        if quoted:
            if c == "\\":
                i += 1
            elif c == '"':
                quoted = False
        elif c == '"':
            quoted = True
        elif c == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
        i += 1
    parts.append(body[start:])
    return parts


def _parse_scalar(text: str, where: str) -> Any:
    if text == "REQUIRED":
        return REQUIRED
    if text == "null":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    if text.startswith('"'):
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            raise MalformedGoldenError(f"{where}: bad text literal {text!r}") from None
        if not isinstance(value, str):
            raise MalformedGoldenError(f"{where}: bad text literal {text!r}")
        return value
    m = _FN_RE.match(text)
    if m:
        name, body = m.group(1), m.group(2)
        args: dict[str, Any] = {}
        if body:
            for part in _split_args(body):
                if "=" not in part:
                    raise MalformedGoldenError(f"{where}: bad fn args in {text!r}")
                k, v = part.split("=", 1)
                args[k] = _parse_scalar(v, where)
        return FunctionSpec(name, args)
    if _INT_RE.match(text):
        return int(text)
    try:
        value = float(text)
    except ValueError:
        raise MalformedGoldenError(f"{where}: unparseable value {text!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise MalformedGoldenError(f"{where}: non-finite value {text!r}")
    return value


def _tree_insert(root: dict, steps: list[_Step], value: str, path: str) -> None:
    node = root
    for step in steps[:-1]:
        sub = node.get(step)
        if sub is None:
            sub = node[step] = {}
        elif not isinstance(sub, dict):
            raise MalformedGoldenError(f"path {path!r} conflicts with a shorter leaf line")
        node = sub
    last = steps[-1]
    if last in node:
        raise MalformedGoldenError(f"path {path!r} conflicts with another line")
    node[last] = value


def _collect_value(sub: Any, where: str, reg: Registry) -> Any:
    if isinstance(sub, str):
        if sub == "[]":
            return ()
        if sub == "{}":
            return {}
        return _parse_scalar(sub, where)
    assert isinstance(sub, dict)
    if ("f", "klass") in sub:
        return _collect_node(sub, where, reg)
    tags = {step[0] for step in sub}
    if tags == {"i"}:
        indices = sorted(step[1] for step in sub)
        if indices != list(range(len(indices))):
            raise MalformedGoldenError(f"{where}: sequence indices are not dense from 0")
        return tuple(_collect_value(sub[("i", i)], f"{where}[{i}]", reg) for i in indices)
    if tags == {"k"}:
        return {step[1]: _collect_value(sub[step], f"{where}[{step[1]}]", reg) for step in sorted(sub)}
    raise MalformedGoldenError(f"{where}: mixed or unsupported path structure")


def _collect_node(sub: dict, where: str, reg: Registry) -> ConfigNode:
    kind = sub.get(("f", "klass"))
    if not isinstance(kind, str):
        raise MalformedGoldenError(f"{where}: missing .klass line for node")
    schema = reg.schema(kind)
    raw: dict[str, Any] = {}
    for step, child in sub.items():
        if step == ("f", "klass"):
            continue
        if step[0] != "f":
            raise MalformedGoldenError(f"{where}: node fields must be named, got {step}")
        name = step[1]
        if name not in schema.fields:
            raise MalformedGoldenError(f"{where}: {kind} has no field {name!r}")
        raw[name] = _collect_value(child, join_path(where, name) if where else name, reg)
    fields: dict[str, Any] = {}
    for name, fs in schema.fields.items():
        if name not in raw:
            raise MalformedGoldenError(f"{where}: missing field {name!r} of {kind}")
        fields[name] = _normalize(fs.kind, raw[name], reg, f"{kind}.{name}")
    return ConfigNode(kind, fields, reg)


def parse_golden(text: str, registry: Registry | None = None) -> ConfigNode:
    """Rebuilds a config tree from canonical golden text.

    Kinds must be registered so values can be checked against their schemas;
    serialize_golden(parse_golden(text)) reproduces the input line set.
    """
    reg = _registry(registry)
    entries = _golden_lines(text, "golden")
    root: dict = {}
    for path, value in entries.items():
        if path == ".klass":
            steps: list[_Step] = [("f", "klass")]
        else:
            try:
                steps = parse_path(path)
            except BadPathError:
                raise MalformedGoldenError(f"bad golden path {path!r}") from None
        _tree_insert(root, steps, value, path)
    return _collect_node(root, "", reg)
