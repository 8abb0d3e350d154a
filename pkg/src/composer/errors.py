"""Exception taxonomy shared across the composer package.

Every error raised on a user-facing path derives from ComposerError so CLI
entry points can map failures to exit codes without enumerating modules.
"""


class ComposerError(Exception):
    """Base class for all composer errors."""


class ConfigError(ComposerError):
    """Base class for configuration construction and mutation errors."""


class DuplicateKindError(ConfigError):
    """A component kind was registered twice in the same registry."""


class UnknownKindError(ConfigError):
    """A component kind is not present in the registry."""


class UnknownFactoryError(ConfigError):
    """An external factory id is not present in the registry."""


class BadPathError(ConfigError):
    """A dotted path does not resolve within the tree it was applied to."""


class TypeMismatchError(ConfigError):
    """A value does not satisfy the declared field kind."""


class UnsetFieldError(ConfigError):
    """A required field was still unset when a concrete value was needed."""

    def __init__(self, path: str):
        super().__init__(f"field {path!r} is required but unset")
        self.path = path


class ResolutionError(ConfigError):
    """A deferred function-valued field could not be resolved."""

    def __init__(self, path: str, reason: str = ""):
        msg = f"cannot resolve function-valued field {path!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.path = path


class MalformedGoldenError(ConfigError):
    """A golden file does not follow the canonical line format."""


class NoActiveContextError(ComposerError):
    """An ambient-context helper was called outside of an invocation."""


class ShapeError(ComposerError):
    """Tensor or dimension constraints were violated."""


class OddDimError(ShapeError):
    """Rotary position embedding requires an even per-head dimension."""


class UnknownActivationError(ComposerError):
    """An activation name is not present in the activation registry."""


class BadTopKError(ComposerError):
    """Router top-k must satisfy 1 <= k <= expert count."""


class MeshError(ComposerError):
    """Base class for device-mesh resolution and sharding errors."""


class MultipleWildcardsError(MeshError):
    """A mesh shape contained more than one -1 wildcard entry."""


class IndivisibleError(MeshError):
    """Devices or tensor dims do not divide evenly across mesh axes."""


class NoMatchError(ComposerError):
    """A modifier path pattern matched nothing in the target config."""


class UnknownInstanceError(ComposerError):
    """An instance type is not present in the device catalog."""


class UnknownExperimentError(ComposerError):
    """An experiment name is not present in the experiment registry."""


class BrokenConfigError(ComposerError):
    """A mutated experiment config failed to instantiate or step."""


class MutatedCodeError(ComposerError):
    """The module-definition digest changed while auditing configs."""


class ShortTraceError(ComposerError):
    """A step trace is shorter than the watchdog rolling window."""
