import pytest

from composer.config import DEFAULT_REGISTRY
from composer.module import BEHAVIORS, SPEC_FUNCTIONS


@pytest.fixture
def isolated_registry():
    """Snapshots the global registries so a test can register freely."""
    components = dict(DEFAULT_REGISTRY.components)
    adapters = dict(DEFAULT_REGISTRY.adapters)
    behaviors = dict(BEHAVIORS)
    functions = dict(SPEC_FUNCTIONS)
    try:
        yield
    finally:
        DEFAULT_REGISTRY.components.clear()
        DEFAULT_REGISTRY.components.update(components)
        DEFAULT_REGISTRY.adapters.clear()
        DEFAULT_REGISTRY.adapters.update(adapters)
        BEHAVIORS.clear()
        BEHAVIORS.update(behaviors)
        SPEC_FUNCTIONS.clear()
        SPEC_FUNCTIONS.update(functions)
