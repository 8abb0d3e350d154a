"""The extensibility audit: prove features integrate without code edits.

A feature mutator is a pure config rewrite (replace one component kind with
another, everywhere it appears). The audit applies it to every experiment in
a registry, requires each mutated config to finalize and run one forward
step, requires the golden diff to stay inside the replaced subtrees, and
hashes the layer-behavior definitions before and after to prove no code
changed. One mutator per feature, regardless of registry size: integration
cost does not grow with the number of experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping

from .config import ConfigNode, ReplaceReport, default_config, golden_diff, replace_config, serialize_golden
from .errors import BrokenConfigError, ComposerError, ConfigError, MutatedCodeError
from .experiments import compose, experiment_names, synthetic_batch
from .module import BEHAVIORS, init_state, instantiate, invoke, module_registry_digest
from .prng import child_key, root_key

Mutator = Callable[[ConfigNode], tuple[ConfigNode, ReplaceReport]]


def moe_mutator(cfg: ConfigNode) -> tuple[ConfigNode, ReplaceReport]:
    """Swaps every FeedForward for a 4-expert top-2 MoE, preserving sizes."""
    template = default_config("MoE").set("num_experts", 4).set("top_k", 2)
    return replace_config(cfg, "FeedForward", template)


def rope_mutator(cfg: ConfigNode) -> tuple[ConfigNode, ReplaceReport]:
    """Swaps every identity positional embedding for the rotary one."""
    return replace_config(cfg, "NoPos", default_config("RoPE"))


MUTATORS: dict[str, Mutator] = {"moe": moe_mutator, "rope": rope_mutator}


@dataclass(frozen=True)
class AuditReport:
    feature: str
    num_experiments: int
    num_module_kinds: int
    num_variants: int
    nodes_replaced: int
    mutators_used: int
    digest_before: str
    digest_after: str
    ok: bool
    failures: tuple[tuple[str, str], ...]

    def to_json(self) -> str:
        data = {
            "feature": self.feature,
            "num_experiments": self.num_experiments,
            "num_module_kinds": self.num_module_kinds,
            "num_variants": self.num_variants,
            "nodes_replaced": self.nodes_replaced,
            "mutators_used": self.mutators_used,
            "digest_before": self.digest_before,
            "digest_after": self.digest_after,
            "ok": self.ok,
            "failures": [list(f) for f in self.failures],
        }
        return json.dumps(data, indent=2, sort_keys=True)

    def format_text(self) -> str:
        lines = [
            f"feature:          {self.feature}",
            f"experiments:      {self.num_experiments}",
            f"module kinds:     {self.num_module_kinds}",
            f"variants applied: {self.num_variants}",
            f"nodes replaced:   {self.nodes_replaced}",
            f"mutators used:    {self.mutators_used}",
            f"digest unchanged: {self.digest_before == self.digest_after}",
            f"result:           {'ok' if self.ok else 'FAILED'}",
        ]
        for name, reason in self.failures:
            lines.append(f"  failure {name}: {reason}")
        return "\n".join(lines)


def _has_prefix(path: str, replaced: tuple[str, ...]) -> bool:
    for rp in replaced:
        if rp == "" or path == rp or path.startswith(rp + ".") or path.startswith(rp + "["):
            return True
    return False


def run_audit(
    feature: str,
    experiments: Mapping[str, ConfigNode] | None = None,
    mutator: Mutator | None = None,
    instance_type: str = "cpu-sim-1",
    strict: bool = True,
    seed: int = 0,
) -> AuditReport:
    """Applies one feature mutator to every experiment and verifies the swap.

    Per experiment: mutate, finalize, check the golden diff stays inside the
    replaced subtrees, then run one forward step on synthetic data. strict
    raises on the first broken experiment; otherwise failures are collected
    into the report. A behavior-registry digest change always raises: the
    audit exists to prove the feature needed no code edits.
    """
    if mutator is None:
        try:
            mutator = MUTATORS[feature]
        except KeyError:
            raise ConfigError(f"unknown audit feature {feature!r}") from None
    if experiments is None:
        experiments = {name: compose(name, instance_type) for name in experiment_names()}

    digest_before = module_registry_digest()
    nodes_replaced = 0
    num_variants = 0
    failures: list[tuple[str, str]] = []

    for name in sorted(experiments):
        cfg = experiments[name]
        try:
            before_text = serialize_golden(cfg)
            mutated, report = mutator(cfg)
            finalized = instantiate(mutated)
            after_text = serialize_golden(finalized.config)
            replaced = tuple(report.replaced_paths)
            for path, _, _ in golden_diff(before_text, after_text):
                if not _has_prefix(path, replaced):
                    raise BrokenConfigError(
                        f"swap in {name!r} leaked outside replaced subtrees at {path!r}"
                    )
            state = init_state(finalized, root_key(seed))
            batch = synthetic_batch(
                seed,
                0,
                finalized.config.get("batch_size"),
                finalized.config.get("seq_len"),
                finalized.config.get("model.vocab_size"),
            )
            invoke(finalized, state, child_key(root_key(seed), "step", 0), batch)
        except ComposerError as exc:
            if strict:
                if isinstance(exc, BrokenConfigError):
                    raise
                raise BrokenConfigError(f"{name}: {exc}") from exc
            failures.append((name, str(exc)))
            continue
        nodes_replaced += len(report.replaced_paths)
        num_variants += 1

    digest_after = module_registry_digest()
    if digest_after != digest_before:
        raise MutatedCodeError(
            "layer behavior definitions changed while the audit ran: "
            f"{digest_before[:12]} -> {digest_after[:12]}"
        )
    return AuditReport(
        feature=feature,
        num_experiments=len(experiments),
        num_module_kinds=len(BEHAVIORS),
        num_variants=num_variants,
        nodes_replaced=nodes_replaced,
        mutators_used=1,
        digest_before=digest_before,
        digest_after=digest_after,
        ok=not failures,
        failures=tuple(failures),
    )
