"""Counterbalanced procedure generation.

A procedure config is flattened into a sequence of concrete steps,
counterbalance-flagged steps (or whole blocks) become groups, and the
groups are rotated through the flagged slots by the rows of a Latin
square. Unflagged steps are fixed anchors and keep their relative
positions in every variant.

Everything here is a pure function of its inputs: two calls with the
same config produce identical variant sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationFailure
from .model import Block, ProcedureConfig, StepElement


@dataclass(frozen=True)
class FlatStep:
    """One concrete step of the flattened config.

    ``group`` is the counterbalance group id (None for unflagged
    steps). All steps that came from one flagged block share a group.
    """

    element: StepElement
    group: int | None


@dataclass(frozen=True)
class VariantSet:
    config_id: str
    variants: list[list[FlatStep]]
    square: list[list[int]] = field(default_factory=list)

    @property
    def variant_count(self) -> int:
        return len(self.variants)


def flatten(config: ProcedureConfig) -> list[FlatStep]:
    """Replace blocks by their inner steps and assign group ids.

    Group ids are 0..k-1 in order of first appearance, so each group
    occupies exactly one contiguous run of the flattened sequence.
    """
    flat: list[FlatStep] = []
    next_group = 0
    for step in config.ordered_steps():
        element = step.element
        if isinstance(element, Block):
            group: int | None = None
            if step.counterbalance:
                group = next_group
                next_group += 1
            for inner in sorted(element.steps, key=lambda s: s.order):
                if isinstance(inner.element, Block):
                    raise ValidationFailure("a block may not contain a block", code="nested_block")
                flat.append(FlatStep(element=inner.element, group=group))
        elif step.counterbalance:
            flat.append(FlatStep(element=element, group=next_group))
            next_group += 1
        else:
            flat.append(FlatStep(element=element, group=None))
    return flat


def latin_square(k: int) -> list[list[int]]:
    """Return a k x k Latin square over 0..k-1.

    For even k this is a balanced (Williams) square: besides each
    element appearing once per row and column, every ordered pair of
    distinct elements is adjacent exactly once across the rows. For
    odd k the standard cyclic square is returned; the adjacency
    balance guarantee does not apply there (a single odd-order square
    cannot provide it).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k % 2 == 0:
        base = [0]
        for m in range(1, k):
            base.append(m // 2 + 1 if m % 2 else k - m // 2)
    else:
        base = list(range(k))
    return [[(x + i) % k for x in base] for i in range(k)]


def generate_variants(config: ProcedureConfig) -> VariantSet:
    """Produce one variant per counterbalance group (at least one).

    Variant i places the groups into the flagged slots in the order
    given by row i of the Latin square; anchors stay where they are.
    """
    flat = flatten(config)
    groups: list[int] = []
    runs: dict[int, list[FlatStep]] = {}
    # tokens: anchors interleaved with one slot marker per group run
    tokens: list[tuple[str, FlatStep | int]] = []
    for step in flat:
        if step.group is None:
            tokens.append(("anchor", step))
        elif step.group in runs:
            runs[step.group].append(step)
        else:
            groups.append(step.group)
            runs[step.group] = [step]
            tokens.append(("slot", step.group))

    k = len(groups)
    if k == 0:
        return VariantSet(config_id=config.id, variants=[list(flat)], square=[])

    square = latin_square(k)
    variants: list[list[FlatStep]] = []
    for row in square:
        slot = 0
        variant: list[FlatStep] = []
        for kind, value in tokens:
            if kind == "anchor":
                variant.append(value)  # type: ignore[arg-type]
            else:
                variant.extend(runs[groups[row[slot]]])
                slot += 1
        variants.append(variant)
    return VariantSet(config_id=config.id, variants=variants, square=square)


def assign_variant(variant_set: VariantSet, participant_index: int) -> list[FlatStep]:
    """Round-robin assignment by join order: deterministic and balanced."""
    if not variant_set.variants:
        raise ValueError("variant set is empty")
    return variant_set.variants[participant_index % variant_set.variant_count]
