"""Clinical taxonomy and the deterministic alert-derivation rule.

Everything here is immutable and shared by the stores, the decision engine,
the generators, and the evaluation harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class LabelError(ValueError):
    """Raised when a label cannot be mapped onto the closed taxonomy."""


class _LabeledEnum(Enum):
    """Enum whose values are canonical display strings, parsed case-insensitively."""

    @property
    def display(self) -> str:
        return self.value

    @classmethod
    def parse(cls, label: str):
        key = label.strip().casefold()
        for member in cls:
            if member.value.casefold() == key:
                return member
        raise LabelError(f"unknown {cls.__name__} label: {label!r}")


class ClassificationCategory(_LabeledEnum):
    """Seven-way classification of a prescription against the documented history."""

    NO_DOCUMENTED_REACTIONS = "NO DOCUMENTED REACTIONS OR INTOLERANCES"
    DIRECT_ACTIVE_INGREDIENT_REACTIVITY = "DIRECT ACTIVE INGREDIENT REACTIVITY"
    DIRECT_EXCIPIENT_REACTIVITY = "DIRECT EXCIPIENT REACTIVITY"
    NO_REACTIVITY_TO_PRESCRIBED_DRUG = (
        "NO REACTIVITY TO PRESCRIBED DRUG'S INGREDIENTS OR EXCIPIENTS"
    )
    CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS = (
        "CHEMICAL-BASED CROSS-REACTIVITY TO EXCIPIENTS"
    )
    DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE = (
        "DRUG CLASS CROSS-REACTIVITY WITHOUT DOCUMENTED TOLERANCE"
    )
    DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE = (
        "DRUG CLASS CROSS-REACTIVITY WITH DOCUMENTED TOLERANCE"
    )


class ReactionType(_LabeledEnum):
    """Severity and nature of a documented adverse reaction."""

    NONE = "None"
    LIFE_THREATENING = "Life-threatening"
    NON_LIFE_THREATENING_IMMUNE_MEDIATED = "Non life-threatening immune-mediated"
    NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED = (
        "Non life-threatening non immune-mediated"
    )


class AlertType(_LabeledEnum):
    """Alert modality presented to the clinician."""

    NONE = "None"
    INTERRUPTIVE = "Interruptive"
    NON_INTERRUPTIVE = "Non-interruptive"

    @property
    def severity(self) -> int:
        """Total order used for conservative fallbacks: Interruptive highest."""
        return _ALERT_SEVERITY[self]


_ALERT_SEVERITY = {
    AlertType.NONE: 0,
    AlertType.NON_INTERRUPTIVE: 1,
    AlertType.INTERRUPTIVE: 2,
}

# Classifications where no alert is ever warranted: nothing documented, nothing
# related to the prescribed drug, or tolerance previously established.
NO_ALERT_CLASSIFICATIONS = frozenset(
    {
        ClassificationCategory.NO_DOCUMENTED_REACTIONS,
        ClassificationCategory.NO_REACTIVITY_TO_PRESCRIBED_DRUG,
        ClassificationCategory.DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE,
    }
)

REACTIVE_CLASSIFICATIONS = frozenset(ClassificationCategory) - NO_ALERT_CLASSIFICATIONS


def derive_alert(
    classification: ClassificationCategory, reaction: ReactionType
) -> AlertType:
    """Map a (classification, reaction) pair onto the alert to present.

    Total over all pairs. A reactive classification reported without a reaction
    type never occurs in well-formed data; it falls back to Interruptive.
    """
    if classification in NO_ALERT_CLASSIFICATIONS:
        return AlertType.NONE
    if reaction is ReactionType.NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED:
        return AlertType.NON_INTERRUPTIVE
    # Life-threatening, immune-mediated, and the fail-safe residual all interrupt.
    return AlertType.INTERRUPTIVE


def validate_consistency(
    classification: ClassificationCategory, reaction: ReactionType
) -> list[str]:
    """Report pairings that contradict the taxonomy's structure.

    No-alert classifications only make sense with no reaction; reactive
    classifications require one. Returns an empty list for coherent pairs.
    """
    violations: list[str] = []
    if classification in NO_ALERT_CLASSIFICATIONS and reaction is not ReactionType.NONE:
        violations.append(
            f"classification {classification.display!r} implies no reaction to the "
            f"prescribed drug, but reaction type is {reaction.display!r}"
        )
    if classification in REACTIVE_CLASSIFICATIONS and reaction is ReactionType.NONE:
        violations.append(
            f"classification {classification.display!r} documents reactivity, but "
            f"no reaction type was reported"
        )
    return violations


@dataclass(frozen=True)
class Assessment:
    """Final engine output for one prescription check.

    The alert is always derived from the classification/reaction pair, never
    set independently, and consistency violations are always surfaced in the
    flags.
    """

    analysis: str
    classification: ClassificationCategory
    reaction: ReactionType
    raw_response: str = ""
    consistency_flags: tuple[str, ...] = ()
    alert: AlertType = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "alert", derive_alert(self.classification, self.reaction)
        )
        violations = validate_consistency(self.classification, self.reaction)
        merged = list(self.consistency_flags)
        for violation in violations:
            if violation not in merged:
                merged.append(violation)
        object.__setattr__(self, "consistency_flags", tuple(merged))
