"""Prompt builders for decision support, translation, and leaflet extraction.

All builders are pure: equal inputs produce byte-equal outputs, which keeps
them snapshot-testable and the whole pipeline repeatable.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..domain import ClassificationCategory, ReactionType

_CLASSIFICATION_VOCAB = "|".join(c.display for c in ClassificationCategory)
_REACTION_VOCAB = "|".join(r.display for r in ReactionType)

_DECISION_SYSTEM_TEMPLATE = (
    "Act as an expert physician.\n"
    "Your task is to check if the drug I want to prescribe is safe for the "
    "patient, focusing only on the potential drug reactions the patient has.\n"
    "### Drug To Prescribe: {drug}\n"
    "### Drug Active Ingredients: {active_ingredients}\n"
    "### Drug Excipients: {excipients}\n"
    "### Known Cross-reactivity: {cross_reactivity}\n"
    "### Known Excipients With Chemical Cross-reactivity:\n"
    "{excipients_cross_reacts}\n"
    "### Contraindications: {contraindications}\n"
    "\n"
    "## INSTRUCTIONS ##\n"
    "1. Consider only adverse reactions and tolerances explicitly documented "
    "in the patient information; never speculate about undocumented ones.\n"
    "2. Match the documented reactions against the drug's active ingredients, "
    "excipients, known cross-reactivity and contraindications above, treating "
    "synonyms of the same substance as the same substance.\n"
    "3. Before reporting any drug class cross-reactivity, check whether the "
    "patient information documents tolerance to the prescribed drug itself; "
    "documented tolerance suppresses the class-based concern.\n"
    "4. Answer with exactly one line in the output format below and nothing "
    "else.\n"
    "## OUTPUT FORMAT ##\n"
    '{"a":"brief description of your analysis", '
    '"r":"final response: ' + _CLASSIFICATION_VOCAB + '", '
    '"rt":"reaction type: ' + _REACTION_VOCAB + '"}'
)

_DECISION_USER_TEMPLATE = "### PATIENT INFORMATION: {clinical_notes}"

_TRANSLATION_SYSTEM = (
    "Report only the translation, nothing else. "
    "If you don't know the translation, report the original text."
)
_TRANSLATION_USER_TEMPLATE = "Translate in English from {language}: {text}"

_EXTRACTION_SYSTEM = (
    "Act as a pharmaceutical data specialist.\n"
    "The leaflet below may describe several pharmaceutical forms of the same "
    "medicinal product. Extract the information that applies to the requested "
    "form only, excluding details that apply solely to other forms.\n"
    "Respond with exactly one JSON object with the keys \"composition\", "
    "\"excipients\", \"contraindications\", \"drug_interactions\", "
    "\"side_effects\" and \"incompatibilities\". Each value is plain text; "
    "use an empty string when the leaflet does not cover a section."
)
_EXTRACTION_USER_TEMPLATE = "### REQUESTED FORM: {form}\n### LEAFLET:\n{leaflet}"

EMPTY_SECTION = "None listed"


@dataclass(frozen=True)
class PromptContext:
    """Everything substituted into the decision-support system/user prompts."""

    drug: str
    active_ingredients: tuple[str, ...] = ()
    excipients: tuple[str, ...] = ()
    cross_reactivity: str = "None known"
    excipients_cross_reacts: str = "None known"
    contraindications: str = EMPTY_SECTION
    clinical_notes: str = ""

    def __post_init__(self) -> None:
        if not self.drug.strip():
            raise ValueError("prompt context requires a drug name")
        object.__setattr__(self, "active_ingredients", tuple(self.active_ingredients))
        object.__setattr__(self, "excipients", tuple(self.excipients))


def _render_list(items: tuple[str, ...]) -> str:
    return "; ".join(items) if items else EMPTY_SECTION


def _render_text(text: str) -> str:
    return text if text.strip() else EMPTY_SECTION


def build_decision_prompt(ctx: PromptContext) -> tuple[str, str]:
    """System and user prompts for one prescription check."""
    system = (
        _DECISION_SYSTEM_TEMPLATE.replace("{drug}", ctx.drug)
        .replace("{active_ingredients}", _render_list(ctx.active_ingredients))
        .replace("{excipients}", _render_list(ctx.excipients))
        .replace("{cross_reactivity}", _render_text(ctx.cross_reactivity))
        .replace("{excipients_cross_reacts}", _render_text(ctx.excipients_cross_reacts))
        .replace("{contraindications}", _render_text(ctx.contraindications))
    )
    user = _DECISION_USER_TEMPLATE.replace("{clinical_notes}", ctx.clinical_notes)
    return system, user


def build_translation_prompt(text: str, source_language: str) -> tuple[str, str]:
    """System and user prompts translating terminology into English."""
    if not text.strip():
        raise ValueError("translation text must be non-empty")
    if not source_language.strip():
        raise ValueError("source language must be non-empty")
    user = _TRANSLATION_USER_TEMPLATE.replace("{language}", source_language).replace(
        "{text}", text
    )
    return _TRANSLATION_SYSTEM, user


def build_extraction_prompt(leaflet_text: str, target_form: str) -> tuple[str, str]:
    """System and user prompts extracting form-specific leaflet sections."""
    if not leaflet_text.strip():
        raise ValueError("leaflet text must be non-empty")
    if not target_form.strip():
        raise ValueError("target form must be non-empty")
    user = _EXTRACTION_USER_TEMPLATE.replace("{form}", target_form).replace(
        "{leaflet}", leaflet_text
    )
    return _EXTRACTION_SYSTEM, user
