"""Clinical decision support for adverse drug reaction management."""

from .domain import (
    AlertType,
    Assessment,
    ClassificationCategory,
    ReactionType,
    derive_alert,
    validate_consistency,
)
from .drugstore import DrugRecord, DrugStore
from .engine import AssessmentRequest, DecisionEngine, baseline_assess, parse_assessment
from .patients import ClinicalNote, PatientStore, merge_for_prompt
from .synonyms import IngredientEntry, SynonymIndex, load_index

__version__ = "0.1.0"

__all__ = [
    "AlertType",
    "Assessment",
    "AssessmentRequest",
    "ClassificationCategory",
    "ClinicalNote",
    "DecisionEngine",
    "DrugRecord",
    "DrugStore",
    "IngredientEntry",
    "PatientStore",
    "ReactionType",
    "SynonymIndex",
    "__version__",
    "baseline_assess",
    "derive_alert",
    "load_index",
    "merge_for_prompt",
    "parse_assessment",
    "validate_consistency",
]
