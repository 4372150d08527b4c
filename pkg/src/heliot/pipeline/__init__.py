from .generate import (
    DEFAULT_CASE_STRATA,
    DEFAULT_DRUG_DISTRIBUTION,
    CaseStratum,
    DatasetFormatError,
    DrugClassSpec,
    SyntheticCase,
    export_dataset_csv,
    generate_drug_catalog,
    generate_patient_dataset,
    import_dataset_csv,
)
from .ingest import (
    ExtractionError,
    IngestResult,
    LEAFLET_CSV_HEADER,
    SYNONYM_CSV_HEADER,
    export_catalog_csv,
    extract_leaflet_sections,
    ingest_leaflet_csv,
    ingest_synonyms_csv,
    read_leaflet_csv,
    translate_ingredients,
)

__all__ = [
    "DEFAULT_CASE_STRATA",
    "DEFAULT_DRUG_DISTRIBUTION",
    "CaseStratum",
    "DatasetFormatError",
    "DrugClassSpec",
    "ExtractionError",
    "IngestResult",
    "LEAFLET_CSV_HEADER",
    "SYNONYM_CSV_HEADER",
    "SyntheticCase",
    "export_catalog_csv",
    "export_dataset_csv",
    "extract_leaflet_sections",
    "generate_drug_catalog",
    "generate_patient_dataset",
    "import_dataset_csv",
    "ingest_leaflet_csv",
    "ingest_synonyms_csv",
    "read_leaflet_csv",
    "translate_ingredients",
]
