"""Environment configuration keys shared by the CLI and the API service."""

from __future__ import annotations

import os

ENV_DRUG_DB_PATH = "HELIOT_DRUG_DB_PATH"
ENV_PATIENT_DB_PATH = "HELIOT_PATIENT_DB_PATH"
ENV_LLM_BASE_URL = "HELIOT_LLM_BASE_URL"
ENV_LLM_API_KEY = "HELIOT_LLM_API_KEY"
ENV_LLM_MODEL = "HELIOT_LLM_MODEL"
ENV_API_TOKEN = "HELIOT_API_TOKEN"
ENV_BIND_ADDR = "HELIOT_BIND_ADDR"

DEFAULT_DRUG_DB_PATH = "heliot_drugs.db"
DEFAULT_PATIENT_DB_PATH = "heliot_patients.db"
DEFAULT_BIND_ADDR = "127.0.0.1:8000"


def drug_db_path() -> str:
    return os.environ.get(ENV_DRUG_DB_PATH, DEFAULT_DRUG_DB_PATH)


def patient_db_path() -> str:
    return os.environ.get(ENV_PATIENT_DB_PATH, DEFAULT_PATIENT_DB_PATH)


def llm_base_url() -> str | None:
    return os.environ.get(ENV_LLM_BASE_URL)


def llm_api_key() -> str | None:
    return os.environ.get(ENV_LLM_API_KEY)


def llm_model() -> str:
    return os.environ.get(ENV_LLM_MODEL, "default")


def api_token() -> str | None:
    return os.environ.get(ENV_API_TOKEN)


def bind_addr() -> str:
    return os.environ.get(ENV_BIND_ADDR, DEFAULT_BIND_ADDR)
