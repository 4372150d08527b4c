from .gateway import (
    BackendUnavailableError,
    ChatBackend,
    ChatChunk,
    ChatRequest,
    ForcedOutcome,
    GatewayError,
    RemoteChatBackend,
    RuleBasedBackend,
    ScriptedChatBackend,
    StreamProtocolError,
    complete_streaming,
    complete_text,
    first_json_object,
)
from .prompts import (
    PromptContext,
    build_decision_prompt,
    build_extraction_prompt,
    build_translation_prompt,
)

__all__ = [
    "BackendUnavailableError",
    "ChatBackend",
    "ChatChunk",
    "ChatRequest",
    "ForcedOutcome",
    "GatewayError",
    "PromptContext",
    "RemoteChatBackend",
    "RuleBasedBackend",
    "ScriptedChatBackend",
    "StreamProtocolError",
    "build_decision_prompt",
    "build_extraction_prompt",
    "build_translation_prompt",
    "complete_streaming",
    "complete_text",
    "first_json_object",
]
