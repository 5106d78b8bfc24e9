"""Provider clients: a deterministic mock plus the three public HTTP contracts."""

from .base import BaseProviderClient, CompletionRequest, CompletionResponse
from .http_clients import AnthropicMessagesClient, GeminiGenerateClient, OpenAIChatClient
from .mock import DEFAULT_PROFILES, MockProvider, ProviderProfile

__all__ = [
    "BaseProviderClient",
    "CompletionRequest",
    "CompletionResponse",
    "MockProvider",
    "ProviderProfile",
    "DEFAULT_PROFILES",
    "OpenAIChatClient",
    "AnthropicMessagesClient",
    "GeminiGenerateClient",
]
