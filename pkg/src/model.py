"""
Chat model clients.

ChatCompletionsClient talks to any endpoint speaking the chat-completions wire
format. ScriptedModel replays a JSON script and is what tests and offline runs
use.
"""

from __future__ import annotations

import asyncio
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import httpx

from .config import ModelSettings, RetryPolicy
from .errors import ConfigError, ModelUnavailable
from .types import ChatMessage, Role, ToolCall

logger = logging.getLogger(__name__)

_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


@dataclass(frozen=True)
class ToolSpec:
    """A tool the model may call: name, description and JSON schema of its input."""

    name: str
    description: str
    input_schema: dict[str, Any] = field(default_factory=dict)

    def to_wire(self) -> dict[str, Any]:
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": self.input_schema,
            },
        }


class ModelClient(ABC):
    """Anything that can produce the next assistant message."""

    @abstractmethod
    async def chat(
        self,
        messages: Sequence[ChatMessage],
        tools: Optional[Sequence[ToolSpec]] = None,
        temperature: float = 0.0,
    ) -> ChatMessage:
        """Return the next assistant message: a tool call or a final answer.

        Raises:
            ModelUnavailable: transport failure after retries, or a
                malformed reply.
        """

    async def aclose(self) -> None:
        """Release network resources."""


async def post_json(
    client: httpx.AsyncClient,
    url: str,
    payload: dict[str, Any],
    *,
    headers: Optional[dict[str, str]] = None,
    retry: Optional[RetryPolicy] = None,
) -> Any:
    """POST payload as JSON and decode the JSON reply, retrying transient failures.

    Raises:
        ModelUnavailable: all attempts failed, a non-retryable HTTP status
            came back, or the body was not JSON.
    """
    retry = retry or RetryPolicy()
    last_error: Optional[Exception] = None
    attempts = 0
    for delay in retry.delays():
        if delay:
            await asyncio.sleep(delay)
        attempts += 1
        try:
            response = await client.post(url, json=payload, headers=headers)
            response.raise_for_status()
        except httpx.HTTPStatusError as e:
            if e.response.status_code not in _RETRYABLE_STATUS:
                raise ModelUnavailable(f"{url} returned HTTP {e.response.status_code}") from e
            last_error = e
            logger.warning(f"Attempt {attempts} to {url} failed: HTTP {e.response.status_code}")
            continue
        except httpx.HTTPError as e:
            last_error = e
            logger.warning(f"Attempt {attempts} to {url} failed: {e!r}")
            continue
        try:
            return response.json()
        except ValueError as e:
            raise ModelUnavailable(f"{url} returned a malformed payload") from e
    raise ModelUnavailable(f"{url} unavailable after {attempts} attempt(s): {last_error!r}")


def message_to_wire(message: ChatMessage) -> dict[str, Any]:
    """Convert a ChatMessage to the chat-completions message format."""
    if message.role == Role.TOOL:
        return {"role": "tool", "tool_call_id": message.tool_call_id, "content": message.content}
    if message.role == Role.ASSISTANT and message.tool_call:
        call = message.tool_call
        return {
            "role": "assistant",
            "content": message.content or None,
            "tool_calls": [
                {
                    "id": call.id,
                    "type": "function",
                    "function": {
                        "name": call.tool_name,
                        "arguments": json.dumps(call.arguments, ensure_ascii=False),
                    },
                }
            ],
        }
    return {"role": message.role.value, "content": message.content}


def parse_completion(data: Any) -> ChatMessage:
    """Read the assistant message out of a chat-completions reply.

    Only the first tool call is kept; the conversation carries one tool call
    per assistant turn.

    Raises:
        ModelUnavailable: the payload does not have the expected shape.
    """
    try:
        message = data["choices"][0]["message"]
        tool_calls = message.get("tool_calls") or []
        content = message.get("content") or ""
        if tool_calls:
            if len(tool_calls) > 1:
                logger.warning(f"Model requested {len(tool_calls)} tool calls, using the first")
            call = tool_calls[0]
            arguments = json.loads(call["function"].get("arguments") or "{}")
            if not isinstance(arguments, dict):
                raise TypeError("tool arguments must be a JSON object")
            return ChatMessage.assistant(
                content,
                ToolCall(call["function"]["name"], arguments, id=call.get("id") or "call_0"),
            )
        if not isinstance(content, str):
            raise TypeError("message content must be a string")
        return ChatMessage.assistant(content)
    except (KeyError, IndexError, TypeError, AttributeError, ValueError) as e:
        raise ModelUnavailable(f"malformed chat completion payload: {e}") from e


class ChatCompletionsClient(ModelClient):
    """Client for a chat-completions endpoint.

    Args:
        base_url: API base, e.g. https://api.openai.com/v1.
        model: Model name sent with each request.
        api_key: Bearer token; omitted from requests when None.
        timeout: Per-request timeout in seconds.
        retry: Backoff policy for transient failures.
        transport: Optional httpx transport (tests use httpx.MockTransport).
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        retry: Optional[RetryPolicy] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.retry = retry or RetryPolicy()
        self._client = httpx.AsyncClient(timeout=timeout, transport=transport)

    @classmethod
    def from_settings(
        cls, settings: ModelSettings, transport: Optional[httpx.AsyncBaseTransport] = None
    ) -> "ChatCompletionsClient":
        api_key = settings.api_key()
        if api_key is None:
            logger.warning(f"{settings.api_key_env} is not set, calling {settings.base_url} without auth")
        return cls(
            base_url=settings.base_url,
            model=settings.model,
            api_key=api_key,
            timeout=settings.timeout,
            retry=settings.retry,
            transport=transport,
        )

    def _headers(self) -> dict[str, str]:
        headers = {"User-Agent": "statute-search"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    async def chat(
        self,
        messages: Sequence[ChatMessage],
        tools: Optional[Sequence[ToolSpec]] = None,
        temperature: float = 0.0,
    ) -> ChatMessage:
        payload: dict[str, Any] = {
            "model": self.model,
            "messages": [message_to_wire(m) for m in messages],
            "temperature": temperature,
        }
        if tools:
            payload["tools"] = [t.to_wire() for t in tools]
        data = await post_json(
            self._client,
            f"{self.base_url}/chat/completions",
            payload,
            headers=self._headers(),
            retry=self.retry,
        )
        return parse_completion(data)

    async def aclose(self) -> None:
        await self._client.aclose()


@dataclass(frozen=True)
class _Conversation:
    match: Optional[str]
    steps: tuple[dict[str, Any], ...]


class ScriptedModel(ModelClient):
    """Replays scripted replies.

    A script is {"steps": [...]} or {"conversations": [{"match": "...",
    "steps": [...]}, ...], "steps": [...]}. The conversation whose match
    string occurs in the first user message is used, else the top-level
    steps. Each step is one of:

        {"tool_call": {"name": "retriever", "arguments": {"query": "..."}}}
        {"final": "answer text"}
        {"error": "timeout"}

    The step replayed is the one at index "number of assistant messages
    already in the conversation", so replies depend only on the messages
    passed in. Without tools, tool-call steps are skipped up to the next
    final or error step.
    """

    def __init__(self, conversations: Sequence[_Conversation]):
        self.conversations = tuple(conversations)
        self.temperatures: list[float] = []

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScriptedModel":
        conversations = [
            _Conversation(match=c.get("match"), steps=tuple(c["steps"]))
            for c in data.get("conversations", [])
        ]
        if "steps" in data:
            conversations.append(_Conversation(match=None, steps=tuple(data["steps"])))
        return cls(conversations)

    @classmethod
    def from_steps(cls, steps: Sequence[dict[str, Any]]) -> "ScriptedModel":
        return cls([_Conversation(match=None, steps=tuple(steps))])

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedModel":
        """Raises ConfigError when the file is not a model script."""
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as e:
            raise ConfigError(f"model script {path} is invalid: {e}") from e

    def _steps_for(self, messages: Sequence[ChatMessage]) -> tuple[dict[str, Any], ...]:
        first_user = next((m.content for m in messages if m.role == Role.USER), "")
        for conversation in self.conversations:
            if conversation.match is None or conversation.match in first_user:
                return conversation.steps
        raise ModelUnavailable("no scripted conversation matches the question")

    async def chat(
        self,
        messages: Sequence[ChatMessage],
        tools: Optional[Sequence[ToolSpec]] = None,
        temperature: float = 0.0,
    ) -> ChatMessage:
        self.temperatures.append(temperature)
        steps = self._steps_for(messages)
        index = sum(1 for m in messages if m.role == Role.ASSISTANT)
        if not tools:
            while index < len(steps) and "tool_call" in steps[index]:
                index += 1
        if index >= len(steps):
            raise ModelUnavailable("model script exhausted")

        step = steps[index]
        if "error" in step:
            raise ModelUnavailable(f"scripted failure: {step['error']}")
        if "final" in step:
            return ChatMessage.assistant(str(step["final"]))
        if "tool_call" in step:
            call = step["tool_call"]
            return ChatMessage.assistant(
                call.get("content", ""),
                ToolCall(call["name"], dict(call.get("arguments", {})), id=f"call_{index}"),
            )
        raise ModelUnavailable(f"malformed script step: {step!r}")


def build_model(settings: ModelSettings) -> ModelClient:
    """Scripted mock when a script is configured, else the live endpoint."""
    if settings.script_path:
        return ScriptedModel.from_file(settings.script_path)
    return ChatCompletionsClient.from_settings(settings)
