"""Chat-completion boundary: scripted replay provider and a live HTTP adapter.

Every piece of agent reasoning flows through ``complete()``. The scripted
provider replays a canned JSON-lines script so the whole engine can run
deterministically with no network; the live adapter speaks a minimal
chat-completions wire protocol against PROVIDER_ENDPOINT.
"""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import httpx

VALID_ROLES = ("system", "user", "assistant", "tool")


class GatewayError(Exception):
    """Base class for provider-boundary failures."""


class TransportError(GatewayError):
    """Network-level failure after exhausting retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class ProviderRefusal(GatewayError):
    """The provider declined the request; retrying will not help."""


class ProtocolError(GatewayError):
    """The response violates the tool-call contract."""


class ScriptExhaustedError(GatewayError):
    """A scripted provider ran past the end of its script."""


@dataclass(frozen=True)
class ContentPart:
    kind: str  # "text" or "image"
    body: str = ""
    media_type: str = ""
    data: bytes = b""

    def __post_init__(self):
        if self.kind not in ("text", "image"):
            raise ValueError(f"unknown content kind {self.kind!r}")
        if self.kind == "image":
            if not self.data:
                raise ValueError("image part requires non-empty bytes")
            if not self.media_type:
                raise ValueError("image part requires a media type")

    @classmethod
    def text(cls, body: str) -> "ContentPart":
        return cls(kind="text", body=body)

    @classmethod
    def image(cls, media_type: str, data: bytes) -> "ContentPart":
        return cls(kind="image", media_type=media_type, data=data)


@dataclass(frozen=True)
class ChatMessage:
    role: str
    parts: tuple[ContentPart, ...]
    tool_call_id: Optional[str] = None

    def __post_init__(self):
        if self.role not in VALID_ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.parts:
            raise ValueError("message must carry at least one content part")
        if (self.role == "tool") != (self.tool_call_id is not None):
            raise ValueError("tool_call_id is required exactly for tool messages")
        if self.role == "system" and any(p.kind != "text" for p in self.parts):
            raise ValueError("system messages may contain text parts only")

    @classmethod
    def text(cls, role: str, body: str, tool_call_id: Optional[str] = None) -> "ChatMessage":
        return cls(role=role, parts=(ContentPart.text(body),), tool_call_id=tool_call_id)

    def text_body(self) -> str:
        return "".join(p.body for p in self.parts if p.kind == "text")


@dataclass(frozen=True)
class ToolCallRequest:
    id: str
    tool_name: str
    arguments: dict

    def __post_init__(self):
        if not self.id:
            raise ValueError("tool call id must be non-empty")
        if not self.tool_name:
            raise ValueError("tool name must be non-empty")


@dataclass(frozen=True)
class ProviderResponse:
    text: str = ""
    tool_calls: tuple[ToolCallRequest, ...] = ()

    def __post_init__(self):
        if not self.text and not self.tool_calls:
            raise ValueError("response must carry text or at least one tool call")


@dataclass(frozen=True)
class GenerationParams:
    temperature: Optional[float] = None
    max_tokens: Optional[int] = None


class Provider(Protocol):
    def complete(
        self,
        messages: Sequence[ChatMessage],
        tools: Sequence[dict] = (),
        params: Optional[GenerationParams] = None,
    ) -> ProviderResponse:
        ...


def _check_preconditions(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    if messages[0].role != "system":
        raise ValueError("first message must have role 'system'")


def _check_tool_closure(response: ProviderResponse, tools: Sequence[dict]) -> None:
    offered = {t["name"] for t in tools}
    for call in response.tool_calls:
        if call.tool_name not in offered:
            raise ProtocolError(
                f"tool call {call.tool_name!r} is not among the offered tools"
            )


@dataclass(frozen=True)
class ScriptEntry:
    text: Optional[str] = None
    tool: Optional[str] = None
    args: Optional[dict] = None

    def __post_init__(self):
        if self.text is None and self.tool is None:
            raise ValueError("script entry must declare text and/or a tool call")
        if self.args is not None and self.tool is None:
            raise ValueError("script entry has args but no tool")


def load_script(path) -> list[ScriptEntry]:
    """Parse a JSON-lines script file into validated entries."""
    entries = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"script line {line_no}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ValueError(f"script line {line_no}: expected an object")
        unknown = set(raw) - {"text", "tool", "args"}
        if unknown:
            raise ValueError(f"script line {line_no}: unknown keys {sorted(unknown)}")
        try:
            entries.append(ScriptEntry(**raw))
        except ValueError as exc:
            raise ValueError(f"script line {line_no}: {exc}") from exc
    return entries


class ScriptedProvider:
    """Replays canned responses in order, one per ``complete()`` call.

    The response sequence is a pure function of (script, call index), so two
    providers built from the same script always produce identical runs. Use
    ``fork()`` to get an independent cursor over the same entries.
    """

    def __init__(self, entries: Sequence[ScriptEntry]):
        self._entries = tuple(entries)
        self._index = 0

    @classmethod
    def from_jsonl(cls, path) -> "ScriptedProvider":
        return cls(load_script(path))

    @property
    def calls_made(self) -> int:
        return self._index

    def fork(self) -> "ScriptedProvider":
        return ScriptedProvider(self._entries)

    def complete(
        self,
        messages: Sequence[ChatMessage],
        tools: Sequence[dict] = (),
        params: Optional[GenerationParams] = None,
    ) -> ProviderResponse:
        _check_preconditions(messages)
        if self._index >= len(self._entries):
            raise ScriptExhaustedError(f"script exhausted at index {self._index}")
        entry = self._entries[self._index]
        calls = ()
        if entry.tool is not None:
            calls = (
                ToolCallRequest(
                    id=f"call_{self._index}",
                    tool_name=entry.tool,
                    arguments=dict(entry.args or {}),
                ),
            )
        response = ProviderResponse(text=entry.text or "", tool_calls=calls)
        _check_tool_closure(response, tools)
        self._index += 1
        return response


def _wire_message(message: ChatMessage) -> dict:
    content = []
    for part in message.parts:
        if part.kind == "text":
            content.append({"type": "text", "text": part.body})
        else:
            content.append({
                "type": "image",
                "media_type": part.media_type,
                "data": base64.b64encode(part.data).decode("ascii"),
            })
    wire = {"role": message.role, "content": content}
    if message.tool_call_id is not None:
        wire["tool_call_id"] = message.tool_call_id
    return wire


class LiveProvider:
    """HTTP adapter for a chat-completions-style endpoint.

    Configuration comes from PROVIDER_ENDPOINT / PROVIDER_KEY unless given
    explicitly. Transport failures retry up to ``attempts`` times; refusals
    (HTTP 4xx) do not retry.
    """

    def __init__(
        self,
        endpoint: Optional[str] = None,
        key: Optional[str] = None,
        attempts: int = 3,
        timeout: float = 60.0,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.endpoint = endpoint or os.environ.get("PROVIDER_ENDPOINT", "")
        self.key = key or os.environ.get("PROVIDER_KEY", "")
        if not self.endpoint:
            raise ValueError("no provider endpoint configured (set PROVIDER_ENDPOINT)")
        self.attempts = attempts
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(
        self,
        messages: Sequence[ChatMessage],
        tools: Sequence[dict] = (),
        params: Optional[GenerationParams] = None,
    ) -> ProviderResponse:
        _check_preconditions(messages)
        payload = {"messages": [_wire_message(m) for m in messages]}
        if tools:
            payload["tools"] = list(tools)
        if params is not None:
            if params.temperature is not None:
                payload["temperature"] = params.temperature
            if params.max_tokens is not None:
                payload["max_tokens"] = params.max_tokens

        headers = {}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"

        last_error = None
        for attempt in range(1, self.attempts + 1):
            try:
                reply = self._client.post(self.endpoint, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if 400 <= reply.status_code < 500:
                raise ProviderRefusal(
                    f"provider refused the request (HTTP {reply.status_code}): {reply.text}"
                )
            if reply.status_code >= 500:
                last_error = httpx.HTTPStatusError(
                    f"HTTP {reply.status_code}", request=reply.request, response=reply
                )
                continue
            body = reply.json()
            calls = tuple(
                ToolCallRequest(
                    id=raw.get("id", f"call_{i}"),
                    tool_name=raw["name"],
                    arguments=dict(raw.get("arguments", {})),
                )
                for i, raw in enumerate(body.get("tool_calls", []))
            )
            response = ProviderResponse(text=body.get("text", ""), tool_calls=calls)
            _check_tool_closure(response, tools)
            return response
        raise TransportError(
            f"transport failure after {self.attempts} attempts: {last_error}",
            attempts=self.attempts,
        )
