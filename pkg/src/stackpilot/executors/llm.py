"""Remote-model executor over any OpenAI-compatible chat completions endpoint.

Configuration comes from STACKPILOT_API_KEY, STACKPILOT_BASE_URL, and
STACKPILOT_MODEL. Requests run at temperature 0 with a fixed seed so runs
are as repeatable as the endpoint allows; schema-invalid replies are
retried with the validation error appended to the conversation.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass

import httpx

from ..errors import ExecutorFailure, SchemaError, Timeout, TransportError
from .actions import Action, ExecContext, ExecutorDescriptor, parse_action
from .prompts import render_prompt

DEFAULT_TIMEOUT = 120.0

_FENCE_RE = re.compile(r"```(?:[A-Za-z0-9_-]*)\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class ChatConfig:
    api_key: str
    base_url: str
    model: str
    timeout: float = DEFAULT_TIMEOUT
    seed: int | None = 0
    transport_retries: int = 3

    @classmethod
    def from_env(cls, **overrides) -> "ChatConfig":
        api_key = overrides.pop("api_key", None) or os.getenv("STACKPILOT_API_KEY", "")
        base_url = overrides.pop("base_url", None) or os.getenv("STACKPILOT_BASE_URL", "")
        model = overrides.pop("model", None) or os.getenv("STACKPILOT_MODEL", "")
        if not api_key:
            raise TransportError("STACKPILOT_API_KEY is not set")
        if not base_url:
            raise TransportError("STACKPILOT_BASE_URL is not set")
        if not model:
            raise TransportError("STACKPILOT_MODEL is not set")
        return cls(api_key=api_key, base_url=base_url, model=model, **overrides)


class ChatClient:
    """Thin chat-completions client with transport-level retries."""

    def __init__(self, config: ChatConfig):
        self.config = config
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            timeout=config.timeout,
            headers={"Authorization": f"Bearer {config.api_key}"},
        )

    def close(self) -> None:
        self._client.close()

    def complete(self, messages: list[dict]) -> str:
        payload: dict = {
            "model": self.config.model,
            "messages": messages,
            "temperature": 0,
        }
        if self.config.seed is not None:
            payload["seed"] = self.config.seed
        last_error: Exception | None = None
        for attempt in range(self.config.transport_retries):
            try:
                response = self._client.post("/chat/completions", json=payload)
                if response.status_code >= 500:
                    raise TransportError(f"server error {response.status_code}: {response.text[:200]}")
                if response.status_code >= 400:
                    raise TransportError(f"request rejected {response.status_code}: {response.text[:200]}")
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except httpx.TimeoutException as exc:
                last_error = Timeout(f"request timed out after {self.config.timeout}s: {exc}")
            except httpx.HTTPError as exc:
                last_error = TransportError(f"transport failure: {exc}")
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                last_error = TransportError(f"malformed completion response: {exc}")
            except TransportError as exc:
                if response.status_code < 500:
                    raise
                last_error = exc
            if attempt + 1 < self.config.transport_retries:
                time.sleep(min(0.5 * (2**attempt), 2.0))
        assert last_error is not None
        raise last_error


def extract_action_text(reply: str) -> str:
    """A bare action object, or the last fenced code block of a prose reply."""
    blocks = _FENCE_RE.findall(reply)
    if blocks:
        return blocks[-1].strip()
    return reply.strip()


class LlmExecutor:
    """Delegates each step to a remote model, enforcing the action schema."""

    def __init__(self, client: ChatClient, max_retries: int = 3):
        self.client = client
        self.max_retries = max_retries
        self.descriptor = ExecutorDescriptor(name=f"llm:{client.config.model}", deterministic=False)

    def next_step(self, ctx: ExecContext) -> Action:
        return llm_next_step(ctx, self.client, self.max_retries)


def llm_next_step(ctx: ExecContext, client: ChatClient, max_retries: int = 3) -> Action:
    """One schema-validated action from the remote model, retrying on bad replies."""
    messages = [{"role": "user", "content": render_prompt(ctx)}]
    errors: list[str] = []
    for _ in range(max_retries):
        reply = client.complete(messages)
        candidate = extract_action_text(reply)
        try:
            return parse_action(candidate, ctx.function)
        except SchemaError as exc:
            errors.append(str(exc))
            messages.append({"role": "assistant", "content": reply})
            messages.append(
                {
                    "role": "user",
                    "content": (
                        f"That reply was rejected: {exc}. "
                        "Answer again with exactly one valid JSON action object and nothing else."
                    ),
                }
            )
    raise ExecutorFailure(
        f"no valid action after {max_retries} attempts; validation errors: " + " | ".join(errors)
    )
