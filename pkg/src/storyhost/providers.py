"""Language-model provider backends behind one call: complete(prompt) -> text.

The scripted backend is fully deterministic and drives every test and
simulation; the HTTP backend talks to a real completion service.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx

from .errors import ProviderUnavailable

DEFAULT_REPLY = "I'm not sure what to say to that."


class ChatProvider(Protocol):
    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class ScriptedRule:
    pattern: str
    reply: str


class ScriptedProvider:
    """Pattern-matched canned replies. Rules are regexes searched
    case-insensitively, in order; first hit wins.

    Prompts here follow the pipeline's rendering convention, where the new
    message arrives as the final ``User:`` line — rules are matched against
    that line so a rule reacts to what was just said, not to story recap
    higher up the prompt. A prompt without ``User:`` lines is matched whole.
    """

    def __init__(self, rules: Sequence[ScriptedRule] = (),
                 default_reply: str = DEFAULT_REPLY):
        self.rules = tuple(rules)
        self.default_reply = default_reply
        self._compiled = tuple(re.compile(r.pattern, re.IGNORECASE) for r in self.rules)

    def complete(self, prompt: str) -> str:
        target = prompt
        if "User: " in prompt:
            target = prompt.rsplit("User: ", 1)[-1]
            if "\n\n" in target:  # drop the character-name cue
                target = target.rsplit("\n\n", 1)[0]
        for rule, pattern in zip(self.rules, self._compiled):
            if pattern.search(target):
                return rule.reply
        return self.default_reply


class HTTPChatProvider:
    """Remote completion service speaking ``POST url {"prompt": ..., **params}
    -> {"text": ...}``. Sampling parameters are passed through untouched."""

    def __init__(self, url: str, *, api_key: str | None = None,
                 api_key_env: str | None = None,
                 params: dict | None = None, timeout: float = 30.0):
        self.url = url
        self.api_key = api_key or (os.environ.get(api_key_env) if api_key_env else None)
        self.params = dict(params or {})
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {"prompt": prompt, **self.params}
        try:
            resp = httpx.post(self.url, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            return str(resp.json()["text"])
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"completion service failed: {exc}") from exc
