"""Response grammar: <think>...</think><answer>one action</answer>.

Only whitespace may surround the tags, the answer body must be exactly one
integer-argument action, and anything off-grammar parses to Invalid so the
episode loop can keep going.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from panosearch.actions import Action, Invalid, Rotate, Submit, render_action

_RESPONSE_RE = re.compile(
    r"\A\s*<think>(?P<think>.*?)</think>\s*<answer>(?P<answer>.*?)</answer>\s*\Z",
    re.DOTALL,
)
_ACTION_RE = re.compile(
    r"\A\s*(?P<verb>rotate|submit)\(\s*(?P<yaw>[+-]?\d+)\s*,\s*(?P<pitch>[+-]?\d+)\s*\)\s*\Z"
)


@dataclass(frozen=True)
class ParsedResponse:
    think_text: str
    action: Action
    well_formed: bool


def parse_action_text(text: str) -> Rotate | Submit | None:
    """One action in grammar form, or None when the text is off-grammar."""
    m = _ACTION_RE.match(text)
    if m is None:
        return None
    yaw, pitch = int(m.group("yaw")), int(m.group("pitch"))
    if m.group("verb") == "rotate":
        return Rotate(yaw, pitch)
    return Submit(yaw, pitch)


def parse_response(text: str) -> ParsedResponse:
    """Extract the thought and the single action, or flag the response."""
    m = _RESPONSE_RE.match(text)
    if m is None:
        return ParsedResponse(think_text="", action=Invalid(text), well_formed=False)
    action = parse_action_text(m.group("answer"))
    if action is None:
        return ParsedResponse(think_text=m.group("think"), action=Invalid(text), well_formed=False)
    return ParsedResponse(think_text=m.group("think"), action=action, well_formed=True)


def render_response(think_text: str, action: Rotate | Submit) -> str:
    """Canonical well-formed response; inverse of parse_response."""
    return f"<think>{think_text}</think><answer>{render_action(action)}</answer>"
