"""Action primitives of the search loop: rotate, submit, or unparseable.

The grammar is integer-argument ``rotate(yaw,pitch)`` / ``submit(yaw,pitch)``;
anything else an agent emits becomes :class:`Invalid` carrying the raw text.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Rotate:
    dyaw_deg: int
    dpitch_deg: int


@dataclass(frozen=True)
class Submit:
    yaw_deg: int
    pitch_deg: int


@dataclass(frozen=True)
class Invalid:
    raw_text: str


Action = Rotate | Submit | Invalid


def render_action(action: Rotate | Submit) -> str:
    """Canonical grammar text for a valid action."""
    if isinstance(action, Rotate):
        return f"rotate({action.dyaw_deg},{action.dpitch_deg})"
    if isinstance(action, Submit):
        return f"submit({action.yaw_deg},{action.pitch_deg})"
    raise TypeError(f"cannot render {action!r}")
