"""Prompt construction for the search loop.

The texts below are the protocol: golden-fixture tests pin them byte for
byte, so any edit is a protocol change. The rotate description fixes the
known sign typo in circulation ("< 0 means rotate to the right"); pass
``verbatim_sign_typo=True`` to reproduce the uncorrected text exactly.

A prompt is a list of chat messages; message content is a list of parts,
each ``{"type": "text", "text": ...}`` or ``{"type": "image", "image":
ViewImage | path}``. Carriers (remote client, SFT export) decide how to
encode image parts.
"""

from __future__ import annotations

from dataclasses import dataclass

from panosearch.env import Observation, TurnRecord
from panosearch.tasks import TaskInstance

SYSTEM_TEXT_HOS = (
    "You are a robot and perform object searching tasks according to instructions. "
    "Your goal is to rotate the camera to center the target object in the camera view, "
    "and then submit the task. The camera center is presented as a green cross in the picture."
)

SYSTEM_TEXT_HPS = (
    "You are a robot and perform navigation tasks according to instructions. "
    "Your goal is to turn your camera center to the target direction you need to move towards "
    "to reach the target location. The camera center is presented as a green cross in the picture. "
    "Don't move in the unavailable direction, such as obstacles or gaps."
)

_ACTIONS_TEXT_TEMPLATE = (
    "Actions you can take: rotate(yaw:int,pitch:int), submit(yaw:int,pitch:int)\n"
    "rotate(yaw:int,pitch:int): rotate the camera in the yaw and pitch direction relative to "
    "the current direction. Yaw is the rotation angle in the x-y plane, pitch is the rotation "
    "angle in the y-z plane. Yaw angle {right_sign} 0 means rotate to the right, yaw angle < 0 "
    "means rotate to the left. Pitch angle > 0 means look up, pitch angle < 0 means look down.\n"
    "submit(yaw:int,pitch:int): submit the task with the current camera view with the target "
    "object at the center, yaw and pitch are the angles of the current camera view, which is "
    "reported by the environment.\n"
    "You can only take one action at a time. The instruction will be provided with each "
    "observation. Look at the image carefully to complete the instruction."
)

FORMAT_REMINDER = (
    "You can take 1 action(s) at a time. "
    "You should first give your thought process, and then your answer.\n"
    "Your response should be in the format of:\n"
    "<think>...</think><answer>...</answer>"
)

FEW_SHOT_TEXT = (
    "Example:\n"
    "Round 1:\n"
    "image_1\n"
    "<think>I need to find the coffee machine. I can see a table on on my left, a couch in "
    "front of me, and a door to the right. The coffee machine is likely on the table, which is "
    "to my left.</think><answer>rotate(-45,0)</answer>\n"
    "Round 2:\n"
    "Env_feedback: Last action is executed successfully, your current direction (yaw,pitch) "
    "is (315,0).\n"
    "image_2\n"
    "<think>From the secene, I see that by turning left 45 degrees, a kitchen table is in "
    "front of me. The coffee machine is on the left of the table and slightly lower than the "
    "camera center. I need to turn leftward and downward a little bit.</think>\n"
    "<answer>rotate(-30,-5)</answer>\n"
    "Round 3:\n"
    "Env_feedback: Last action is executed successfully, your current direction (yaw,pitch) "
    "is (285,-5).\n"
    "image_3\n"
    "<think>The coffee machine is right now at the center of my camera, I think I can submit "
    "the task.</think>\n"
    "<answer>submit(285,-5)</answer>\n"
    "Round 4:\n"
    "Env_feedback: Success\n"
    + FORMAT_REMINDER
    + "\n"
    "e.g. <think>I need to find the coffee machine. I can see a table on on my left, a couch "
    "in front of me, and a door to the right. The coffee machine is likely on the table, which "
    "is to my left.</think><answer>rotate(-45,0)</answer>"
)

USER_TEXT_BEFORE_IMAGE = (
    "After your answer, the extracted valid action is {valid_action}.\n"
    "The environment feedback is: {env_feedback}\n"
    "done: {done}\n"
    "After that, the observation is:\n"
)

USER_TEXT_AFTER_IMAGE = (
    "\nHuman Instruction: {instruction}\n"
    "Decide your next action.\n" + FORMAT_REMINDER
)


@dataclass(frozen=True)
class PromptBundle:
    """The fixed texts a run uses; few-shot is off for fine-tuned models."""

    system_text: str
    few_shot: str | None
    user_before_image: str = USER_TEXT_BEFORE_IMAGE
    user_after_image: str = USER_TEXT_AFTER_IMAGE

    @classmethod
    def for_task_type(
        cls,
        task_type: str,
        *,
        include_few_shot: bool = False,
        verbatim_sign_typo: bool = False,
    ) -> "PromptBundle":
        base = SYSTEM_TEXT_HOS if task_type == "HOS" else SYSTEM_TEXT_HPS
        actions = _ACTIONS_TEXT_TEMPLATE.format(right_sign="<" if verbatim_sign_typo else ">")
        return cls(
            system_text=base + "\n\n" + actions,
            few_shot=FEW_SHOT_TEXT if include_few_shot else None,
        )


def _user_message(bundle: PromptBundle, obs: Observation, instruction: str) -> dict:
    before = bundle.user_before_image.format(
        valid_action=obs.valid_action_text,
        env_feedback=obs.feedback_text,
        done="True" if obs.done else "False",
    )
    after = bundle.user_after_image.format(instruction=instruction)
    return {
        "role": "user",
        "content": [
            {"type": "text", "text": before},
            {"type": "image", "image": obs.image},
            {"type": "text", "text": after},
        ],
    }


def build_prompt(
    task: TaskInstance,
    visible: list[TurnRecord],
    current: Observation,
    bundle: PromptBundle | None = None,
    max_images: int | None = None,
) -> list[dict]:
    """Chat messages for the next turn, over an already-windowed history.

    ``max_images`` caps the total image count including the current
    observation, dropping the oldest turns whole; pass the history window
    so the context never carries more images than the protocol allows.
    """
    if max_images is not None:
        visible = visible[-(max_images - 1) :] if max_images > 1 else []
    if bundle is None:
        bundle = PromptBundle.for_task_type(task.task_type)
    system = bundle.system_text
    if bundle.few_shot is not None:
        system = system + "\n\n" + bundle.few_shot
    messages = [{"role": "system", "content": [{"type": "text", "text": system}]}]
    for record in visible:
        messages.append(_user_message(bundle, record.observation, task.instruction))
        messages.append(
            {
                "role": "assistant",
                "content": [{"type": "text", "text": record.response_text or ""}],
            }
        )
    messages.append(_user_message(bundle, current, task.instruction))
    return messages


def build_trajectory(
    task: TaskInstance,
    turns: list[TurnRecord],
    bundle: PromptBundle | None = None,
) -> list[dict]:
    """Full conversation of a finished episode: system then (user, assistant)
    per turn. Same message builder as build_prompt, so exported text matches
    what the agent actually saw."""
    if bundle is None:
        bundle = PromptBundle.for_task_type(task.task_type)
    system = bundle.system_text
    if bundle.few_shot is not None:
        system = system + "\n\n" + bundle.few_shot
    messages = [{"role": "system", "content": [{"type": "text", "text": system}]}]
    for record in turns:
        messages.append(_user_message(bundle, record.observation, task.instruction))
        messages.append(
            {
                "role": "assistant",
                "content": [{"type": "text", "text": record.response_text or ""}],
            }
        )
    return messages


def count_images(messages: list[dict]) -> int:
    return sum(
        1
        for msg in messages
        for part in msg["content"]
        if isinstance(part, dict) and part.get("type") == "image"
    )
