"""Closed-loop search episodes over a panorama.

One episode = one task instance at one start orientation. Rotations wrap
yaw and clamp pitch, submissions are judged at the current direction (the
echoed arguments are not trusted), invalid responses consume a turn, and
hitting the turn cap without a submission terminates as a failure. Every
observation is rendered with the center crosshair already drawn.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from panosearch.actions import Action, Invalid, Rotate, Submit, render_action
from panosearch.geometry import Direction, ToleranceSpec
from panosearch.projection import Panorama, ViewImage, ViewSpec, overlay_crosshair, render_view
from panosearch.scoring import judge_success
from panosearch.tasks import TaskInstance

ROTATE_FEEDBACK = (
    "Last action is executed successfully, your current direction (yaw,pitch) is ({yaw},{pitch})."
)
SUCCESS_FEEDBACK = "Success"
FAILURE_FEEDBACK = "Failure"
INVALID_FEEDBACK = "Invalid action."

REASON_SUBMITTED = "submitted"
REASON_TURN_CAP = "turn_cap"

INVALID_ACTION_POLICIES = ("consume_turn_and_report",)


@dataclass(frozen=True)
class EpisodeConfig:
    max_turns: int = 10
    view: ViewSpec = field(default_factory=ViewSpec)
    history_window: int = 5
    invalid_action_policy: str = "consume_turn_and_report"

    def __post_init__(self) -> None:
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")
        if self.history_window < 1:
            raise ValueError("history_window must be >= 1")
        if self.invalid_action_policy not in INVALID_ACTION_POLICIES:
            raise ValueError(f"unknown invalid_action_policy {self.invalid_action_policy!r}")


@dataclass(frozen=True)
class Observation:
    """What the agent sees next: rendered view plus the user-prompt slots."""

    image: ViewImage
    feedback_text: str
    valid_action_text: str
    direction: Direction
    turn: int
    done: bool


@dataclass(frozen=True)
class TurnRecord:
    """One completed turn: what was seen, what was answered, what happened."""

    turn: int  # 1-based
    observation: Observation  # the observation this turn's response conditioned on
    response_text: str | None
    action: Action
    feedback: str  # feedback produced by the action
    direction_after: Direction


def format_direction_feedback(d: Direction) -> str:
    yaw = int(round(d.yaw_deg)) % 360
    pitch = int(round(d.pitch_deg))
    return ROTATE_FEEDBACK.format(yaw=yaw, pitch=pitch)


class Episode:
    """Single-writer episode state machine; distinct episodes are independent."""

    def __init__(
        self,
        task: TaskInstance,
        start_index: int,
        config: EpisodeConfig,
        panorama: Panorama,
        tolerance: ToleranceSpec | None = None,
    ):
        if not 0 <= start_index < len(task.start_orientations):
            raise ValueError(
                f"start_index {start_index} out of range for {len(task.start_orientations)} starts"
            )
        self.task = task
        self.start_index = start_index
        self.config = config
        self.panorama = panorama
        self.tolerance = tolerance if tolerance is not None else ToleranceSpec.for_task_type(
            task.task_type
        )
        self.current: Direction = task.start_orientations[start_index]
        self.turn = 0
        self.history: list[TurnRecord] = []
        self.terminated = False
        self.success: bool | None = None
        self.reason: str | None = None
        self._pending_obs: Observation | None = None

    def _render(self, feedback: str, valid_action: str, done: bool) -> Observation:
        view = overlay_crosshair(render_view(self.panorama, self.current, self.config.view))
        return Observation(
            image=view,
            feedback_text=feedback,
            valid_action_text=valid_action,
            direction=self.current,
            turn=self.turn,
            done=done,
        )

    def reset(self) -> Observation:
        """(Re)start at the annotated orientation; feedback starts empty."""
        self.current = self.task.start_orientations[self.start_index]
        self.turn = 0
        self.history = []
        self.terminated = False
        self.success = None
        self.reason = None
        self._pending_obs = self._render(feedback="", valid_action="None", done=False)
        return self._pending_obs

    def step(self, action: Action, response_text: str | None = None) -> tuple[Observation, bool]:
        """Apply one action; returns the next observation and the done flag."""
        if self._pending_obs is None:
            raise RuntimeError("episode not reset")
        if self.terminated:
            raise RuntimeError("episode already terminated")

        seen = self._pending_obs
        self.turn += 1
        valid_action = "None"

        if isinstance(action, Rotate):
            self.current = Direction(
                self.current.yaw_deg + action.dyaw_deg,
                self.current.pitch_deg + action.dpitch_deg,
            )
            feedback = format_direction_feedback(self.current)
            valid_action = render_action(action)
            if self.turn >= self.config.max_turns:
                self.terminated = True
                self.success = False
                self.reason = REASON_TURN_CAP
        elif isinstance(action, Submit):
            # judged at the current direction; the echoed angles are ignored
            self.terminated = True
            self.success = judge_success(self.current, self.task, self.tolerance)
            self.reason = REASON_SUBMITTED
            feedback = SUCCESS_FEEDBACK if self.success else FAILURE_FEEDBACK
            valid_action = render_action(action)
        elif isinstance(action, Invalid):
            feedback = INVALID_FEEDBACK
            if self.turn >= self.config.max_turns:
                self.terminated = True
                self.success = False
                self.reason = REASON_TURN_CAP
        else:
            raise TypeError(f"unknown action {action!r}")

        obs = self._render(feedback=feedback, valid_action=valid_action, done=self.terminated)
        self.history.append(
            TurnRecord(
                turn=self.turn,
                observation=seen,
                response_text=response_text,
                action=action,
                feedback=feedback,
                direction_after=self.current,
            )
        )
        self._pending_obs = obs
        return obs, self.terminated

    @property
    def pending_observation(self) -> Observation:
        if self._pending_obs is None:
            raise RuntimeError("episode not reset")
        return self._pending_obs

    def visible_history(self, window: int | None = None) -> list[TurnRecord]:
        """The latest turns that stay in context; older ones drop entirely."""
        win = self.config.history_window if window is None else window
        if win < 1:
            raise ValueError("window must be >= 1")
        return self.history[-win:]
