"""Success judgment, trajectory rewards, GRPO advantages, and reporting.

Rewards follow the rule-based scheme: 0.5 for a correct submission, 0.5
for keeping every turn of the trajectory on the response grammar, and an
optional distance-to-goal term computed from the interval distance to the
target box (radians), maximal and constant while the final direction sits
inside the box. Advantages are plain per-group reward normalization; the
clipped-ratio policy loss itself belongs to the external trainer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from panosearch.parsing import parse_response
from panosearch.geometry import (
    AngularBox,
    Direction,
    ToleranceSpec,
    effective_tolerance,
    in_tolerance_region,
    interval_distance,
)
from panosearch.tasks import HPS_LEVELS, TaskInstance

REWARD_VARIANTS = ("form_corr", "form_corr_dist", "form_dist")


def default_variant(task_type: str) -> str:
    """Path search adds the distance-to-goal term; object search does not."""
    return "form_corr_dist" if task_type == "HPS" else "form_corr"


@dataclass(frozen=True)
class RewardBreakdown:
    r_corr: float
    r_form: float
    r_dist: float
    total: float
    variant: str


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    clip_epsilon: float = 0.2
    kl_beta: float = 0.01
    std_floor: float = 1e-8

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")


def judge_success(
    submitted: Direction, task: TaskInstance, spec: ToleranceSpec | None = None
) -> bool:
    """Tolerance-region membership at the submitted direction."""
    if spec is None:
        spec = ToleranceSpec.for_task_type(task.task_type)
    return in_tolerance_region(submitted, task.target, spec)


def reward_correctness(success: bool) -> float:
    return 0.5 if success else 0.0


def reward_format(trajectory_responses: Sequence[str]) -> float:
    """0.5 only when every turn of the trajectory is on-grammar."""
    if not trajectory_responses:
        raise ValueError("trajectory must contain at least one response")
    ok = all(parse_response(text).well_formed for text in trajectory_responses)
    return 0.5 if ok else 0.0


def reward_distance(
    final: Direction, target: AngularBox, spec: ToleranceSpec
) -> float:
    """Distance-to-goal reward from the two per-axis interval distances.

    Both axes use the effective tolerance as the interval half-width; yaw
    distances wrap, pitch distances run on the clamped segment.
    """
    tau_yaw_deg, tau_pitch_deg = effective_tolerance(target, spec)
    # interval_distance needs tau < pi; a 360-degree box saturates at it
    tau_yaw = min(math.radians(tau_yaw_deg), math.pi - 1e-12)
    tau_pitch = min(math.radians(tau_pitch_deg), math.pi - 1e-12)
    d_yaw = interval_distance(
        math.radians(final.yaw_deg), math.radians(target.center.yaw_deg), tau_yaw
    )
    d_pitch = interval_distance(
        math.radians(final.pitch_deg),
        math.radians(target.center.pitch_deg),
        tau_pitch,
        circular=False,
    )
    return (math.pi - d_yaw + math.pi - d_pitch) / (2.0 * math.pi)


def compose_reward(
    variant: str, *, r_corr: float = 0.0, r_form: float = 0.0, r_dist: float = 0.0
) -> RewardBreakdown:
    """Sum the parts a variant uses; unused parts are recorded as 0."""
    if variant == "form_corr":
        parts = (r_corr, r_form, 0.0)
    elif variant == "form_corr_dist":
        parts = (r_corr, r_form, r_dist)
    elif variant == "form_dist":
        parts = (0.0, r_form, r_dist)
    else:
        raise ValueError(f"unknown reward variant {variant!r}, have {REWARD_VARIANTS}")
    return RewardBreakdown(
        r_corr=parts[0],
        r_form=parts[1],
        r_dist=parts[2],
        total=parts[0] + parts[1] + parts[2],
        variant=variant,
    )


def episode_reward(
    task: TaskInstance,
    final: Direction,
    success: bool,
    trajectory_responses: Sequence[str],
    variant: str | None = None,
    spec: ToleranceSpec | None = None,
) -> RewardBreakdown:
    """Full per-episode breakdown with per-task-type default variant."""
    if spec is None:
        spec = ToleranceSpec.for_task_type(task.task_type)
    if variant is None:
        variant = default_variant(task.task_type)
    return compose_reward(
        variant,
        r_corr=reward_correctness(success),
        r_form=reward_format(trajectory_responses) if trajectory_responses else 0.0,
        r_dist=reward_distance(final, task.target, spec),
    )


def grpo_advantages(rewards: Sequence[float], cfg: GrpoConfig) -> list[float]:
    """Group-relative advantages: (r - mean) / population std, zero-guarded."""
    if len(rewards) != cfg.group_size:
        raise ValueError(f"expected {cfg.group_size} rewards, got {len(rewards)}")
    mean = sum(rewards) / len(rewards)
    var = sum((r - mean) ** 2 for r in rewards) / len(rewards)
    std = math.sqrt(var)
    if std < cfg.std_floor:
        return [0.0] * len(rewards)
    return [(r - mean) / std for r in rewards]


# --- benchmark aggregation -------------------------------------------------


@dataclass(frozen=True)
class EpisodeResult:
    episode_id: str
    task_type: str
    difficulty: str
    success: bool
    terminal_step: int  # 1-based turn count at termination
    errored: bool = False


@dataclass(frozen=True)
class Cell:
    success_rate: float  # percent
    episodes: int
    errors: int


@dataclass(frozen=True)
class TaskTypeReport:
    overall: Cell
    by_difficulty: dict[str, Cell]
    cumulative_by_step: list[float]  # percent succeeding at step <= s, s = 1..max


@dataclass(frozen=True)
class BenchmarkReport:
    per_task_type: dict[str, TaskTypeReport]
    max_turns: int

    def to_record(self) -> dict:
        return {
            "max_turns": self.max_turns,
            "task_types": {
                tt: {
                    "overall": vars(rep.overall),
                    "by_difficulty": {k: vars(v) for k, v in rep.by_difficulty.items()},
                    "cumulative_by_step": rep.cumulative_by_step,
                }
                for tt, rep in self.per_task_type.items()
            },
        }

    @classmethod
    def from_record(cls, rec: dict) -> "BenchmarkReport":
        per = {}
        for tt, body in rec["task_types"].items():
            per[tt] = TaskTypeReport(
                overall=Cell(**body["overall"]),
                by_difficulty={k: Cell(**v) for k, v in body["by_difficulty"].items()},
                cumulative_by_step=list(body["cumulative_by_step"]),
            )
        return cls(per_task_type=per, max_turns=int(rec["max_turns"]))


def _cell(results: list[EpisodeResult]) -> Cell:
    n = len(results)
    wins = sum(1 for r in results if r.success)
    errs = sum(1 for r in results if r.errored)
    return Cell(success_rate=100.0 * wins / n, episodes=n, errors=errs)


def aggregate_report(results: Iterable[EpisodeResult], max_turns: int = 10) -> BenchmarkReport:
    """Success rates by task type and difficulty plus cumulative-by-step.

    Errored or unfinished episodes count as failures; empty cells are
    omitted. Input order never matters: results are canonically sorted by
    episode id first.
    """
    ordered = sorted(results, key=lambda r: r.episode_id)
    per: dict[str, TaskTypeReport] = {}
    for task_type in ("HOS", "HPS"):
        mine = [r for r in ordered if r.task_type == task_type]
        if not mine:
            continue
        by_difficulty = {}
        for level in HPS_LEVELS:
            cell_results = [r for r in mine if r.difficulty == level]
            if cell_results:
                by_difficulty[level] = _cell(cell_results)
        cumulative = [
            100.0 * sum(1 for r in mine if r.success and r.terminal_step <= s) / len(mine)
            for s in range(1, max_turns + 1)
        ]
        per[task_type] = TaskTypeReport(
            overall=_cell(mine), by_difficulty=by_difficulty, cumulative_by_step=cumulative
        )
    return BenchmarkReport(per_task_type=per, max_turns=max_turns)


def format_table(report: BenchmarkReport) -> str:
    """Aligned human-readable table: Overall / Easy / Medium / Hard [/ Extreme]."""
    lines = []
    for task_type, rep in report.per_task_type.items():
        levels = [lv for lv in HPS_LEVELS if lv in rep.by_difficulty]
        header = ["Task", "Overall"] + levels + ["Episodes", "Errors"]
        row = [
            task_type,
            f"{rep.overall.success_rate:.2f}",
            *(f"{rep.by_difficulty[lv].success_rate:.2f}" for lv in levels),
            str(rep.overall.episodes),
            str(rep.overall.errors),
        ]
        widths = [max(len(a), len(b)) for a, b in zip(header, row)]
        lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        steps = "  ".join(f"{v:.1f}" for v in rep.cumulative_by_step)
        lines.append(f"{task_type} cumulative by step: {steps}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
