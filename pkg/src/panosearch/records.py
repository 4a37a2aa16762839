"""Episode persistence: append-only turn log plus PNG observations.

Every line is flushed as written, so an interrupted run loses at most the
episode that was in flight; loading simply drops episodes that never got
their terminal line. Images land in ``images/{episode_id}/turn_{t}.png``
with turn 0 being the reset observation.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from panosearch.scoring import EpisodeResult, RewardBreakdown

RECORDS_FILENAME = "records.jsonl"
IMAGES_DIRNAME = "images"


@dataclass(frozen=True)
class TurnEntry:
    turn: int  # 1-based
    yaw_deg: float  # direction after the action
    pitch_deg: float
    action_raw: str | None  # the agent's verbatim response text
    action_parsed: str | None  # grammar form, or None when invalid
    feedback: str  # feedback the action produced
    image_path: str | None  # post-action observation, relative to run dir
    timestamp: float


@dataclass(frozen=True)
class TerminalInfo:
    success: bool
    reason: str
    errored: bool
    reward: dict  # RewardBreakdown fields


@dataclass
class EpisodeRecord:
    episode_id: str
    task_id: str
    task_type: str
    difficulty: str
    start_index: int
    start_yaw_deg: float
    start_pitch_deg: float
    reset_image_path: str | None
    turns: list[TurnEntry] = field(default_factory=list)
    terminal: TerminalInfo | None = None

    def to_result(self) -> EpisodeResult:
        if self.terminal is None:
            raise ValueError(f"episode {self.episode_id} has no terminal record")
        return EpisodeResult(
            episode_id=self.episode_id,
            task_type=self.task_type,
            difficulty=self.difficulty,
            success=self.terminal.success,
            terminal_step=len(self.turns),
            errored=self.terminal.errored,
        )


class RecordWriter:
    """Serializes one run's episodes to line-delimited records."""

    def __init__(self, run_dir: str | Path):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.run_dir / RECORDS_FILENAME, "a", encoding="utf-8")

    def _emit(self, record: dict) -> None:
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()

    def begin_episode(self, record: EpisodeRecord) -> None:
        self._emit(
            {
                "kind": "episode",
                "episode_id": record.episode_id,
                "task_id": record.task_id,
                "task_type": record.task_type,
                "difficulty": record.difficulty,
                "start_index": record.start_index,
                "start_yaw_deg": record.start_yaw_deg,
                "start_pitch_deg": record.start_pitch_deg,
                "reset_image_path": record.reset_image_path,
            }
        )

    def turn(self, episode_id: str, entry: TurnEntry) -> None:
        self._emit({"kind": "turn", "episode_id": episode_id, **asdict(entry)})

    def terminal(self, episode_id: str, info: TerminalInfo) -> None:
        self._emit({"kind": "terminal", "episode_id": episode_id, **asdict(info)})

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def reward_dict(breakdown: RewardBreakdown) -> dict:
    return {
        "r_corr": breakdown.r_corr,
        "r_form": breakdown.r_form,
        "r_dist": breakdown.r_dist,
        "total": breakdown.total,
        "variant": breakdown.variant,
    }


def load_records(run_dir: str | Path) -> tuple[dict[str, EpisodeRecord], int]:
    """Read back a run; returns (complete episodes by id, dropped count)."""
    path = Path(run_dir) / RECORDS_FILENAME
    if not path.exists():
        raise FileNotFoundError(f"no records file under {run_dir}")
    episodes: dict[str, EpisodeRecord] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = rec.pop("kind")
        eid = rec.pop("episode_id")
        if kind == "episode":
            episodes[eid] = EpisodeRecord(episode_id=eid, **rec)
        elif kind == "turn":
            episodes[eid].turns.append(TurnEntry(**rec))
        elif kind == "terminal":
            episodes[eid].terminal = TerminalInfo(**rec)
        else:
            raise ValueError(f"unknown record kind {kind!r}")
    complete = {eid: ep for eid, ep in episodes.items() if ep.terminal is not None}
    return complete, len(episodes) - len(complete)


def image_relpath(episode_id: str, turn: int) -> str:
    return f"{IMAGES_DIRNAME}/{episode_id}/turn_{turn}.png"


def now() -> float:
    return time.time()
