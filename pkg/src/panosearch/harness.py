"""Benchmark runs and SFT trajectory export.

A run iterates every instance at all four start orientations, drives the
chosen agent, persists episode records and observation images, and writes
the aggregated report next to them. Scripted agents are fully
deterministic given the run seed; remote failures mark single episodes
errored without stopping the run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from panosearch.actions import Invalid, Rotate, Submit, render_action
from panosearch.agent.policies import make_policy
from panosearch.agent.prompts import PromptBundle, build_prompt, build_trajectory
from panosearch.agent.remote import EndpointConfig, RemoteAgent, RemoteAgentError
from panosearch.env import Episode, EpisodeConfig, Observation
from panosearch.geometry import ToleranceSpec
from panosearch.parsing import parse_response, render_response
from panosearch.projection import ViewSpec, save_png
from panosearch.records import (
    EpisodeRecord,
    RecordWriter,
    TerminalInfo,
    TurnEntry,
    image_relpath,
    load_records,
    now,
    reward_dict,
)
from panosearch.scoring import (
    BenchmarkReport,
    EpisodeResult,
    aggregate_report,
    episode_reward,
    format_table,
)
from panosearch.tasks import Dataset, PanoramaStore, TaskInstance

AGENT_KINDS = ("oracle", "random", "sweep", "remote")

REPORT_FILENAME = "report.json"
REPORT_TABLE_FILENAME = "report.txt"
RUN_META_FILENAME = "run.json"


@dataclass(frozen=True)
class RunConfig:
    out_dir: Path
    seed: int = 0
    max_turns: int = 10
    history_window: int = 5
    view: ViewSpec = field(default_factory=ViewSpec)
    save_images: bool = True
    include_few_shot: bool = False
    reward_variant: str | None = None  # None: per-task default
    tolerance: ToleranceSpec | None = None  # None: per-task default


def _episode_seed(base_seed: int, episode_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{episode_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def episode_id_for(task: TaskInstance, start_index: int) -> str:
    return f"{task.id}-s{start_index}"


class _ScriptedDriver:
    def __init__(self, kind: str, seed: int, hfov_deg: float):
        self._policy = make_policy(kind, seed=seed, hfov_deg=hfov_deg)

    def respond(self, task, episode: Episode) -> str:
        think, action = self._policy.act(episode)
        return render_response(think, action)


class _RemoteDriver:
    def __init__(self, agent: RemoteAgent, config: RunConfig):
        self._agent = agent
        self._window = config.history_window
        self._few_shot = config.include_few_shot

    def respond(self, task, episode: Episode) -> str:
        bundle = PromptBundle.for_task_type(task.task_type, include_few_shot=self._few_shot)
        messages = build_prompt(
            task,
            episode.visible_history(self._window),
            episode.pending_observation,
            bundle,
            max_images=self._window,
        )
        return self._agent.complete(messages)


def _save_observation(run_dir: Path, episode_id: str, obs: Observation) -> str:
    rel = image_relpath(episode_id, obs.turn)
    save_png(obs.image.pixels, run_dir / rel)
    return rel


def run_benchmark(
    dataset: Dataset,
    agent: str,
    config: RunConfig,
    endpoint: EndpointConfig | None = None,
) -> tuple[BenchmarkReport, list[EpisodeResult]]:
    """Evaluate an agent over instances x 4 starts; persist records + report."""
    if agent not in AGENT_KINDS:
        raise ValueError(f"unknown agent {agent!r}, have {AGENT_KINDS}")
    remote_agent = None
    if agent == "remote":
        if endpoint is None:
            raise ValueError("remote agent requires an endpoint config")
        remote_agent = RemoteAgent(endpoint)

    run_dir = Path(config.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / RUN_META_FILENAME).write_text(
        json.dumps(
            {
                "agent": agent,
                "seed": config.seed,
                "max_turns": config.max_turns,
                "history_window": config.history_window,
                "view": {
                    "width_px": config.view.width_px,
                    "height_px": config.view.height_px,
                    "hfov_deg": config.view.hfov_deg,
                },
                "dataset_root": str(dataset.root) if dataset.root else None,
                "split": dataset.split,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    store = PanoramaStore(dataset)
    episode_config = EpisodeConfig(
        max_turns=config.max_turns, view=config.view, history_window=config.history_window
    )
    results: list[EpisodeResult] = []

    with RecordWriter(run_dir) as writer:
        for task in dataset.instances:
            for start_index in range(len(task.start_orientations)):
                episode_id = episode_id_for(task, start_index)
                if remote_agent is not None:
                    driver = _RemoteDriver(remote_agent, config)
                else:
                    driver = _ScriptedDriver(
                        agent, _episode_seed(config.seed, episode_id), config.view.hfov_deg
                    )
                result = _run_episode(
                    task, start_index, episode_id, driver, episode_config, store,
                    writer, run_dir, config,
                )
                results.append(result)

    if remote_agent is not None:
        remote_agent.close()

    report = aggregate_report(results, max_turns=config.max_turns)
    write_report(report, run_dir)
    return report, results


def _run_episode(
    task: TaskInstance,
    start_index: int,
    episode_id: str,
    driver,
    episode_config: EpisodeConfig,
    store: PanoramaStore,
    writer: RecordWriter,
    run_dir: Path,
    config: RunConfig,
) -> EpisodeResult:
    episode = Episode(
        task, start_index, episode_config, store.for_task(task), tolerance=config.tolerance
    )
    obs = episode.reset()
    reset_image = _save_observation(run_dir, episode_id, obs) if config.save_images else None
    start = task.start_orientations[start_index]
    writer.begin_episode(
        EpisodeRecord(
            episode_id=episode_id,
            task_id=task.id,
            task_type=task.task_type,
            difficulty=task.difficulty.level,
            start_index=start_index,
            start_yaw_deg=start.yaw_deg,
            start_pitch_deg=start.pitch_deg,
            reset_image_path=reset_image,
        )
    )

    responses: list[str] = []
    errored = False
    done = False
    while not done:
        try:
            response = driver.respond(task, episode)
        except RemoteAgentError:
            errored = True
            break
        parsed = parse_response(response)
        responses.append(response)
        obs, done = episode.step(parsed.action, response_text=response)
        image = _save_observation(run_dir, episode_id, obs) if config.save_images else None
        writer.turn(
            episode_id,
            TurnEntry(
                turn=obs.turn,
                yaw_deg=obs.direction.yaw_deg,
                pitch_deg=obs.direction.pitch_deg,
                action_raw=response,
                action_parsed=(
                    render_action(parsed.action)
                    if isinstance(parsed.action, (Rotate, Submit))
                    else None
                ),
                feedback=obs.feedback_text,
                image_path=image,
                timestamp=now(),
            ),
        )

    success = bool(episode.success) and not errored
    reason = "error" if errored else (episode.reason or "turn_cap")
    reward = episode_reward(
        task,
        episode.current,
        success,
        responses or ["<missing>"],
        variant=config.reward_variant,
        spec=config.tolerance,
    )
    writer.terminal(
        episode_id,
        TerminalInfo(success=success, reason=reason, errored=errored, reward=reward_dict(reward)),
    )
    return EpisodeResult(
        episode_id=episode_id,
        task_type=task.task_type,
        difficulty=task.difficulty.level,
        success=success,
        terminal_step=episode.turn,
        errored=errored,
    )


def write_report(report: BenchmarkReport, run_dir: str | Path) -> None:
    run_dir = Path(run_dir)
    record = report.to_record()
    (run_dir / REPORT_FILENAME).write_text(
        json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (run_dir / REPORT_TABLE_FILENAME).write_text(format_table(report), encoding="utf-8")


def reaggregate(run_dir: str | Path, max_turns: int | None = None) -> BenchmarkReport:
    """Rebuild the report from persisted records (drops in-flight episodes)."""
    run_dir = Path(run_dir)
    if max_turns is None:
        meta = json.loads((run_dir / RUN_META_FILENAME).read_text(encoding="utf-8"))
        max_turns = int(meta["max_turns"])
    complete, _dropped = load_records(run_dir)
    results = [rec.to_result() for rec in complete.values()]
    return aggregate_report(results, max_turns=max_turns)


# --- SFT export ------------------------------------------------------------


class SftExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class _TrajTurn:
    observation: Observation
    response_text: str | None


def _observation_stub(
    record: EpisodeRecord, turn_index: int, view: ViewSpec
) -> Observation:
    """Reconstruct the pre-action observation slots of turn turn_index+1."""
    if turn_index == 0:
        image = record.reset_image_path
        feedback = ""
        valid_action = "None"
        yaw, pitch = record.start_yaw_deg, record.start_pitch_deg
        turn = 0
    else:
        prev = record.turns[turn_index - 1]
        image = prev.image_path
        feedback = prev.feedback
        valid_action = prev.action_parsed if prev.action_parsed is not None else "None"
        yaw, pitch = prev.yaw_deg, prev.pitch_deg
        turn = prev.turn
    from panosearch.geometry import Direction

    return Observation(
        image=image,  # a relative path; carriers resolve it
        feedback_text=feedback,
        valid_action_text=valid_action,
        direction=Direction(yaw, pitch),
        turn=turn,
        done=False,
    )


def export_sft(
    run_dir: str | Path,
    dataset: Dataset,
    out_path: str | Path,
    *,
    only_success: bool = True,
    include_few_shot: bool = False,
) -> int:
    """Write one SFT trajectory per finished episode; returns the count.

    Conversations are rebuilt with the runtime prompt builder; images are
    referenced by path relative to the run directory. Episodes with any
    off-grammar response are skipped (their labels would not re-parse),
    and missing image files fail the export by episode id.
    """
    run_dir = Path(run_dir)
    meta = json.loads((run_dir / RUN_META_FILENAME).read_text(encoding="utf-8"))
    view = ViewSpec(**meta["view"])
    complete, _ = load_records(run_dir)

    rows = []
    for episode_id in sorted(complete):
        record = complete[episode_id]
        if only_success and not record.terminal.success:
            continue
        if any(parse_response(t.action_raw or "").well_formed is False for t in record.turns):
            continue
        task = dataset.by_id(record.task_id)

        turns = []
        for idx, entry in enumerate(record.turns):
            obs = _observation_stub(record, idx, view)
            if obs.image is None:
                raise SftExportError(f"episode {episode_id}: no image for turn {idx}")
            if not (run_dir / obs.image).exists():
                raise SftExportError(
                    f"episode {episode_id}: missing image file {obs.image}"
                )
            turns.append(_TrajTurn(obs, entry.action_raw))
        bundle = PromptBundle.for_task_type(task.task_type, include_few_shot=include_few_shot)
        conversation = build_trajectory(task, turns, bundle)
        labels = [
            {"think": parse_response(t.action_raw).think_text, "action": t.action_parsed}
            for t in record.turns
        ]
        rows.append(
            {
                "episode_id": episode_id,
                "task_id": record.task_id,
                "conversation": [
                    {
                        "role": msg["role"],
                        "content": [
                            part
                            if part["type"] == "text"
                            else {"type": "image", "image": part["image"]}
                            for part in msg["content"]
                        ],
                    }
                    for msg in conversation
                ],
                "labels": labels,
            }
        )

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")
    return len(rows)
