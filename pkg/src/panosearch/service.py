"""HTTP service: episodes, rendering, task annotation, reports.

JSON over HTTP, angles in decimal degrees, images as PNG (raw bytes from
/render, base64 inside observation payloads). Episodes are addressed by
opaque ids and persisted as they run, so external trainers can hammer the
service with parallel rollouts and replay anything later. Per-episode
operations serialize on an episode lock; rendering across episodes is
bounded by a worker semaphore.
"""

from __future__ import annotations

import base64
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query, Response

from panosearch.actions import Invalid, Rotate, Submit, render_action
from panosearch.env import Episode, EpisodeConfig, Observation
from panosearch.geometry import Direction
from panosearch.harness import REPORT_FILENAME
from panosearch.parsing import parse_response
from panosearch.projection import (
    Panorama,
    ViewSpec,
    backproject_bbox,
    direction_to_pixel,
    load_panorama,
    overlay_crosshair,
    png_bytes,
    render_view,
)
from panosearch.records import (
    EpisodeRecord,
    RecordWriter,
    TerminalInfo,
    TurnEntry,
    image_relpath,
    now,
    reward_dict,
)
from panosearch.scoring import episode_reward
from panosearch.tasks import (
    Dataset,
    ManifestError,
    PanoramaStore,
    TaskInstance,
    instance_from_record,
    instance_to_record,
    parse_dataset,
    write_dataset,
)


@dataclass(frozen=True)
class ServiceConfig:
    dataset_path: Path
    records_dir: Path
    runs_root: Path | None = None  # where benchmark runs live, for /report
    view: ViewSpec = field(default_factory=ViewSpec)
    max_turns: int = 10
    history_window: int = 5
    max_render_workers: int = 4
    save_images: bool = True


class _LiveEpisode:
    def __init__(self, episode_id: str, task: TaskInstance, episode: Episode):
        self.episode_id = episode_id
        self.task = task
        self.episode = episode
        self.lock = threading.Lock()
        self.responses: list[str] = []
        self.record = EpisodeRecord(
            episode_id=episode_id,
            task_id=task.id,
            task_type=task.task_type,
            difficulty=task.difficulty.level,
            start_index=episode.start_index,
            start_yaw_deg=task.start_orientations[episode.start_index].yaw_deg,
            start_pitch_deg=task.start_orientations[episode.start_index].pitch_deg,
            reset_image_path=None,
        )


def _observation_payload(obs: Observation) -> dict:
    return {
        "image_png_b64": base64.b64encode(png_bytes(obs.image.pixels)).decode("ascii"),
        "feedback": obs.feedback_text,
        "valid_action": obs.valid_action_text,
        "direction": {"yaw_deg": obs.direction.yaw_deg, "pitch_deg": obs.direction.pitch_deg},
        "turn": obs.turn,
        "done": obs.done,
    }


def _parse_view_spec(body: dict | None, default: ViewSpec) -> ViewSpec:
    if not body:
        return default
    return ViewSpec(
        width_px=int(body.get("width_px", default.width_px)),
        height_px=int(body.get("height_px", default.height_px)),
        hfov_deg=float(body.get("hfov_deg", default.hfov_deg)),
    )


def create_app(config: ServiceConfig) -> FastAPI:
    dataset = parse_dataset(config.dataset_path)
    store = PanoramaStore(dataset)
    state: dict[str, _LiveEpisode] = {}
    state_lock = threading.Lock()
    tasks_lock = threading.Lock()
    render_slots = threading.Semaphore(config.max_render_workers)
    writer = RecordWriter(config.records_dir)
    dataset_holder = {"dataset": dataset}

    app = FastAPI(title="panosearch service")

    def current_dataset() -> Dataset:
        return dataset_holder["dataset"]

    def find_task(task_id: str) -> TaskInstance:
        try:
            return current_dataset().by_id(task_id)
        except KeyError:
            raise HTTPException(404, f"unknown task {task_id!r}") from None

    def resolve_panorama(ref: str) -> Panorama:
        ds = current_dataset()
        try:
            task = ds.by_id(ref)
            return store.for_task(task)
        except KeyError:
            pass
        path = (ds.root or Path(".")) / ref
        if not path.exists():
            raise HTTPException(404, f"unknown panorama {ref!r}")
        return load_panorama(path)

    def get_episode(episode_id: str) -> _LiveEpisode:
        with state_lock:
            live = state.get(episode_id)
        if live is None:
            raise HTTPException(404, f"unknown episode {episode_id!r}")
        return live

    @app.post("/episodes")
    def create_episode(body: dict = Body(...)):
        task = find_task(str(body.get("task_id", "")))
        start_index = int(body.get("start_index", 0))
        cfg_body = body.get("config") or {}
        episode_config = EpisodeConfig(
            max_turns=int(cfg_body.get("max_turns", config.max_turns)),
            view=_parse_view_spec(cfg_body.get("view"), config.view),
            history_window=int(cfg_body.get("history_window", config.history_window)),
        )
        try:
            episode = Episode(task, start_index, episode_config, store.for_task(task))
        except (ValueError, FileNotFoundError) as exc:
            raise HTTPException(422, str(exc)) from exc
        episode_id = uuid.uuid4().hex
        live = _LiveEpisode(episode_id, task, episode)
        with render_slots:
            obs = episode.reset()
        if config.save_images:
            rel = image_relpath(episode_id, 0)
            from panosearch.projection import save_png

            save_png(obs.image.pixels, config.records_dir / rel)
            live.record = EpisodeRecord(
                **{**vars(live.record), "reset_image_path": rel}
            )
        with state_lock:
            state[episode_id] = live
        writer.begin_episode(live.record)
        return {"episode_id": episode_id, "observation": _observation_payload(obs)}

    @app.post("/episodes/{episode_id}/step")
    def step_episode(episode_id: str, body: dict = Body(...)):
        live = get_episode(episode_id)
        raw = None
        if "raw_response" in body:
            raw = str(body["raw_response"])
            action = parse_response(raw).action
        elif "action" in body:
            spec = body["action"]
            kind = str(spec.get("type", ""))
            if kind == "rotate":
                action = Rotate(int(spec["yaw"]), int(spec["pitch"]))
            elif kind == "submit":
                action = Submit(int(spec["yaw"]), int(spec["pitch"]))
            else:
                action = Invalid(json.dumps(spec, sort_keys=True))
            raw = render_action(action) if not isinstance(action, Invalid) else action.raw_text
        else:
            raise HTTPException(422, "body needs raw_response or action")

        with live.lock:
            if live.episode.terminated:
                raise HTTPException(409, "episode already terminated")
            live.responses.append(raw)
            with render_slots:
                obs, done = live.episode.step(action, response_text=raw)
            image = None
            if config.save_images:
                from panosearch.projection import save_png

                image = image_relpath(episode_id, obs.turn)
                save_png(obs.image.pixels, config.records_dir / image)
            entry = TurnEntry(
                turn=obs.turn,
                yaw_deg=obs.direction.yaw_deg,
                pitch_deg=obs.direction.pitch_deg,
                action_raw=raw,
                action_parsed=(
                    render_action(action) if isinstance(action, (Rotate, Submit)) else None
                ),
                feedback=obs.feedback_text,
                image_path=image,
                timestamp=now(),
            )
            live.record.turns.append(entry)
            writer.turn(episode_id, entry)

            payload: dict = {"observation": _observation_payload(obs), "done": done}
            if done:
                success = bool(live.episode.success)
                reward = episode_reward(
                    live.task, live.episode.current, success, live.responses
                )
                info = TerminalInfo(
                    success=success,
                    reason=live.episode.reason or "turn_cap",
                    errored=False,
                    reward=reward_dict(reward),
                )
                live.record.terminal = info
                writer.terminal(episode_id, info)
                payload["success"] = success
                payload["reward"] = reward_dict(reward)
        return payload

    @app.get("/episodes/{episode_id}")
    def episode_record(episode_id: str):
        live = get_episode(episode_id)
        with live.lock:
            rec = live.record
            return {
                "episode_id": rec.episode_id,
                "task_id": rec.task_id,
                "task_type": rec.task_type,
                "difficulty": rec.difficulty,
                "start_index": rec.start_index,
                "start": {"yaw_deg": rec.start_yaw_deg, "pitch_deg": rec.start_pitch_deg},
                "reset_image_path": rec.reset_image_path,
                "turns": [vars(t) for t in rec.turns],
                "terminal": vars(rec.terminal) if rec.terminal else None,
            }

    @app.get("/render")
    def render(
        pano: str,
        yaw: float = Query(...),
        pitch: float = Query(...),
        hfov: float = Query(90.0),
        w: int = Query(...),
        h: int = Query(...),
        cross: int = Query(0),
    ):
        panorama = resolve_panorama(pano)
        try:
            spec = ViewSpec(width_px=w, height_px=h, hfov_deg=hfov)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc
        with render_slots:
            view = render_view(panorama, Direction(yaw, pitch), spec)
            if cross:
                view = overlay_crosshair(view)
        return Response(content=png_bytes(view.pixels), media_type="image/png")

    @app.get("/panoramas")
    def panoramas():
        ds = current_dataset()
        refs = sorted({inst.panorama_ref for inst in ds.instances})
        root = ds.root or Path(".")
        panos_dir = root / "panos"
        if panos_dir.is_dir():
            for p in sorted(panos_dir.glob("*.png")):
                rel = f"panos/{p.name}"
                if rel not in refs:
                    refs.append(rel)
        return {"panoramas": refs}

    @app.get("/tasks")
    def list_tasks():
        return {"tasks": [instance_to_record(inst) for inst in current_dataset().instances]}

    @app.post("/tasks")
    def save_task(body: dict = Body(...)):
        try:
            inst = instance_from_record(body)
        except ManifestError as exc:
            raise HTTPException(422, str(exc)) from exc
        with tasks_lock:
            ds = current_dataset()
            root = ds.root or Path(".")
            if not (root / inst.panorama_ref).exists():
                raise HTTPException(422, f"panorama_ref {inst.panorama_ref!r} not found")
            replaced = any(existing.id == inst.id for existing in ds.instances)
            instances = tuple(e for e in ds.instances if e.id != inst.id) + (inst,)
            updated = Dataset(
                instances=instances,
                split=ds.split,
                manifest_version=ds.manifest_version,
                root=ds.root,
            )
            write_dataset(updated, config.dataset_path)
            dataset_holder["dataset"] = updated
        return {"saved": instance_to_record(inst), "replaced": replaced}

    @app.post("/tasks/{task_id}/backproject")
    def backproject(task_id: str, body: dict = Body(...)):
        vd = body.get("view_dir") or {}
        view_dir = Direction(float(vd.get("yaw_deg", 0)), float(vd.get("pitch_deg", 0)))
        spec = _parse_view_spec(body.get("spec"), config.view)
        rect = body.get("rect_px")
        if not rect or len(rect) != 4:
            raise HTTPException(422, "rect_px must be [x0, y0, x1, y1]")
        try:
            box = backproject_bbox(view_dir, spec, tuple(float(v) for v in rect))
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc
        return {
            "target": {
                "yaw_deg": box.center.yaw_deg,
                "pitch_deg": box.center.pitch_deg,
                "width_deg": box.width_deg,
                "height_deg": box.height_deg,
            }
        }

    @app.post("/project")
    def project(body: dict = Body(...)):
        vd = body.get("view_dir") or {}
        view_dir = Direction(float(vd.get("yaw_deg", 0)), float(vd.get("pitch_deg", 0)))
        spec = _parse_view_spec(body.get("spec"), config.view)
        out = []
        for d in body.get("directions", []):
            px = direction_to_pixel(
                view_dir, spec, Direction(float(d["yaw_deg"]), float(d["pitch_deg"]))
            )
            out.append(None if px is None else [px[0], px[1]])
        return {"pixels": out}

    @app.get("/report")
    def report(run: str):
        if config.runs_root is None:
            raise HTTPException(404, "service has no runs root configured")
        path = config.runs_root / run / REPORT_FILENAME
        if not path.exists():
            raise HTTPException(404, f"no report for run {run!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "tasks": len(current_dataset().instances)}

    return app


def serve(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8800) -> None:
    """Run the service until interrupted; records flush line by line."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="info")
