"""Task instances, dataset manifests, difficulty taxonomy, synthetic scenes.

A dataset manifest is UTF-8 JSON lines: a header record carrying
``manifest_version`` and ``split``, then one record per task instance with
all angles in decimal degrees and ``panorama_ref`` relative to the
manifest's directory. Unknown record fields are preserved so newer
manifests keep round-tripping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from panosearch.geometry import AngularBox, Direction, angular_diff
from panosearch.projection import Panorama, ViewSpec, load_panorama, save_png

MANIFEST_VERSION = "1"
SPLITS = ("bench", "sft", "rl")
TASK_TYPES = ("HOS", "HPS")
HOS_LEVELS = ("Easy", "Medium", "Hard")
HPS_LEVELS = ("Easy", "Medium", "Hard", "Extreme")

DEFAULT_HOS_THRESHOLDS = (0.5, 0.0)  # ratio >= 0.5 easy, invisible hard
DEFAULT_HPS_MAPPING = {
    (True, True): "Easy",
    (False, True): "Medium",
    (True, False): "Hard",
    (False, False): "Extreme",
}

SCENE_CATEGORIES = (
    "transport_hub",
    "retail",
    "street",
    "institution",
    "museum",
    "library",
)


class ManifestError(ValueError):
    """Raised on malformed dataset manifests, naming instance and field."""


def default_start_orientations() -> tuple[Direction, ...]:
    return tuple(Direction(yaw, 0.0) for yaw in (0.0, 90.0, 180.0, 270.0))


@dataclass(frozen=True)
class HpsCues:
    has_text_cue: bool
    cue_aligned: bool


@dataclass(frozen=True)
class DifficultyTag:
    level: str
    basis: str  # annotated | computed

    def __post_init__(self) -> None:
        if self.level not in HPS_LEVELS:
            raise ValueError(f"unknown difficulty level {self.level!r}")
        if self.basis not in ("annotated", "computed"):
            raise ValueError(f"unknown difficulty basis {self.basis!r}")


@dataclass(frozen=True)
class TaskInstance:
    id: str
    task_type: str
    panorama_ref: str
    instruction: str
    target: AngularBox
    start_orientations: tuple[Direction, ...]
    difficulty: DifficultyTag
    scene_category: str = ""
    hps_cues: HpsCues | None = None
    visibility_ratios: tuple[float, ...] | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.task_type not in TASK_TYPES:
            raise ValueError(f"task {self.id}: unknown task_type {self.task_type!r}")
        if len(self.start_orientations) != 4:
            raise ValueError(f"task {self.id}: need exactly 4 start orientations")
        seen = {(d.yaw_deg, d.pitch_deg) for d in self.start_orientations}
        if len(seen) != 4:
            raise ValueError(f"task {self.id}: start orientations must be pairwise distinct")
        if self.task_type == "HPS" and self.hps_cues is None:
            raise ValueError(f"task {self.id}: HPS instances must carry hps_cues")
        if self.task_type == "HOS" and self.difficulty.level == "Extreme":
            raise ValueError(f"task {self.id}: Extreme is only valid for HPS")
        if not self.instruction:
            raise ValueError(f"task {self.id}: instruction must be non-empty")


@dataclass(frozen=True)
class Dataset:
    instances: tuple[TaskInstance, ...]
    split: str
    manifest_version: str = MANIFEST_VERSION
    root: Path | None = None  # panorama_ref anchor

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")

    def by_id(self, task_id: str) -> TaskInstance:
        for inst in self.instances:
            if inst.id == task_id:
                return inst
        raise KeyError(task_id)

    def panorama_path(self, inst: TaskInstance) -> Path:
        base = self.root if self.root is not None else Path(".")
        return base / inst.panorama_ref


class PanoramaStore:
    """Loads and caches panoramas by task; rasters are shared read-only."""

    def __init__(self, dataset: Dataset):
        self._dataset = dataset
        self._cache: dict[str, Panorama] = {}

    def for_task(self, inst: TaskInstance) -> Panorama:
        if inst.panorama_ref not in self._cache:
            self._cache[inst.panorama_ref] = load_panorama(
                self._dataset.panorama_path(inst), source_id=inst.id
            )
        return self._cache[inst.panorama_ref]


# --- manifest serialization ---------------------------------------------


def _direction_record(d: Direction) -> dict:
    return {"yaw_deg": d.yaw_deg, "pitch_deg": d.pitch_deg}


def _box_record(b: AngularBox) -> dict:
    return {
        "yaw_deg": b.center.yaw_deg,
        "pitch_deg": b.center.pitch_deg,
        "width_deg": b.width_deg,
        "height_deg": b.height_deg,
    }


_KNOWN_FIELDS = (
    "id",
    "task_type",
    "panorama_ref",
    "instruction",
    "target",
    "start_orientations",
    "difficulty",
    "scene_category",
    "hps_cues",
    "visibility_ratios",
)


def instance_to_record(inst: TaskInstance) -> dict:
    rec = {
        "id": inst.id,
        "task_type": inst.task_type,
        "panorama_ref": inst.panorama_ref,
        "instruction": inst.instruction,
        "target": _box_record(inst.target),
        "start_orientations": [_direction_record(d) for d in inst.start_orientations],
        "difficulty": {"level": inst.difficulty.level, "basis": inst.difficulty.basis},
        "scene_category": inst.scene_category,
    }
    if inst.hps_cues is not None:
        rec["hps_cues"] = {
            "has_text_cue": inst.hps_cues.has_text_cue,
            "cue_aligned": inst.hps_cues.cue_aligned,
        }
    if inst.visibility_ratios is not None:
        rec["visibility_ratios"] = list(inst.visibility_ratios)
    for key in sorted(inst.extras):
        rec[key] = inst.extras[key]
    return rec


def _field(rec: dict, inst_id: str, name: str, kind=None):
    if name not in rec:
        raise ManifestError(f"instance {inst_id!r}: missing field {name}")
    value = rec[name]
    if kind is not None and not isinstance(value, kind):
        raise ManifestError(f"instance {inst_id!r}: field {name} has wrong type")
    return value


def instance_from_record(rec: dict) -> TaskInstance:
    inst_id = str(rec.get("id", "<missing id>"))
    task_type = _field(rec, inst_id, "task_type", str)

    traw = _field(rec, inst_id, "target", dict)
    try:
        target = AngularBox(
            center=Direction(float(traw["yaw_deg"]), float(traw["pitch_deg"])),
            width_deg=float(traw["width_deg"]),
            height_deg=float(traw["height_deg"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"instance {inst_id!r}: target: {exc}") from exc

    if "start_orientations" in rec:
        try:
            starts = tuple(
                Direction(float(s["yaw_deg"]), float(s["pitch_deg"]))
                for s in rec["start_orientations"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"instance {inst_id!r}: start_orientations: {exc}") from exc
    else:
        starts = default_start_orientations()

    cues = None
    if rec.get("hps_cues") is not None:
        craw = rec["hps_cues"]
        try:
            cues = HpsCues(bool(craw["has_text_cue"]), bool(craw["cue_aligned"]))
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"instance {inst_id!r}: hps_cues: {exc}") from exc

    ratios = None
    if rec.get("visibility_ratios") is not None:
        ratios = tuple(float(v) for v in rec["visibility_ratios"])

    if "difficulty" in rec:
        draw = rec["difficulty"]
        try:
            difficulty = DifficultyTag(str(draw["level"]), str(draw["basis"]))
        except (KeyError, ValueError) as exc:
            raise ManifestError(f"instance {inst_id!r}: difficulty: {exc}") from exc
    elif task_type == "HOS":
        ratio = ratios[0] if ratios else visibility_ratio(target, starts[0], ViewSpec())
        difficulty = classify_hos_difficulty(ratio)
    elif cues is not None:
        difficulty = classify_hps_difficulty(cues)
    else:
        raise ManifestError(f"instance {inst_id!r}: no difficulty and no hps_cues to derive it")

    extras = {k: v for k, v in rec.items() if k not in _KNOWN_FIELDS}
    try:
        return TaskInstance(
            id=inst_id,
            task_type=task_type,
            panorama_ref=_field(rec, inst_id, "panorama_ref", str),
            instruction=_field(rec, inst_id, "instruction", str),
            target=target,
            start_orientations=starts,
            difficulty=difficulty,
            scene_category=str(rec.get("scene_category", "")),
            hps_cues=cues,
            visibility_ratios=ratios,
            extras=extras,
        )
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc


def parse_dataset(path: str | Path, *, check_panoramas: bool = True) -> Dataset:
    """Parse and validate a manifest; errors name the instance and field."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"manifest not found: {p}")
    lines = [ln for ln in p.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ManifestError("manifest is empty (missing header record)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ManifestError(f"header: invalid JSON: {exc}") from exc
    version = str(header.get("manifest_version", ""))
    if not version:
        raise ManifestError("header: missing manifest_version")
    split = str(header.get("split", "bench"))

    instances = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {lineno}: invalid JSON: {exc}") from exc
        inst = instance_from_record(rec)
        if inst.id in seen_ids:
            raise ManifestError(f"duplicate instance id {inst.id!r}")
        seen_ids.add(inst.id)
        if check_panoramas and not (p.parent / inst.panorama_ref).exists():
            raise ManifestError(
                f"instance {inst.id!r}: panorama_ref: {inst.panorama_ref!r} not found"
            )
        instances.append(inst)
    return Dataset(
        instances=tuple(instances), split=split, manifest_version=version, root=p.parent
    )


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        json.dumps(
            {"manifest_version": dataset.manifest_version, "split": dataset.split},
            separators=(", ", ": "),
        )
    ]
    for inst in dataset.instances:
        lines.append(json.dumps(instance_to_record(inst), separators=(", ", ": ")))
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- difficulty ----------------------------------------------------------


def visibility_ratio(target: AngularBox, start: Direction, view: ViewSpec) -> float:
    """Fraction of the target's angular rectangle inside the initial view.

    The view footprint is approximated by the angular rectangle
    [start.yaw +- hfov/2] x [start.pitch +- vfov/2]; yaw overlap is
    computed on the circle.
    """
    delta = angular_diff(target.center.yaw_deg, start.yaw_deg)
    half_w = target.width_deg / 2.0
    half_v = view.hfov_deg / 2.0
    yaw_overlap = 0.0
    for k in (-360.0, 0.0, 360.0):
        lo = max(delta + k - half_w, -half_v)
        hi = min(delta + k + half_w, half_v)
        yaw_overlap += max(0.0, hi - lo)

    half_h = target.height_deg / 2.0
    half_vv = view.vfov_deg / 2.0
    lo = max(target.center.pitch_deg - half_h, start.pitch_deg - half_vv)
    hi = min(target.center.pitch_deg + half_h, start.pitch_deg + half_vv)
    pitch_overlap = max(0.0, hi - lo)

    return (yaw_overlap * pitch_overlap) / (target.width_deg * target.height_deg)


def classify_hos_difficulty(
    ratio: float, thresholds: tuple[float, float] = DEFAULT_HOS_THRESHOLDS
) -> DifficultyTag:
    t_easy, t_hard = thresholds
    if not (0.0 <= t_hard < t_easy <= 1.0):
        raise ValueError(f"need 0 <= t_hard < t_easy <= 1, got {thresholds}")
    if ratio >= t_easy:
        level = "Easy"
    elif ratio <= t_hard:
        level = "Hard"
    else:
        level = "Medium"
    return DifficultyTag(level=level, basis="computed")


def classify_hps_difficulty(
    cues: HpsCues, mapping: dict[tuple[bool, bool], str] | None = None
) -> DifficultyTag:
    table = DEFAULT_HPS_MAPPING if mapping is None else mapping
    combos = {(a, b) for a in (True, False) for b in (True, False)}
    if set(table) != combos or sorted(table.values()) != sorted(HPS_LEVELS):
        raise ValueError("mapping must cover all four cue combinations, one per level")
    return DifficultyTag(level=table[(cues.has_text_cue, cues.cue_aligned)], basis="computed")


# --- synthetic scenes -----------------------------------------------------

HOS_MARKER_COLOR = (255, 40, 230)
HPS_STRIPE_COLOR = (40, 230, 255)
HPS_STRIPE_PITCH = (-55.0, -20.0)


def _pixel_angle_grids(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    yaw = (np.arange(width) + 0.5) / width * 360.0
    pitch = 90.0 - (np.arange(height) + 0.5) / height * 180.0
    return yaw, pitch


def _background(width: int, height: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth seam-continuous texture with rng-drawn phases."""
    yaw_deg, pitch_deg = _pixel_angle_grids(width, height)
    yaw = np.radians(yaw_deg)
    pitch = np.radians(pitch_deg)
    cp = np.cos(pitch)[:, None]
    img = np.empty((height, width, 3), dtype=np.float64)
    for c in range(3):
        k = int(rng.integers(1, 5))
        phase = rng.uniform(0, 2 * math.pi)
        vert = rng.uniform(0.5, 2.0)
        img[:, :, c] = 128 + 70 * np.sin(k * yaw + phase)[None, :] * cp * np.cos(
            vert * pitch
        )[:, None]
    return np.clip(img, 16, 240).astype(np.uint8)


def _paint_disc(img: np.ndarray, center: Direction, radius_deg: float, color) -> None:
    h, w = img.shape[:2]
    yaw_deg, pitch_deg = _pixel_angle_grids(w, h)
    yaw = np.radians(yaw_deg)
    pitch = np.radians(pitch_deg)
    cp = np.cos(pitch)[:, None]
    px = cp * np.sin(yaw)[None, :]
    py = np.broadcast_to(np.sin(pitch)[:, None], (h, w))
    pz = cp * np.cos(yaw)[None, :]
    cyaw = math.radians(center.yaw_deg)
    cpitch = math.radians(center.pitch_deg)
    cvec = (
        math.cos(cpitch) * math.sin(cyaw),
        math.sin(cpitch),
        math.cos(cpitch) * math.cos(cyaw),
    )
    dot = px * cvec[0] + py * cvec[1] + pz * cvec[2]
    img[dot >= math.cos(math.radians(radius_deg))] = color


def _paint_stripe(img: np.ndarray, heading_deg: float, half_width_deg: float, color) -> None:
    h, w = img.shape[:2]
    yaw_deg, pitch_deg = _pixel_angle_grids(w, h)
    dyaw = np.abs((yaw_deg - heading_deg + 180.0) % 360.0 - 180.0)
    in_yaw = dyaw <= half_width_deg
    in_pitch = (pitch_deg >= HPS_STRIPE_PITCH[0]) & (pitch_deg <= HPS_STRIPE_PITCH[1])
    img[np.outer(in_pitch, in_yaw)] = color


def hos_marker_box(center: Direction, radius_deg: float) -> AngularBox:
    """Tight angular bbox of a great-circle disc (valid away from the poles)."""
    half_w = math.degrees(
        math.asin(
            min(1.0, math.sin(math.radians(radius_deg)) / math.cos(math.radians(center.pitch_deg)))
        )
    )
    return AngularBox(center=center, width_deg=2 * half_w, height_deg=2 * radius_deg)


def generate_synthetic(
    seed: int,
    n_hos: int,
    n_hps: int,
    out_dir: str | Path,
    pano_size: tuple[int, int] = (1024, 512),
    split: str = "bench",
) -> tuple[Dataset, Path]:
    """Deterministic ground-truth scenes: discs for HOS, floor stripes for HPS.

    Writes one panorama per instance under ``out_dir/panos`` plus a
    manifest, and returns the parsed-equivalent dataset. Same seed, same
    bytes.
    """
    if n_hos < 0 or n_hps < 0:
        raise ValueError("instance counts must be >= 0")
    out = Path(out_dir)
    width, height = pano_size
    rng = np.random.default_rng(seed)
    view = ViewSpec()

    instances: list[TaskInstance] = []
    for i in range(n_hos):
        inst_id = f"hos-{i:04d}"
        img = _background(width, height, rng)
        center = Direction(rng.uniform(0.0, 360.0), rng.uniform(-55.0, 55.0))
        radius = float(rng.uniform(2.5, 7.0))
        _paint_disc(img, center, radius, HOS_MARKER_COLOR)
        target = hos_marker_box(center, radius)
        base = float(rng.integers(0, 90))
        starts = tuple(Direction(base + k * 90.0, 0.0) for k in range(4))
        ratios = tuple(visibility_ratio(target, s, view) for s in starts)
        ref = f"panos/{inst_id}.png"
        save_png(img, out / ref)
        instances.append(
            TaskInstance(
                id=inst_id,
                task_type="HOS",
                panorama_ref=ref,
                instruction="Find the magenta marker disc and center it in your view.",
                target=target,
                start_orientations=starts,
                difficulty=classify_hos_difficulty(ratios[0]),
                scene_category=SCENE_CATEGORIES[i % len(SCENE_CATEGORIES)],
                visibility_ratios=ratios,
            )
        )

    for i in range(n_hps):
        inst_id = f"hps-{i:04d}"
        img = _background(width, height, rng)
        heading = float(rng.uniform(0.0, 360.0))
        half_width = float(rng.uniform(2.0, 5.0))
        _paint_stripe(img, heading, half_width, HPS_STRIPE_COLOR)
        mid_pitch = (HPS_STRIPE_PITCH[0] + HPS_STRIPE_PITCH[1]) / 2.0
        target = AngularBox(
            center=Direction(heading, mid_pitch),
            width_deg=2 * half_width,
            height_deg=HPS_STRIPE_PITCH[1] - HPS_STRIPE_PITCH[0],
        )
        cues = HpsCues(
            has_text_cue=bool(rng.integers(0, 2)), cue_aligned=bool(rng.integers(0, 2))
        )
        base = float(rng.integers(0, 90))
        starts = tuple(Direction(base + k * 90.0, 0.0) for k in range(4))
        ref = f"panos/{inst_id}.png"
        save_png(img, out / ref)
        instances.append(
            TaskInstance(
                id=inst_id,
                task_type="HPS",
                panorama_ref=ref,
                instruction="Turn to face along the cyan floor corridor.",
                target=target,
                start_orientations=starts,
                difficulty=classify_hps_difficulty(cues),
                scene_category=SCENE_CATEGORIES[i % len(SCENE_CATEGORIES)],
                hps_cues=cues,
            )
        )

    dataset = Dataset(instances=tuple(instances), split=split, root=out)
    manifest = out / "manifest.jsonl"
    if instances:
        write_dataset(dataset, manifest)
    return dataset, manifest
