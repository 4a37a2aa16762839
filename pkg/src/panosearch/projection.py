"""Equirectangular panorama sampling and perspective-view rendering.

The full-frame kernels (per-pixel ray casting + bilinear lookup) dominate
runtime, so they exist twice: a compiled Cython extension and a numpy
fallback with the same numeric contract. The extension is preferred when
importable; set ``PANOSEARCH_BACKEND=numpy|compiled`` to force one.

Scalar helpers (single-pixel sampling, pixel<->direction mapping) live
here and share their formulas with the kernels: pixel (i, j) of a
width x height view carries normalized image coordinates
((j - cx)/cx, (cy - i)/cy) with cx = (w-1)/2, cy = (h-1)/2, scaled by the
half-FoV tangents, so the raster's continuous center is exactly the view
direction. Zero roll throughout.
"""

from __future__ import annotations

import io
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from panosearch import _projpure
from panosearch.geometry import AngularBox, Direction, angular_diff, wrap_yaw

try:
    from panosearch import _projfast
except ImportError:  # extension not built; numpy fallback only
    _projfast = None

_BACKENDS = {"numpy": _projpure}
if _projfast is not None:
    _BACKENDS["compiled"] = _projfast

_DEFAULT_BACKEND = os.environ.get(
    "PANOSEARCH_BACKEND", "compiled" if _projfast is not None else "numpy"
)
if _DEFAULT_BACKEND not in _BACKENDS:
    raise ImportError(
        f"PANOSEARCH_BACKEND={_DEFAULT_BACKEND!r} requested but only "
        f"{sorted(_BACKENDS)} available"
    )

EVAL_VIEW_WIDTH = 1920
EVAL_VIEW_HEIGHT = 1080
TRAIN_VIEW_WIDTH = 1280
TRAIN_VIEW_HEIGHT = 720
DEFAULT_HFOV_DEG = 90.0

CROSSHAIR_COLOR = (0, 255, 0)
CROSSHAIR_THICKNESS = 3
CROSSHAIR_MIN_ARM_PX = 8
CROSSHAIR_ARM_FRACTION = 0.02


def active_backend() -> str:
    return _DEFAULT_BACKEND


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def _kernels(backend: str | None):
    name = backend or _DEFAULT_BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}, have {sorted(_BACKENDS)}") from None


@dataclass(frozen=True)
class Panorama:
    """A full-sphere equirectangular RGB raster."""

    pixels: np.ndarray  # (H, W, 3) uint8
    source_id: str

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError("panorama pixels must be an (H, W, 3) uint8 array")
        h, w = px.shape[:2]
        if w < 4 or h < 2:
            raise ValueError(f"panorama too small: {w}x{h}")
        if w != 2 * h:
            warnings.warn(
                f"panorama {self.source_id!r} is {w}x{h}; expected 2:1 equirectangular",
                stacklevel=2,
            )
        if not px.flags["C_CONTIGUOUS"]:
            object.__setattr__(self, "pixels", np.ascontiguousarray(px))

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class ViewSpec:
    """Perspective view geometry: output raster size and horizontal FoV."""

    width_px: int = EVAL_VIEW_WIDTH
    height_px: int = EVAL_VIEW_HEIGHT
    hfov_deg: float = DEFAULT_HFOV_DEG

    def __post_init__(self) -> None:
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("view dimensions must be positive")
        if not (0.0 < self.hfov_deg < 180.0):
            raise ValueError(f"hfov must be in (0, 180), got {self.hfov_deg}")

    @property
    def vfov_deg(self) -> float:
        half = math.tan(math.radians(self.hfov_deg) / 2.0) * self.height_px / self.width_px
        return math.degrees(2.0 * math.atan(half))

    @property
    def center_px(self) -> tuple[float, float]:
        return ((self.width_px - 1) / 2.0, (self.height_px - 1) / 2.0)


@dataclass(frozen=True)
class ViewImage:
    """A rendered observation, optionally carrying the crosshair overlay."""

    pixels: np.ndarray  # (h, w, 3) uint8
    direction: Direction
    spec: ViewSpec
    crosshair_drawn: bool = False

    def __post_init__(self) -> None:
        h, w = self.pixels.shape[:2]
        if (w, h) != (self.spec.width_px, self.spec.height_px):
            raise ValueError("view raster does not match its spec dimensions")


def load_panorama(path: str | Path, source_id: str | None = None) -> Panorama:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"panorama file not found: {p}")
    with Image.open(p) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return Panorama(pixels=arr, source_id=source_id or p.stem)


def save_png(pixels: np.ndarray, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")


def png_bytes(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def _sample_scalar(img: np.ndarray, yaw_deg: float, pitch_deg: float) -> tuple[int, int, int]:
    # scalar twin of the kernels' bilinear lookup; keep in lockstep
    pano_h, pano_w = img.shape[:2]
    u = yaw_deg / 360.0 * pano_w
    v = (90.0 - pitch_deg) / 180.0 * pano_h
    x = u - 0.5
    y = v - 0.5
    fx = x - math.floor(x)
    fy = y - math.floor(y)
    x0 = int(math.floor(x)) % pano_w
    x1 = (x0 + 1) % pano_w
    y0 = min(max(int(math.floor(y)), 0), pano_h - 1)
    y1 = min(max(int(math.floor(y)) + 1, 0), pano_h - 1)
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    out = []
    for c in range(3):
        val = (
            (w00 * float(img[y0, x0, c]) + w10 * float(img[y0, x1, c]))
            + w01 * float(img[y1, x0, c])
        ) + w11 * float(img[y1, x1, c])
        out.append(int(val + 0.5))
    return out[0], out[1], out[2]


def equirect_sample(pano: Panorama, d: Direction) -> tuple[int, int, int]:
    """Bilinear color lookup at a direction; wraps the seam, clamps poles."""
    return _sample_scalar(pano.pixels, d.yaw_deg, d.pitch_deg)


def render_view(
    pano: Panorama, d: Direction, spec: ViewSpec, *, backend: str | None = None
) -> ViewImage:
    """Pinhole render of the panorama looking along d with zero roll."""
    pixels = _kernels(backend).render(
        pano.pixels, d.yaw_deg, d.pitch_deg, spec.hfov_deg, spec.width_px, spec.height_px
    )
    return ViewImage(pixels=pixels, direction=d, spec=spec, crosshair_drawn=False)


def crosshair_mask(width: int, height: int) -> np.ndarray:
    """Boolean mask of the centered green cross for a raster of this size."""
    arm = max(CROSSHAIR_MIN_ARM_PX, round(CROSSHAIR_ARM_FRACTION * width))
    half_t = CROSSHAIR_THICKNESS // 2
    cx, cy = width // 2, height // 2
    mask = np.zeros((height, width), dtype=bool)
    mask[
        max(0, cy - arm) : cy + arm + 1,
        max(0, cx - half_t) : cx + half_t + 1,
    ] = True
    mask[
        max(0, cy - half_t) : cy + half_t + 1,
        max(0, cx - arm) : cx + arm + 1,
    ] = True
    return mask


def overlay_crosshair(img: ViewImage) -> ViewImage:
    """Stamp the center cross; refuses to stamp twice."""
    if img.crosshair_drawn:
        raise RuntimeError("crosshair already drawn on this view")
    pixels = img.pixels.copy()
    pixels[crosshair_mask(img.spec.width_px, img.spec.height_px)] = CROSSHAIR_COLOR
    return ViewImage(pixels=pixels, direction=img.direction, spec=img.spec, crosshair_drawn=True)


def _ndc(spec: ViewSpec, px: float, py: float) -> tuple[float, float]:
    cx, cy = spec.center_px
    xn = (px - cx) / cx if spec.width_px > 1 else 0.0
    yn = (cy - py) / cy if spec.height_px > 1 else 0.0
    return xn, yn


def _check_px_bounds(spec: ViewSpec, px: float, py: float) -> None:
    if not (-0.5 <= px <= spec.width_px - 0.5 and -0.5 <= py <= spec.height_px - 0.5):
        raise ValueError(
            f"pixel ({px}, {py}) outside the {spec.width_px}x{spec.height_px} raster"
        )


def pixel_to_direction(view_dir: Direction, spec: ViewSpec, px: float, py: float) -> Direction:
    """World direction of the camera ray through a (continuous) pixel."""
    _check_px_bounds(spec, px, py)
    xn, yn = _ndc(spec, px, py)
    if xn == 0.0 and yn == 0.0:
        return view_dir
    tan_x = math.tan(math.radians(spec.hfov_deg) / 2.0)
    tan_y = tan_x * spec.height_px / spec.width_px
    x = xn * tan_x
    y = yn * tan_y

    pitch = math.radians(view_dir.pitch_deg)
    yaw = math.radians(view_dir.yaw_deg)
    sp, cp = math.sin(pitch), math.cos(pitch)
    sy, cyw = math.sin(yaw), math.cos(yaw)
    y1 = y * cp + sp
    z1 = -y * sp + cp
    wx = x * cyw + z1 * sy
    wz = -x * sy + z1 * cyw
    norm = math.sqrt(x * x + y * y + 1.0)
    out_pitch = math.degrees(math.asin(max(-1.0, min(1.0, y1 / norm))))
    return Direction(math.degrees(math.atan2(wx, wz)), out_pitch)


def direction_to_pixel(
    view_dir: Direction, spec: ViewSpec, d: Direction
) -> tuple[float, float] | None:
    """Continuous pixel where direction d lands in the view; None if behind.

    Exact inverse of pixel_to_direction on the forward hemisphere. The
    result may fall outside the raster; callers clip as needed.
    """
    yaw = math.radians(view_dir.yaw_deg)
    pitch = math.radians(view_dir.pitch_deg)
    sy, cyw = math.sin(yaw), math.cos(yaw)
    sp, cp = math.sin(pitch), math.cos(pitch)
    vx, vy, vz = (
        math.cos(math.radians(d.pitch_deg)) * math.sin(math.radians(d.yaw_deg)),
        math.sin(math.radians(d.pitch_deg)),
        math.cos(math.radians(d.pitch_deg)) * math.cos(math.radians(d.yaw_deg)),
    )
    # undo yaw, then pitch
    x1 = vx * cyw - vz * sy
    z1 = vx * sy + vz * cyw
    y2 = vy * cp - z1 * sp
    z2 = vy * sp + z1 * cp
    if z2 <= 0.0:
        return None
    tan_x = math.tan(math.radians(spec.hfov_deg) / 2.0)
    tan_y = tan_x * spec.height_px / spec.width_px
    xn = (x1 / z2) / tan_x
    yn = (y2 / z2) / tan_y
    cx, cy = spec.center_px
    return cx + xn * cx, cy - yn * cy


def backproject_bbox(
    view_dir: Direction, spec: ViewSpec, rect: tuple[float, float, float, float]
) -> AngularBox:
    """Angular box of a pixel rectangle drawn on a rendered view.

    Center is the back-projected rect center; extents are the largest
    pairwise yaw/pitch separations among the four back-projected corners,
    with yaw measured on the circle.
    """
    x0, y0, x1, y1 = rect
    if x1 < x0:
        x0, x1 = x1, x0
    if y1 < y0:
        y0, y1 = y1, y0
    if x1 - x0 <= 0.0 or y1 - y0 <= 0.0:
        raise ValueError(f"rectangle {rect} has no area")
    for px, py in ((x0, y0), (x1, y1)):
        _check_px_bounds(spec, px, py)

    center = pixel_to_direction(view_dir, spec, (x0 + x1) / 2.0, (y0 + y1) / 2.0)
    corners = [
        pixel_to_direction(view_dir, spec, px, py)
        for px, py in ((x0, y0), (x1, y0), (x0, y1), (x1, y1))
    ]
    width = 0.0
    height = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            width = max(width, abs(angular_diff(corners[i].yaw_deg, corners[j].yaw_deg)))
            height = max(height, abs(corners[i].pitch_deg - corners[j].pitch_deg))
    return AngularBox(center=center, width_deg=max(width, 1e-6), height_deg=max(height, 1e-6))
