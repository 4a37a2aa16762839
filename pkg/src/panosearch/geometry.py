"""Angular math for panoramic viewing directions.

Yaw is circular in [0, 360) degrees with positive to the right; pitch is
clamped to [-90, +90] degrees with positive up. All public angles are in
degrees except :func:`interval_distance`, whose defining formula lives in
radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_yaw(angle_deg: float) -> float:
    """Wrap an angle into [0, 360). Finite input required."""
    if not math.isfinite(angle_deg):
        raise ValueError(f"yaw must be finite, got {angle_deg!r}")
    wrapped = math.fmod(angle_deg, 360.0)
    if wrapped < 0.0:
        wrapped += 360.0
    # fmod is exact but the += above can round up to 360.0 for tiny negatives
    return 0.0 if wrapped >= 360.0 else wrapped


def clamp_pitch(angle_deg: float) -> float:
    """Clamp an angle into [-90, +90]. Finite input required."""
    if not math.isfinite(angle_deg):
        raise ValueError(f"pitch must be finite, got {angle_deg!r}")
    return min(90.0, max(-90.0, angle_deg))


def angular_diff(a_deg: float, b_deg: float) -> float:
    """Signed shortest rotation taking b to a, in (-180, +180].

    The exact 180-degree tie resolves to +180 so the codomain is
    deterministic.
    """
    if not (math.isfinite(a_deg) and math.isfinite(b_deg)):
        raise ValueError("angular_diff requires finite inputs")
    d = math.fmod(a_deg - b_deg, 360.0)
    if d <= -180.0:
        d += 360.0
    elif d > 180.0:
        d -= 360.0
    return d


@dataclass(frozen=True)
class Direction:
    """A viewing direction. Yaw wraps and pitch clamps on construction."""

    yaw_deg: float
    pitch_deg: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw_deg", wrap_yaw(float(self.yaw_deg)))
        object.__setattr__(self, "pitch_deg", clamp_pitch(float(self.pitch_deg)))


@dataclass(frozen=True)
class AngularBox:
    """Annotated angular target: center direction plus angular extents."""

    center: Direction
    width_deg: float
    height_deg: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "width_deg", float(self.width_deg))
        object.__setattr__(self, "height_deg", float(self.height_deg))
        if not (0.0 < self.width_deg <= 360.0):
            raise ValueError(f"box width must be in (0, 360], got {self.width_deg}")
        if not (0.0 < self.height_deg <= 180.0):
            raise ValueError(f"box height must be in (0, 180], got {self.height_deg}")


@dataclass(frozen=True)
class ToleranceSpec:
    """Base success tolerances per axis; pitch may be exempt (path search)."""

    base_yaw_deg: float
    base_pitch_deg: float
    pitch_checked: bool

    def __post_init__(self) -> None:
        if self.base_yaw_deg < 0.0 or self.base_pitch_deg < 0.0:
            raise ValueError("base tolerances must be >= 0")

    @classmethod
    def for_task_type(cls, task_type: str) -> "ToleranceSpec":
        """Default tolerances: object search (30, 20), path search (10, yaw-only)."""
        if task_type == "HOS":
            return cls(base_yaw_deg=30.0, base_pitch_deg=20.0, pitch_checked=True)
        if task_type == "HPS":
            return cls(base_yaw_deg=10.0, base_pitch_deg=0.0, pitch_checked=False)
        raise ValueError(f"unknown task type {task_type!r}")


def effective_tolerance(box: AngularBox, spec: ToleranceSpec) -> tuple[float, float]:
    """Per-axis tolerance: the max of half the box extent and the base value."""
    tau_yaw = max(box.width_deg / 2.0, spec.base_yaw_deg)
    tau_pitch = max(box.height_deg / 2.0, spec.base_pitch_deg)
    return tau_yaw, tau_pitch


def in_tolerance_region(submitted: Direction, box: AngularBox, spec: ToleranceSpec) -> bool:
    """Closed-boundary membership in the box-centered tolerance rectangle.

    Yaw membership is circular; pitch is a plain interval and is skipped
    entirely when the spec says so.
    """
    tau_yaw, tau_pitch = effective_tolerance(box, spec)
    if abs(angular_diff(submitted.yaw_deg, box.center.yaw_deg)) > tau_yaw:
        return False
    if spec.pitch_checked and abs(submitted.pitch_deg - box.center.pitch_deg) > tau_pitch:
        return False
    return True


def circular_distance_rad(x_rad: float) -> float:
    """Shortest arc, in [0, pi], to an angular offset of x radians."""
    m = math.fmod(abs(x_rad), TWO_PI)
    return min(m, TWO_PI - m)


def interval_distance(
    alpha_rad: float, alpha_star_rad: float, tau_rad: float, *, circular: bool = True
) -> float:
    """Sum of distances from an angle to both edges of [a*-tau, a*+tau].

    Constant (= 2*tau) everywhere inside the closed interval and growing
    with distance outside it, which makes it usable as a plateaued goal
    distance. Each edge term is the shortest circular arc by default; with
    ``circular=False`` edges are plain absolute differences, for the
    clamped pitch axis that has no seam.
    """
    if not (0.0 <= tau_rad < math.pi):
        raise ValueError(f"tau must be in [0, pi), got {tau_rad}")
    lo = alpha_star_rad - tau_rad
    hi = alpha_star_rad + tau_rad
    if circular:
        return circular_distance_rad(alpha_rad - lo) + circular_distance_rad(alpha_rad - hi)
    return abs(alpha_rad - lo) + abs(alpha_rad - hi)


def direction_to_unit_vector(d: Direction) -> tuple[float, float, float]:
    """Map a direction to a unit vector: x right, y up, z forward.

    (0, 0) is +z, (90, 0) is +x, pitch +90 is +y.
    """
    yaw = math.radians(d.yaw_deg)
    pitch = math.radians(d.pitch_deg)
    cp = math.cos(pitch)
    return (cp * math.sin(yaw), math.sin(pitch), cp * math.cos(yaw))


def unit_vector_to_direction(v: tuple[float, float, float]) -> Direction:
    """Inverse of direction_to_unit_vector; yaw reported as 0 at the poles."""
    x, y, z = v
    norm = math.sqrt(x * x + y * y + z * z)
    if norm == 0.0 or not math.isfinite(norm):
        raise ValueError("cannot derive a direction from a zero or non-finite vector")
    pitch = math.degrees(math.asin(max(-1.0, min(1.0, y / norm))))
    if x == 0.0 and z == 0.0:
        return Direction(0.0, pitch)
    return Direction(math.degrees(math.atan2(x, z)), pitch)
