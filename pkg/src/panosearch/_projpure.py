"""Numpy implementation of the full-frame projection kernels.

This is the fallback backend; `_projfast` is the compiled twin with the
same two entry points and the same numeric contract. Keep the formulas in
lockstep with the Cython source and with the scalar paths in
`projection.py`.
"""

from __future__ import annotations

import numpy as np


def ray_grid(
    yaw_deg: float, pitch_deg: float, hfov_deg: float, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    """World (yaw, pitch) angles, in degrees, of every pixel's camera ray.

    Pixel (i, j) carries normalized image coordinates
    ((j - cx)/cx, (cy - i)/cy) with cx = (w-1)/2, cy = (h-1)/2, so the
    raster's continuous center maps exactly to the view direction. Zero
    roll; yaw output wrapped to [0, 360).
    """
    tan_x = np.tan(np.radians(hfov_deg) / 2.0)
    tan_y = tan_x * height / width

    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    xn = (np.arange(width, dtype=np.float64) - cx) / cx * tan_x if width > 1 else np.zeros(1)
    yn = (cy - np.arange(height, dtype=np.float64)) / cy * tan_y if height > 1 else np.zeros(1)
    x = np.broadcast_to(xn, (height, width))
    y = np.broadcast_to(yn[:, None], (height, width))

    yaw = np.radians(yaw_deg)
    pitch = np.radians(pitch_deg)
    sy, cyw = np.sin(yaw), np.cos(yaw)
    sp, cp = np.sin(pitch), np.cos(pitch)

    # pitch rotation about camera x, then yaw about world y; z starts at 1
    y1 = y * cp + sp
    z1 = -y * sp + cp
    wx = x * cyw + z1 * sy
    wz = -x * sy + z1 * cyw

    norm = np.sqrt(x * x + y * y + 1.0)
    out_yaw = np.degrees(np.arctan2(wx, wz))
    out_yaw = np.mod(out_yaw, 360.0)
    out_yaw[out_yaw >= 360.0] = 0.0
    out_pitch = np.degrees(np.arcsin(np.clip(y1 / norm, -1.0, 1.0)))

    # odd-sized rasters have an exact center pixel; pin it to the view
    # direction so center-pixel identities hold bit-exactly
    if width % 2 == 1 and height % 2 == 1:
        ci, cj = height // 2, width // 2
        out_yaw = np.ascontiguousarray(out_yaw)
        out_yaw[ci, cj] = yaw_deg % 360.0
        out_pitch[ci, cj] = pitch_deg
    return np.ascontiguousarray(out_yaw), np.ascontiguousarray(out_pitch)


def sample_bilinear(
    img: np.ndarray, yaw_deg: np.ndarray, pitch_deg: np.ndarray
) -> np.ndarray:
    """Bilinear equirectangular lookup with horizontal wrap, vertical clamp.

    `img` is (H, W, 3) uint8; the angle arrays share one output shape.
    """
    pano_h, pano_w = img.shape[:2]
    u = yaw_deg / 360.0 * pano_w
    v = (90.0 - pitch_deg) / 180.0 * pano_h

    x = u - 0.5
    y = v - 0.5
    x0f = np.floor(x)
    y0f = np.floor(y)
    fx = x - x0f
    fy = y - y0f

    x0 = x0f.astype(np.int64) % pano_w
    x1 = (x0 + 1) % pano_w
    y0 = np.clip(y0f.astype(np.int64), 0, pano_h - 1)
    y1 = np.clip(y0f.astype(np.int64) + 1, 0, pano_h - 1)

    p00 = img[y0, x0].astype(np.float64)
    p10 = img[y0, x1].astype(np.float64)
    p01 = img[y1, x0].astype(np.float64)
    p11 = img[y1, x1].astype(np.float64)

    fx3 = fx[..., None]
    fy3 = fy[..., None]
    w00 = (1.0 - fx3) * (1.0 - fy3)
    w10 = fx3 * (1.0 - fy3)
    w01 = (1.0 - fx3) * fy3
    w11 = fx3 * fy3
    val = ((w00 * p00 + w10 * p10) + w01 * p01) + w11 * p11
    return np.floor(val + 0.5).astype(np.uint8)


def render(
    img: np.ndarray,
    yaw_deg: float,
    pitch_deg: float,
    hfov_deg: float,
    width: int,
    height: int,
) -> np.ndarray:
    yaw, pitch = ray_grid(yaw_deg, pitch_deg, hfov_deg, width, height)
    return sample_bilinear(img, yaw, pitch)
