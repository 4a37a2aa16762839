# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled projection kernels: full-frame ray grid + bilinear sampling.

Numeric contract mirrors `_projpure`; keep the formulas in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport asin, atan2, cos, floor, fmod, sin, sqrt, tan

cnp.import_array()

DEF DEG2RAD = 0.017453292519943295
DEF RAD2DEG = 57.29577951308232


def ray_grid(double yaw_deg, double pitch_deg, double hfov_deg, int width, int height):
    """World (yaw, pitch) degree grids for every pixel's camera ray."""
    cdef double tan_x = tan(hfov_deg * DEG2RAD / 2.0)
    cdef double tan_y = tan_x * height / width
    cdef double cx = (width - 1) / 2.0
    cdef double cy = (height - 1) / 2.0
    cdef double yaw = yaw_deg * DEG2RAD
    cdef double pitch = pitch_deg * DEG2RAD
    cdef double sy = sin(yaw), cyw = cos(yaw)
    cdef double sp = sin(pitch), cp = cos(pitch)

    out_yaw_arr = np.empty((height, width), dtype=np.float64)
    out_pitch_arr = np.empty((height, width), dtype=np.float64)
    cdef double[:, ::1] out_yaw = out_yaw_arr
    cdef double[:, ::1] out_pitch = out_pitch_arr

    cdef Py_ssize_t i, j
    cdef double x, y, y1, z1, wx, wz, norm, s, ydeg
    for i in range(height):
        y = (cy - i) / cy * tan_y if height > 1 else 0.0
        for j in range(width):
            x = (j - cx) / cx * tan_x if width > 1 else 0.0
            y1 = y * cp + sp
            z1 = -y * sp + cp
            wx = x * cyw + z1 * sy
            wz = -x * sy + z1 * cyw
            norm = sqrt(x * x + y * y + 1.0)
            ydeg = fmod(atan2(wx, wz) * RAD2DEG, 360.0)
            if ydeg < 0.0:
                ydeg += 360.0
            if ydeg >= 360.0:
                ydeg = 0.0
            out_yaw[i, j] = ydeg
            s = y1 / norm
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            out_pitch[i, j] = asin(s) * RAD2DEG

    if width % 2 == 1 and height % 2 == 1:
        out_yaw[height // 2, width // 2] = fmod(yaw_deg, 360.0)
        out_pitch[height // 2, width // 2] = pitch_deg
    return out_yaw_arr, out_pitch_arr


def sample_bilinear(const cnp.uint8_t[:, :, ::1] img, double[:, ::1] yaw_deg, double[:, ::1] pitch_deg):
    """Bilinear equirect lookup: horizontal wrap, vertical clamp, round half up."""
    cdef Py_ssize_t pano_h = img.shape[0]
    cdef Py_ssize_t pano_w = img.shape[1]
    cdef Py_ssize_t h = yaw_deg.shape[0]
    cdef Py_ssize_t w = yaw_deg.shape[1]

    out_arr = np.empty((h, w, 3), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] out = out_arr

    cdef Py_ssize_t i, j, c, x0, x1, y0, y1
    cdef double u, v, x, y, fx, fy, w00, w10, w01, w11, val
    for i in range(h):
        for j in range(w):
            u = yaw_deg[i, j] / 360.0 * pano_w
            v = (90.0 - pitch_deg[i, j]) / 180.0 * pano_h
            x = u - 0.5
            y = v - 0.5
            fx = x - floor(x)
            fy = y - floor(y)
            x0 = <Py_ssize_t>floor(x) % pano_w
            if x0 < 0:
                x0 += pano_w
            x1 = (x0 + 1) % pano_w
            y0 = <Py_ssize_t>floor(y)
            y1 = y0 + 1
            if y0 < 0:
                y0 = 0
            elif y0 > pano_h - 1:
                y0 = pano_h - 1
            if y1 < 0:
                y1 = 0
            elif y1 > pano_h - 1:
                y1 = pano_h - 1
            w00 = (1.0 - fx) * (1.0 - fy)
            w10 = fx * (1.0 - fy)
            w01 = (1.0 - fx) * fy
            w11 = fx * fy
            for c in range(3):
                val = ((w00 * img[y0, x0, c] + w10 * img[y0, x1, c])
                       + w01 * img[y1, x0, c]) + w11 * img[y1, x1, c]
                out[i, j, c] = <cnp.uint8_t>(val + 0.5)
    return out_arr


def render(img, double yaw_deg, double pitch_deg, double hfov_deg, int width, int height):
    yaw, pitch = ray_grid(yaw_deg, pitch_deg, hfov_deg, width, height)
    return sample_bilinear(img, yaw, pitch)
