"""Minimal raster output: polylines and heatmaps written as binary PPM (P6)."""

from __future__ import annotations

import numpy as np

PALETTE = [(200, 30, 30), (30, 60, 200), (20, 150, 60), (180, 40, 180), (230, 140, 0), (0, 150, 170)]


class Canvas:
    def __init__(self, width=640, height=480, margin=40):
        self.w, self.h, self.m = width, height, margin
        self.img = np.full((height, width, 3), 255, dtype=np.uint8)

    def _frame(self):
        m, w, h = self.m, self.w, self.h
        self.img[m, m:w - m] = 0
        self.img[h - m, m:w - m] = 0
        self.img[m:h - m, m] = 0
        self.img[m:h - m + 1, w - m] = 0

    def polylines(self, series, xlim=None, ylim=None):
        """``series`` is a list of (x, y) arrays; NaNs split lines."""
        xs = np.concatenate([np.asarray(x, float) for x, _ in series]) if series else np.zeros(1)
        ys = np.concatenate([np.asarray(y, float) for _, y in series]) if series else np.zeros(1)
        ok = np.isfinite(xs) & np.isfinite(ys)
        if xlim is None:
            xlim = (xs[ok].min(), xs[ok].max()) if ok.any() else (0.0, 1.0)
        if ylim is None:
            ylim = (ys[ok].min(), ys[ok].max()) if ok.any() else (0.0, 1.0)
        x0, x1 = xlim
        y0, y1 = ylim
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0
        m, w, h = self.m, self.w, self.h
        self._frame()
        for k, (x, y) in enumerate(series):
            color = PALETTE[k % len(PALETTE)]
            px = m + (np.asarray(x, float) - x0) / (x1 - x0) * (w - 2 * m)
            py = h - m - (np.asarray(y, float) - y0) / (y1 - y0) * (h - 2 * m)
            for i in range(len(px) - 1):
                if not np.all(np.isfinite([px[i], py[i], px[i + 1], py[i + 1]])):
                    continue
                steps = int(max(abs(px[i + 1] - px[i]), abs(py[i + 1] - py[i]))) + 1
                lx = np.rint(np.linspace(px[i], px[i + 1], steps + 1)).astype(int)
                ly = np.rint(np.linspace(py[i], py[i + 1], steps + 1)).astype(int)
                keep = (lx >= 0) & (lx < w) & (ly >= 0) & (ly < h)
                self.img[ly[keep], lx[keep]] = color
        return self

    def save(self, path):
        write_ppm(path, self.img)


def heatmap(values, vmin=None, vmax=None):
    """Map a 2d array to RGB with a blue-white-red ramp."""
    v = np.asarray(values, dtype=float)
    lo = np.nanmin(v) if vmin is None else vmin
    hi = np.nanmax(v) if vmax is None else vmax
    t = np.clip((v - lo) / (hi - lo if hi > lo else 1.0), 0.0, 1.0)
    r = np.clip(2 * t, 0, 1)
    b = np.clip(2 - 2 * t, 0, 1)
    g = 1 - np.abs(2 * t - 1)
    rgb = np.stack([r, g, b], axis=-1)
    return (rgb * 255).astype(np.uint8)


def write_ppm(path, rgb):
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(rgb.tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
