"""Photorealistic raster augmentations: drop shadows and gradient backgrounds.

Images are RGBA rasters with float64 channels in [0, 1].  Both operations are
pure functions of (image, seed): the shadow offsets, background colors,
center jitter, and noise all come from generators derived from the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .seeding import rng_from

DEFAULT_OFFSET_RANGE = (4, 10)
DEFAULT_BLUR_SIGMA = 3.0
DEFAULT_OPACITY = 0.5

_LUMA = np.array([0.2126, 0.7152, 0.0722])


@dataclass
class RasterImage:
    pixels: np.ndarray  # (h, w, 4) RGBA in [0, 1]

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 4:
            raise ValueError("pixels must have shape (h, w, 4)")
        if self.pixels.shape[0] == 0 or self.pixels.shape[1] == 0:
            raise ValueError("image must be nonempty")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("channel values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def rgb(self) -> np.ndarray:
        return self.pixels[:, :, :3]

    @property
    def alpha(self) -> np.ndarray:
        return self.pixels[:, :, 3]


def luminance(rgb: np.ndarray) -> np.ndarray:
    """Rec. 709 luminance of an (..., 3) RGB array."""
    return rgb @ _LUMA


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian sampled at integer offsets, radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(channel: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a 2-D array with reflected borders."""
    k = gaussian_kernel(sigma)
    radius = (len(k) - 1) // 2

    def blur_axis(arr: np.ndarray, axis: int) -> np.ndarray:
        pad = [(0, 0), (0, 0)]
        pad[axis] = (radius, radius)
        padded = np.pad(arr, pad, mode="reflect")
        out = np.zeros_like(arr)
        for i, w in enumerate(k):
            sl = [slice(None), slice(None)]
            sl[axis] = slice(i, i + arr.shape[axis])
            out += w * padded[tuple(sl)]
        return out

    return blur_axis(blur_axis(channel, 0), 1)


def _shift2d(arr: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Shift with zero fill, clipping at the canvas edge."""
    h, w = arr.shape
    out = np.zeros_like(arr)
    ys = slice(max(dy, 0), min(h + dy, h))
    xs = slice(max(dx, 0), min(w + dx, w))
    ys_src = slice(max(-dy, 0), min(h - dy, h))
    xs_src = slice(max(-dx, 0), min(w - dx, w))
    out[ys, xs] = arr[ys_src, xs_src]
    return out


def drop_shadow(
    img: RasterImage,
    offset_range: tuple[int, int] = DEFAULT_OFFSET_RANGE,
    blur_sigma: float = DEFAULT_BLUR_SIGMA,
    opacity: float = DEFAULT_OPACITY,
    seed: int = 0,
) -> RasterImage:
    """Composite a blurred, offset copy of the alpha mask as a black shadow.

    The (dx, dy) offset is drawn per axis as a seeded uniform integer over
    ``offset_range`` (inclusive; positive dx shifts right, dy down).  The
    shadow sits beneath the object: fully opaque object pixels are unchanged,
    and nothing is ever brightened.
    """
    if not 0.0 <= opacity <= 1.0:
        raise ValueError("opacity must lie in [0, 1]")
    lo, hi = int(offset_range[0]), int(offset_range[1])
    if hi < lo:
        raise ValueError("offset_range must be (lo, hi) with hi >= lo")
    rng = rng_from("drop-shadow", seed)
    dx = int(rng.integers(lo, hi + 1))
    dy = int(rng.integers(lo, hi + 1))

    alpha = img.alpha
    mask = gaussian_blur(_shift2d(alpha, dy, dx), blur_sigma)
    shadow_a = np.clip(opacity * mask, 0.0, 1.0)

    # object OVER black shadow layer (straight alpha)
    out_a = alpha + shadow_a * (1.0 - alpha)
    covered = out_a > 0.0
    safe = np.where(covered, out_a, 1.0)
    out_rgb = img.rgb * (alpha / safe)[:, :, None]
    out_rgb[~covered] = img.rgb[~covered]

    out = np.empty_like(img.pixels)
    out[:, :, :3] = np.clip(out_rgb, 0.0, 1.0)
    out[:, :, 3] = np.clip(out_a, 0.0, 1.0)
    return RasterImage(out)


def gradient_background(
    img: RasterImage, seed: int = 0, center_offset: tuple[float, float] | None = None
) -> RasterImage:
    """Fill transparent background with a soft seeded radial gradient.

    Two near-white colors (channels in [0.92, 1.0]) interpolate radially from
    a jittered center (the brighter color inside), smoothed with a large blur
    (sigma = 0.25 * min(w, h)) plus faint seeded Gaussian noise; the object is
    composited over it, so opaque-pixel RGB survives exactly and the output
    alpha is 1 everywhere.  ``center_offset`` overrides the seeded jitter
    (in pixels, x then y).
    """
    rng = rng_from("gradient-background", seed)
    h, w = img.height, img.width
    c_inner = rng.uniform(0.92, 1.0, size=3)
    c_outer = rng.uniform(0.92, 1.0, size=3)
    if luminance(c_outer) > luminance(c_inner):
        c_inner, c_outer = c_outer, c_inner
    jitter = 0.10 * min(w, h)
    if center_offset is None:
        ox = float(rng.uniform(-jitter, jitter))
        oy = float(rng.uniform(-jitter, jitter))
    else:
        ox, oy = float(center_offset[0]), float(center_offset[1])
    cx = (w - 1) / 2.0 + ox
    cy = (h - 1) / 2.0 + oy

    yy, xx = np.mgrid[0:h, 0:w]
    dist = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
    corners = np.array([[0, 0], [w - 1, 0], [0, h - 1], [w - 1, h - 1]], dtype=np.float64)
    reach = float(np.max(np.sqrt((corners[:, 0] - cx) ** 2 + (corners[:, 1] - cy) ** 2)))
    t = np.clip(dist / max(reach, 1e-9), 0.0, 1.0)

    bg = c_inner[None, None, :] + (c_outer - c_inner)[None, None, :] * t[:, :, None]
    sigma = 0.25 * min(w, h)
    for ch in range(3):
        bg[:, :, ch] = gaussian_blur(bg[:, :, ch], sigma)
    bg += 0.005 * rng.standard_normal((h, w, 3))
    bg = np.clip(bg, 0.0, 1.0)

    alpha = img.alpha[:, :, None]
    out = np.empty_like(img.pixels)
    out[:, :, :3] = np.clip(img.rgb * alpha + bg * (1.0 - alpha), 0.0, 1.0)
    out[:, :, 3] = 1.0
    return RasterImage(out)


def load_png(path) -> RasterImage:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGBA"), dtype=np.float64) / 255.0
    return RasterImage(arr)


def save_png(img: RasterImage, path) -> None:
    data = np.round(img.pixels * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGBA").save(path, format="PNG")
