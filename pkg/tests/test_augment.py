import numpy as np
import pytest

from unimesh.augment import (
    RasterImage,
    drop_shadow,
    gaussian_kernel,
    gradient_background,
    load_png,
    luminance,
    save_png,
)


@pytest.fixture
def square_on_canvas():
    # opaque 16x16 white square centered on a transparent 64x64 canvas
    px = np.zeros((64, 64, 4))
    px[24:40, 24:40, :] = 1.0
    return RasterImage(px)


def reference_shadow(img: RasterImage, dx: int, dy: int, sigma: float, opacity: float) -> np.ndarray:
    """Independent scalar compositor: explicit shift, brute 2-D blur with
    reflected borders, and per-pixel straight-alpha OVER."""
    h, w = img.height, img.width
    k = gaussian_kernel(sigma)
    r = (len(k) - 1) // 2

    shifted = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            ys, xs = y - dy, x - dx
            if 0 <= ys < h and 0 <= xs < w:
                shifted[y, x] = img.pixels[ys, xs, 3]

    def reflect(i, n):
        while i < 0 or i >= n:
            if i < 0:
                i = -i
            if i >= n:
                i = 2 * (n - 1) - i
        return i

    blurred = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for iy in range(-r, r + 1):
                for ix in range(-r, r + 1):
                    acc += k[iy + r] * k[ix + r] * shifted[reflect(y + iy, h), reflect(x + ix, w)]
            blurred[y, x] = acc

    out = np.empty_like(img.pixels)
    for y in range(h):
        for x in range(w):
            a = img.pixels[y, x, 3]
            sa = min(max(opacity * blurred[y, x], 0.0), 1.0)
            oa = a + sa * (1.0 - a)
            rgb = img.pixels[y, x, :3] * a / oa if oa > 0 else img.pixels[y, x, :3]
            out[y, x, :3] = np.clip(rgb, 0.0, 1.0)
            out[y, x, 3] = min(oa, 1.0)
    return out


class TestDropShadow:
    def test_fully_transparent_input_unchanged(self):
        img = RasterImage(np.zeros((32, 32, 4)))
        out = drop_shadow(img, offset_range=(6, 6), seed=1)
        assert np.array_equal(out.pixels, img.pixels)

    def test_deterministic(self, square_on_canvas):
        a = drop_shadow(square_on_canvas, offset_range=(4, 10), seed=7)
        b = drop_shadow(square_on_canvas, offset_range=(4, 10), seed=7)
        assert np.array_equal(a.pixels, b.pixels)

    def test_matches_reference_compositor(self, square_on_canvas):
        out = drop_shadow(square_on_canvas, offset_range=(6, 6), blur_sigma=3.0, opacity=0.5, seed=1)
        ref = reference_shadow(square_on_canvas, dx=6, dy=6, sigma=3.0, opacity=0.5)
        assert np.max(np.abs(out.pixels - ref)) < 1e-6

    def test_shadow_darkens_outside_object(self, square_on_canvas):
        out = drop_shadow(square_on_canvas, offset_range=(6, 6), blur_sigma=3.0, opacity=0.5, seed=1)
        # over a white background: shadow region must lose luminance
        over_white = out.rgb * out.alpha[:, :, None] + (1 - out.alpha[:, :, None])
        # (42, 42) is inside the shifted mask and outside the object square
        assert not square_on_canvas.alpha[42, 42]
        assert luminance(over_white[42, 42]) < 1.0 - 1e-3

    def test_opaque_object_pixels_unchanged(self, square_on_canvas):
        out = drop_shadow(square_on_canvas, offset_range=(6, 6), seed=1)
        assert np.array_equal(out.pixels[24:40, 24:40], square_on_canvas.pixels[24:40, 24:40])

    def test_never_brightens(self, square_on_canvas):
        # no raw channel increases, and the white-composited luminance cannot rise
        out = drop_shadow(square_on_canvas, offset_range=(4, 10), blur_sigma=3.0, opacity=0.7, seed=3)
        assert np.all(out.rgb <= square_on_canvas.rgb + 1e-12)
        before = square_on_canvas.rgb * square_on_canvas.alpha[:, :, None] + (
            1 - square_on_canvas.alpha[:, :, None]
        )
        after = out.rgb * out.alpha[:, :, None] + (1 - out.alpha[:, :, None])
        assert np.all(luminance(after) <= luminance(before) + 1e-12)

    def test_channels_stay_in_unit_interval(self, square_on_canvas):
        out = drop_shadow(square_on_canvas, offset_range=(4, 10), opacity=1.0, seed=9)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0

    def test_offset_range_validated(self, square_on_canvas):
        with pytest.raises(ValueError):
            drop_shadow(square_on_canvas, offset_range=(10, 4), seed=0)
        with pytest.raises(ValueError):
            drop_shadow(square_on_canvas, opacity=1.5, seed=0)


class TestGradientBackground:
    def test_output_alpha_is_one(self, square_on_canvas):
        out = gradient_background(square_on_canvas, seed=3)
        assert np.all(out.alpha == 1.0)

    def test_opaque_foreground_rgb_exact(self, square_on_canvas):
        out = gradient_background(square_on_canvas, seed=3)
        assert np.array_equal(out.rgb[24:40, 24:40], square_on_canvas.rgb[24:40, 24:40])

    def test_deterministic(self, square_on_canvas):
        a = gradient_background(square_on_canvas, seed=5)
        b = gradient_background(square_on_canvas, seed=5)
        assert np.array_equal(a.pixels, b.pixels)

    def test_center_brighter_than_corners(self):
        # fully transparent canvas shows the raw background field
        img = RasterImage(np.zeros((64, 64, 4)))
        out = gradient_background(img, seed=3, center_offset=(0.0, 0.0))
        center = luminance(out.rgb[31:33, 31:33].reshape(-1, 3)).mean()
        corners = [
            luminance(out.rgb[0, 0]),
            luminance(out.rgb[0, -1]),
            luminance(out.rgb[-1, 0]),
            luminance(out.rgb[-1, -1]),
        ]
        assert center >= max(corners)

    def test_background_is_near_white(self):
        img = RasterImage(np.zeros((48, 48, 4)))
        out = gradient_background(img, seed=1)
        # noise amplitude 0.005 can only push slightly below the 0.92 band
        assert out.rgb.min() > 0.88

    def test_channels_stay_in_unit_interval(self, square_on_canvas):
        out = gradient_background(square_on_canvas, seed=3)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


class TestPngIo:
    def test_round_trip(self, square_on_canvas, tmp_path):
        p = tmp_path / "img.png"
        save_png(square_on_canvas, p)
        back = load_png(p)
        assert np.array_equal(back.pixels, square_on_canvas.pixels)

    def test_byte_identical_writes(self, square_on_canvas, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        out = drop_shadow(square_on_canvas, offset_range=(4, 10), seed=7)
        save_png(out, a)
        save_png(out, b)
        assert a.read_bytes() == b.read_bytes()
