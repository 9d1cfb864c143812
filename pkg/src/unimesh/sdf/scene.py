"""Parametric SDF scene and the conditioning-latent slot mapping.

A scene is one sphere smooth-unioned with one box, plus an albedo and a
global scale.  ``decode`` maps a 16-dim conditioning latent onto scene
parameters through per-slot affine-tanh envelopes, so every parameter lives
in a fixed open interval and the map is smooth and invertible per slot:

    slot  0..2   sphere_center  = 0.5 * tanh(z)          in (-0.5, 0.5)
    slot  3      sphere_radius  = 0.6 + 0.3 * tanh(z)    in ( 0.3, 0.9)
    slot  4..6   box_center     = 0.5 * tanh(z)          in (-0.5, 0.5)
    slot  7..9   box_half_ext   = 0.4 + 0.2 * tanh(z)    in ( 0.2, 0.6)
    slot 10      smooth_k       = 0.1 + 0.05 * tanh(z)   in (0.05, 0.15)
    slot 11..13  albedo         = 0.5 + 0.5 * tanh(z)    in ( 0.0, 1.0)
    slot 14      global_scale   = exp(0.3 * tanh(z))     in (e^-0.3, e^0.3)
    slot 15      reserved (ignored)

This transparent slot layout is what makes prompt-driven edits verifiable:
an editor that wants sphere_radius = r solves the envelope for the latent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..latents import as_conditioning_latent

# (name, latent slot, offset c0, gain c1) for the affine-tanh slots.
# global_scale is exponential-affine and handled separately.
AFFINE_SLOTS = (
    ("sphere_center_x", 0, 0.0, 0.5),
    ("sphere_center_y", 1, 0.0, 0.5),
    ("sphere_center_z", 2, 0.0, 0.5),
    ("sphere_radius", 3, 0.6, 0.3),
    ("box_center_x", 4, 0.0, 0.5),
    ("box_center_y", 5, 0.0, 0.5),
    ("box_center_z", 6, 0.0, 0.5),
    ("box_half_x", 7, 0.4, 0.2),
    ("box_half_y", 8, 0.4, 0.2),
    ("box_half_z", 9, 0.4, 0.2),
    ("smooth_k", 10, 0.1, 0.05),
    ("albedo_r", 11, 0.5, 0.5),
    ("albedo_g", 12, 0.5, 0.5),
    ("albedo_b", 13, 0.5, 0.5),
)
SCALE_SLOT = 14
SCALE_GAIN = 0.3
N_SLOTS = 16


@dataclass(frozen=True)
class SdfScene:
    """Sphere-and-box smooth-union scene in scene units.

    ``latent`` is attached when the scene came from ``decode``; latent-space
    gradients are only defined for such scenes.
    """

    sphere_center: np.ndarray
    sphere_radius: float
    box_center: np.ndarray
    box_half_extents: np.ndarray
    smooth_k: float
    albedo: np.ndarray
    global_scale: float = 1.0
    latent: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sphere_center", np.asarray(self.sphere_center, dtype=np.float64))
        object.__setattr__(self, "box_center", np.asarray(self.box_center, dtype=np.float64))
        object.__setattr__(
            self, "box_half_extents", np.asarray(self.box_half_extents, dtype=np.float64)
        )
        object.__setattr__(self, "albedo", np.asarray(self.albedo, dtype=np.float64))
        if self.sphere_radius <= 0:
            raise ValueError("sphere_radius must be positive")
        if np.any(self.box_half_extents <= 0):
            raise ValueError("box_half_extents must be positive")
        if self.smooth_k <= 0:
            raise ValueError("smooth_k must be positive")
        if self.global_scale <= 0:
            raise ValueError("global_scale must be positive")

    def geometry_params(self) -> np.ndarray:
        """Pack the 12 geometry parameters for the evaluation kernels."""
        return np.concatenate(
            [
                self.sphere_center,
                [self.sphere_radius],
                self.box_center,
                self.box_half_extents,
                [self.smooth_k, self.global_scale],
            ]
        )

    @staticmethod
    def sphere(radius: float, center=(0.0, 0.0, 0.0)) -> "SdfScene":
        """Sphere-only scene: the box is shrunk and buried inside the sphere.

        A box fully interior to the sphere never wins the smooth union at
        points farther than smooth_k inside the sphere surface, so the scene
        SDF equals the sphere SDF on and outside the surface band.
        """
        center = np.asarray(center, dtype=np.float64)
        return SdfScene(
            sphere_center=center,
            sphere_radius=radius,
            box_center=center,
            box_half_extents=np.full(3, radius * 0.05),
            smooth_k=1e-4,
            albedo=np.full(3, 0.5),
        )


def decode(z) -> SdfScene:
    """Decode a conditioning latent into a scene via the slot envelopes."""
    z = as_conditioning_latent(z)
    t = np.tanh(z)
    return SdfScene(
        sphere_center=0.5 * t[0:3],
        sphere_radius=0.6 + 0.3 * t[3],
        box_center=0.5 * t[4:7],
        box_half_extents=0.4 + 0.2 * t[7:10],
        smooth_k=0.1 + 0.05 * t[10],
        albedo=0.5 + 0.5 * t[11:14],
        global_scale=float(np.exp(SCALE_GAIN * t[14])),
        latent=z.copy(),
    )


def envelope_derivatives(z: np.ndarray) -> np.ndarray:
    """d(param)/d(z_slot) for the 12 geometry params, aligned with
    ``SdfScene.geometry_params`` order plus latent slot bookkeeping.

    Returns shape (12,): derivative of [sphere_center(3), radius, box_center(3),
    half_extents(3), smooth_k, global_scale] w.r.t. their own latent slots.
    """
    t = np.tanh(z)
    sech2 = 1.0 - t * t
    d = np.empty(12)
    d[0:3] = 0.5 * sech2[0:3]
    d[3] = 0.3 * sech2[3]
    d[4:7] = 0.5 * sech2[4:7]
    d[7:10] = 0.2 * sech2[7:10]
    d[10] = 0.05 * sech2[10]
    d[11] = np.exp(SCALE_GAIN * t[14]) * SCALE_GAIN * sech2[14]
    return d

# Latent slot index feeding each of the 12 geometry params.
GEOMETRY_SLOTS = np.array([0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 14])


def slot_interval(offset: float, gain: float) -> tuple[float, float]:
    return (offset - gain, offset + gain) if gain > 0 else (offset + gain, offset - gain)


def invert_affine_slot(value: float, offset: float, gain: float) -> float:
    """Latent giving tanh envelope value ``value``; ValueError outside range."""
    u = (value - offset) / gain
    if not -1.0 < u < 1.0:
        lo, hi = slot_interval(offset, gain)
        raise ValueError(f"value {value:g} outside reachable interval [{lo:g}, {hi:g}]")
    return float(np.arctanh(u))


def invert_scale_slot(value: float) -> float:
    if value <= 0:
        raise ValueError("scale must be positive")
    u = np.log(value) / SCALE_GAIN
    if not -1.0 < u < 1.0:
        lo, hi = np.exp(-SCALE_GAIN), np.exp(SCALE_GAIN)
        raise ValueError(f"value {value:g} outside reachable interval [{lo:.6g}, {hi:.6g}]")
    return float(np.arctanh(u))
