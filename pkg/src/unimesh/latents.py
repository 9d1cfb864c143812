"""Latent vector types, toy text embedder, and the simulated image-latent map.

Latents are plain float64 numpy arrays of fixed dimension, validated at
operation boundaries: image latents are ``D_IMG``-dimensional, shape
conditioning latents ``D_COND``, text embeddings ``D_TXT``.  The
``LatentSimulator`` is an affine map A z + b (plus optional Gaussian noise)
standing in for an image encoder applied to a rendered view; its pseudo-inverse
is the oracle used by the scripted editor and by round-trip tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .seeding import rng_from

D_IMG = 32
D_COND = 16
D_TXT = 64

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def as_vector(values, dim: int, name: str) -> np.ndarray:
    """Validate and return a finite 1-D float64 vector of the given dimension."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (dim,):
        raise ValueError(f"{name} must have shape ({dim},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_image_latent(values) -> np.ndarray:
    return as_vector(values, D_IMG, "image latent")


def as_conditioning_latent(values) -> np.ndarray:
    return as_vector(values, D_COND, "conditioning latent")


def embed_text(text: str, seed: int) -> np.ndarray:
    """Embed text as a unit vector in R^D_TXT (zero vector for empty text).

    Tokens (lowercased alphanumeric runs) each map to a seeded Gaussian vector
    drawn from a hash of (seed, token); the token vectors are mean-pooled and
    L2-normalized.  Pure in (text, seed).
    """
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        return np.zeros(D_TXT)
    acc = np.zeros(D_TXT)
    for tok in tokens:
        acc += rng_from("text-token", seed, tok).standard_normal(D_TXT)
    acc /= len(tokens)
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        return np.zeros(D_TXT)
    return acc / norm


@dataclass(frozen=True)
class LatentSimulator:
    """Seeded affine encoder stand-in: z_img = A z_cond + b (+ noise).

    A is d_img x d_cond with entries from a seeded standard normal, verified
    to have full column rank at construction; b is drawn from the same stream.
    """

    seed: int
    noise_sigma: float = 0.0
    A: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        rng = rng_from("latent-simulator", self.seed)
        A = rng.standard_normal((D_IMG, D_COND))
        b = rng.standard_normal(D_IMG)
        if np.linalg.matrix_rank(A) < D_COND:
            raise ValueError("simulator map is rank deficient")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


def simulate_image_latent(sim: LatentSimulator, z: np.ndarray) -> np.ndarray:
    """Return A z + b plus N(0, noise_sigma^2) noise, pure in (sim, z)."""
    z = as_conditioning_latent(z)
    out = sim.A @ z + sim.b
    if sim.noise_sigma > 0:
        noise_rng = rng_from("sim-noise", sim.seed, z.tobytes())
        out = out + sim.noise_sigma * noise_rng.standard_normal(D_IMG)
    return out


def pinv_decode(sim: LatentSimulator, z_img: np.ndarray) -> np.ndarray:
    """Least-squares inverse of the simulator: argmin_z ||A z + b - z_img||."""
    z_img = as_image_latent(z_img)
    z, _, rank, _ = np.linalg.lstsq(sim.A, z_img - sim.b, rcond=None)
    if rank < D_COND:
        raise ValueError("simulator map is rank deficient")
    return z
