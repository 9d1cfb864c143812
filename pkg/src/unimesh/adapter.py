"""Low-rank latent adapter: frozen base map plus trainable rank-r delta.

The adapter maps an image latent to a shape conditioning latent:

    z_cond = (base_W + (alpha/r) * lora_B @ lora_A) @ z_img + bias

base_W is frozen at construction; only lora_A, lora_B, and (optionally) the
bias train.  ``init_recoverable`` builds the synthetic task whose optimum the
rank-r delta can reach exactly: the base map is the simulator pseudo-inverse
corrupted by a known rank-r perturbation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .latents import D_COND, D_IMG, LatentSimulator, as_vector
from .seeding import rng_from


@dataclass
class MeshHeadAdapter:
    base_W: np.ndarray  # (d_cond, d_img), frozen
    lora_B: np.ndarray  # (d_cond, r)
    lora_A: np.ndarray  # (r, d_img)
    bias: np.ndarray  # (d_cond,)
    rank: int
    alpha: float

    def __post_init__(self):
        self.base_W = np.asarray(self.base_W, dtype=np.float64)
        self.lora_B = np.asarray(self.lora_B, dtype=np.float64)
        self.lora_A = np.asarray(self.lora_A, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        d_cond, d_img = self.base_W.shape
        if self.lora_B.shape != (d_cond, self.rank) or self.lora_A.shape != (self.rank, d_img):
            raise ValueError("LoRA factor shapes inconsistent with base map and rank")
        if self.bias.shape != (d_cond,):
            raise ValueError("bias shape inconsistent with base map")
        self.base_W.setflags(write=False)

    @property
    def d_img(self) -> int:
        return self.base_W.shape[1]

    @property
    def d_cond(self) -> int:
        return self.base_W.shape[0]

    def delta(self) -> np.ndarray:
        """Effective low-rank update (alpha/r) * B @ A."""
        return (self.alpha / self.rank) * self.lora_B @ self.lora_A

    def effective_map(self) -> np.ndarray:
        return self.base_W + self.delta()

    def to_json_dict(self) -> dict:
        return {
            "d_img": self.d_img,
            "d_cond": self.d_cond,
            "r": self.rank,
            "alpha": self.alpha,
            "base_W": [float(x) for x in self.base_W.ravel()],
            "lora_A": [float(x) for x in self.lora_A.ravel()],
            "lora_B": [float(x) for x in self.lora_B.ravel()],
            "bias": [float(x) for x in self.bias],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "MeshHeadAdapter":
        d_img, d_cond, r = int(d["d_img"]), int(d["d_cond"]), int(d["r"])
        return MeshHeadAdapter(
            base_W=np.asarray(d["base_W"], dtype=np.float64).reshape(d_cond, d_img),
            lora_B=np.asarray(d["lora_B"], dtype=np.float64).reshape(d_cond, r),
            lora_A=np.asarray(d["lora_A"], dtype=np.float64).reshape(r, d_img),
            bias=np.asarray(d["bias"], dtype=np.float64),
            rank=r,
            alpha=float(d["alpha"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f)

    @staticmethod
    def load(path) -> "MeshHeadAdapter":
        with open(path, encoding="utf-8") as f:
            return MeshHeadAdapter.from_json_dict(json.load(f))


def adapter_fingerprint(adapter: MeshHeadAdapter) -> str:
    """Content hash over every parameter, frozen and trainable alike."""
    h = hashlib.sha256()
    h.update(f"{adapter.d_cond}x{adapter.d_img}:r{adapter.rank}:a{adapter.alpha!r}".encode())
    for arr in (adapter.base_W, adapter.lora_B, adapter.lora_A, adapter.bias):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def forward(adapter: MeshHeadAdapter, z_img: np.ndarray) -> np.ndarray:
    """Conditioning latent for an image latent through the adapted map."""
    z_img = as_vector(z_img, adapter.d_img, "image latent")
    scaled = adapter.alpha / adapter.rank
    return adapter.base_W @ z_img + scaled * (adapter.lora_B @ (adapter.lora_A @ z_img)) + adapter.bias


def init_recoverable(
    sim: LatentSimulator, seed: int, rank: int = 4, alpha: float = 8.0, perturbation_norm: float = 0.5
) -> MeshHeadAdapter:
    """Adapter whose training task has an exactly reachable rank-r optimum.

    base_W = pinv(A) + E with E a seeded rank-``rank`` perturbation of
    Frobenius norm ``perturbation_norm``; bias cancels the simulator offset,
    so lora_B @ lora_A = -(r/alpha) * E recovers the exact inverse map.
    lora_B starts at zero (the delta is initially inert), lora_A at small
    seeded Gaussian values.
    """
    rng = rng_from("recoverable-init", seed)
    pinv_A = np.linalg.pinv(sim.A)
    B_star = rng.standard_normal((D_COND, rank))
    A_star = rng.standard_normal((rank, D_IMG))
    E = B_star @ A_star
    E *= perturbation_norm / np.linalg.norm(E)
    return MeshHeadAdapter(
        base_W=pinv_A + E,
        lora_B=np.zeros((D_COND, rank)),
        lora_A=rng.standard_normal((rank, D_IMG)) * 0.02,
        bias=-pinv_A @ sim.b,
        rank=rank,
        alpha=alpha,
    )
