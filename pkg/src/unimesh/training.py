"""Adapter training on synthetic latent/point-cloud pairs.

Each dataset item pairs an image latent with a cloud sampled from the surface
of the scene its ground-truth conditioning latent decodes to.  A training
step decodes the adapter's conditioning latent, measures the point-to-SDF
loss against the (optionally re-aligned) ground-truth cloud, and backprops
the analytic latent gradient through the adapter's affine map into the LoRA
factors and bias only; the base map never changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adapter import MeshHeadAdapter, forward
from .align import SimTransform, global_align, icp_refine, point_to_sdf_loss
from .latents import LatentSimulator, D_COND, simulate_image_latent
from .sdf.mesh import PointCloud
from .sdf.sampling import sample_surface
from .sdf.scene import decode
from .seeding import derive_seed, rng_from


@dataclass(frozen=True)
class SyntheticItem:
    z_img: np.ndarray
    cloud: PointCloud
    z_star: np.ndarray  # generating latent, kept for diagnostics


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 8
    learning_rate: float = 1e-2
    lr_schedule: str = "cosine"  # "cosine" | "constant"
    optimizer: str = "adam"  # "adam" | "sgd"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    noise_sigma: float = 0.0
    points_per_shape: int = 256
    seed: int = 0
    align_mode: str = "identity"  # "identity" | "umeyama_icp"
    train_bias: bool = True

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ValueError("steps and batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.align_mode not in ("identity", "umeyama_icp"):
            raise ValueError(f"unknown align_mode {self.align_mode!r}")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")

    def lr_at(self, step: int) -> float:
        if self.lr_schedule == "constant":
            return self.learning_rate
        return self.learning_rate * 0.5 * (1.0 + np.cos(np.pi * step / self.steps))


@dataclass
class TrainReport:
    loss_history: list[float] = field(default_factory=list)
    final_loss: float = float("nan")
    wall_steps: int = 0

    def to_json_dict(self) -> dict:
        return {
            "loss_history": self.loss_history,
            "final_loss": self.final_loss,
            "wall_steps": self.wall_steps,
        }


def make_synthetic_dataset(
    sim: LatentSimulator, n_shapes: int, points_per_shape: int, seed: int
) -> list[SyntheticItem]:
    """Seeded (image latent, surface cloud) pairs from random scene latents."""
    if n_shapes < 1 or points_per_shape < 1:
        raise ValueError("counts must be >= 1")
    rng = rng_from("synthetic-dataset", seed)
    z_stars = rng.standard_normal((n_shapes, D_COND))
    items = []
    for i in range(n_shapes):
        z_star = z_stars[i]
        scene = decode(z_star)
        cloud = sample_surface(scene, points_per_shape, seed=derive_seed("item-surface", seed, i))
        z_img = simulate_image_latent(sim, z_star)
        items.append(SyntheticItem(z_img=z_img, cloud=cloud, z_star=z_star))
    return items


def _item_alignment(scene, item: SyntheticItem, cfg: TrainConfig, step: int, idx: int) -> SimTransform | None:
    if cfg.align_mode == "identity":
        return None
    pred_cloud = sample_surface(
        scene, cfg.points_per_shape, seed=derive_seed("align-pred", cfg.seed, step, idx)
    )
    init = global_align(item.cloud, pred_cloud)
    return icp_refine(item.cloud, pred_cloud, init, max_iter=20, tol=1e-7).transform


def batch_loss_and_grads(
    adapter: MeshHeadAdapter,
    items: list[SyntheticItem],
    transforms: list[SimTransform | None] | None = None,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Mean loss over items plus gradients for (lora_A, lora_B, bias).

    The per-item latent gradient g = dL/d(z_cond) backpropagates through the
    affine map: dL/d(bias) = g, dL/d(B) = (alpha/r) g (A z)^T,
    dL/d(A) = (alpha/r) (B^T g) z^T.  Items accumulate in list order so the
    reduction is deterministic.
    """
    scaled = adapter.alpha / adapter.rank
    gA = np.zeros_like(adapter.lora_A)
    gB = np.zeros_like(adapter.lora_B)
    gb = np.zeros_like(adapter.bias)
    total = 0.0
    n = len(items)
    for j, item in enumerate(items):
        z_cond = forward(adapter, item.z_img)
        scene = decode(z_cond)
        transform = transforms[j] if transforms is not None else None
        loss, grad_z = point_to_sdf_loss(scene, item.cloud, transform)
        total += loss
        g = grad_z / n
        Az = adapter.lora_A @ item.z_img
        gb += g
        gB += scaled * np.outer(g, Az)
        gA += scaled * np.outer(adapter.lora_B.T @ g, item.z_img)
    return total / n, gA, gB, gb


class _Adam:
    def __init__(self, shapes, lr, b1, b2, eps):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * (g * g)
            mhat = m / (1 - self.b1**self.t)
            vhat = v / (1 - self.b2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def train(adapter: MeshHeadAdapter, dataset: list[SyntheticItem], cfg: TrainConfig) -> TrainReport:
    """Optimize the adapter's trainable parameters in place; base_W is frozen.

    Deterministic in (adapter initialization, dataset, cfg.seed); aborts with
    a diagnostic if the loss stops being finite.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    rng = rng_from("train-batches", cfg.seed)
    if cfg.optimizer == "adam":
        opt = _Adam(
            [adapter.lora_A.shape, adapter.lora_B.shape, adapter.bias.shape],
            cfg.learning_rate,
            cfg.adam_beta1,
            cfg.adam_beta2,
            cfg.adam_eps,
        )
    else:
        opt = _Sgd(cfg.learning_rate)

    report = TrainReport()
    order: list[int] = []
    for step in range(cfg.steps):
        # epoch-permutation sampling: seeded shuffles, no replacement within
        # an epoch; batch_size >= dataset size degenerates to full batches
        while len(order) < cfg.batch_size:
            order.extend(int(i) for i in rng.permutation(len(dataset)))
        idx = order[: cfg.batch_size]
        del order[: cfg.batch_size]
        batch = [dataset[i] for i in idx]
        transforms = None
        if cfg.align_mode == "umeyama_icp":
            transforms = []
            for j, item in enumerate(batch):
                scene = decode(forward(adapter, item.z_img))
                transforms.append(_item_alignment(scene, item, cfg, step, j))
        loss, gA, gB, gb = batch_loss_and_grads(adapter, batch, transforms)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite loss at step {step} (batch indices {idx})")
        # a zeroed gradient freezes the bias without disturbing optimizer state
        gb_eff = gb if cfg.train_bias else np.zeros_like(gb)
        opt.lr = cfg.lr_at(step)
        opt.step([adapter.lora_A, adapter.lora_B, adapter.bias], [gA, gB, gb_eff])
        report.loss_history.append(loss)
        report.wall_steps += 1
    report.final_loss = report.loss_history[-1]
    return report


def dataset_latent_error(adapter: MeshHeadAdapter, dataset: list[SyntheticItem]) -> float:
    """Mean ||forward(z_img) - z_star|| over the dataset (diagnostic)."""
    errs = [np.linalg.norm(forward(adapter, it.z_img) - it.z_star) for it in dataset]
    return float(np.mean(errs))
