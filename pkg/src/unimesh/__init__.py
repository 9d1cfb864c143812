"""UniMesh: desk-scale text-to-mesh pipeline with pluggable model backends.

The package wires a trainable low-rank latent adapter into a parametric SDF
decoder, closes the loop with prompt-driven mesh editing and a reflective
captioning agent, and ships the evaluation metric suite plus an HTTP service
for the browser console.
"""

from .adapter import MeshHeadAdapter, adapter_fingerprint, forward, init_recoverable
from .align import SimTransform, chamfer, global_align, icp_refine, point_to_sdf_loss
from .latents import LatentSimulator, embed_text, pinv_decode, simulate_image_latent
from .sdf import SdfScene, decode, marching_cubes, sample_surface, sdf_eval, sdf_grad
from .training import TrainConfig, make_synthetic_dataset, train

__version__ = "0.1.0"

__all__ = [
    "MeshHeadAdapter",
    "adapter_fingerprint",
    "forward",
    "init_recoverable",
    "SimTransform",
    "chamfer",
    "global_align",
    "icp_refine",
    "point_to_sdf_loss",
    "LatentSimulator",
    "embed_text",
    "pinv_decode",
    "simulate_image_latent",
    "SdfScene",
    "decode",
    "marching_cubes",
    "sample_surface",
    "sdf_eval",
    "sdf_grad",
    "TrainConfig",
    "make_synthetic_dataset",
    "train",
    "__version__",
]
