"""Parametric SDF scenes: decode, evaluation, surface sampling, extraction."""

from .eval import (
    sdf_eval,
    sdf_eval_batch,
    sdf_eval_grad_batch,
    sdf_grad,
    sdf_grad_batch,
    sdf_param_grad_batch,
)
from .marching import marching_cubes
from .mesh import PointCloud, TriangleMesh, cloud_to_ply, mesh_from_obj, mesh_to_obj
from .sampling import sample_surface
from .scene import SdfScene, decode

__all__ = [
    "SdfScene",
    "decode",
    "sdf_eval",
    "sdf_eval_batch",
    "sdf_eval_grad_batch",
    "sdf_grad",
    "sdf_grad_batch",
    "sdf_param_grad_batch",
    "sample_surface",
    "marching_cubes",
    "PointCloud",
    "TriangleMesh",
    "mesh_to_obj",
    "mesh_from_obj",
    "cloud_to_ply",
]
