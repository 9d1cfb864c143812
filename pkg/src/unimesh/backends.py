"""Model-backend wiring: deterministic scripted backends or remote HTTP ones.

Every remote role speaks one envelope: POST <url> with JSON
``{"role": <role>, "payload": {...}}`` and a JSON ``{"output": ...}`` reply.
View rasters travel to remote captioners as base64 PNG normal maps.
"""

from __future__ import annotations

import base64
import io
import json
import urllib.request
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .com import EditorBackend, TextToLatent, make_scripted_editor, make_scripted_text_to_latent
from .latents import LatentSimulator
from .reflexion import CaptionBackends, ViewRender, make_scripted_backends
from .sdf.mesh import TriangleMesh


def view_to_png_bytes(view: ViewRender) -> bytes:
    """Normal-map PNG: RGB = (n+1)/2 inside the silhouette, alpha = mask."""
    rgb = np.clip((view.normals + 1.0) / 2.0, 0.0, 1.0)
    rgba = np.concatenate([rgb, view.silhouette[:, :, None].astype(np.float64)], axis=2)
    data = np.round(rgba * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def _views_payload(views: list[ViewRender]) -> list[str]:
    return [base64.b64encode(view_to_png_bytes(v)).decode("ascii") for v in views]


def call_remote(url: str, role: str, payload: dict, timeout: float = 30.0):
    body = json.dumps({"role": role, "payload": payload}).encode("utf-8")
    req = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        reply = json.loads(resp.read().decode("utf-8"))
    if "output" not in reply:
        raise RuntimeError(f"remote {role} reply missing 'output'")
    return reply["output"]


def remote_editor(url: str) -> EditorBackend:
    def editor(z_img: np.ndarray, prompt: str) -> np.ndarray:
        out = call_remote(url, "editor", {"z_img": [float(x) for x in z_img], "prompt": prompt})
        return np.asarray(out["z_img"], dtype=np.float64)

    return editor


def remote_text_to_latent(url: str) -> TextToLatent:
    def backend(prompt: str) -> np.ndarray:
        out = call_remote(url, "text_to_latent", {"prompt": prompt})
        return np.asarray(out["z_img"], dtype=np.float64)

    return backend


def remote_caption_backends(urls: dict[str, str]) -> CaptionBackends:
    def actor(views, few_shot, memory):
        out = call_remote(
            urls["actor"],
            "actor",
            {"views_png": _views_payload(views), "few_shot": list(few_shot), "memory": list(memory)},
        )
        return str(out["caption"])

    def evaluator(caption, views):
        out = call_remote(
            urls["evaluator"],
            "evaluator",
            {"caption": caption, "views_png": _views_payload(views)},
        )
        return str(out["verdict"])

    def reflector(caption, views, verdict):
        out = call_remote(
            urls["reflector"],
            "reflector",
            {"caption": caption, "views_png": _views_payload(views), "verdict": verdict},
        )
        return str(out["reflection"])

    return CaptionBackends(actor=actor, evaluator=evaluator, reflector=reflector)


@dataclass(frozen=True)
class BackendSuite:
    text_to_latent: TextToLatent
    editor: EditorBackend
    captioner: "CaptionerFactory"


class CaptionerFactory:
    """Builds per-mesh caption backends (scripted ones read the mesh)."""

    def __init__(self, mode: str, urls: dict[str, str] | None = None):
        self.mode = mode
        self.urls = urls or {}

    def for_mesh(self, mesh: TriangleMesh) -> CaptionBackends:
        if self.mode == "scripted":
            return make_scripted_backends(mesh)
        return remote_caption_backends(self.urls)


def build_backends(mode: str, sim: LatentSimulator, urls: dict[str, str] | None = None) -> BackendSuite:
    if mode == "scripted":
        return BackendSuite(
            text_to_latent=make_scripted_text_to_latent(sim),
            editor=make_scripted_editor(sim),
            captioner=CaptionerFactory("scripted"),
        )
    if mode == "remote":
        urls = urls or {}
        required = ("text_to_latent", "editor", "actor", "evaluator", "reflector")
        missing = [r for r in required if r not in urls]
        if missing:
            raise ValueError(f"remote mode needs endpoint URLs for: {', '.join(missing)}")
        return BackendSuite(
            text_to_latent=remote_text_to_latent(urls["text_to_latent"]),
            editor=remote_editor(urls["editor"]),
            captioner=CaptionerFactory("remote", urls),
        )
    raise ValueError(f"unknown backend mode {mode!r}")
