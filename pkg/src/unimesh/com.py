"""Closed-loop prompt-driven mesh editing with frozen adapter weights.

A session records the trajectory (prompt, z_img, z_cond, mesh) of an initial
generation plus any number of edits.  Every step re-derives z_cond from the
same frozen adapter; a fingerprint check before and after each edit enforces
that nothing in the loop updates parameters.  Meshes are stored by content
hash so a session can be replayed and verified byte-for-byte.

The scripted editor gives the loop a deterministic backend: it reads the
current scene through the simulator's pseudo-inverse, applies a
``<slot> <op> <value>`` instruction in decoded-parameter space, and re-encodes.
"""

from __future__ import annotations

import hashlib
import json
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Protocol

import numpy as np

from .adapter import MeshHeadAdapter, adapter_fingerprint, forward
from .latents import LatentSimulator, pinv_decode
from .sdf.marching import marching_cubes
from .sdf.mesh import TriangleMesh, mesh_to_obj
from .sdf.scene import (
    AFFINE_SLOTS,
    SCALE_GAIN,
    SCALE_SLOT,
    decode,
    invert_affine_slot,
    invert_scale_slot,
)


class FrozenWeightsError(RuntimeError):
    """The adapter changed between steps of a session."""


class EditError(ValueError):
    """Scripted edit could not be applied (parse or range failure)."""


class EditorBackend(Protocol):
    def __call__(self, z_img: np.ndarray, prompt: str) -> np.ndarray: ...


TextToLatent = Callable[[str], np.ndarray]


@dataclass(frozen=True)
class MeshParams:
    resolution: int = 64
    bounds: tuple = ((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0))


@dataclass
class MeshStore:
    """Content-addressed OBJ blob store (hash of the bytes is the key)."""

    blobs: dict[str, bytes] = field(default_factory=dict)

    @staticmethod
    def content_hash(data: bytes) -> str:
        return hashlib.sha256(data).hexdigest()

    def put(self, data: bytes) -> str:
        key = self.content_hash(data)
        self.blobs.setdefault(key, data)
        return key

    def get(self, key: str) -> bytes:
        return self.blobs[key]

    def __contains__(self, key: str) -> bool:
        return key in self.blobs


@dataclass
class EditStep:
    index: int
    prompt: str
    z_img: np.ndarray
    z_cond: np.ndarray
    mesh_hash: str
    mesh_path: str
    created_at: str

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "prompt": self.prompt,
            "z_img": [float(x) for x in self.z_img],
            "z_cond": [float(x) for x in self.z_cond],
            "mesh_hash": self.mesh_hash,
            "mesh_path": self.mesh_path,
            "created_at": self.created_at,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "EditStep":
        return EditStep(
            index=int(d["index"]),
            prompt=d["prompt"],
            z_img=np.asarray(d["z_img"], dtype=np.float64),
            z_cond=np.asarray(d["z_cond"], dtype=np.float64),
            mesh_hash=d["mesh_hash"],
            mesh_path=d["mesh_path"],
            created_at=d["created_at"],
        )


@dataclass
class EditSession:
    id: str
    adapter_fingerprint: str
    steps: list[EditStep] = field(default_factory=list)

    @property
    def latest(self) -> EditStep:
        return self.steps[-1]

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "adapter_fingerprint": self.adapter_fingerprint,
            "steps": [s.to_json_dict() for s in self.steps],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "EditSession":
        return EditSession(
            id=d["id"],
            adapter_fingerprint=d["adapter_fingerprint"],
            steps=[EditStep.from_json_dict(s) for s in d["steps"]],
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _extract_and_store(
    z_cond: np.ndarray, store: MeshStore, mesh_params: MeshParams
) -> tuple[str, str, TriangleMesh]:
    mesh = marching_cubes(decode(z_cond), mesh_params.resolution, mesh_params.bounds)
    data = mesh_to_obj(mesh)
    key = store.put(data)
    return key, f"meshes/{key}.obj", mesh


def init_session(
    prompt: str,
    text_to_latent: TextToLatent,
    adapter: MeshHeadAdapter,
    store: MeshStore,
    mesh_params: MeshParams = MeshParams(),
    session_id: str | None = None,
) -> EditSession:
    """Create a session with step 0 generated from the prompt."""
    try:
        z_img = np.asarray(text_to_latent(prompt), dtype=np.float64)
    except EditError:
        raise
    except Exception as exc:
        raise RuntimeError(f"text-to-latent backend failed: {exc}") from exc
    z_cond = forward(adapter, z_img)
    key, path, _ = _extract_and_store(z_cond, store, mesh_params)
    step = EditStep(0, prompt, z_img, z_cond, key, path, _now())
    return EditSession(
        id=session_id or uuid.uuid4().hex[:12],
        adapter_fingerprint=adapter_fingerprint(adapter),
        steps=[step],
    )


def apply_edit(
    session: EditSession,
    prompt: str,
    editor: EditorBackend,
    adapter: MeshHeadAdapter,
    store: MeshStore,
    mesh_params: MeshParams = MeshParams(),
) -> EditSession:
    """Append one edit step; the session is unchanged if the editor fails.

    The editor consumes the latest step's image latent, so chained edits
    compose.  The adapter fingerprint is checked before and after: any
    parameter change raises FrozenWeightsError.
    """
    if not session.steps:
        raise ValueError("session has no steps")
    fp = adapter_fingerprint(adapter)
    if fp != session.adapter_fingerprint:
        raise FrozenWeightsError("adapter does not match the session fingerprint")
    new_z_img = np.asarray(editor(session.latest.z_img, prompt), dtype=np.float64)
    z_cond = forward(adapter, new_z_img)
    key, path, _ = _extract_and_store(z_cond, store, mesh_params)
    if adapter_fingerprint(adapter) != fp:
        raise FrozenWeightsError("adapter parameters changed during the edit")
    step = EditStep(len(session.steps), prompt, new_z_img, z_cond, key, path, _now())
    session.steps.append(step)
    return session


# ---------------------------------------------------------------------------
# scripted deterministic backends
# ---------------------------------------------------------------------------

_SLOT_BY_NAME = {
    "sphere.x": ("affine", 0),
    "sphere.y": ("affine", 1),
    "sphere.z": ("affine", 2),
    "sphere.r": ("affine", 3),
    "box.x": ("affine", 4),
    "box.y": ("affine", 5),
    "box.z": ("affine", 6),
    "box.hx": ("affine", 7),
    "box.hy": ("affine", 8),
    "box.hz": ("affine", 9),
    "smooth.k": ("affine", 10),
    "color.r": ("affine", 11),
    "color.g": ("affine", 12),
    "color.b": ("affine", 13),
    "scale": ("scale", SCALE_SLOT),
}

_EDIT_RE = re.compile(r"^\s*(\S+)\s*([+\-=−])\s*([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)\s*$")


def _decoded_value(z: np.ndarray, kind: str, slot: int) -> float:
    if kind == "scale":
        return float(np.exp(SCALE_GAIN * np.tanh(z[slot])))
    # AFFINE_SLOTS is ordered by slot index, so it doubles as a lookup table
    _, _, offset, gain = AFFINE_SLOTS[slot]
    return float(offset + gain * np.tanh(z[slot]))


def _invert_value(value: float, kind: str, slot: int) -> float:
    if kind == "scale":
        return invert_scale_slot(value)
    _, _, offset, gain = AFFINE_SLOTS[slot]
    return invert_affine_slot(value, offset, gain)


def parse_edit_prompt(prompt: str) -> tuple[str, str, float]:
    """Split ``<slot> <op> <value>`` into validated components."""
    m = _EDIT_RE.match(prompt)
    if not m:
        raise EditError(
            f"cannot parse edit {prompt!r}: expected '<slot> <op> <value>' "
            f"with op one of + - ="
        )
    slot_name, op, value = m.group(1), m.group(2), float(m.group(3))
    if op == "−":  # unicode minus
        op = "-"
    if slot_name not in _SLOT_BY_NAME:
        known = ", ".join(sorted(_SLOT_BY_NAME))
        raise EditError(f"unknown slot {slot_name!r}; valid slots: {known}")
    return slot_name, op, value


def scripted_edit(z_img: np.ndarray, prompt: str, sim: LatentSimulator) -> np.ndarray:
    """Deterministic editor: adjust one decoded parameter and re-encode.

    Decodes the current latent through the simulator pseudo-inverse, computes
    the target parameter value from the op, inverts the slot envelope, and
    returns the noise-free re-encoding.  Raises EditError on unknown slots or
    targets outside the slot's reachable interval.
    """
    slot_name, op, value = parse_edit_prompt(prompt)
    kind, slot = _SLOT_BY_NAME[slot_name]
    z = pinv_decode(sim, z_img)
    current = _decoded_value(z, kind, slot)
    if op == "=":
        target = value
    elif op == "+":
        target = current + value
    else:
        target = current - value
    try:
        z_new_slot = _invert_value(target, kind, slot)
    except ValueError as exc:
        raise EditError(f"{slot_name}: {exc}") from exc
    z = z.copy()
    z[slot] = z_new_slot
    return sim.A @ z + sim.b  # noise-free re-encode


def make_scripted_editor(sim: LatentSimulator) -> EditorBackend:
    def editor(z_img: np.ndarray, prompt: str) -> np.ndarray:
        return scripted_edit(z_img, prompt, sim)

    return editor


def scripted_text_to_latent(prompt: str, sim: LatentSimulator) -> np.ndarray:
    """Deterministic text-to-latent: slot assignments over the zero latent.

    The empty prompt maps to the zero conditioning latent (so the image
    latent is the simulator bias); otherwise the prompt is a semicolon
    separated list of ``<slot> = <value>`` assignments.
    """
    z = np.zeros(sim.A.shape[1])
    text = prompt.strip()
    if text:
        for clause in text.split(";"):
            clause = clause.strip()
            if not clause:
                continue
            slot_name, op, value = parse_edit_prompt(clause)
            if op != "=":
                raise EditError(f"initial prompts only support '=', got {op!r} in {clause!r}")
            kind, slot = _SLOT_BY_NAME[slot_name]
            try:
                z[slot] = _invert_value(value, kind, slot)
            except ValueError as exc:
                raise EditError(f"{slot_name}: {exc}") from exc
    return sim.A @ z + sim.b


def make_scripted_text_to_latent(sim: LatentSimulator) -> TextToLatent:
    def backend(prompt: str) -> np.ndarray:
        return scripted_text_to_latent(prompt, sim)

    return backend


def replay_session(
    session: EditSession,
    text_to_latent: TextToLatent,
    editor: EditorBackend,
    adapter: MeshHeadAdapter,
    mesh_params: MeshParams = MeshParams(),
) -> EditSession:
    """Re-execute the recorded prompts with fresh backends into a new session."""
    store = MeshStore()
    fresh = init_session(
        session.steps[0].prompt, text_to_latent, adapter, store, mesh_params, session_id=session.id
    )
    for step in session.steps[1:]:
        apply_edit(fresh, step.prompt, editor, adapter, store, mesh_params)
    return fresh
