"""Multi-view rendering, informative-view selection, and the reflective
captioning loop (actor proposes, evaluator judges, reflector diagnoses).

Rendering is orthographic: cameras sit on fixed directions (8 azimuths at
two elevations by default) at distance 3 * max(1, R) from the bounding-sphere
center, where R is the bounding radius; the square view window has half-width
max(1, 1.05 * R), so pixels_per_unit = resolution / (2 * half_width).  Depth
is the distance from the camera plane; background pixels carry +inf.

View selection scores each render by silhouette coverage, in-silhouette depth
variance, and the Shannon entropy of normals bucketed into the 26 lattice
directions, z-normalized across the candidate set and summed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import backend
from .sdf.mesh import TriangleMesh

MEMORY_CAPACITY = 3


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

@dataclass
class ViewRender:
    camera_direction: np.ndarray  # unit vector from object center toward camera
    silhouette: np.ndarray  # (res, res) bool
    depth: np.ndarray  # (res, res) float, +inf background
    normals: np.ndarray  # (res, res, 3) unit where silhouette
    resolution: int
    pixels_per_unit: float
    camera_distance: float


def view_directions(n: int) -> np.ndarray:
    """n camera directions: ceil(n/2) azimuths at elevations +/-30 degrees."""
    if n < 1:
        raise ValueError("need at least one direction")
    n_az = (n + 1) // 2
    az = np.arange(n_az) * (2.0 * np.pi / n_az)
    dirs = []
    for elev in (np.deg2rad(30.0), np.deg2rad(-30.0)):
        ce, se = np.cos(elev), np.sin(elev)
        for a in az:
            dirs.append((ce * np.cos(a), ce * np.sin(a), se))
    return np.asarray(dirs[:n], dtype=np.float64)


def _raster_loops(tri_px, tri_depth, tri_normals, res, depth_buf, normal_buf, mask_buf):
    nf = tri_px.shape[0]
    for f in range(nf):
        x1, y1 = tri_px[f, 0, 0], tri_px[f, 0, 1]
        x2, y2 = tri_px[f, 1, 0], tri_px[f, 1, 1]
        x3, y3 = tri_px[f, 2, 0], tri_px[f, 2, 1]
        denom = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
        if denom == 0.0:
            continue
        lo_x = int(np.floor(min(x1, min(x2, x3))))
        hi_x = int(np.ceil(max(x1, max(x2, x3))))
        lo_y = int(np.floor(min(y1, min(y2, y3))))
        hi_y = int(np.ceil(max(y1, max(y2, y3))))
        if lo_x < 0:
            lo_x = 0
        if lo_y < 0:
            lo_y = 0
        if hi_x > res - 1:
            hi_x = res - 1
        if hi_y > res - 1:
            hi_y = res - 1
        for py in range(lo_y, hi_y + 1):
            for px in range(lo_x, hi_x + 1):
                cx = px + 0.5
                cy = py + 0.5
                l1 = ((y2 - y3) * (cx - x3) + (x3 - x2) * (cy - y3)) / denom
                l2 = ((y3 - y1) * (cx - x3) + (x1 - x3) * (cy - y3)) / denom
                l3 = 1.0 - l1 - l2
                if l1 < 0.0 or l2 < 0.0 or l3 < 0.0:
                    continue
                d = l1 * tri_depth[f, 0] + l2 * tri_depth[f, 1] + l3 * tri_depth[f, 2]
                if d < depth_buf[py, px]:
                    depth_buf[py, px] = d
                    normal_buf[py, px, 0] = tri_normals[f, 0]
                    normal_buf[py, px, 1] = tri_normals[f, 1]
                    normal_buf[py, px, 2] = tri_normals[f, 2]
                    mask_buf[py, px] = True


_raster_jit = backend.jit(_raster_loops)


def _raster_numpy(tri_px, tri_depth, tri_normals, res, depth_buf, normal_buf, mask_buf):
    for f in range(tri_px.shape[0]):
        (x1, y1), (x2, y2), (x3, y3) = tri_px[f]
        denom = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
        if denom == 0.0:
            continue
        lo_x = max(int(np.floor(min(x1, x2, x3))), 0)
        hi_x = min(int(np.ceil(max(x1, x2, x3))), res - 1)
        lo_y = max(int(np.floor(min(y1, y2, y3))), 0)
        hi_y = min(int(np.ceil(max(y1, y2, y3))), res - 1)
        if lo_x > hi_x or lo_y > hi_y:
            continue
        ys, xs = np.mgrid[lo_y : hi_y + 1, lo_x : hi_x + 1]
        cx = xs + 0.5
        cy = ys + 0.5
        l1 = ((y2 - y3) * (cx - x3) + (x3 - x2) * (cy - y3)) / denom
        l2 = ((y3 - y1) * (cx - x3) + (x1 - x3) * (cy - y3)) / denom
        l3 = 1.0 - l1 - l2
        inside = (l1 >= 0) & (l2 >= 0) & (l3 >= 0)
        if not inside.any():
            continue
        d = l1 * tri_depth[f, 0] + l2 * tri_depth[f, 1] + l3 * tri_depth[f, 2]
        window = depth_buf[lo_y : hi_y + 1, lo_x : hi_x + 1]
        closer = inside & (d < window)
        window[closer] = d[closer]
        nwin = normal_buf[lo_y : hi_y + 1, lo_x : hi_x + 1]
        nwin[closer] = tri_normals[f]
        mask_buf[lo_y : hi_y + 1, lo_x : hi_x + 1][closer] = True


def render_views(mesh: TriangleMesh, n_candidates: int = 16, resolution: int = 128) -> list[ViewRender]:
    """Deterministic orthographic renders from fixed camera directions."""
    if mesh.is_empty:
        raise ValueError("cannot render an empty mesh")
    if n_candidates < 6:
        raise ValueError("need at least 6 candidate views")

    verts = mesh.vertices
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    center = (lo + hi) / 2.0
    radius = float(np.max(np.linalg.norm(verts - center, axis=1)))
    half_w = max(1.0, 1.05 * radius)
    cam_dist = 3.0 * max(1.0, radius)
    ppu = resolution / (2.0 * half_w)

    v = verts - center
    f = mesh.faces
    e1 = verts[f[:, 1]] - verts[f[:, 0]]
    e2 = verts[f[:, 2]] - verts[f[:, 0]]
    fnorm = np.cross(e1, e2)
    lens = np.linalg.norm(fnorm, axis=1)
    lens[lens == 0.0] = 1.0
    fnorm /= lens[:, None]

    out = []
    raster = _raster_jit if backend.NUMBA_ENABLED else _raster_numpy
    for direction in view_directions(n_candidates):
        up = np.array([0.0, 0.0, 1.0])
        if abs(direction @ up) > 0.999:
            up = np.array([1.0, 0.0, 0.0])
        right = np.cross(up, direction)
        right /= np.linalg.norm(right)
        vup = np.cross(direction, right)

        xv = v @ right
        yv = v @ vup
        depth = cam_dist - v @ direction
        px = (xv + half_w) * ppu
        py = (half_w - yv) * ppu  # row 0 is the top of the image

        tri_px = np.stack([px[f], py[f]], axis=2)  # (F, 3, 2)
        tri_depth = depth[f]
        # orient normals toward the camera
        toward = np.where((fnorm @ direction)[:, None] < 0.0, -fnorm, fnorm)

        depth_buf = np.full((resolution, resolution), np.inf)
        normal_buf = np.zeros((resolution, resolution, 3))
        mask_buf = np.zeros((resolution, resolution), dtype=bool)
        raster(
            np.ascontiguousarray(tri_px),
            np.ascontiguousarray(tri_depth),
            np.ascontiguousarray(toward),
            resolution,
            depth_buf,
            normal_buf,
            mask_buf,
        )
        out.append(
            ViewRender(
                camera_direction=direction,
                silhouette=mask_buf,
                depth=depth_buf,
                normals=normal_buf,
                resolution=resolution,
                pixels_per_unit=ppu,
                camera_distance=cam_dist,
            )
        )
    return out


# ---------------------------------------------------------------------------
# view selection
# ---------------------------------------------------------------------------

_LATTICE = np.array(
    [
        (i, j, k)
        for i in (-1, 0, 1)
        for j in (-1, 0, 1)
        for k in (-1, 0, 1)
        if (i, j, k) != (0, 0, 0)
    ],
    dtype=np.float64,
)
_LATTICE /= np.linalg.norm(_LATTICE, axis=1)[:, None]


@dataclass
class ViewScore:
    view_index: int
    coverage: float
    depth_variance: float
    normal_entropy: float
    total: float = float("nan")


def _normal_entropy(view: ViewRender) -> float:
    if not view.silhouette.any():
        return 0.0
    normals = view.normals[view.silhouette]
    bins = np.argmax(normals @ _LATTICE.T, axis=1)
    counts = np.bincount(bins, minlength=26).astype(np.float64)
    p = counts / counts.sum()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def score_views(renders: list[ViewRender]) -> list[ViewScore]:
    """Raw per-view statistics plus z-normalized totals across the set."""
    scores = []
    for i, view in enumerate(renders):
        cov = float(view.silhouette.mean())
        dv = float(np.var(view.depth[view.silhouette])) if view.silhouette.any() else 0.0
        ent = _normal_entropy(view)
        scores.append(ViewScore(view_index=i, coverage=cov, depth_variance=dv, normal_entropy=ent))

    def znorm(vals: np.ndarray) -> np.ndarray:
        std = vals.std()
        if std == 0.0:
            return np.zeros_like(vals)
        return (vals - vals.mean()) / std

    zc = znorm(np.array([s.coverage for s in scores]))
    zd = znorm(np.array([s.depth_variance for s in scores]))
    ze = znorm(np.array([s.normal_entropy for s in scores]))
    for i, s in enumerate(scores):
        s.total = float(zc[i] + zd[i] + ze[i])
    return scores


def select_views(renders: list[ViewRender]) -> list[int]:
    """Indices (ascending) of the six highest-scoring views; index breaks ties."""
    if len(renders) < 6:
        raise ValueError("need at least 6 candidate renders")
    scores = score_views(renders)
    totals = np.array([s.total for s in scores])
    ranked = np.lexsort((np.arange(len(totals)), -totals))
    return sorted(int(i) for i in ranked[:6])


# ---------------------------------------------------------------------------
# reflective captioning loop
# ---------------------------------------------------------------------------

Actor = Callable[[list[ViewRender], list[str], list[str]], str]
Evaluator = Callable[[str, list[ViewRender]], str]
Reflector = Callable[[str, list[ViewRender], str], str]


@dataclass(frozen=True)
class CaptionBackends:
    actor: Actor
    evaluator: Evaluator
    reflector: Reflector


@dataclass
class Attempt:
    caption: str
    verdict: str  # "accept" | "reject"
    reflection: str | None = None

    def to_json_dict(self) -> dict:
        return {"caption": self.caption, "verdict": self.verdict, "reflection": self.reflection}


@dataclass
class ReflexionEpisode:
    attempts: list[Attempt] = field(default_factory=list)
    final_caption: str = ""
    accepted: bool = False
    iterations_used: int = 0

    def to_json_dict(self) -> dict:
        return {
            "attempts": [a.to_json_dict() for a in self.attempts],
            "final_caption": self.final_caption,
            "accepted": self.accepted,
            "iterations_used": self.iterations_used,
        }


class ReflexionBackendError(RuntimeError):
    """A captioning backend failed; carries the partial episode transcript."""

    def __init__(self, message: str, episode: ReflexionEpisode):
        super().__init__(message)
        self.episode = episode


def run_reflexion(
    views: list[ViewRender],
    backends: CaptionBackends,
    few_shot: list[str] | None = None,
    max_iters: int = 4,
) -> ReflexionEpisode:
    """Iterate actor -> evaluator (-> reflector on reject) up to max_iters.

    Episodic memory holds the most recent MEMORY_CAPACITY reflections, FIFO
    evicted.  Every rejected attempt stores its reflection; an accepted
    attempt stores none and ends the episode.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    few_shot = few_shot or []
    memory: list[str] = []
    episode = ReflexionEpisode()
    for it in range(1, max_iters + 1):
        episode.iterations_used = it
        try:
            caption = backends.actor(views, few_shot, list(memory))
        except Exception as exc:
            raise ReflexionBackendError(f"actor failed: {exc}", episode) from exc
        try:
            verdict = backends.evaluator(caption, views)
        except Exception as exc:
            raise ReflexionBackendError(f"evaluator failed: {exc}", episode) from exc
        if verdict not in ("accept", "reject"):
            raise ReflexionBackendError(f"evaluator returned {verdict!r}", episode)
        attempt = Attempt(caption=caption, verdict=verdict)
        episode.attempts.append(attempt)
        episode.final_caption = caption
        if verdict == "accept":
            episode.accepted = True
            return episode
        try:
            reflection = backends.reflector(caption, views, verdict)
        except Exception as exc:
            raise ReflexionBackendError(f"reflector failed: {exc}", episode) from exc
        attempt.reflection = reflection
        memory.append(reflection)
        if len(memory) > MEMORY_CAPACITY:
            del memory[: len(memory) - MEMORY_CAPACITY]
    episode.accepted = False
    return episode


# ---------------------------------------------------------------------------
# scripted deterministic backends
# ---------------------------------------------------------------------------

COLOR_WORDS = (
    ("black", (0.0, 0.0, 0.0)),
    ("gray", (0.5, 0.5, 0.5)),
    ("white", (1.0, 1.0, 1.0)),
    ("red", (1.0, 0.0, 0.0)),
    ("green", (0.0, 1.0, 0.0)),
    ("blue", (0.0, 0.0, 1.0)),
    ("yellow", (1.0, 1.0, 0.0)),
    ("cyan", (0.0, 1.0, 1.0)),
    ("magenta", (1.0, 0.0, 1.0)),
)

_HINT_RE = re.compile(r"mention the (\w+)")


def color_word(rgb) -> str:
    rgb = np.asarray(rgb, dtype=np.float64)
    dists = [np.sum((rgb - np.asarray(ref)) ** 2) for _, ref in COLOR_WORDS]
    return COLOR_WORDS[int(np.argmin(dists))][0]


def silhouette_roundness(view: ViewRender) -> float:
    """Deviation of the silhouette from a disc, as the coefficient of
    variation of boundary-pixel distance to the silhouette centroid
    (0 for a disc, about 0.1 for an axis-aligned square)."""
    sil = view.silhouette
    if not sil.any():
        return 0.0
    inner = np.zeros_like(sil)
    inner[1:-1, 1:-1] = (
        sil[1:-1, 1:-1] & sil[:-2, 1:-1] & sil[2:, 1:-1] & sil[1:-1, :-2] & sil[1:-1, 2:]
    )
    boundary = np.argwhere(sil & ~inner)
    if len(boundary) < 8:
        return 0.0
    centroid = np.argwhere(sil).mean(axis=0)
    r = np.linalg.norm(boundary - centroid, axis=1)
    return float(r.std() / max(r.mean(), 1e-9))


def shape_words(views: list[ViewRender]) -> str:
    """cv <= 0.02 reads as round, >= 0.06 as boxy, in between as a blend."""
    cv = float(np.mean([silhouette_roundness(v) for v in views]))
    if cv <= 0.02:
        return "round"
    if cv >= 0.06:
        return "boxy"
    return "rounded boxy"


def caption_tokens(caption: str) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", caption.lower()))


def scripted_actor_from_mesh(
    mesh: TriangleMesh, views: list[ViewRender], memory: list[str]
) -> str:
    """Template caption from measured statistics plus memory-demanded nouns.

    Color word comes from the mesh vertex color, shape words from silhouette
    roundness; any memory hint of the form "mention the X" appends X (matched
    as whole words, so "boxy" does not satisfy a demand for "box").
    """
    rgb = mesh.colors.mean(axis=0) if mesh.colors is not None else np.full(3, 0.5)
    caption = f"a {color_word(rgb)} {shape_words(views)} object"
    for hint in memory:
        for noun in _HINT_RE.findall(hint):
            if noun.lower() not in caption_tokens(caption):
                caption += f" with the {noun}"
    return caption


def make_scripted_backends(mesh: TriangleMesh, required_tokens: tuple[str, ...] = ()) -> CaptionBackends:
    """Deterministic trio: measured-statistics actor, word-level token
    evaluator, missing-token reflector."""

    def actor(views, few_shot, memory):
        return scripted_actor_from_mesh(mesh, views, memory)

    def evaluator(caption, views):
        present = caption_tokens(caption)
        return "accept" if all(tok in present for tok in required_tokens) else "reject"

    def reflector(caption, views, verdict):
        present = caption_tokens(caption)
        for tok in required_tokens:
            if tok not in present:
                return f"mention the {tok}"
        return "looks fine"

    return CaptionBackends(actor=actor, evaluator=evaluator, reflector=reflector)
