"""Point-cloud alignment and the point-to-SDF supervision loss.

``global_align`` is a descriptor-free similarity initializer (centroids,
RMS-radius scale ratio, PCA axes with third-moment sign disambiguation);
``icp_refine`` alternates brute-force nearest neighbors with the closed-form
Umeyama similarity estimate.  ``point_to_sdf_loss`` is the mean squared SDF
value at transformed points, with an analytic gradient in the conditioning
latent chained through the decode slot envelopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .sdf.eval import sdf_param_grad_batch
from .sdf.mesh import PointCloud
from .sdf.scene import GEOMETRY_SLOTS, N_SLOTS, SdfScene, envelope_derivatives


class DegenerateGeometryError(ValueError):
    """Raised when a cloud's covariance is rank deficient (collinear/coplanar)."""


@dataclass(frozen=True)
class SimTransform:
    """Similarity transform p -> scale * R @ p + t with R a proper rotation."""

    scale: float
    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))
        R = self.rotation
        if R.shape != (3, 3) or self.translation.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation 3-vector")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if np.linalg.norm(R.T @ R - np.eye(3)) > 1e-9 or np.linalg.det(R) <= 0:
            raise ValueError("rotation must be orthonormal with det +1")

    @staticmethod
    def identity() -> "SimTransform":
        return SimTransform(1.0, np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return self.scale * points @ self.rotation.T + self.translation

    def compose(self, other: "SimTransform") -> "SimTransform":
        """Transform equivalent to applying ``other`` first, then ``self``."""
        return SimTransform(
            scale=self.scale * other.scale,
            rotation=self.rotation @ other.rotation,
            translation=self.scale * self.rotation @ other.translation + self.translation,
        )

    def to_json_dict(self) -> dict:
        return {
            "scale": self.scale,
            "rotation": [float(x) for x in self.rotation.ravel()],
            "translation": [float(x) for x in self.translation],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "SimTransform":
        return SimTransform(
            scale=float(d["scale"]),
            rotation=np.asarray(d["rotation"], dtype=np.float64).reshape(3, 3),
            translation=np.asarray(d["translation"], dtype=np.float64),
        )


@dataclass
class AlignmentReport:
    transform: SimTransform
    rms_residual: float
    iterations: int
    converged: bool
    residual_history: list[float] = field(default_factory=list)


def _as_points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


# ---------------------------------------------------------------------------
# nearest neighbors (hot kernel: numba loop / numpy twin)
# ---------------------------------------------------------------------------

def _nn_loops(src, dst, out_idx, out_d2):
    n = src.shape[0]
    m = dst.shape[0]
    for i in range(n):
        best = 1e300
        bj = 0
        for j in range(m):
            dx = src[i, 0] - dst[j, 0]
            dy = src[i, 1] - dst[j, 1]
            dz = src[i, 2] - dst[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < best:
                best = d2
                bj = j
        out_idx[i] = bj
        out_d2[i] = best


_nn_jit = backend.jit(_nn_loops)


def _nn_numpy(src, dst, out_idx, out_d2):
    # chunked to bound the (chunk, m) distance matrix
    chunk = max(1, int(4_000_000 // max(dst.shape[0], 1)))
    for s in range(0, src.shape[0], chunk):
        block = src[s : s + chunk]
        d2 = (
            np.sum(block * block, axis=1)[:, None]
            - 2.0 * block @ dst.T
            + np.sum(dst * dst, axis=1)[None, :]
        )
        idx = np.argmin(d2, axis=1)
        out_idx[s : s + chunk] = idx
        rows = np.arange(block.shape[0])
        # recompute exactly to avoid the expansion's cancellation error
        diff = block - dst[idx]
        out_d2[s : s + chunk] = np.sum(diff * diff, axis=1)


def nearest_neighbors(src, dst) -> tuple[np.ndarray, np.ndarray]:
    """Index into dst of each src point's nearest neighbor, plus squared distance.

    Ties resolve to the lowest index in both backends.
    """
    src = np.ascontiguousarray(_as_points(src))
    dst = np.ascontiguousarray(_as_points(dst))
    if src.shape[0] == 0 or dst.shape[0] == 0:
        raise ValueError("nearest_neighbors requires nonempty clouds")
    out_idx = np.empty(src.shape[0], dtype=np.int64)
    out_d2 = np.empty(src.shape[0])
    fn = _nn_jit if backend.NUMBA_ENABLED else _nn_numpy
    fn(src, dst, out_idx, out_d2)
    return out_idx, out_d2


def chamfer(a, b) -> float:
    """Symmetric mean squared nearest-neighbor distance between two clouds."""
    pa, pb = _as_points(a), _as_points(b)
    _, d_ab = nearest_neighbors(pa, pb)
    _, d_ba = nearest_neighbors(pb, pa)
    return float(0.5 * (d_ab.mean() + d_ba.mean()))


# ---------------------------------------------------------------------------
# closed-form similarity estimation
# ---------------------------------------------------------------------------

def umeyama(src, dst) -> SimTransform:
    """Least-squares similarity from corresponded clouds (equal length).

    Minimizes sum ||s R p_i + t - q_i||^2 via the SVD of the cross-covariance
    with reflection correction.
    """
    p = _as_points(src)
    q = _as_points(dst)
    if p.shape != q.shape or p.shape[0] < 3:
        raise ValueError("umeyama needs equal-length clouds of >= 3 points")
    mu_p = p.mean(axis=0)
    mu_q = q.mean(axis=0)
    pc = p - mu_p
    qc = q - mu_q
    var_p = float(np.mean(np.sum(pc * pc, axis=1)))
    if var_p < 1e-24:
        raise DegenerateGeometryError("source cloud has zero spread")
    cov = (qc.T @ pc) / p.shape[0]
    U, D, Vt = np.linalg.svd(cov)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    scale = float(np.trace(np.diag(D) @ S) / var_p)
    if scale <= 0 or not np.isfinite(scale):
        raise DegenerateGeometryError("degenerate correspondence geometry")
    t = mu_q - scale * R @ mu_p
    return SimTransform(scale=scale, rotation=R, translation=t)


def global_align(src, dst) -> SimTransform:
    """Coarse similarity aligning src toward dst without correspondences.

    Translation from centroids, scale from RMS-radius ratio, rotation from
    PCA axes; axis signs fixed by third central moments along each axis (the
    clouds must be asymmetric enough that these are nonzero), handedness by
    flipping the least-skewed axis.
    """
    p = _as_points(src)
    q = _as_points(dst)
    if p.shape[0] < 4 or q.shape[0] < 4:
        raise ValueError("global_align needs clouds of >= 4 points")

    def frame(pts: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
        mu = pts.mean(axis=0)
        c = pts - mu
        rms = float(np.sqrt(np.mean(np.sum(c * c, axis=1))))
        cov = (c.T @ c) / pts.shape[0]
        evals, evecs = np.linalg.eigh(cov)  # ascending
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        evecs = evecs[:, order]
        if evals[-1] < 1e-12 * max(evals[0], 1e-30):
            raise DegenerateGeometryError("covariance is rank deficient (collinear or coplanar cloud)")
        proj = c @ evecs
        m3 = np.mean(proj**3, axis=0)
        flips = np.where(m3 < 0, -1.0, 1.0)
        evecs = evecs * flips
        m3 = m3 * flips
        if np.linalg.det(evecs) < 0:
            j = int(np.argmin(np.abs(m3)))
            evecs[:, j] *= -1.0
        return evecs, rms, mu

    U_src, rms_src, mu_src = frame(p)
    U_dst, rms_dst, mu_dst = frame(q)
    if rms_src < 1e-15:
        raise DegenerateGeometryError("source cloud has zero spread")
    scale = rms_dst / rms_src
    R = U_dst @ U_src.T
    # guard roundoff drift from orthonormality
    uu, _, vvt = np.linalg.svd(R)
    R = uu @ vvt
    if np.linalg.det(R) < 0:
        raise DegenerateGeometryError("axis disambiguation failed (symmetric cloud?)")
    t = mu_dst - scale * R @ mu_src
    return SimTransform(scale=scale, rotation=R, translation=t)


def icp_refine(src, dst, init: SimTransform, max_iter: int = 50, tol: float = 1e-6) -> AlignmentReport:
    """Refine a similarity transform by iterative closest point.

    Each iteration pairs transformed src points with their nearest dst points
    and re-solves the similarity in closed form; the RMS residual against the
    current correspondences is non-increasing across iterations.  Stops when
    the RMS change drops below tol, the residual itself is below tol, or the
    iteration budget is exhausted.
    """
    p = _as_points(src)
    q = _as_points(dst)
    if p.shape[0] == 0 or q.shape[0] == 0:
        raise ValueError("icp_refine requires nonempty clouds")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    transform = init
    history: list[float] = []
    rms = float("inf")
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        moved = transform.apply(p)
        idx, _ = nearest_neighbors(moved, q)
        targets = q[idx]
        transform = umeyama(p, targets)
        resid = transform.apply(p) - targets
        rms = float(np.sqrt(np.mean(np.sum(resid * resid, axis=1))))
        history.append(rms)
        if rms < tol or (len(history) > 1 and abs(history[-2] - rms) < tol):
            converged = True
            break
    return AlignmentReport(
        transform=transform,
        rms_residual=rms,
        iterations=iterations,
        converged=converged,
        residual_history=history,
    )


# ---------------------------------------------------------------------------
# point-to-SDF loss
# ---------------------------------------------------------------------------

def point_to_sdf_loss(
    scene: SdfScene, cloud, transform: SimTransform | None = None
) -> tuple[float, np.ndarray | None]:
    """Mean squared SDF value at the transformed cloud, plus latent gradient.

    Returns ``(loss, grad_z)`` where grad_z is the analytic gradient of the
    loss in the scene's 16-dim conditioning latent (chain rule through the
    decode envelopes; one-sided at smooth-union clamps).  grad_z is None when
    the scene was not produced by decode.  The transform is applied to the
    points as a fixed preprocessing step and carries no gradient.
    """
    pts = _as_points(cloud)
    if pts.shape[0] == 0:
        raise ValueError("point_to_sdf_loss requires a nonempty cloud")
    if transform is not None:
        pts = transform.apply(pts)

    if scene.latent is None:
        vals = sdf_param_grad_batch(scene, pts)[0]
        return float(np.mean(vals * vals)), None

    vals, grad_theta = sdf_param_grad_batch(scene, pts)
    n = pts.shape[0]
    loss = float(np.mean(vals * vals))
    # dL/d(theta_j) = (2/n) sum_i vals_i * d(val_i)/d(theta_j)
    dL_dtheta = (2.0 / n) * (vals @ grad_theta)
    grad_z = np.zeros(N_SLOTS)
    env = envelope_derivatives(scene.latent)
    np.add.at(grad_z, GEOMETRY_SLOTS, dL_dtheta * env)
    return loss, grad_z
