"""Scene SDF evaluation, spatial gradients, and parameter gradients.

The scene field is the quadratic-polynomial smooth union of an exact sphere
SDF and an exact box SDF, evaluated in unit space and rescaled:

    d_scene(p) = s * U(p / s),    s = global_scale
    U = mix(d_box, d_sphere, h) - k*h*(1-h)
    h = clamp(0.5 + 0.5*(d_box - d_sphere)/k, 0, 1)

On the clamp constraint h satisfies d_box - d_sphere = 2k(h - 1/2), which
makes the h-sensitivity of U vanish identically inside the unclamped region;
the mix weights are therefore the exact partials everywhere (one-sided at the
clamp boundaries, where they agree from both sides):

    dU/d(d_box) = 1 - h,   dU/d(d_sphere) = h,   dU/dk = -h*(1-h)

Two implementations: a numba scalar-loop kernel and a vectorized numpy twin,
dispatched by the backend flag.  Each is deterministic; they agree to
floating-point roundoff.
"""

from __future__ import annotations

import numpy as np

from .. import backend
from .scene import SdfScene

# Packed geometry parameter order (see SdfScene.geometry_params):
# 0..2 sphere_center, 3 radius, 4..6 box_center, 7..9 half_extents,
# 10 smooth_k, 11 global_scale.
N_GEOMETRY_PARAMS = 12


def _eval_loops(params, pts, want_gp, want_gt, out_val, out_gp, out_gt):
    scx, scy, scz = params[0], params[1], params[2]
    radius = params[3]
    bcx, bcy, bcz = params[4], params[5], params[6]
    hx, hy, hz = params[7], params[8], params[9]
    k = params[10]
    scale = params[11]

    n = pts.shape[0]
    for i in range(n):
        qx = pts[i, 0] / scale
        qy = pts[i, 1] / scale
        qz = pts[i, 2] / scale

        # sphere
        ux = qx - scx
        uy = qy - scy
        uz = qz - scz
        rlen = (ux * ux + uy * uy + uz * uz) ** 0.5
        ds = rlen - radius
        if rlen > 0.0:
            gsx = ux / rlen
            gsy = uy / rlen
            gsz = uz / rlen
        else:
            gsx = 0.0
            gsy = 0.0
            gsz = 0.0

        # box
        vx = qx - bcx
        vy = qy - bcy
        vz = qz - bcz
        ax = abs(vx) - hx
        ay = abs(vy) - hy
        az = abs(vz) - hz
        mx = ax if ax > 0.0 else 0.0
        my = ay if ay > 0.0 else 0.0
        mz = az if az > 0.0 else 0.0
        outside = (mx * mx + my * my + mz * mz) ** 0.5
        amax = ax
        jmax = 0
        if ay > amax:
            amax = ay
            jmax = 1
        if az > amax:
            amax = az
            jmax = 2
        inner = amax if amax < 0.0 else 0.0
        db = outside + inner

        # box gradient wrt q and wrt half-extents
        gbx = 0.0
        gby = 0.0
        gbz = 0.0
        dhx = 0.0
        dhy = 0.0
        dhz = 0.0
        if outside > 0.0:
            sx = 1.0 if vx >= 0.0 else -1.0
            sy = 1.0 if vy >= 0.0 else -1.0
            sz = 1.0 if vz >= 0.0 else -1.0
            gbx = sx * mx / outside
            gby = sy * my / outside
            gbz = sz * mz / outside
            dhx = -mx / outside
            dhy = -my / outside
            dhz = -mz / outside
        else:
            if jmax == 0:
                gbx = 1.0 if vx >= 0.0 else -1.0
                dhx = -1.0
            elif jmax == 1:
                gby = 1.0 if vy >= 0.0 else -1.0
                dhy = -1.0
            else:
                gbz = 1.0 if vz >= 0.0 else -1.0
                dhz = -1.0

        # smooth union
        h = 0.5 + 0.5 * (db - ds) / k
        if h < 0.0:
            h = 0.0
        elif h > 1.0:
            h = 1.0
        u_val = db * (1.0 - h) + ds * h - k * h * (1.0 - h)
        out_val[i] = scale * u_val

        wb = 1.0 - h
        ws = h
        if want_gp or want_gt:
            gx = wb * gbx + ws * gsx
            gy = wb * gby + ws * gsy
            gz = wb * gbz + ws * gsz
            if want_gp:
                out_gp[i, 0] = gx
                out_gp[i, 1] = gy
                out_gp[i, 2] = gz
            if want_gt:
                out_gt[i, 0] = scale * ws * (-gsx)
                out_gt[i, 1] = scale * ws * (-gsy)
                out_gt[i, 2] = scale * ws * (-gsz)
                out_gt[i, 3] = scale * ws * (-1.0)
                out_gt[i, 4] = scale * wb * (-gbx)
                out_gt[i, 5] = scale * wb * (-gby)
                out_gt[i, 6] = scale * wb * (-gbz)
                out_gt[i, 7] = scale * wb * dhx
                out_gt[i, 8] = scale * wb * dhy
                out_gt[i, 9] = scale * wb * dhz
                out_gt[i, 10] = scale * (-h * (1.0 - h))
                out_gt[i, 11] = u_val - (gx * qx + gy * qy + gz * qz)


_eval_jit = backend.jit(_eval_loops)


def _eval_numpy(params, pts, want_gp, want_gt, out_val, out_gp, out_gt):
    scale = params[11]
    k = params[10]
    q = pts / scale

    u = q - params[0:3]
    rlen = np.sqrt(np.sum(u * u, axis=1))
    ds = rlen - params[3]
    with np.errstate(invalid="ignore", divide="ignore"):
        gs = np.where(rlen[:, None] > 0.0, u / rlen[:, None], 0.0)

    v = q - params[4:7]
    a = np.abs(v) - params[7:10]
    m = np.maximum(a, 0.0)
    outside = np.sqrt(np.sum(m * m, axis=1))
    jmax = np.argmax(a, axis=1)
    amax = a[np.arange(len(a)), jmax]
    inner = np.minimum(amax, 0.0)
    db = outside + inner

    sign_v = np.where(v >= 0.0, 1.0, -1.0)
    out_mask = outside > 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        gb_out = sign_v * m / outside[:, None]
    axis_onehot = np.eye(3)[jmax]
    gb_in = sign_v * axis_onehot
    gb = np.where(out_mask[:, None], gb_out, gb_in)
    with np.errstate(invalid="ignore", divide="ignore"):
        dh_out = -m / outside[:, None]
    dh_in = -axis_onehot
    dh = np.where(out_mask[:, None], dh_out, dh_in)

    h = np.clip(0.5 + 0.5 * (db - ds) / k, 0.0, 1.0)
    u_val = db * (1.0 - h) + ds * h - k * h * (1.0 - h)
    out_val[:] = scale * u_val

    if want_gp or want_gt:
        wb = (1.0 - h)[:, None]
        ws = h[:, None]
        g = wb * gb + ws * gs
        if want_gp:
            out_gp[:] = g
        if want_gt:
            out_gt[:, 0:3] = scale * ws * (-gs)
            out_gt[:, 3] = scale * h * (-1.0)
            out_gt[:, 4:7] = scale * wb * (-gb)
            out_gt[:, 7:10] = scale * wb * dh
            out_gt[:, 10] = scale * (-h * (1.0 - h))
            out_gt[:, 11] = u_val - np.sum(g * q, axis=1)


_EMPTY2 = np.empty((0, 0))


def _dispatch(params, pts, want_gp, want_gt):
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(pts, dtype=np.float64)))
    if pts.shape[1] != 3:
        raise ValueError("points must have shape (n, 3)")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite entries")
    n = pts.shape[0]
    out_val = np.empty(n)
    out_gp = np.empty((n, 3)) if want_gp else _EMPTY2
    out_gt = np.empty((n, N_GEOMETRY_PARAMS)) if want_gt else _EMPTY2
    fn = _eval_jit if backend.NUMBA_ENABLED else _eval_numpy
    fn(params, pts, want_gp, want_gt, out_val, out_gp, out_gt)
    return out_val, out_gp, out_gt


def sdf_eval_batch(scene: SdfScene, pts) -> np.ndarray:
    """Signed distances of the scene at an (n, 3) block of points."""
    val, _, _ = _dispatch(scene.geometry_params(), pts, False, False)
    return val


def sdf_grad_batch(scene: SdfScene, pts) -> np.ndarray:
    """Analytic spatial gradient at an (n, 3) block of points."""
    _, gp, _ = _dispatch(scene.geometry_params(), pts, True, False)
    return gp


def sdf_eval_grad_batch(scene: SdfScene, pts) -> tuple[np.ndarray, np.ndarray]:
    val, gp, _ = _dispatch(scene.geometry_params(), pts, True, False)
    return val, gp


def sdf_param_grad_batch(scene: SdfScene, pts) -> tuple[np.ndarray, np.ndarray]:
    """Values plus d(value)/d(12 geometry params) at each point."""
    val, _, gt = _dispatch(scene.geometry_params(), pts, False, True)
    return val, gt


def sdf_eval(scene: SdfScene, p) -> float:
    """Signed distance at a single point."""
    return float(sdf_eval_batch(scene, np.asarray(p, dtype=np.float64).reshape(1, 3))[0])


def sdf_grad(scene: SdfScene, p) -> np.ndarray:
    """Analytic spatial gradient at a single point (one-sided at kinks)."""
    return sdf_grad_batch(scene, np.asarray(p, dtype=np.float64).reshape(1, 3))[0]
