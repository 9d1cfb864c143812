/** GPU-ready buffers from a parsed mesh: flat-shaded (per-corner) positions,
 * normals, colors, a wireframe index buffer, and framing bounds. */

import type { ParsedMesh } from "./obj.js";

export interface MeshGeometry {
  positions: Float32Array; // 9 per triangle
  normals: Float32Array; // flat per-face normal replicated per corner
  colors: Float32Array; // rgb per corner
  wireIndices: Uint32Array; // line-list over the per-corner vertices
  triangleCount: number;
  center: [number, number, number];
  radius: number;
}

const DEFAULT_COLOR = [0.62, 0.64, 0.68];

export function buildGeometry(mesh: ParsedMesh): MeshGeometry {
  const triCount = mesh.faces.length / 3;
  const positions = new Float32Array(triCount * 9);
  const normals = new Float32Array(triCount * 9);
  const colors = new Float32Array(triCount * 9);
  const wire = new Uint32Array(triCount * 6);

  let lo = [Infinity, Infinity, Infinity];
  let hi = [-Infinity, -Infinity, -Infinity];

  for (let t = 0; t < triCount; t++) {
    const ia = mesh.faces[3 * t];
    const ib = mesh.faces[3 * t + 1];
    const ic = mesh.faces[3 * t + 2];
    const a = [mesh.positions[3 * ia], mesh.positions[3 * ia + 1], mesh.positions[3 * ia + 2]];
    const b = [mesh.positions[3 * ib], mesh.positions[3 * ib + 1], mesh.positions[3 * ib + 2]];
    const c = [mesh.positions[3 * ic], mesh.positions[3 * ic + 1], mesh.positions[3 * ic + 2]];

    const e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    const e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let nx = e1[1] * e2[2] - e1[2] * e2[1];
    let ny = e1[2] * e2[0] - e1[0] * e2[2];
    let nz = e1[0] * e2[1] - e1[1] * e2[0];
    const len = Math.hypot(nx, ny, nz) || 1;
    nx /= len;
    ny /= len;
    nz /= len;

    for (let k = 0; k < 3; k++) {
      const src = k === 0 ? ia : k === 1 ? ib : ic;
      const dst = 9 * t + 3 * k;
      const p = k === 0 ? a : k === 1 ? b : c;
      positions[dst] = p[0];
      positions[dst + 1] = p[1];
      positions[dst + 2] = p[2];
      normals[dst] = nx;
      normals[dst + 1] = ny;
      normals[dst + 2] = nz;
      const col = mesh.colors
        ? [mesh.colors[3 * src], mesh.colors[3 * src + 1], mesh.colors[3 * src + 2]]
        : DEFAULT_COLOR;
      colors[dst] = col[0];
      colors[dst + 1] = col[1];
      colors[dst + 2] = col[2];
      for (let d = 0; d < 3; d++) {
        lo[d] = Math.min(lo[d], p[d]);
        hi[d] = Math.max(hi[d], p[d]);
      }
    }
    const base = 3 * t;
    wire[6 * t] = base;
    wire[6 * t + 1] = base + 1;
    wire[6 * t + 2] = base + 1;
    wire[6 * t + 3] = base + 2;
    wire[6 * t + 4] = base + 2;
    wire[6 * t + 5] = base;
  }

  const center: [number, number, number] =
    triCount > 0
      ? [(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2]
      : [0, 0, 0];
  let radius = 0;
  for (let t = 0; t < triCount * 3; t++) {
    const dx = positions[3 * t] - center[0];
    const dy = positions[3 * t + 1] - center[1];
    const dz = positions[3 * t + 2] - center[2];
    radius = Math.max(radius, Math.hypot(dx, dy, dz));
  }

  return {
    positions,
    normals,
    colors,
    wireIndices: wire,
    triangleCount: triCount,
    center,
    radius: radius || 1,
  };
}
