import assert from "node:assert/strict";
import { test } from "node:test";

import { buildGeometry } from "../src/geometry.js";
import { parseObj } from "../src/obj.js";

const TETRA = `
v 0 0 0 0.2 0.5 0.8
v 1 0 0 0.2 0.5 0.8
v 0 1 0 0.2 0.5 0.8
v 0 0 1 0.2 0.5 0.8
f 1 3 2
f 1 2 4
f 1 4 3
f 2 3 4
`;

test("geometry buffers sized per corner", () => {
  const geom = buildGeometry(parseObj(TETRA));
  assert.equal(geom.triangleCount, 4);
  assert.equal(geom.positions.length, 4 * 9);
  assert.equal(geom.normals.length, 4 * 9);
  assert.equal(geom.colors.length, 4 * 9);
  assert.equal(geom.wireIndices.length, 4 * 6);
});

test("face normals are unit length", () => {
  const geom = buildGeometry(parseObj(TETRA));
  for (let v = 0; v < geom.normals.length; v += 3) {
    const len = Math.hypot(geom.normals[v], geom.normals[v + 1], geom.normals[v + 2]);
    assert.ok(Math.abs(len - 1) < 1e-6);
  }
});

test("vertex colors propagate to corners", () => {
  const geom = buildGeometry(parseObj(TETRA));
  assert.ok(Math.abs(geom.colors[0] - 0.2) < 1e-6);
  assert.ok(Math.abs(geom.colors[1] - 0.5) < 1e-6);
  assert.ok(Math.abs(geom.colors[2] - 0.8) < 1e-6);
});

test("bounds cover the mesh", () => {
  const geom = buildGeometry(parseObj(TETRA));
  assert.deepEqual(geom.center, [0.5, 0.5, 0.5]);
  assert.ok(geom.radius > 0.8 && geom.radius < 1.0);
});

test("uncolored mesh gets the default color", () => {
  const geom = buildGeometry(parseObj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"));
  assert.ok(geom.colors[0] > 0 && geom.colors[0] < 1);
});

test("empty mesh yields empty buffers", () => {
  const geom = buildGeometry(parseObj(""));
  assert.equal(geom.triangleCount, 0);
  assert.equal(geom.positions.length, 0);
});
