import assert from "node:assert/strict";
import { test } from "node:test";

import { ObjParseError, parseObj } from "../src/obj.js";

const CUBE_FACE = `
# comment
v 0 0 0
v 1 0 0
v 0 1 0
f 1 2 3
`;

test("parses plain vertices and a face", () => {
  const mesh = parseObj(CUBE_FACE);
  assert.equal(mesh.positions.length, 9);
  assert.equal(mesh.colors, null);
  assert.deepEqual([...mesh.faces], [0, 1, 2]);
});

test("parses vertex colors", () => {
  const mesh = parseObj("v 0 0 0 0.5 0.5 0.5\nv 1 0 0 0.5 0.5 0.5\nv 0 1 0 0.5 0.5 0.5\nf 1 2 3\n");
  assert.ok(mesh.colors);
  assert.equal(mesh.colors!.length, 9);
  assert.equal(mesh.colors![0], 0.5);
});

test("accepts slash-form face specs", () => {
  const mesh = parseObj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n");
  assert.deepEqual([...mesh.faces], [0, 1, 2]);
});

test("rejects out-of-range face indices", () => {
  assert.throws(() => parseObj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"), ObjParseError);
});

test("rejects malformed vertices", () => {
  assert.throws(() => parseObj("v 1 2\n"), ObjParseError);
  assert.throws(() => parseObj("v a b c\n"), ObjParseError);
});

test("rejects non-triangle faces", () => {
  assert.throws(() => parseObj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n"), ObjParseError);
});

test("rejects partial vertex colors", () => {
  assert.throws(
    () => parseObj("v 0 0 0 1 1 1\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"),
    ObjParseError,
  );
});

test("ignores unsupported tags", () => {
  const mesh = parseObj("o thing\nvn 0 0 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  assert.equal(mesh.faces.length, 3);
});
