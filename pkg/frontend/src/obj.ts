/** ASCII OBJ parsing: triangle faces with 1-based indices, vertices either
 * "v x y z" or the vertex-color extension "v x y z r g b". */

export interface ParsedMesh {
  positions: Float64Array; // xyz per vertex
  colors: Float64Array | null; // rgb per vertex when present
  faces: Uint32Array; // 3 zero-based indices per triangle
}

export class ObjParseError extends Error {
  constructor(message: string, readonly line: number) {
    super(`line ${line}: ${message}`);
    this.name = "ObjParseError";
  }
}

export function parseObj(text: string): ParsedMesh {
  const positions: number[] = [];
  const colors: number[] = [];
  const faces: number[] = [];
  let vertexCount = 0;

  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(/\s+/);
    const tag = parts[0];
    if (tag === "v") {
      const nums = parts.slice(1).map(Number);
      if ((nums.length !== 3 && nums.length !== 6) || nums.some((x) => !Number.isFinite(x))) {
        throw new ObjParseError(`malformed vertex: ${line}`, i + 1);
      }
      positions.push(nums[0], nums[1], nums[2]);
      if (nums.length === 6) colors.push(nums[3], nums[4], nums[5]);
      vertexCount++;
    } else if (tag === "f") {
      if (parts.length !== 4) {
        throw new ObjParseError("only triangle faces are supported", i + 1);
      }
      for (const spec of parts.slice(1)) {
        const idx = Number(spec.split("/")[0]);
        if (!Number.isInteger(idx) || idx === 0) {
          throw new ObjParseError(`bad face index: ${spec}`, i + 1);
        }
        faces.push(idx > 0 ? idx - 1 : vertexCount + idx);
      }
    }
    // other tags (vn, vt, o, g, usemtl...) are ignored
  }

  if (colors.length > 0 && colors.length !== positions.length) {
    throw new ObjParseError("vertex colors must cover all vertices or none", lines.length);
  }
  for (const idx of faces) {
    if (idx < 0 || idx >= vertexCount) {
      throw new ObjParseError(`face index ${idx + 1} out of range`, lines.length);
    }
  }
  return {
    positions: Float64Array.from(positions),
    colors: colors.length ? Float64Array.from(colors) : null,
    faces: Uint32Array.from(faces),
  };
}
