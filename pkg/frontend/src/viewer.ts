/** Minimal WebGL mesh viewer: flat-shaded triangles plus a wireframe pass,
 * orbit/zoom controls. Camera pose persists across mesh swaps. */

import type { MeshGeometry } from "./geometry.js";

const VERT_SRC = `
attribute vec3 aPos;
attribute vec3 aNormal;
attribute vec3 aColor;
uniform mat4 uMvp;
uniform mat4 uModel;
varying vec3 vNormal;
varying vec3 vColor;
void main() {
  gl_Position = uMvp * vec4(aPos, 1.0);
  vNormal = mat3(uModel) * aNormal;
  vColor = aColor;
}`;

const FRAG_SRC = `
precision mediump float;
varying vec3 vNormal;
varying vec3 vColor;
uniform vec3 uLightDir;
uniform float uFlat;
void main() {
  vec3 n = normalize(vNormal);
  float diffuse = abs(dot(n, normalize(uLightDir)));
  vec3 lit = vColor * (0.35 + 0.65 * diffuse);
  vec3 wire = vec3(0.15, 0.17, 0.2);
  gl_FragColor = vec4(mix(lit, wire, uFlat), 1.0);
}`;

interface Camera {
  yaw: number;
  pitch: number;
  distance: number;
}

function perspective(fovY: number, aspect: number, near: number, far: number): Float32Array {
  const f = 1 / Math.tan(fovY / 2);
  const out = new Float32Array(16);
  out[0] = f / aspect;
  out[5] = f;
  out[10] = (far + near) / (near - far);
  out[11] = -1;
  out[14] = (2 * far * near) / (near - far);
  return out;
}

function multiply(a: Float32Array, b: Float32Array): Float32Array {
  const out = new Float32Array(16);
  for (let c = 0; c < 4; c++) {
    for (let r = 0; r < 4; r++) {
      let acc = 0;
      for (let k = 0; k < 4; k++) acc += a[k * 4 + r] * b[c * 4 + k];
      out[c * 4 + r] = acc;
    }
  }
  return out;
}

function lookAtOrbit(cam: Camera, center: [number, number, number]): Float32Array {
  const cp = Math.cos(cam.pitch);
  const eye = [
    center[0] + cam.distance * cp * Math.cos(cam.yaw),
    center[1] + cam.distance * cp * Math.sin(cam.yaw),
    center[2] + cam.distance * Math.sin(cam.pitch),
  ];
  const up = [0, 0, 1];
  const f = [center[0] - eye[0], center[1] - eye[1], center[2] - eye[2]];
  const fl = Math.hypot(f[0], f[1], f[2]) || 1;
  f[0] /= fl;
  f[1] /= fl;
  f[2] /= fl;
  const s = [f[1] * up[2] - f[2] * up[1], f[2] * up[0] - f[0] * up[2], f[0] * up[1] - f[1] * up[0]];
  const sl = Math.hypot(s[0], s[1], s[2]) || 1;
  s[0] /= sl;
  s[1] /= sl;
  s[2] /= sl;
  const u = [s[1] * f[2] - s[2] * f[1], s[2] * f[0] - s[0] * f[2], s[0] * f[1] - s[1] * f[0]];
  const m = new Float32Array(16);
  m[0] = s[0];
  m[4] = s[1];
  m[8] = s[2];
  m[1] = u[0];
  m[5] = u[1];
  m[9] = u[2];
  m[2] = -f[0];
  m[6] = -f[1];
  m[10] = -f[2];
  m[12] = -(s[0] * eye[0] + s[1] * eye[1] + s[2] * eye[2]);
  m[13] = -(u[0] * eye[0] + u[1] * eye[1] + u[2] * eye[2]);
  m[14] = f[0] * eye[0] + f[1] * eye[1] + f[2] * eye[2];
  m[15] = 1;
  return m;
}

export class MeshViewer {
  private gl: WebGLRenderingContext;
  private program: WebGLProgram;
  private buffers: { pos: WebGLBuffer; nrm: WebGLBuffer; col: WebGLBuffer; wire: WebGLBuffer } | null = null;
  private vertexCount = 0;
  private wireCount = 0;
  private center: [number, number, number] = [0, 0, 0];
  private camera: Camera = { yaw: Math.PI / 5, pitch: Math.PI / 8, distance: 3 };
  private baseDistance = 3;

  constructor(private canvas: HTMLCanvasElement) {
    const gl = canvas.getContext("webgl");
    if (!gl) throw new Error("WebGL is not available");
    this.gl = gl;
    gl.getExtension("OES_element_index_uint"); // Uint32 wireframe indices
    this.program = this.compile();
    this.attachControls();
    gl.enable(gl.DEPTH_TEST);
    gl.clearColor(0.96, 0.965, 0.97, 1.0);
  }

  private compile(): WebGLProgram {
    const gl = this.gl;
    const make = (type: number, src: string) => {
      const sh = gl.createShader(type)!;
      gl.shaderSource(sh, src);
      gl.compileShader(sh);
      if (!gl.getShaderParameter(sh, gl.COMPILE_STATUS)) {
        throw new Error(`shader compile failed: ${gl.getShaderInfoLog(sh)}`);
      }
      return sh;
    };
    const prog = gl.createProgram()!;
    gl.attachShader(prog, make(gl.VERTEX_SHADER, VERT_SRC));
    gl.attachShader(prog, make(gl.FRAGMENT_SHADER, FRAG_SRC));
    gl.linkProgram(prog);
    if (!gl.getProgramParameter(prog, gl.LINK_STATUS)) {
      throw new Error(`program link failed: ${gl.getProgramInfoLog(prog)}`);
    }
    return prog;
  }

  private attachControls(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("mousedown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      this.camera.yaw -= (e.clientX - lastX) * 0.01;
      this.camera.pitch = Math.min(
        Math.PI / 2 - 0.05,
        Math.max(-Math.PI / 2 + 0.05, this.camera.pitch + (e.clientY - lastY) * 0.01),
      );
      lastX = e.clientX;
      lastY = e.clientY;
      this.render();
    });
    this.canvas.addEventListener(
      "wheel",
      (e) => {
        e.preventDefault();
        const factor = Math.exp(e.deltaY * 0.001);
        this.camera.distance = Math.min(
          this.baseDistance * 8,
          Math.max(this.baseDistance * 0.25, this.camera.distance * factor),
        );
        this.render();
      },
      { passive: false },
    );
  }

  /** Swap in a new mesh; the orbit camera pose is intentionally kept. */
  setMesh(geom: MeshGeometry): void {
    const gl = this.gl;
    if (this.buffers) {
      for (const b of Object.values(this.buffers)) gl.deleteBuffer(b);
    }
    const upload = (data: Float32Array) => {
      const buf = gl.createBuffer()!;
      gl.bindBuffer(gl.ARRAY_BUFFER, buf);
      gl.bufferData(gl.ARRAY_BUFFER, data, gl.STATIC_DRAW);
      return buf;
    };
    const wire = gl.createBuffer()!;
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, wire);
    gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, geom.wireIndices, gl.STATIC_DRAW);
    this.buffers = {
      pos: upload(geom.positions),
      nrm: upload(geom.normals),
      col: upload(geom.colors),
      wire,
    };
    this.vertexCount = geom.triangleCount * 3;
    this.wireCount = geom.wireIndices.length;
    this.center = geom.center;
    this.baseDistance = geom.radius * 3;
    if (!this.cameraInitialized) {
      this.camera.distance = this.baseDistance;
      this.cameraInitialized = true;
    }
    this.render();
  }

  private cameraInitialized = false;

  clear(): void {
    const gl = this.gl;
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
  }

  render(): void {
    const gl = this.gl;
    const w = this.canvas.clientWidth || this.canvas.width;
    const h = this.canvas.clientHeight || this.canvas.height;
    if (this.canvas.width !== w || this.canvas.height !== h) {
      this.canvas.width = w;
      this.canvas.height = h;
    }
    gl.viewport(0, 0, w, h);
    this.clear();
    if (!this.buffers || this.vertexCount === 0) return;

    gl.useProgram(this.program);
    const proj = perspective(Math.PI / 4, w / h, 0.01, 100);
    const view = lookAtOrbit(this.camera, this.center);
    const mvp = multiply(proj, view);
    const model = new Float32Array([1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]);
    gl.uniformMatrix4fv(gl.getUniformLocation(this.program, "uMvp"), false, mvp);
    gl.uniformMatrix4fv(gl.getUniformLocation(this.program, "uModel"), false, model);
    gl.uniform3f(gl.getUniformLocation(this.program, "uLightDir"), 0.5, 0.3, 0.8);

    const bind = (buf: WebGLBuffer, name: string) => {
      const loc = gl.getAttribLocation(this.program, name);
      gl.bindBuffer(gl.ARRAY_BUFFER, buf);
      gl.enableVertexAttribArray(loc);
      gl.vertexAttribPointer(loc, 3, gl.FLOAT, false, 0, 0);
    };
    bind(this.buffers.pos, "aPos");
    bind(this.buffers.nrm, "aNormal");
    bind(this.buffers.col, "aColor");

    const flatLoc = gl.getUniformLocation(this.program, "uFlat");
    gl.uniform1f(flatLoc, 0.0);
    gl.drawArrays(gl.TRIANGLES, 0, this.vertexCount);

    gl.uniform1f(flatLoc, 1.0);
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.buffers.wire);
    gl.drawElements(gl.LINES, this.wireCount, gl.UNSIGNED_INT, 0);
  }
}
