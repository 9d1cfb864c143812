"""HTTP JSON service and on-disk session persistence.

Sessions persist as canonical JSON under ``data_dir/sessions`` with meshes in
a content-addressed blob directory; saving then loading reproduces the bytes
exactly.  The server is a stdlib threading HTTP server: requests across
sessions run concurrently, writes within one session are serialized by a
non-blocking per-session lock (contention answers 409).  The adapter is
loaded once and never written; /api/health reports its fingerprint.
"""

from __future__ import annotations

import json
import os
import re
import threading
import urllib.parse
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .adapter import MeshHeadAdapter, adapter_fingerprint
from .backends import BackendSuite, build_backends
from .com import (
    EditError,
    EditSession,
    MeshParams,
    MeshStore,
    apply_edit,
    init_session,
)
from .latents import LatentSimulator
from .reflexion import ReflexionBackendError, render_views, run_reflexion, select_views
from .sdf.mesh import mesh_from_obj

REQUIRED_REMOTE_ROLES = ("text_to_latent", "editor", "actor", "evaluator", "reflector")
OPTIONAL_REMOTE_ROLES = ("embedder",)
ENV_PREFIX = "UNIMESH_"


@dataclass
class ServiceConfig:
    port: int = 8765
    host: str = "127.0.0.1"
    data_dir: str = "unimesh-data"
    adapter_path: str = ""
    backend_mode: str = "scripted"  # "scripted" | "remote"
    remote_urls: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    mesh_resolution: int = 48
    static_dir: str = ""

    def __post_init__(self):
        if self.backend_mode not in ("scripted", "remote"):
            raise ValueError(f"unknown backend_mode {self.backend_mode!r}")
        if self.backend_mode == "remote":
            missing = [r for r in REQUIRED_REMOTE_ROLES if r not in self.remote_urls]
            if missing:
                raise ValueError(f"remote mode requires URLs for: {', '.join(missing)}")


def parse_config(path=None, env=None) -> ServiceConfig:
    """Flat ``key = value`` config file with UNIMESH_* environment overrides."""
    env = os.environ if env is None else env
    values: dict[str, str] = {}
    if path is not None:
        with open(path, encoding="utf-8") as f:
            for lineno, raw in enumerate(f, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, _, val = line.partition("=")
                values[key.strip().lower()] = val.strip()
    for key, val in env.items():
        if key.startswith(ENV_PREFIX):
            values[key[len(ENV_PREFIX) :].lower()] = val

    kwargs: dict = {}
    remote_urls: dict[str, str] = {}
    for key, val in values.items():
        if key.startswith("url_"):
            remote_urls[key[4:]] = val
        elif key in ("port", "seed", "mesh_resolution"):
            kwargs[key] = int(val)
        elif key in ("host", "data_dir", "adapter_path", "backend_mode", "static_dir"):
            kwargs[key] = val
    return ServiceConfig(remote_urls=remote_urls, **kwargs)


class SessionStore:
    """Sessions plus a content-addressed mesh blob store, disk backed."""

    def __init__(self, data_dir):
        self.root = Path(data_dir)
        self.sessions_dir = self.root / "sessions"
        self.blobs_dir = self.root / "blobs"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.blobs_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, EditSession] = {}
        self.meshes = MeshStore()
        self._io_lock = threading.Lock()

    @staticmethod
    def canonical_json(payload: dict) -> bytes:
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")

    def save_session(self, session: EditSession) -> None:
        with self._io_lock:
            self.sessions[session.id] = session
            path = self.sessions_dir / f"{session.id}.json"
            path.write_bytes(self.canonical_json(session.to_json_dict()))
            for step in session.steps:
                blob_path = self.blobs_dir / f"{step.mesh_hash}.obj"
                if not blob_path.exists():
                    blob_path.write_bytes(self.meshes.get(step.mesh_hash))

    def load(self) -> None:
        """Load every persisted session and its mesh blobs."""
        with self._io_lock:
            for blob_path in self.blobs_dir.glob("*.obj"):
                data = blob_path.read_bytes()
                key = self.meshes.put(data)
                if key != blob_path.stem:
                    raise ValueError(f"blob {blob_path.name} fails its content hash")
            for sess_path in sorted(self.sessions_dir.glob("*.json")):
                session = EditSession.from_json_dict(json.loads(sess_path.read_text("utf-8")))
                for step in session.steps:
                    if step.mesh_hash not in self.meshes:
                        raise ValueError(
                            f"session {session.id} references missing blob {step.mesh_hash}"
                        )
                self.sessions[session.id] = session


class ServiceError(Exception):
    def __init__(self, status: int, message: str, fields: dict | None = None):
        super().__init__(message)
        self.status = status
        self.fields = fields or {}


class UniMeshService:
    """Request-handling core, independent of the HTTP plumbing."""

    def __init__(self, config: ServiceConfig, adapter: MeshHeadAdapter | None = None):
        self.config = config
        if adapter is None:
            if not config.adapter_path:
                raise ValueError("config needs adapter_path (or pass an adapter)")
            adapter = MeshHeadAdapter.load(config.adapter_path)
        self.adapter = adapter
        self.fingerprint = adapter_fingerprint(adapter)
        self.sim = LatentSimulator(seed=config.seed)
        self.backends: BackendSuite = build_backends(
            config.backend_mode, self.sim, config.remote_urls
        )
        self.store = SessionStore(config.data_dir)
        self.store.load()
        self.mesh_params = MeshParams(resolution=config.mesh_resolution)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _get_session(self, session_id: str) -> EditSession:
        session = self.store.sessions.get(session_id)
        if session is None:
            raise ServiceError(404, f"unknown session {session_id!r}")
        return session

    # -- endpoint bodies ----------------------------------------------------

    def create_session(self, body: dict) -> dict:
        prompt = _require_str(body, "prompt")
        try:
            session = init_session(
                prompt, self.backends.text_to_latent, self.adapter,
                self.store.meshes, self.mesh_params,
            )
        except EditError as exc:
            raise ServiceError(422, str(exc)) from exc
        self.store.save_session(session)
        return {
            "session_id": session.id,
            "step": 0,
            "mesh_url": f"/api/sessions/{session.id}/steps/0/mesh.obj",
        }

    def add_edit(self, session_id: str, body: dict) -> dict:
        prompt = _require_str(body, "prompt")
        session = self._get_session(session_id)
        lock = self._session_lock(session_id)
        if not lock.acquire(blocking=False):
            raise ServiceError(409, f"an edit for session {session_id} is already in flight")
        try:
            try:
                apply_edit(
                    session, prompt, self.backends.editor, self.adapter,
                    self.store.meshes, self.mesh_params,
                )
            except EditError as exc:
                raise ServiceError(422, str(exc)) from exc
            self.store.save_session(session)
            step = len(session.steps) - 1
            return {
                "step": step,
                "mesh_url": f"/api/sessions/{session_id}/steps/{step}/mesh.obj",
            }
        finally:
            lock.release()

    def get_session(self, session_id: str) -> dict:
        return self._get_session(session_id).to_json_dict()

    def get_mesh(self, session_id: str, step: int) -> bytes:
        session = self._get_session(session_id)
        if not 0 <= step < len(session.steps):
            raise ServiceError(404, f"session {session_id} has no step {step}")
        return self.store.meshes.get(session.steps[step].mesh_hash)

    def caption(self, body: dict) -> dict:
        session_id = _require_str(body, "session_id")
        step = body.get("step")
        if not isinstance(step, int):
            raise ServiceError(400, "field 'step' must be an integer", {"step": "integer required"})
        mesh_bytes = self.get_mesh(session_id, step)
        mesh = mesh_from_obj(mesh_bytes)
        if mesh.is_empty:
            raise ServiceError(422, f"step {step} mesh is empty; nothing to caption")
        views = render_views(mesh, 16, 128)
        chosen = [views[i] for i in select_views(views)]
        backends = self.backends.captioner.for_mesh(mesh)
        try:
            episode = run_reflexion(chosen, backends, few_shot=[], max_iters=4)
        except ReflexionBackendError as exc:
            raise ServiceError(502, f"caption backend failed: {exc}") from exc
        return {"caption": episode.final_caption, "episode": episode.to_json_dict()}

    def health(self) -> dict:
        return {"status": "ok", "adapter_fingerprint": self.fingerprint}


def _require_str(body: dict, key: str) -> str:
    val = body.get(key)
    if not isinstance(val, str):
        raise ServiceError(400, f"field {key!r} must be a string", {key: "string required"})
    return val


_ROUTES = [
    ("POST", re.compile(r"^/api/sessions$"), "create_session"),
    ("POST", re.compile(r"^/api/sessions/([^/]+)/edits$"), "add_edit"),
    ("GET", re.compile(r"^/api/sessions/([^/]+)$"), "get_session"),
    ("GET", re.compile(r"^/api/sessions/([^/]+)/steps/(\d+)/mesh\.obj$"), "get_mesh"),
    ("POST", re.compile(r"^/api/captions$"), "caption"),
    ("GET", re.compile(r"^/api/health$"), "health"),
]


class _Handler(BaseHTTPRequestHandler):
    service: UniMeshService = None  # type: ignore[assignment]
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, obj: dict) -> None:
        self._send(status, json.dumps(obj).encode("utf-8"), "application/json; charset=utf-8")

    def _read_json_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise ServiceError(400, "request body must be JSON", {"body": "missing"})
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ServiceError(400, f"malformed JSON body: {exc}", {"body": "invalid json"})
        if not isinstance(body, dict):
            raise ServiceError(400, "JSON body must be an object", {"body": "object required"})
        return body

    def _dispatch(self, method: str) -> None:
        path = urllib.parse.urlparse(self.path).path
        try:
            for verb, pattern, name in _ROUTES:
                if verb != method:
                    continue
                m = pattern.match(path)
                if not m:
                    continue
                svc = self.service
                if name == "create_session":
                    self._send_json(200, svc.create_session(self._read_json_body()))
                elif name == "add_edit":
                    self._send_json(200, svc.add_edit(m.group(1), self._read_json_body()))
                elif name == "get_session":
                    self._send_json(200, svc.get_session(m.group(1)))
                elif name == "get_mesh":
                    data = svc.get_mesh(m.group(1), int(m.group(2)))
                    self._send(200, data, "text/plain; charset=ascii")
                elif name == "caption":
                    self._send_json(200, svc.caption(self._read_json_body()))
                elif name == "health":
                    self._send_json(200, svc.health())
                return
            if method == "GET" and self._serve_static(path):
                return
            raise ServiceError(404, f"no route for {method} {path}")
        except ServiceError as exc:
            payload = {"error": str(exc)}
            if exc.fields:
                payload["fields"] = exc.fields
            self._send_json(exc.status, payload)
        except Exception as exc:  # internal failure
            self._send_json(500, {"error": f"internal error: {exc}"})

    def _serve_static(self, path: str) -> bool:
        static_dir = self.service.config.static_dir
        if not static_dir:
            return False
        rel = path.lstrip("/") or "index.html"
        base = Path(static_dir).resolve()
        target = (base / rel).resolve()
        if not str(target).startswith(str(base)) or not target.is_file():
            return False
        ctype = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".map": "application/json",
            ".obj": "text/plain",
        }.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), ctype)
        return True

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def make_server(config: ServiceConfig, adapter: MeshHeadAdapter | None = None) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    service = UniMeshService(config, adapter)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((config.host, config.port), handler)
    server.unimesh_service = service  # type: ignore[attr-defined]
    return server


def serve_forever(config: ServiceConfig) -> None:
    server = make_server(config)
    host, port = server.server_address[:2]
    print(f"unimesh service on http://{host}:{port} "
          f"(backend={config.backend_mode}, data={config.data_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
