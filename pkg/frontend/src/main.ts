/** Page wiring: session lifecycle, timeline, edit box, caption panel.
 * All logic lives in the pure modules; this file only touches the DOM. */

import { ApiClient, ApiError } from "./api.js";
import { transcriptHtml } from "./caption.js";
import { buildGeometry } from "./geometry.js";
import { parseObj } from "./obj.js";
import {
  SessionView,
  appendEdit,
  canSubmit,
  classifyEditFailure,
  selectStep,
  sessionViewFromJson,
} from "./state.js";
import { MeshViewer } from "./viewer.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const api = new ApiClient();
let viewer: MeshViewer;
let view: SessionView | null = null;
let editInFlight = false;

const banner = () => $<HTMLDivElement>("banner");
const editError = () => $<HTMLDivElement>("edit-error");

function showBanner(message: string, retry?: () => void): void {
  const el = banner();
  el.textContent = message;
  el.classList.remove("hidden");
  if (retry) {
    const btn = document.createElement("button");
    btn.textContent = "retry";
    btn.addEventListener("click", () => {
      el.classList.add("hidden");
      retry();
    });
    el.append(" ");
    el.appendChild(btn);
  }
}

function clearBanner(): void {
  banner().classList.add("hidden");
  banner().textContent = "";
}

function renderTimeline(): void {
  const list = $<HTMLOListElement>("timeline");
  list.innerHTML = "";
  if (!view) return;
  for (const step of view.steps) {
    const li = document.createElement("li");
    li.textContent = step.index === 0 ? `generate: ${step.prompt || "(default scene)"}` : step.prompt;
    li.dataset.index = String(step.index);
    if (step.index === view.activeStep) li.classList.add("active");
    li.addEventListener("click", () => {
      if (!view) return;
      view = selectStep(view, step.index);
      renderTimeline();
      void showMesh(step.meshUrl);
    });
    list.appendChild(li);
  }
  $<HTMLSpanElement>("session-label").textContent = view.sessionId;
}

async function showMesh(meshUrl: string): Promise<void> {
  try {
    const text = await api.fetchMeshText(meshUrl);
    const geom = buildGeometry(parseObj(text));
    $<HTMLDivElement>("viewer-placeholder").classList.add("hidden");
    viewer.setMesh(geom);
  } catch (err) {
    const ph = $<HTMLDivElement>("viewer-placeholder");
    ph.classList.remove("hidden");
    ph.textContent = `mesh unavailable: ${err instanceof Error ? err.message : err}`;
    viewer.clear();
  }
}

async function loadSession(sessionId: string): Promise<void> {
  try {
    const session = await api.getSession(sessionId);
    view = sessionViewFromJson(session);
    clearBanner();
    renderTimeline();
    const active = view.steps[view.activeStep];
    if (active) await showMesh(active.meshUrl);
    refreshControls();
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      showBanner("session not found");
    } else {
      showBanner(`could not load session: ${err instanceof Error ? err.message : err}`, () =>
        void loadSession(sessionId),
      );
    }
  }
}

function refreshControls(): void {
  const prompt = $<HTMLInputElement>("edit-prompt").value;
  $<HTMLButtonElement>("edit-submit").disabled = !view || !canSubmit(prompt, editInFlight);
  $<HTMLButtonElement>("caption-btn").disabled = !view;
}

async function submitEdit(): Promise<void> {
  if (!view) return;
  const input = $<HTMLInputElement>("edit-prompt");
  const prompt = input.value;
  if (!canSubmit(prompt, editInFlight)) return;
  editInFlight = true;
  editError().classList.add("hidden");
  refreshControls();
  try {
    const response = await api.submitEdit(view.sessionId, prompt);
    view = appendEdit(view, prompt, response);
    input.value = "";
    renderTimeline();
    await showMesh(response.mesh_url);
    input.focus();
  } catch (err) {
    const failure = classifyEditFailure(err);
    const el = editError();
    el.textContent = failure.message;
    el.classList.remove("hidden");
    if (failure.kind === "gone") showBanner(failure.message);
  } finally {
    editInFlight = false;
    refreshControls();
  }
}

async function requestCaption(): Promise<void> {
  if (!view) return;
  const panel = $<HTMLDivElement>("caption-panel");
  panel.innerHTML = "<p>captioning…</p>";
  try {
    const out = await api.requestCaption(view.sessionId, view.activeStep);
    panel.innerHTML = transcriptHtml(out.episode);
  } catch (err) {
    panel.innerHTML = "";
    panel.textContent = `caption failed: ${err instanceof Error ? err.message : err}`;
  }
}

async function createSession(): Promise<void> {
  const prompt = $<HTMLInputElement>("create-prompt").value;
  try {
    const created = await api.createSession(prompt);
    await loadSession(created.session_id);
  } catch (err) {
    if (err instanceof ApiError && err.status === 422) {
      showBanner(`prompt rejected: ${err.message}`);
    } else {
      showBanner(`could not create session: ${err instanceof Error ? err.message : err}`);
    }
  }
}

window.addEventListener("DOMContentLoaded", () => {
  viewer = new MeshViewer($<HTMLCanvasElement>("viewer"));
  $<HTMLButtonElement>("create-btn").addEventListener("click", () => void createSession());
  $<HTMLButtonElement>("load-btn").addEventListener("click", () => {
    const id = $<HTMLInputElement>("load-id").value.trim();
    if (id) void loadSession(id);
  });
  $<HTMLButtonElement>("edit-submit").addEventListener("click", () => void submitEdit());
  $<HTMLInputElement>("edit-prompt").addEventListener("keydown", (e) => {
    if (e.key === "Enter") void submitEdit();
  });
  $<HTMLInputElement>("edit-prompt").addEventListener("input", refreshControls);
  $<HTMLButtonElement>("caption-btn").addEventListener("click", () => void requestCaption());
  refreshControls();
});
