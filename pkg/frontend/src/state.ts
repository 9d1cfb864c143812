/** Pure session-view state transitions; the DOM layer only renders these. */

import type { EditResponse, SessionJson } from "./api.js";
import { ApiError } from "./api.js";

export interface TimelineEntry {
  index: number;
  prompt: string;
  meshUrl: string;
  createdAt: string;
}

export interface SessionView {
  sessionId: string;
  steps: TimelineEntry[];
  activeStep: number;
}

export function sessionViewFromJson(session: SessionJson): SessionView {
  const steps = [...session.steps]
    .sort((a, b) => a.index - b.index)
    .map((s) => ({
      index: s.index,
      prompt: s.prompt,
      meshUrl: `/api/sessions/${encodeURIComponent(session.id)}/steps/${s.index}/mesh.obj`,
      createdAt: s.created_at,
    }));
  return { sessionId: session.id, steps, activeStep: steps.length - 1 };
}

export function appendEdit(view: SessionView, prompt: string, response: EditResponse): SessionView {
  const entry: TimelineEntry = {
    index: response.step,
    prompt,
    meshUrl: response.mesh_url,
    createdAt: new Date().toISOString(),
  };
  return {
    sessionId: view.sessionId,
    steps: [...view.steps, entry],
    activeStep: response.step,
  };
}

export function selectStep(view: SessionView, index: number): SessionView {
  if (index < 0 || index >= view.steps.length) return view;
  return { ...view, activeStep: index };
}

/** UI-model classification of a failed edit submission. */
export type EditFailure =
  | { kind: "inline"; message: string } // 422 range/parse: show next to the input
  | { kind: "busy"; message: string } // 409: edit in flight, keep the input
  | { kind: "gone"; message: string } // 404: session vanished
  | { kind: "network"; message: string };

export function classifyEditFailure(err: unknown): EditFailure {
  if (err instanceof ApiError) {
    if (err.status === 422) return { kind: "inline", message: err.message };
    if (err.status === 409) return { kind: "busy", message: "edit in progress - try again" };
    if (err.status === 404) return { kind: "gone", message: "session not found" };
    return { kind: "network", message: err.message };
  }
  return { kind: "network", message: err instanceof Error ? err.message : String(err) };
}

export function canSubmit(prompt: string, editInFlight: boolean): boolean {
  return prompt.trim().length > 0 && !editInFlight;
}
