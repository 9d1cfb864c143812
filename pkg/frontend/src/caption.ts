/** Caption panel model: a reflection transcript rendered verbatim, in order. */

import type { EpisodeJson } from "./api.js";

export interface TranscriptRow {
  attempt: number; // 1-based
  caption: string;
  verdict: "accept" | "reject";
  reflection: string | null;
}

export function episodeToTranscript(episode: EpisodeJson): TranscriptRow[] {
  return episode.attempts.map((a, i) => ({
    attempt: i + 1,
    caption: a.caption,
    verdict: a.verdict,
    reflection: a.reflection,
  }));
}

function escapeHtml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function transcriptHtml(episode: EpisodeJson): string {
  const rows = episodeToTranscript(episode);
  const out: string[] = [];
  out.push(`<p class="caption-final">${escapeHtml(episode.final_caption)}</p>`);
  out.push(
    `<p class="caption-status ${episode.accepted ? "ok" : "bad"}">` +
      `${episode.accepted ? "accepted" : "not accepted"} after ${episode.iterations_used} ` +
      `iteration${episode.iterations_used === 1 ? "" : "s"}</p>`,
  );
  out.push('<ol class="transcript">');
  for (const row of rows) {
    out.push("<li>");
    out.push(`<span class="attempt-caption">${escapeHtml(row.caption)}</span>`);
    out.push(`<span class="verdict ${row.verdict}">${row.verdict}</span>`);
    if (row.reflection !== null) {
      out.push(`<span class="reflection">${escapeHtml(row.reflection)}</span>`);
    }
    out.push("</li>");
  }
  out.push("</ol>");
  return out.join("");
}
