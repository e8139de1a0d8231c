// Transcript replay: turn a persisted session log into the same event
// sequence a live SSE stream would deliver, so the UI runs (and is
// testable) without a backend.

import type { DocumentInfo, SessionLog, StreamEvent } from './types.js';

const EVENT_TYPES = new Set([
  'meta',
  'node_answer',
  'answer',
  'citation',
  'timeline',
  'images',
  'done',
  'error',
]);

export function eventsFromSession(session: SessionLog): StreamEvent[] {
  const events: StreamEvent[] = [];
  for (const entry of session.transcript) {
    const { type, ...payload } = entry;
    if (!EVENT_TYPES.has(type)) continue; // sentence_end markers are transcript-only
    events.push({ name: type, payload } as StreamEvent);
  }
  return events;
}

export function documentsFromSession(session: SessionLog): DocumentInfo[] {
  return (session.documents ?? []).map((d) => ({
    doc_index: d.doc_index,
    url: d.url,
    title: d.title,
    clean_text: d.clean_text,
  }));
}
