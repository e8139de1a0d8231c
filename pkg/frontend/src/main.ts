// Wiring: one reducer drives the whole view; a single SSE consumer (or a
// transcript replay) feeds it events.

import { analyze, fetchSession, openSearchStream } from './api.js';
import { initialState, reduce, type Action, type StreamViewState } from './reducer.js';
import { consumeStream } from './sse.js';
import { findViewElements, render } from './render.js';
import { documentsFromSession, eventsFromSession } from './replay.js';
import type { DocumentInfo, SessionLog } from './types.js';

const BASE_URL = '';

let state: StreamViewState = initialState();
const view = findViewElements(document);

function dispatch(action: Action): void {
  state = reduce(state, action);
  render(state, view, {
    onChoice: (choice) => void startSearch(state.query, choice),
    onCitationClick: (docIndex) => dispatch({ type: 'select_citation', docIndex }),
  });
}

async function startSearch(query: string, chosenOption?: string): Promise<void> {
  dispatch({ type: 'stream_open' });
  try {
    const response = await openSearchStream(BASE_URL, query, { chosenOption });
    await consumeStream(response, (event) => dispatch({ type: 'stream_event', event }));
    if (state.sessionId) {
      const session = (await fetchSession(BASE_URL, state.sessionId)) as SessionLog;
      dispatch({ type: 'documents_loaded', documents: documentsFromSession(session) });
    }
  } catch (err) {
    dispatch({ type: 'network_error', message: String(err) });
  }
}

async function submitQuery(query: string): Promise<void> {
  if (!query.trim()) return;
  dispatch({ type: 'submit', query });
  try {
    const result = await analyze(BASE_URL, query);
    if (result.Refusal === 'Yes') {
      dispatch({
        type: 'refused',
        category: result.Category,
        message: result.message ?? 'This query cannot be answered.',
      });
      return;
    }
    const options = result['Additional options'];
    if (result['Requires additional input'] === 'Yes' && options && options.Choices.length) {
      dispatch({
        type: 'clarify',
        prompt: options['Prompt description'] ?? 'Please select an option',
        choices: options.Choices,
      });
      return;
    }
    await startSearch(query);
  } catch (err) {
    dispatch({ type: 'network_error', message: String(err) });
  }
}

export function replaySession(session: SessionLog): void {
  dispatch({ type: 'submit', query: session.original_query });
  dispatch({ type: 'stream_open' });
  const documents: DocumentInfo[] = documentsFromSession(session);
  for (const event of eventsFromSession(session)) {
    dispatch({ type: 'stream_event', event });
  }
  dispatch({ type: 'documents_loaded', documents });
}

function init(): void {
  const form = document.getElementById('query-form') as HTMLFormElement;
  const input = document.getElementById('query-input') as HTMLInputElement;
  form.addEventListener('submit', (e) => {
    e.preventDefault();
    void submitQuery(input.value);
  });

  const replayInput = document.getElementById('replay-input') as HTMLInputElement;
  replayInput.addEventListener('change', async () => {
    const file = replayInput.files?.[0];
    if (!file) return;
    try {
      replaySession(JSON.parse(await file.text()) as SessionLog);
    } catch (err) {
      dispatch({ type: 'network_error', message: `replay failed: ${String(err)}` });
    }
  });

  dispatch({ type: 'reset' });
}

init();
