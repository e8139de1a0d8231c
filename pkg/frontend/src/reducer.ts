// Single reducer owning every state transition of the stream view.
//
// Phase machine: idle -> (clarifying?) -> planning -> answering -> done|error.
// Citation anchors render only from citation events actually received.

import type {
  CitationPayload,
  DocumentInfo,
  ErrorPayload,
  MetaPayload,
  PlacementPayload,
  StreamEvent,
  TimelineGroupPayload,
} from './types.js';

export type Phase = 'idle' | 'clarifying' | 'planning' | 'answering' | 'done' | 'error';

export interface StreamViewState {
  phase: Phase;
  query: string;
  notice: string | null; // refusal or transient info, input stays enabled
  clarification: { prompt: string; choices: string[] } | null;
  sessionId: string | null;
  rewrittenQuery: string | null;
  qdg: MetaPayload['qdg'] | null;
  nodeAnswers: Record<string, string>;
  answer: string;
  citations: CitationPayload[];
  timeline: TimelineGroupPayload[];
  images: PlacementPayload[];
  documents: DocumentInfo[];
  selectedCitation: number | null; // doc_index of the open source panel
  error: ErrorPayload | null;
  stats: Record<string, unknown> | null;
}

export function initialState(): StreamViewState {
  return {
    phase: 'idle',
    query: '',
    notice: null,
    clarification: null,
    sessionId: null,
    rewrittenQuery: null,
    qdg: null,
    nodeAnswers: {},
    answer: '',
    citations: [],
    timeline: [],
    images: [],
    documents: [],
    selectedCitation: null,
    error: null,
    stats: null,
  };
}

export type Action =
  | { type: 'submit'; query: string }
  | { type: 'clarify'; prompt: string; choices: string[] }
  | { type: 'refused'; category: string | null; message: string }
  | { type: 'stream_open' }
  | { type: 'stream_event'; event: StreamEvent }
  | { type: 'documents_loaded'; documents: DocumentInfo[] }
  | { type: 'select_citation'; docIndex: number | null }
  | { type: 'network_error'; message: string }
  | { type: 'reset' };

const PHASE_ORDER: Record<Phase, number> = {
  idle: 0,
  clarifying: 1,
  planning: 2,
  answering: 3,
  done: 4,
  error: 4,
};

function advance(state: StreamViewState, next: Phase): Phase {
  // transitions never move backwards except via reset/submit
  return PHASE_ORDER[next] >= PHASE_ORDER[state.phase] ? next : state.phase;
}

export function reduce(state: StreamViewState, action: Action): StreamViewState {
  switch (action.type) {
    case 'reset':
      return initialState();

    case 'submit':
      return { ...initialState(), phase: 'idle', query: action.query };

    case 'clarify':
      if (state.phase !== 'idle') return state;
      return {
        ...state,
        phase: 'clarifying',
        clarification: { prompt: action.prompt, choices: action.choices },
      };

    case 'refused':
      // refusal notice, input re-enabled: stay idle
      return {
        ...state,
        phase: 'idle',
        clarification: null,
        notice: action.message || `Query refused (${action.category ?? 'unspecified'})`,
      };

    case 'stream_open':
      if (state.phase !== 'idle' && state.phase !== 'clarifying') return state;
      return { ...state, phase: 'planning', clarification: null, notice: null };

    case 'documents_loaded':
      return { ...state, documents: action.documents };

    case 'select_citation':
      return { ...state, selectedCitation: action.docIndex };

    case 'network_error':
      return {
        ...state,
        phase: 'error',
        error: { code: 'NETWORK', message: action.message },
      };

    case 'stream_event':
      return applyEvent(state, action.event);
  }
}

function applyEvent(state: StreamViewState, event: StreamEvent): StreamViewState {
  switch (event.name) {
    case 'meta':
      return {
        ...state,
        phase: advance(state, 'planning'),
        sessionId: event.payload.session_id,
        rewrittenQuery: event.payload.rewritten_query,
        qdg: event.payload.qdg,
      };
    case 'node_answer': {
      const { node, delta } = event.payload;
      return {
        ...state,
        phase: advance(state, 'answering'),
        nodeAnswers: { ...state.nodeAnswers, [node]: (state.nodeAnswers[node] ?? '') + delta },
      };
    }
    case 'answer':
      return {
        ...state,
        phase: advance(state, 'answering'),
        answer: state.answer + event.payload.delta,
      };
    case 'citation':
      return { ...state, citations: [...state.citations, event.payload] };
    case 'timeline':
      return { ...state, timeline: event.payload.groups };
    case 'images':
      return { ...state, images: event.payload.placements };
    case 'done':
      return { ...state, phase: advance(state, 'done'), stats: event.payload.stats };
    case 'error':
      return { ...state, phase: 'error', error: event.payload };
    default:
      console.warn('ignoring unknown stream event', event);
      return state;
  }
}
