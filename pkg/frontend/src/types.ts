// Wire types mirroring the service's SSE event schema (v1) and the
// session-log JSON it persists.

export interface QdgNode {
  id: string;
  query: string;
}

export interface QdgView {
  nodes: QdgNode[];
  edges: [string, string][];
}

export interface MetaPayload {
  session_id: string;
  query: string;
  rewritten_query: string;
  qdg: QdgView;
}

export interface CitationPayload {
  sentence_index: number;
  start: number;
  end: number;
  doc_index: number | null;
  method: string;
}

export interface TimelineEventPayload {
  time: string;
  title: string;
  summary: string;
  doc_index: number;
  time_source: string;
}

export interface TimelineGroupPayload {
  label: string;
  keywords: string[];
  events: TimelineEventPayload[];
}

export interface PlacementPayload {
  paragraph_index: number;
  url: string;
  alt_text: string;
  caption: string | null;
  doc_index: number;
  score: number;
}

export interface ErrorPayload {
  code: string;
  message: string;
}

export interface DocumentInfo {
  doc_index: number;
  url: string;
  title: string;
  clean_text: string;
}

export type StreamEvent =
  | { name: 'meta'; payload: MetaPayload }
  | { name: 'node_answer'; payload: { node: string; delta: string } }
  | { name: 'answer'; payload: { delta: string } }
  | { name: 'citation'; payload: CitationPayload }
  | { name: 'timeline'; payload: { groups: TimelineGroupPayload[] } }
  | { name: 'images'; payload: { placements: PlacementPayload[] } }
  | { name: 'done'; payload: { stats: Record<string, unknown> } }
  | { name: 'error'; payload: ErrorPayload };

export interface AnalyzeResponse {
  Refusal: 'Yes' | 'No';
  Category: string | null;
  'Requires additional input': 'Yes' | 'No';
  'Additional options': {
    'Prompt description': string;
    Choices: string[];
  } | null;
  message?: string;
}

// the subset of the persisted session log the replay mode consumes
export interface SessionLog {
  session_id: string;
  original_query: string;
  rewritten_query: string;
  final_answer: string;
  documents: DocumentInfo[];
  transcript: Array<{ type: string } & Record<string, unknown>>;
}
