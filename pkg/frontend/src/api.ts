// Thin wrappers over the service endpoints.

import type { AnalyzeResponse } from './types.js';

export interface QueryOptions {
  localTime?: string;
  location?: string;
  language?: string;
  chosenOption?: string;
}

export async function analyze(
  baseUrl: string,
  query: string,
  options: QueryOptions = {},
): Promise<AnalyzeResponse> {
  const response = await fetch(`${baseUrl}/api/analyze`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({
      query,
      local_time: options.localTime,
      location: options.location,
      language: options.language ?? 'en',
    }),
  });
  if (!response.ok) throw new Error(`analyze failed: HTTP ${response.status}`);
  return (await response.json()) as AnalyzeResponse;
}

export async function openSearchStream(
  baseUrl: string,
  query: string,
  options: QueryOptions = {},
): Promise<Response> {
  const response = await fetch(`${baseUrl}/api/search`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({
      query,
      chosen_option: options.chosenOption,
      local_time: options.localTime,
      location: options.location,
      language: options.language ?? 'en',
    }),
  });
  if (!response.ok) throw new Error(`search failed: HTTP ${response.status}`);
  return response;
}

export async function fetchSession(baseUrl: string, sessionId: string): Promise<unknown> {
  const response = await fetch(`${baseUrl}/api/session/${sessionId}`);
  if (!response.ok) throw new Error(`session fetch failed: HTTP ${response.status}`);
  return response.json();
}
