// Incremental SSE frame parser: feed raw text chunks, get typed events.
// Frames are `event: <name>\ndata: <json>\n\n`; data may span several
// data: lines. Malformed frames are skipped with a console diagnostic.

import type { StreamEvent } from './types.js';

export class SseParser {
  private buffer = '';

  feed(chunk: string): StreamEvent[] {
    this.buffer += chunk;
    const frames = this.buffer.split(/\r?\n\r?\n/);
    this.buffer = frames.pop() ?? '';
    const events: StreamEvent[] = [];
    for (const frame of frames) {
      const event = parseFrame(frame);
      if (event) events.push(event);
    }
    return events;
  }
}

function parseFrame(frame: string): StreamEvent | null {
  let name = 'message';
  const dataLines: string[] = [];
  for (const rawLine of frame.split(/\r?\n/)) {
    const line = rawLine.replace(/\r$/, '');
    if (line.startsWith('event:')) {
      name = line.slice('event:'.length).trim();
    } else if (line.startsWith('data:')) {
      dataLines.push(line.slice('data:'.length).trim());
    }
  }
  if (dataLines.length === 0) return null;
  try {
    const payload = JSON.parse(dataLines.join('\n'));
    return { name, payload } as StreamEvent;
  } catch (err) {
    console.warn('skipping malformed SSE frame:', frame.slice(0, 120), err);
    return null;
  }
}

export async function consumeStream(
  response: Response,
  onEvent: (event: StreamEvent) => void,
): Promise<void> {
  if (!response.body) throw new Error('response has no body');
  const reader = response.body.getReader();
  const decoder = new TextDecoder('utf-8');
  const parser = new SseParser();
  for (;;) {
    const { value, done } = await reader.read();
    if (done) break;
    for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
      onEvent(event);
    }
  }
}
