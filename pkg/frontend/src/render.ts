// DOM rendering of a StreamViewState. No framework: a handful of
// containers re-rendered from state after each action, which keeps the
// replay tests honest about what actually reaches the DOM.

import type { StreamViewState } from './reducer.js';
import type { CitationPayload, PlacementPayload } from './types.js';

export interface ViewElements {
  status: HTMLElement;
  notice: HTMLElement;
  clarification: HTMLElement;
  plan: HTMLElement;
  answer: HTMLElement;
  timeline: HTMLElement;
  docPanel: HTMLElement;
}

export function findViewElements(root: Document | HTMLElement): ViewElements {
  const get = (id: string): HTMLElement => {
    const el = (root instanceof Document ? root : root.ownerDocument!).getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    status: get('status'),
    notice: get('notice'),
    clarification: get('clarification'),
    plan: get('plan'),
    answer: get('answer'),
    timeline: get('timeline'),
    docPanel: get('doc-panel'),
  };
}

interface Paragraph {
  start: number;
  end: number;
  text: string;
}

function splitParagraphs(answer: string): Paragraph[] {
  const paragraphs: Paragraph[] = [];
  const pattern = /\n\s*\n/g;
  let start = 0;
  let match: RegExpExecArray | null;
  while ((match = pattern.exec(answer)) !== null) {
    paragraphs.push({ start, end: match.index, text: answer.slice(start, match.index) });
    start = pattern.lastIndex;
  }
  paragraphs.push({ start, end: answer.length, text: answer.slice(start) });
  return paragraphs.filter((p) => p.text.trim().length > 0);
}

function renderParagraph(
  doc: Document,
  paragraph: Paragraph,
  citations: CitationPayload[],
  onCitationClick: (docIndex: number) => void,
): HTMLParagraphElement {
  const p = doc.createElement('p');
  const markers = citations
    .filter((c) => c.doc_index !== null && c.end > paragraph.start && c.end <= paragraph.end)
    .sort((a, b) => a.end - b.end);
  let cursor = paragraph.start;
  for (const marker of markers) {
    if (marker.end > cursor) {
      p.appendChild(doc.createTextNode(paragraph.text.slice(cursor - paragraph.start, marker.end - paragraph.start)));
      cursor = marker.end;
    }
    const sup = doc.createElement('sup');
    sup.className = 'citation-marker';
    sup.dataset.doc = String(marker.doc_index);
    sup.dataset.sentence = String(marker.sentence_index);
    sup.textContent = `[${marker.doc_index}]`;
    sup.addEventListener('click', () => onCitationClick(marker.doc_index as number));
    p.appendChild(sup);
  }
  if (cursor < paragraph.end) {
    p.appendChild(doc.createTextNode(paragraph.text.slice(cursor - paragraph.start)));
  }
  return p;
}

function renderImages(doc: Document, placements: PlacementPayload[]): HTMLElement {
  const wrap = doc.createElement('figure');
  wrap.className = 'placed-images';
  for (const placement of placements) {
    const img = doc.createElement('img');
    img.src = placement.url;
    img.alt = placement.alt_text;
    img.dataset.paragraph = String(placement.paragraph_index);
    wrap.appendChild(img);
    if (placement.caption) {
      const cap = doc.createElement('figcaption');
      cap.textContent = placement.caption;
      wrap.appendChild(cap);
    }
  }
  return wrap;
}

export function render(
  state: StreamViewState,
  view: ViewElements,
  handlers: {
    onChoice: (choice: string) => void;
    onCitationClick: (docIndex: number) => void;
  },
): void {
  const doc = view.answer.ownerDocument;

  view.status.textContent = state.phase;
  view.notice.textContent = state.notice ?? '';
  view.notice.hidden = !state.notice;

  // clarification chips (Fig-7 style option round-trip)
  view.clarification.replaceChildren();
  if (state.phase === 'clarifying' && state.clarification) {
    const prompt = doc.createElement('div');
    prompt.className = 'clarify-prompt';
    prompt.textContent = state.clarification.prompt;
    view.clarification.appendChild(prompt);
    for (const choice of state.clarification.choices) {
      const chip = doc.createElement('button');
      chip.className = 'chip';
      chip.textContent = choice;
      chip.addEventListener('click', () => handlers.onChoice(choice));
      view.clarification.appendChild(chip);
    }
  }

  // plan summary
  view.plan.replaceChildren();
  if (state.qdg) {
    const list = doc.createElement('ol');
    for (const node of state.qdg.nodes) {
      const li = doc.createElement('li');
      li.textContent = node.query;
      const nodeAnswer = state.nodeAnswers[node.id];
      if (nodeAnswer) {
        const div = doc.createElement('div');
        div.className = 'node-answer';
        div.textContent = nodeAnswer;
        li.appendChild(div);
      }
      list.appendChild(li);
    }
    view.plan.appendChild(list);
  }

  // answer with inline citation markers and interleaved images
  view.answer.replaceChildren();
  const paragraphs = splitParagraphs(state.answer);
  const byParagraph = new Map<number, PlacementPayload[]>();
  for (const placement of state.images) {
    const list = byParagraph.get(placement.paragraph_index) ?? [];
    list.push(placement);
    byParagraph.set(placement.paragraph_index, list);
  }
  paragraphs.forEach((paragraph, index) => {
    view.answer.appendChild(renderParagraph(doc, paragraph, state.citations, handlers.onCitationClick));
    const placements = byParagraph.get(index);
    if (placements) view.answer.appendChild(renderImages(doc, placements));
  });

  // right-column timeline: groups ordered as sent, events ascending
  view.timeline.replaceChildren();
  for (const group of state.timeline) {
    const details = doc.createElement('details');
    details.open = true;
    details.className = 'timeline-group';
    const summary = doc.createElement('summary');
    summary.textContent = group.keywords.length
      ? `${group.label} — ${group.keywords.join(', ')}`
      : group.label;
    details.appendChild(summary);
    const list = doc.createElement('ul');
    const events = [...group.events].sort((a, b) => a.time.localeCompare(b.time));
    for (const event of events) {
      const li = doc.createElement('li');
      li.className = 'timeline-event';
      li.dataset.time = event.time;
      li.textContent = `${event.time.slice(0, 10)} — ${event.title}`;
      list.appendChild(li);
    }
    details.appendChild(list);
    view.timeline.appendChild(details);
  }

  // source panel for the selected citation
  view.docPanel.replaceChildren();
  view.docPanel.hidden = state.selectedCitation === null;
  if (state.selectedCitation !== null) {
    const docInfo = state.documents.find((d) => d.doc_index === state.selectedCitation);
    const heading = doc.createElement('h3');
    heading.textContent = docInfo ? docInfo.title : `Source [${state.selectedCitation}]`;
    view.docPanel.appendChild(heading);
    if (docInfo) {
      const link = doc.createElement('a');
      link.href = docInfo.url;
      link.textContent = docInfo.url;
      view.docPanel.appendChild(link);
      const excerpt = doc.createElement('p');
      excerpt.textContent = docInfo.clean_text.slice(0, 280);
      view.docPanel.appendChild(excerpt);
    }
  }

  if (state.phase === 'error' && state.error) {
    const retry = doc.createElement('div');
    retry.className = 'error-box';
    retry.textContent = `${state.error.code}: ${state.error.message}`;
    view.notice.hidden = false;
    view.notice.replaceChildren(retry);
  }
}
