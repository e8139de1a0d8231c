"""Retrieved-page cleaning: strip non-content markup, scrub noise, normalize.

The cleaning contract, applied in order per text block: drop non-content
subtrees (script/style/nav/footer/aside/form/iframe), map full-width
punctuation/digits to half-width, remove boilerplate phrases, emoji,
phone numbers and email addresses, collapse whitespace, keep paragraph
breaks. Images are harvested into ImageAssets along the way.

A page whose text is empty after filtering is discarded (returns None).
"""

from __future__ import annotations

import logging
import re
from datetime import datetime
from html.parser import HTMLParser
from typing import Optional
from urllib.parse import urljoin

from ..models import ImageAsset, RetrievedDocument
from ..textutil import EMAIL_RE, EMOJI_RE, PHONE_RE, parse_timestamp, to_halfwidth

logger = logging.getLogger(__name__)

NON_CONTENT_TAGS = frozenset(
    {"script", "style", "nav", "footer", "aside", "form", "iframe", "noscript", "svg", "template"}
)
# tags whose boundaries end a text block (paragraph break in the output)
BLOCK_TAGS = frozenset(
    {
        "p", "div", "article", "main", "section", "li", "ul", "ol", "table", "tr",
        "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "figure", "figcaption",
        "header", "pre", "dd", "dt",
    }
)

BOILERPLATE_PHRASES = (
    "read more",
    "click to continue",
    "continue reading",
    "advertisement",
    "sign up for our newsletter",
)
_BOILERPLATE_RE = re.compile(
    "|".join(re.escape(p) for p in BOILERPLATE_PHRASES), re.IGNORECASE
)
_SPACE_RE = re.compile(r"[ \t\r\f\v]+")


class _Extractor(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.blocks: list[str] = []
        self._current: list[str] = []
        self._skip_depth = 0
        self._in_title = False
        self.title_parts: list[str] = []
        self.meta_title: str = ""
        self.meta_time: Optional[str] = None
        self.images: list[dict] = []
        self._figure_images: list[int] = []
        self._figure_depth = 0
        self._in_figcaption = False
        self._figcaption_parts: list[str] = []

    def _flush(self) -> None:
        text = "".join(self._current)
        self._current = []
        if text.strip():
            self.blocks.append(text)

    def handle_starttag(self, tag: str, attrs) -> None:
        attrs_dict = dict(attrs)
        if tag in NON_CONTENT_TAGS:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = True
        elif tag == "meta":
            self._handle_meta(attrs_dict)
        elif tag == "img":
            self._handle_img(attrs_dict)
        elif tag == "br":
            self._current.append("\n")
        elif tag == "figure":
            self._figure_depth += 1
        elif tag == "figcaption":
            self._in_figcaption = True
        elif tag == "time" and attrs_dict.get("datetime") and not self.meta_time:
            self.meta_time = attrs_dict["datetime"]
        if tag in BLOCK_TAGS:
            self._flush()

    def handle_endtag(self, tag: str) -> None:
        if tag in NON_CONTENT_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = False
        elif tag == "figcaption":
            self._in_figcaption = False
        elif tag == "figure":
            self._figure_depth = max(0, self._figure_depth - 1)
            caption = "".join(self._figcaption_parts).strip()
            if caption:
                for idx in self._figure_images:
                    if not self.images[idx].get("caption"):
                        self.images[idx]["caption"] = caption
            self._figure_images = []
            self._figcaption_parts = []
        if tag in BLOCK_TAGS:
            self._flush()

    def handle_data(self, data: str) -> None:
        if self._skip_depth:
            return
        if self._in_title:
            self.title_parts.append(data)
        elif self._in_figcaption:
            self._figcaption_parts.append(data)
        else:
            self._current.append(data)

    def _handle_meta(self, attrs: dict) -> None:
        prop = (attrs.get("property") or attrs.get("name") or "").lower()
        content = attrs.get("content") or ""
        if not content:
            return
        if prop == "og:title" and not self.meta_title:
            self.meta_title = content
        elif prop in (
            "article:published_time",
            "article:modified_time",
            "date",
            "pubdate",
            "publishdate",
        ) and not self.meta_time:
            self.meta_time = content

    def _handle_img(self, attrs: dict) -> None:
        src = attrs.get("src") or attrs.get("data-src") or ""
        if not src or src.startswith("data:"):
            return
        def as_int(value):
            try:
                n = int(str(value).rstrip("px"))
                return n if n > 0 else None
            except (TypeError, ValueError):
                return None
        index = len(self.images)
        self.images.append(
            {
                "src": src,
                "width": as_int(attrs.get("width")),
                "height": as_int(attrs.get("height")),
                "alt": (attrs.get("alt") or "").strip(),
                "caption": (attrs.get("title") or "").strip() or None,
            }
        )
        if self._figure_depth:
            self._figure_images.append(index)

    def close_all(self) -> None:
        self._flush()
        self.close()


def _scrub_block(text: str) -> str:
    text = to_halfwidth(text)
    text = _BOILERPLATE_RE.sub(" ", text)
    text = EMOJI_RE.sub("", text)
    text = PHONE_RE.sub(" ", text)
    text = EMAIL_RE.sub(" ", text)
    lines = [_SPACE_RE.sub(" ", line).strip() for line in text.split("\n")]
    return "\n".join(line for line in lines if line)


def clean_document(raw_html: bytes | str, url: str) -> Optional[RetrievedDocument]:
    """Parse and scrub one page; None when nothing survives filtering.

    The returned document carries doc_index 0 — the session assigns the
    real 1-based index on admission.
    """
    if isinstance(raw_html, bytes):
        html = raw_html.decode("utf-8", errors="replace")
    else:
        html = raw_html
    extractor = _Extractor()
    try:
        extractor.feed(html)
        extractor.close_all()
    except Exception:  # pragma: no cover - stdlib parser is extremely tolerant
        logger.warning("HTML parse failed for %s", url)
        return None

    blocks = [_scrub_block(b) for b in extractor.blocks]
    blocks = [b for b in blocks if b]
    clean_text = "\n\n".join(blocks).strip()
    if not clean_text:
        return None

    title = _SPACE_RE.sub(" ", "".join(extractor.title_parts)).strip() or extractor.meta_title
    report_time: Optional[datetime] = parse_timestamp(extractor.meta_time)

    images = tuple(
        ImageAsset(
            url=urljoin(url, img["src"]),
            width=img["width"],
            height=img["height"],
            alt_text=img["alt"],
            caption=img["caption"],
            parent_doc=0,
        )
        for img in extractor.images
    )
    return RetrievedDocument(
        doc_index=0,
        url=url,
        title=to_halfwidth(title),
        report_time=report_time,
        clean_text=clean_text,
        images=images,
    )
