"""Text helpers shared by ranking, cleaning, and presentation stages."""

from __future__ import annotations

import re
from datetime import datetime, timezone
from functools import lru_cache
from importlib import resources
from itertools import groupby

_WORD_RE = re.compile(r"\w+", re.UNICODE)

# CJK unified ideographs + extension A; kana included so ja text tokenizes sanely
_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0x3040, 0x30FF),
    (0xF900, 0xFAFF),
)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def tokenize(text: str) -> list[str]:
    """Unicode word tokens, lowercased; CJK runs become character bigrams.

    Bigrams let keyword/TF-IDF scoring work on Chinese text without a
    lexicon; a lone CJK character is kept as a unigram.
    """
    tokens: list[str] = []
    for match in _WORD_RE.finditer(text.lower()):
        run = match.group()
        for cjk, chars in groupby(run, key=_is_cjk):
            seg = "".join(chars)
            if not cjk:
                seg = seg.strip("_")
                if seg:
                    tokens.append(seg)
            elif len(seg) == 1:
                tokens.append(seg)
            else:
                tokens.extend(seg[i : i + 2] for i in range(len(seg) - 1))
    return tokens


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("gensearch").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


def content_tokens(text: str) -> list[str]:
    """Tokens with stopwords removed; falls back to all tokens if nothing survives."""
    tokens = tokenize(text)
    kept = [t for t in tokens if t not in stopwords()]
    return kept if kept else tokens


# Full-width forms U+FF01..U+FF5E map onto ASCII 0x21..0x7E; U+3000 is the
# ideographic space. CJK sentence punctuation (U+3002 etc.) is left alone.
_FULLWIDTH = {code: code - 0xFF01 + 0x21 for code in range(0xFF01, 0xFF5F)}
_FULLWIDTH[0x3000] = 0x20


def to_halfwidth(text: str) -> str:
    return text.translate(_FULLWIDTH)


# Unicode emoji blocks (pictographs, emoticons, transport, supplemental, flags…)
EMOJI_RE = re.compile(
    "["
    "\U0001F300-\U0001F5FF"
    "\U0001F600-\U0001F64F"
    "\U0001F680-\U0001F6FF"
    "\U0001F700-\U0001F77F"
    "\U0001F900-\U0001FAFF"
    "\U00002600-\U000027BF"
    "\U0001F1E6-\U0001F1FF"
    "\U00002190-\U000021FF"
    "\U00002B00-\U00002BFF"
    "︎️‍"
    "]+"
)

PHONE_RE = re.compile(
    r"(?<!\d)(?:\+?\d{1,3}[-.\s])?(?:\(\d{2,4}\)[-.\s]?)?\d{3,4}[-.\s]\d{3,4}(?:[-.\s]\d{3,4})?(?!\d)"
)
EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")


_DATE_PATTERNS = [
    # 2025-02-05, 2025/2/5, 2025.02.05 with optional time
    re.compile(
        r"(?P<y>\d{4})[-/.](?P<m>\d{1,2})[-/.](?P<d>\d{1,2})"
        r"(?:[ T](?P<H>\d{1,2}):(?P<M>\d{2})(?::(?P<S>\d{2}))?)?"
    ),
    # 2025年2月5日
    re.compile(r"(?P<y>\d{4})年(?P<m>\d{1,2})月(?P<d>\d{1,2})日?"),
    # 2025-02 / 2025年2月
    re.compile(r"(?P<y>\d{4})[-/.](?P<m>\d{1,2})(?![-/.\d])"),
    re.compile(r"(?P<y>\d{4})年(?P<m>\d{1,2})月"),
]

_MONTHS = {
    name: idx
    for idx, names in enumerate(
        [
            ("january", "jan"), ("february", "feb"), ("march", "mar"),
            ("april", "apr"), ("may",), ("june", "jun"), ("july", "jul"),
            ("august", "aug"), ("september", "sep", "sept"), ("october", "oct"),
            ("november", "nov"), ("december", "dec"),
        ],
        start=1,
    )
    for name in names
}

_MONTH_NAME_RE = re.compile(
    r"(?P<mon>[A-Za-z]{3,9})\.?\s+(?P<d>\d{1,2})(?:st|nd|rd|th)?,?\s+(?P<y>\d{4})"
)
_YEAR_RE = re.compile(r"(?<!\d)(?P<y>\d{4})(?!\d)")


def parse_timestamp(text: str | None) -> datetime | None:
    """Best-effort parse of an event time mention to a comparable datetime.

    Handles ISO-ish numeric dates, Chinese 年月日 forms, English month
    names, and bare years. Returns None when nothing parseable is found.
    """
    if not text:
        return None
    text = text.strip()
    if not text:
        return None
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
        return dt if dt.tzinfo is None else dt.astimezone(timezone.utc).replace(tzinfo=None)
    except ValueError:
        pass
    for pattern in _DATE_PATTERNS:
        m = pattern.search(text)
        if not m:
            continue
        parts = m.groupdict()
        try:
            return datetime(
                int(parts["y"]),
                int(parts.get("m") or 1),
                int(parts.get("d") or 1),
                int(parts.get("H") or 0),
                int(parts.get("M") or 0),
                int(parts.get("S") or 0),
            )
        except ValueError:
            continue
    m = _MONTH_NAME_RE.search(text)
    if m:
        month = _MONTHS.get(m.group("mon").lower())
        if month:
            try:
                return datetime(int(m.group("y")), month, int(m.group("d")))
            except ValueError:
                pass
    m = _YEAR_RE.search(text)
    if m:
        year = int(m.group("y"))
        if 1000 <= year <= 2999:
            return datetime(year, 1, 1)
    return None
