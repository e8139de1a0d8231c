from datetime import datetime

from gensearch.retrieval.clean import clean_document


def test_fullwidth_normalized_and_script_dropped():
    html = "<p>Ｈello，　ｗorld　１２３</p><script>var x = 1;</script>"
    doc = clean_document(html.encode(), "https://e.com/a")
    assert doc is not None
    assert doc.clean_text == "Hello, world 123"


def test_nav_footer_only_page_discarded():
    html = "<nav>home | about</nav><footer>(c) 2025 Site</footer>"
    assert clean_document(html.encode(), "https://e.com/b") is None


def test_phone_and_email_removed():
    doc = clean_document(b"<p>Call 555-123-4567 or mail a@b.com</p>", "https://e.com/c")
    assert doc is not None
    assert "555" not in doc.clean_text
    assert "a@b.com" not in doc.clean_text
    assert "Call" in doc.clean_text and "mail" in doc.clean_text


def test_boilerplate_and_emoji_filtered():
    html = "<p>Big news today \U0001F600\U0001F680</p><div>Read More</div><p>Details follow.</p>"
    doc = clean_document(html.encode(), "https://e.com/d")
    assert doc is not None
    assert "\U0001F600" not in doc.clean_text
    assert "Read More" not in doc.clean_text
    assert "Big news today" in doc.clean_text
    assert "Details follow." in doc.clean_text


def test_paragraph_breaks_preserved():
    html = "<article><p>First block.</p><p>Second block.</p></article>"
    doc = clean_document(html.encode(), "https://e.com/e")
    assert doc is not None
    assert doc.clean_text == "First block.\n\nSecond block."


def test_non_content_subtrees_dropped_entirely():
    html = (
        "<div>keep me</div>"
        "<aside><p>drop this</p></aside>"
        "<form><input value='x'><p>form text</p></form>"
        "<iframe><p>frame text</p></iframe>"
    )
    doc = clean_document(html.encode(), "https://e.com/f")
    assert doc is not None
    assert "keep me" in doc.clean_text
    for gone in ("drop this", "form text", "frame text"):
        assert gone not in doc.clean_text


def test_images_harvested_with_caption_and_resolution():
    html = (
        "<head><title>T</title>"
        '<meta property="article:published_time" content="2025-03-03T09:00:00Z"></head>'
        "<body><figure>"
        '<img src="/img/a.jpg" width="800" height="600" alt="A bridge">'
        "<figcaption>The bridge before collapse</figcaption></figure>"
        '<img src="https://cdn.e.com/b.png" alt="chart" title="Traffic chart">'
        "<p>Body text for the article.</p></body>"
    )
    doc = clean_document(html.encode(), "https://e.com/news/x")
    assert doc is not None
    assert doc.title == "T"
    assert doc.report_time == datetime(2025, 3, 3, 9, 0)
    assert len(doc.images) == 2
    first, second = doc.images
    assert first.url == "https://e.com/img/a.jpg"
    assert (first.width, first.height) == (800, 600)
    assert first.caption == "The bridge before collapse"
    assert second.caption == "Traffic chart"
    assert second.width is None


def test_malformed_html_tolerated():
    html = b"<div><p>unclosed <b>bold<div>next</p>"
    doc = clean_document(html, "https://e.com/g")
    assert doc is not None
    assert "unclosed" in doc.clean_text and "next" in doc.clean_text


def test_lossy_decode():
    raw = b"<p>ok \xff\xfe text</p>"
    doc = clean_document(raw, "https://e.com/h")
    assert doc is not None
    assert "ok" in doc.clean_text
