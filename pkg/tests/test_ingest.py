import pytest
from hypothesis import given
from hypothesis import strategies as st

from compextract.errors import CorpusError
from compextract.ingest import DocumentText, chunk_document, load_corpus


def test_load_two_pages(tmp_path):
    (tmp_path / "10047.txt").write_text("page one\f page two", encoding="utf-8")
    docs, errors = load_corpus(tmp_path)
    assert errors == []
    assert [d.doc_id for d in docs] == ["10047"]
    assert docs[0].pages == ("page one", " page two")


def test_no_delimiter_is_one_page(tmp_path):
    (tmp_path / "a.txt").write_text("just one page", encoding="utf-8")
    docs, _ = load_corpus(tmp_path)
    assert docs[0].pages == ("just one page",)


def test_empty_file_is_an_error_not_a_document(tmp_path):
    (tmp_path / "empty.txt").write_text("", encoding="utf-8")
    (tmp_path / "ok.txt").write_text("x", encoding="utf-8")
    docs, errors = load_corpus(tmp_path)
    assert [d.doc_id for d in docs] == ["ok"]
    assert len(errors) == 1 and "empty.txt" in errors[0].path


def test_unreadable_file_does_not_stop_the_load(tmp_path):
    (tmp_path / "bad.txt").write_bytes(b"\xff\xfe\x00garbage\xc3")
    (tmp_path / "good.txt").write_text("fine", encoding="utf-8")
    docs, errors = load_corpus(tmp_path)
    assert [d.doc_id for d in docs] == ["good"]
    assert len(errors) == 1


def test_lexicographic_order_and_ignored_extensions(tmp_path):
    for name in ["b.txt", "a.txt", "notes.md", "c.TXT"]:
        (tmp_path / name).write_text("t", encoding="utf-8")
    docs, _ = load_corpus(tmp_path)
    assert [d.doc_id for d in docs] == ["a", "b", "c"]


def test_empty_directory(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path)


def test_missing_directory(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path / "nope")


def test_custom_delimiter(tmp_path):
    (tmp_path / "d.txt").write_text("a<PAGE>b<PAGE>c", encoding="utf-8")
    docs, _ = load_corpus(tmp_path, page_delimiter="<PAGE>")
    assert docs[0].pages == ("a", "b", "c")


def test_document_text_invariants():
    with pytest.raises(ValueError):
        DocumentText("", ("x",))
    with pytest.raises(ValueError):
        DocumentText("d", ())


# --- chunking ------------------------------------------------------------------

def _doc(*lengths):
    return DocumentText("d", tuple(chr(ord("a") + i) * n for i, n in enumerate(lengths)))


def test_greedy_packing():
    chunks = chunk_document(_doc(10_000, 10_000, 10_000), 25_000)
    assert [c.page_span for c in chunks] == [(1, 2), (3, 3)]
    assert [c.chunk_index for c in chunks] == [0, 1]


def test_oversized_page_kept_whole():
    chunks = chunk_document(_doc(30_000), 25_000)
    assert len(chunks) == 1 and len(chunks[0].text) == 30_000


def test_oversized_page_in_the_middle():
    chunks = chunk_document(_doc(100, 300, 100), 250)
    assert [c.page_span for c in chunks] == [(1, 1), (2, 2), (3, 3)]


def test_max_equal_total_gives_one_chunk():
    doc = _doc(7, 13, 1, 40)
    assert len(chunk_document(doc, len(doc.text))) == 1


def test_default_is_25k():
    doc = _doc(12_500, 12_500, 1)
    assert [c.page_span for c in chunk_document(doc)] == [(1, 2), (3, 3)]


def test_rejects_nonpositive_limit():
    with pytest.raises(ValueError):
        chunk_document(_doc(3), 0)


page_lengths = st.lists(st.integers(0, 400), min_size=1, max_size=30)


@given(page_lengths, st.integers(1, 1000))
def test_chunking_properties(lengths, limit):
    doc = _doc(*lengths) if len(lengths) < 26 else DocumentText("d", tuple("x" * n for n in lengths))
    chunks = chunk_document(doc, limit)
    assert "".join(c.text for c in chunks) == doc.text
    expected_first = 1
    for c in chunks:
        first, last = c.page_span
        assert first == expected_first
        assert c.text == "".join(doc.pages[first - 1:last])
        assert len(c.text) <= limit or first == last
        expected_first = last + 1
    assert expected_first == len(doc.pages) + 1
    assert chunk_document(doc, limit) == chunks


@given(page_lengths, st.integers(1, 1000), st.integers(0, 500))
def test_more_room_never_means_more_chunks(lengths, limit, extra):
    doc = DocumentText("d", tuple("x" * n for n in lengths))
    assert len(chunk_document(doc, limit + extra)) <= len(chunk_document(doc, limit))
