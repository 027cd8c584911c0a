"""Corpus loading and page-respecting chunking."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

from .errors import CorpusError, InputFormatError

log = logging.getLogger(__name__)

PAGE_DELIMITER = "\f"
DEFAULT_CHUNK_CHARS = 25_000
TEXT_EXTENSIONS = (".txt",)
PDF_EXTENSIONS = (".pdf",)


@dataclass(frozen=True)
class DocumentText:
    doc_id: str
    pages: Tuple[str, ...]

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if not self.pages:
            raise ValueError(f"document {self.doc_id!r} has no pages")

    @property
    def text(self) -> str:
        return "".join(self.pages)


@dataclass(frozen=True)
class DocumentChunk:
    doc_id: str
    chunk_index: int
    page_span: Tuple[int, int]  # inclusive, 1-based page ordinals
    text: str


@dataclass(frozen=True)
class IngestError:
    path: str
    message: str


def split_pages(text: str, page_delimiter: str = PAGE_DELIMITER) -> List[str]:
    return text.split(page_delimiter) if page_delimiter else [text]


def read_text_document(path, page_delimiter: str = PAGE_DELIMITER) -> DocumentText:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise InputFormatError("file has no extractable text", path=path)
    return DocumentText(path.stem, tuple(split_pages(text, page_delimiter)))


def extract_pdf_text(pdf) -> DocumentText:
    """One page-text per PDF page, via PyMuPDF (optional dependency)."""
    pdf = Path(pdf)
    try:
        import pymupdf
    except ImportError:  # pragma: no cover - depends on the environment
        raise InputFormatError("PDF support needs the 'pdf' extra (pymupdf)", path=pdf)
    try:
        doc = pymupdf.open(pdf)
    except Exception as exc:
        raise InputFormatError(f"cannot open PDF: {exc}", path=pdf) from exc
    try:
        if doc.needs_pass:
            raise InputFormatError("PDF is encrypted", path=pdf)
        pages = [page.get_text("text") for page in doc]
    finally:
        doc.close()
    if not pages or not any(p.strip() for p in pages):
        raise InputFormatError("PDF has no extractable text layer", path=pdf)
    return DocumentText(pdf.stem, tuple(pages))


def load_corpus(directory, page_delimiter: str = PAGE_DELIMITER
                ) -> Tuple[List[DocumentText], List[IngestError]]:
    """Load every recognized file in ``directory``.

    Returns the documents sorted by doc_id plus per-file errors. A bad file does
    not stop the load; a directory with no recognized files does.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError("corpus directory does not exist or is not a directory", path=directory)
    files = sorted(p for p in directory.iterdir()
                   if p.is_file() and p.suffix.lower() in TEXT_EXTENSIONS + PDF_EXTENSIONS)
    if not files:
        raise CorpusError("corpus directory contains no .txt or .pdf files", path=directory)

    docs: dict = {}
    errors: List[IngestError] = []
    for path in files:
        try:
            if path.suffix.lower() in PDF_EXTENSIONS:
                doc = extract_pdf_text(path)
            else:
                doc = read_text_document(path, page_delimiter)
        except (OSError, UnicodeDecodeError, InputFormatError) as exc:
            log.warning("skipping %s: %s", path, exc)
            errors.append(IngestError(str(path), str(exc)))
            continue
        if doc.doc_id in docs:
            errors.append(IngestError(str(path), f"duplicate doc_id {doc.doc_id!r}"))
            continue
        docs[doc.doc_id] = doc
    return [docs[k] for k in sorted(docs)], errors


def chunk_document(doc: DocumentText, max_chunk_chars: int = DEFAULT_CHUNK_CHARS) -> List[DocumentChunk]:
    """Greedily pack whole pages into chunks of at most ``max_chunk_chars``.

    A page longer than the limit is never split; it becomes its own chunk.
    """
    if max_chunk_chars < 1:
        raise ValueError("max_chunk_chars must be >= 1")
    chunks: List[DocumentChunk] = []
    current: List[str] = []
    size = 0
    first = 1
    for page_no, page in enumerate(doc.pages, start=1):
        if current and size + len(page) > max_chunk_chars:
            chunks.append(DocumentChunk(doc.doc_id, len(chunks), (first, page_no - 1), "".join(current)))
            current, size, first = [], 0, page_no
        current.append(page)
        size += len(page)
    chunks.append(DocumentChunk(doc.doc_id, len(chunks), (first, len(doc.pages)), "".join(current)))
    return chunks


def chunk_corpus(docs: Sequence[DocumentText], max_chunk_chars: int = DEFAULT_CHUNK_CHARS):
    return {d.doc_id: chunk_document(d, max_chunk_chars) for d in docs}
