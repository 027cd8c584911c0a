from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from .ingest import DEFAULT_CHUNK_CHARS, PAGE_DELIMITER
from .intervals import DEFAULT_SMALL_DENOMINATOR
from .llm import DEFAULT_MODEL


@dataclass
class ExtractConfig:
    out_dir: Path
    corpus_dir: Optional[Path] = None
    chunk_chars: int = DEFAULT_CHUNK_CHARS
    page_delimiter: str = PAGE_DELIMITER
    model: str = DEFAULT_MODEL
    temperature: float = 0.0
    cache_dir: Optional[Path] = None
    max_attempts: int = 5
    tokens_per_minute: Optional[int] = None
    standalone: bool = False
    samples: Tuple[str, ...] = ()  # standalone mode; defaults to corpus doc ids
    jobs: int = 1
    wide_merge_factor: float = 5.0


@dataclass
class EvalConfig:
    records: Path
    truth: Path
    out_dir: Path
    units: Optional[str] = None  # "percent" restricts to non-trace entries
    small_denominator: float = DEFAULT_SMALL_DENOMINATOR
