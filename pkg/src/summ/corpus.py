"""Document clusters: loading, sentence segmentation and tokenization.

A cluster is a set of topically related documents that get summarized
jointly.  Loading segments every document into sentences, assigns dense
cluster-global sentence indices, runs the token pipeline and attaches any
reference summaries found next to the documents.  Loaded clusters are
immutable and safe to share across threads.

Two on-disk layouts are supported:

* ``duc-dir`` -- one directory per cluster containing ``docs/*.txt`` (one
  document per file) and optionally ``models/*.txt`` (one reference per
  file, filename stem = author id).
* ``jsonl`` -- one cluster per line::

      {"cluster_id": str,
       "documents": [{"id": str, "text": str}, ...],
       "references": [{"author": str, "text": str}, ...]}

All file I/O is strict UTF-8; undecodable bytes raise ``CorpusError``.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import porter
from .stopwords import STOPWORDS

FORMATS = ("duc-dir", "jsonl")


class CorpusError(Exception):
    """Unreadable, malformed or empty corpus data."""


@dataclass(frozen=True)
class TokenizationConfig:
    """Token pipeline switches, applied as lowercase -> stopwords -> stem."""

    lowercase: bool = True
    remove_stopwords: bool = True
    stem: bool = True
    min_sentence_tokens: int = 3

    def __post_init__(self):
        if self.min_sentence_tokens < 1:
            raise ValueError("min_sentence_tokens must be >= 1")


#: Pipeline used for duplicate detection: surface forms, stopwords kept.
RAW_SEQUENCE_CONFIG = TokenizationConfig(
    lowercase=True, remove_stopwords=False, stem=False, min_sentence_tokens=1
)


@dataclass(frozen=True)
class Sentence:
    index: int
    raw_text: str
    tokens: tuple[str, ...]
    doc_id: str
    position_in_doc: int
    eligible: bool = True  # long enough for summary membership


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class ReferenceSummary:
    author_id: str
    text: str
    tokens: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("reference summary text must be non-empty")


@dataclass(frozen=True)
class DocumentCluster:
    cluster_id: str
    documents: tuple[Document, ...]
    sentences: tuple[Sentence, ...]
    references: tuple[ReferenceSummary, ...] = ()
    config: TokenizationConfig = field(default_factory=TokenizationConfig)

    def __len__(self) -> int:
        return len(self.sentences)


_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")

# Words whose trailing period does not end a sentence.  Lowercase, with the
# period included; single-letter initials are guarded separately.  Weekday
# abbreviations are deliberately absent: they collide with the verbs "sat"
# and "wed" and the noun "sun".
ABBREVIATIONS = frozenset(
    """
    adm. assn. ave. blvd. bros. capt. cmdr. co. col. corp. dept. dr. drs.
    e.g. etc. fig. ft. gen. gov. hon. i.e. inc. jr. lt. ltd. maj. messrs.
    mr. mrs. ms. mt. no. p.m. a.m. ph.d. prof. rep. reps. rev. sen. sens.
    sgt. sr. st. u.k. u.n. u.s. univ. v. vol. vs.
    jan. feb. mar. apr. jun. jul. aug. sep. sept. oct. nov. dec.
    """.split()
)

_BOUNDARY_RE = re.compile(r"[.!?]+[\"')\]]*(?=\s|$)")
_NEXT_START_RE = re.compile(r"\s+[\"'(\[]?[A-Z0-9]")


def _is_abbreviation(text: str, period_pos: int) -> bool:
    """True when the word ending at ``period_pos`` (inclusive) is guarded."""
    start = period_pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start : period_pos + 1].lower()
    if word in ABBREVIATIONS:
        return True
    # single-letter initials such as "J." in "J. Smith"
    return len(word) == 2 and word[0].isalpha()


def segment_sentences(raw_text: str) -> list[str]:
    """Split text into sentences.

    Boundaries are runs of sentence-final punctuation followed by
    whitespace and a capital letter or digit (optionally quoted), unless
    the period belongs to a known abbreviation or initial.  Blank lines
    always separate sentences.  The segments preserve all non-whitespace
    characters of the input.
    """
    sentences: list[str] = []
    for paragraph in re.split(r"\n\s*\n", raw_text):
        chunk = " ".join(paragraph.split())
        if not chunk:
            continue
        start = 0
        for match in _BOUNDARY_RE.finditer(chunk):
            end = match.end()
            if end < len(chunk) and not _NEXT_START_RE.match(chunk, end):
                continue
            if "." in match.group() and _is_abbreviation(chunk, match.start()):
                continue
            segment = chunk[start:end].strip()
            if segment:
                sentences.append(segment)
            start = end
        tail = chunk[start:].strip()
        if tail:
            sentences.append(tail)
    return sentences


def tokenize(text: str, config: TokenizationConfig) -> list[str]:
    """Run the token pipeline: alphanumeric tokens, then the config stages.

    Stopword matching is exact, so it only fires on lowercase tokens; with
    ``lowercase`` off the pipeline is effectively case-sensitive.
    """
    tokens = _TOKEN_RE.findall(text)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    if config.remove_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]
    if config.stem:
        tokens = [porter.stem(t) for t in tokens]
    return tokens


def cluster_from_sentences(
    cluster_id: str,
    doc_sentences: list[tuple[str, list[str]]],
    references: list[tuple[str, str]] | None = None,
    config: TokenizationConfig | None = None,
) -> DocumentCluster:
    """Build a cluster from pre-segmented sentences.

    ``doc_sentences`` is a list of ``(doc_id, sentences)`` pairs; sentence
    indices are assigned densely in document order.  This is the common
    constructor behind both loaders and is handy for synthetic clusters.
    """
    config = config or TokenizationConfig()
    doc_ids = [doc_id for doc_id, _ in doc_sentences]
    if len(set(doc_ids)) != len(doc_ids):
        raise CorpusError(f"cluster {cluster_id!r}: duplicate document ids")
    documents = []
    sentences: list[Sentence] = []
    for doc_id, sents in doc_sentences:
        documents.append(Document(doc_id=doc_id, text=" ".join(sents)))
        for pos, raw in enumerate(sents):
            tokens = tuple(tokenize(raw, config))
            sentences.append(
                Sentence(
                    index=len(sentences),
                    raw_text=raw,
                    tokens=tokens,
                    doc_id=doc_id,
                    position_in_doc=pos,
                    eligible=len(tokens) >= config.min_sentence_tokens,
                )
            )
    if not sentences:
        raise CorpusError(f"empty cluster: {cluster_id!r} has no sentences")
    try:
        refs = tuple(
            ReferenceSummary(author_id=a, text=t, tokens=tuple(tokenize(t, config)))
            for a, t in (references or [])
        )
    except ValueError as exc:
        raise CorpusError(f"cluster {cluster_id!r}: {exc}") from None
    return DocumentCluster(
        cluster_id=cluster_id,
        documents=tuple(documents),
        sentences=tuple(sentences),
        references=refs,
        config=config,
    )


def _build_cluster(
    cluster_id: str,
    raw_documents: list[tuple[str, str]],
    references: list[tuple[str, str]],
    config: TokenizationConfig,
    source: str,
) -> DocumentCluster:
    doc_sentences = []
    for doc_id, text in raw_documents:
        if not text.strip():
            raise CorpusError(f"{source}: empty document {doc_id!r}")
        doc_sentences.append((doc_id, segment_sentences(text)))
    return cluster_from_sentences(cluster_id, doc_sentences, references, config)


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8", errors="strict")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{path}: not valid UTF-8 ({exc})") from None
    except OSError as exc:
        raise CorpusError(f"{path}: {exc}") from None


def _load_duc_dir(path: Path, config: TokenizationConfig) -> DocumentCluster:
    docs_dir = path / "docs"
    if not docs_dir.is_dir():
        raise CorpusError(f"{path}: missing docs/ subdirectory")
    raw_documents = [
        (p.stem, _read_text(p)) for p in sorted(docs_dir.glob("*.txt"))
    ]
    if not raw_documents:
        raise CorpusError(f"{docs_dir}: no *.txt documents")
    references = []
    models_dir = path / "models"
    if models_dir.is_dir():
        references = [
            (p.stem, _read_text(p)) for p in sorted(models_dir.glob("*.txt"))
        ]
    return _build_cluster(path.name, raw_documents, references, config, str(path))


def _parse_jsonl_record(record, source: str) -> tuple[str, list, list]:
    if not isinstance(record, dict):
        raise CorpusError(f"{source}: record is not an object")
    try:
        cluster_id = record["cluster_id"]
        documents = [(d["id"], d["text"]) for d in record["documents"]]
        references = [
            (r["author"], r["text"]) for r in record.get("references", [])
        ]
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"{source}: malformed record ({exc!r})") from None
    fields = [cluster_id] + [x for pair in documents + references for x in pair]
    if not all(isinstance(x, str) for x in fields):
        raise CorpusError(f"{source}: malformed record (non-string field)")
    return cluster_id, documents, references


def _iter_jsonl(path: Path):
    text = _read_text(path)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        source = f"{path}:{lineno}"
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{source}: invalid JSON ({exc.msg})") from None
        yield source, record


def load_cluster(
    path: str | Path,
    format: str,
    config: TokenizationConfig | None = None,
    cluster_id: str | None = None,
) -> DocumentCluster:
    """Load a single cluster from ``path``.

    For ``duc-dir`` the path is one cluster directory.  For ``jsonl`` the
    file must contain exactly one record unless ``cluster_id`` selects one.
    """
    path = Path(path)
    config = config or TokenizationConfig()
    if format == "duc-dir":
        if not path.is_dir():
            raise CorpusError(f"{path}: not a directory")
        return _load_duc_dir(path, config)
    if format == "jsonl":
        if not path.is_file():
            raise CorpusError(f"{path}: not a file")
        records = list(_iter_jsonl(path))
        if cluster_id is not None:
            records = [
                (src, rec)
                for src, rec in records
                if isinstance(rec, dict) and rec.get("cluster_id") == cluster_id
            ]
            if not records:
                raise CorpusError(f"{path}: no cluster {cluster_id!r}")
        if len(records) != 1:
            raise CorpusError(
                f"{path}: expected exactly one cluster, found {len(records)}"
            )
        source, record = records[0]
        cid, documents, references = _parse_jsonl_record(record, source)
        return _build_cluster(cid, documents, references, config, source)
    raise ValueError(f"unknown corpus format {format!r}")


def load_corpus(
    path: str | Path,
    format: str,
    config: TokenizationConfig | None = None,
) -> list[DocumentCluster]:
    """Load every cluster under ``path``, sorted by cluster id."""
    path = Path(path)
    config = config or TokenizationConfig()
    if format == "duc-dir":
        if not path.is_dir():
            raise CorpusError(f"{path}: not a directory")
        cluster_dirs = sorted(p for p in path.iterdir() if p.is_dir())
        if not cluster_dirs:
            raise CorpusError(f"{path}: no cluster directories")
        clusters = [_load_duc_dir(p, config) for p in cluster_dirs]
    elif format == "jsonl":
        if not path.is_file():
            raise CorpusError(f"{path}: not a file")
        clusters = []
        for source, record in _iter_jsonl(path):
            cid, documents, references = _parse_jsonl_record(record, source)
            clusters.append(
                _build_cluster(cid, documents, references, config, source)
            )
        if not clusters:
            raise CorpusError(f"{path}: no clusters")
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    clusters.sort(key=lambda c: c.cluster_id)
    seen = Counter(c.cluster_id for c in clusters)
    dupes = [cid for cid, n in seen.items() if n > 1]
    if dupes:
        raise CorpusError(f"{path}: duplicate cluster ids {dupes}")
    return clusters


def duplicate_stats(cluster: DocumentCluster) -> int:
    """Count distinct sentence token sequences occurring at least twice.

    Sequences are the lowercased, punctuation-stripped surface tokens
    (stopwords kept, no stemming), so near-identical wire copy in
    different documents counts as a repeat.
    """
    counts = Counter(
        tuple(tokenize(s.raw_text, RAW_SEQUENCE_CONFIG)) for s in cluster.sentences
    )
    return sum(1 for n in counts.values() if n >= 2)
