"""Tokenization, word-vector tables, and QA dataset ingestion."""

from __future__ import annotations

import hashlib
import string
from dataclasses import dataclass, field

import numpy as np

WHO = "Who"
WHEN = "When"
WHERE = "Where"
OTHER = "Other"
WH_TYPES = (WHO, WHEN, WHERE)

_ASCII_PUNCT = string.punctuation


class ParseError(ValueError):
    """Malformed input file; message carries the offending line number."""


class ConfigError(ValueError):
    """Inputs are well-formed but inconsistent with the requested setup."""


def tokenize(raw: str) -> tuple[str, ...]:
    """Lowercase, split on Unicode whitespace, strip ASCII punctuation off
    token edges, drop empties.  Total on any string; idempotent on its own
    space-joined output."""
    out = []
    for piece in raw.lower().split():
        tok = piece.strip(_ASCII_PUNCT)
        if tok:
            out.append(tok)
    return tuple(out)


def classify_question(tokens) -> str:
    """Wh-type from the first token: who/when/where, anything else Other."""
    if not tokens:
        return OTHER
    first = tokens[0]
    for wh in WH_TYPES:
        if first == wh.lower():
            return wh
    return OTHER


@dataclass(frozen=True)
class Candidate:
    text: tuple[str, ...]
    label: int


@dataclass(frozen=True)
class Question:
    question_id: str
    text: tuple[str, ...]
    wh_type: str
    candidates: tuple[Candidate, ...]


@dataclass(frozen=True)
class QADataset:
    questions: tuple[Question, ...]

    def __len__(self) -> int:
        return len(self.questions)

    def by_type(self, wh_type: str) -> tuple[Question, ...]:
        return tuple(q for q in self.questions if q.wh_type == wh_type)


@dataclass(frozen=True)
class EmbeddingTable:
    """Token -> vector map with deterministic out-of-vocabulary fallback.

    Unknown tokens hash (oov_seed, token bytes) into a generator seed and
    draw a uniform [-0.1, 0.1] vector, so repeated lookups agree across
    processes without storing anything.
    """

    dim: int
    entries: dict[str, np.ndarray] = field(repr=False)
    oov_seed: int = 0

    def lookup(self, token: str) -> np.ndarray:
        vec = self.entries.get(token)
        if vec is not None:
            return vec
        return self._oov_vector(token)

    def _oov_vector(self, token: str) -> np.ndarray:
        h = hashlib.blake2b(digest_size=8)
        h.update(str(self.oov_seed).encode("utf-8"))
        h.update(b"\x00")
        h.update(token.encode("utf-8"))
        rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
        return rng.uniform(-0.1, 0.1, size=self.dim).astype(np.float32)

    def __contains__(self, token: str) -> bool:
        return token in self.entries


def lookup(table: EmbeddingTable, token: str) -> np.ndarray:
    return table.lookup(token)


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def load_embeddings(path, expected_dim: int | None = None, oov_seed: int = 0) -> EmbeddingTable:
    """Read a word-vector text file.

    Format: optional first line ``count dim``; data lines
    ``token v1 v2 ... vd``.  Duplicate tokens keep the first occurrence.
    Dimension comes from the header or the first data row; a later row of a
    different width is a ParseError, a clash with expected_dim a ConfigError.
    """
    dim: int | None = None
    entries: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split()
            if lineno == 1 and _is_header(fields):
                dim = int(fields[1])
                if dim <= 0:
                    raise ParseError(f"{path}: line 1: header dimension must be positive")
                continue
            if len(fields) < 2:
                raise ParseError(f"{path}: line {lineno}: expected a token and at least one value")
            token, values = fields[0], fields[1:]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ParseError(
                    f"{path}: line {lineno}: row width {len(values)} does not match dimension {dim}")
            try:
                vec = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
            if token not in entries:
                entries[token] = vec
    if dim is None or not entries:
        raise ParseError(f"{path}: no embedding rows found")
    if expected_dim is not None and dim != expected_dim:
        raise ConfigError(
            f"{path}: embedding dimension {dim} does not match expected {expected_dim}")
    for vec in entries.values():
        vec.setflags(write=False)
    return EmbeddingTable(dim=dim, entries=entries, oov_seed=oov_seed)


def load_qa_dataset(path, has_header: bool = False) -> QADataset:
    """Read questions and labeled candidates from a 4-column TSV.

    Columns: question_id, question_text, candidate_text, label in {0,1}.
    Rows group by question_id in order of first appearance; per-question
    candidate order follows the file.  Question text and wh-type come from
    the group's first row.
    """
    order: list[str] = []
    texts: dict[str, tuple[str, ...]] = {}
    cands: dict[str, list[Candidate]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if has_header and lineno == 1:
                continue
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ParseError(f"{path}: line {lineno}: expected 4 tab-separated columns, got {len(cols)}")
            qid, qtext, ctext, label_str = cols
            if label_str not in ("0", "1"):
                raise ParseError(f"{path}: line {lineno}: label must be 0 or 1, got {label_str!r}")
            if qid not in texts:
                order.append(qid)
                texts[qid] = tokenize(qtext)
                cands[qid] = []
            cands[qid].append(Candidate(text=tokenize(ctext), label=int(label_str)))
    questions = tuple(
        Question(
            question_id=qid,
            text=texts[qid],
            wh_type=classify_question(texts[qid]),
            candidates=tuple(cands[qid]),
        )
        for qid in order
    )
    return QADataset(questions=questions)


def qa_dataset_to_tsv(dataset: QADataset) -> str:
    """Serialize a dataset back to the 4-column TSV format.

    Texts are written token-joined, so load(serialize(ds)) gives the same
    tokens even though the original raw strings are gone.
    """
    lines = []
    for q in dataset.questions:
        qtext = " ".join(q.text)
        for cand in q.candidates:
            lines.append(f"{q.question_id}\t{qtext}\t{' '.join(cand.text)}\t{cand.label}")
    return "".join(line + "\n" for line in lines)


def embeddings_to_vec_text(table: EmbeddingTable, header: bool = True) -> str:
    """Serialize a table in word2vec text format (optional `count dim` header)."""
    lines = []
    if header:
        lines.append(f"{len(table.entries)} {table.dim}")
    for token, vec in table.entries.items():
        lines.append(token + " " + " ".join(repr(float(x)) for x in vec))
    return "".join(line + "\n" for line in lines)
