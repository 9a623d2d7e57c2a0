"""Deterministic toy QA corpus where correctness is decidable from
type-specific marker tokens.

Every question has exactly four candidates: the correct one carries a
marker bigram of the question's own wh-type, two wrong ones carry marker
bigrams of the other two types, and one wrong candidate is the correct
answer with its tokens reversed.  The reversal has the same token multiset,
so any order-blind encoder (averaged embeddings included) scores it
identically to the correct answer and ties are broken toward whichever
comes first; the reversal is placed ahead of the correct answer in half
the questions.  A sequence encoder has to use word order to win.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .fsio import atomic_write_text
from .text_data import (
    Candidate,
    EmbeddingTable,
    QADataset,
    Question,
    embeddings_to_vec_text,
    qa_dataset_to_tsv,
)

MARKERS = {
    "Who": ("curie", "tesla", "darwin", "noether"),
    "When": ("january", "april", "august", "october"),
    "Where": ("oslo", "cairo", "quito", "minsk"),
}

# Question tails keep the surface form from being identical across types.
QUESTION_VERBS = {
    "Who": ("led", "guided", "organized"),
    "When": ("begin", "depart", "return"),
    "Where": ("camp", "land", "winter"),
}

CANDIDATE_VERBS = ("confirmed", "reported", "recorded")

# Two id tokens name each expedition; 26*25 ordered pairs is plenty.
ID_TOKENS = (
    "alfa", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliett", "kilo", "metro", "mike", "november", "oscar", "papa",
    "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu",
)

TRAIN_FILE = "train.tsv"
HELD_OUT_FILE = "heldout.tsv"
VECTORS_FILE = "vectors.vec"


@dataclass(frozen=True)
class SyntheticCorpus:
    train: QADataset
    held_out: QADataset
    table: EmbeddingTable


def _question_tokens(wh_type, ida, idb, verb):
    if wh_type == "Who":
        return ("who", verb, "expedition", ida, idb)
    if wh_type == "When":
        return ("when", "did", "expedition", ida, idb, verb)
    return ("where", "did", "expedition", ida, idb, verb)


def _candidate_tokens(m1, m2, verb):
    return ("the", m1, m2, "party", verb, "it")


def _vocabulary():
    vocab = set(ID_TOKENS) | set(CANDIDATE_VERBS)
    vocab |= {"who", "when", "where", "did", "expedition", "the", "party", "it"}
    for pool in MARKERS.values():
        vocab |= set(pool)
    for pool in QUESTION_VERBS.values():
        vocab |= set(pool)
    return tuple(sorted(vocab))


def _marker_bigram(rng, wh_type):
    pool = MARKERS[wh_type]
    i, j = rng.choice(len(pool), size=2, replace=False)
    return pool[i], pool[j]


def _build_question(rng, wh_type, ida, idb, index) -> Question:
    qverb = QUESTION_VERBS[wh_type][int(rng.integers(3))]
    qtoks = _question_tokens(wh_type, ida, idb, qverb)

    m1, m2 = _marker_bigram(rng, wh_type)
    correct = Candidate(text=_candidate_tokens(m1, m2, CANDIDATE_VERBS[int(rng.integers(3))]), label=1)
    reversal = Candidate(text=tuple(reversed(correct.text)), label=0)
    others = [t for t in MARKERS if t != wh_type]
    rng.shuffle(others)
    wrongs = []
    for other in others:
        w1, w2 = _marker_bigram(rng, other)
        wrongs.append(Candidate(text=_candidate_tokens(w1, w2, CANDIDATE_VERBS[int(rng.integers(3))]), label=0))

    if index % 2 == 0:
        cands = (reversal, wrongs[0], correct, wrongs[1])
    else:
        cands = (wrongs[0], correct, reversal, wrongs[1])
    return Question(question_id=f"{wh_type.lower()}-{index}", text=qtoks,
                    wh_type=wh_type, candidates=cands)


def build_corpus(train_per_type: int = 60, eval_per_type: int = 10,
                 embedding_dim: int = 16, seed: int = 0) -> SyntheticCorpus:
    """Generate train and held-out splits plus a random embedding table.

    Splits share vocabulary and marker pools but no expedition ids, so
    held-out questions are genuinely unseen surface forms.
    """
    n = len(ID_TOKENS)
    pairs = [(ID_TOKENS[i], ID_TOKENS[j]) for i in range(n) for j in range(n) if i != j]
    need = train_per_type + eval_per_type
    if need > len(pairs):
        raise ValueError(f"at most {len(pairs)} questions per type, requested {need}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))

    train_qs, eval_qs = [], []
    for t, wh_type in enumerate(sorted(MARKERS)):
        for k in range(need):
            ida, idb = pairs[order[(t * need + k) % len(pairs)]]
            q = _build_question(rng, wh_type, ida, idb, index=k)
            (train_qs if k < train_per_type else eval_qs).append(q)

    vocab = _vocabulary()
    entries = {w: rng.normal(scale=0.3, size=embedding_dim).astype(np.float32) for w in vocab}
    for vec in entries.values():
        vec.setflags(write=False)
    table = EmbeddingTable(dim=embedding_dim, entries=entries)
    return SyntheticCorpus(train=QADataset(questions=tuple(train_qs)),
                           held_out=QADataset(questions=tuple(eval_qs)),
                           table=table)


def write_corpus(corpus: SyntheticCorpus, directory) -> dict[str, str]:
    """Write train.tsv, heldout.tsv and vectors.vec; returns name -> path."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        TRAIN_FILE: os.path.join(directory, TRAIN_FILE),
        HELD_OUT_FILE: os.path.join(directory, HELD_OUT_FILE),
        VECTORS_FILE: os.path.join(directory, VECTORS_FILE),
    }
    atomic_write_text(paths[TRAIN_FILE], qa_dataset_to_tsv(corpus.train))
    atomic_write_text(paths[HELD_OUT_FILE], qa_dataset_to_tsv(corpus.held_out))
    atomic_write_text(paths[VECTORS_FILE], embeddings_to_vec_text(corpus.table))
    return paths
