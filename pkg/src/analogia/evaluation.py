"""MRR/MAP metrics, the ranking pipeline, baselines, and prototype sweeps.

Questions are evaluated only when they can be scored meaningfully: they
need at least one gold-positive candidate, at least one same-type
prototype, and no empty sentences.  Everything else is counted as skipped,
per subset, so all methods report over an identical question set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analogy_core import ENERGY_MODE, RankedCandidate, RankedList, rank_candidates
from .quadgen import Prototype, select_prototypes
from .text_data import OTHER, WH_TYPES, EmbeddingTable, QADataset

REPORT_SUBSETS = WH_TYPES + (OTHER, "Combined")
REPORT_HEADER = "subset\tquestions\tskipped\tMAP\tMRR"
SWEEP_HEADER = "p\tMAP\tMRR"


def _validate_label_lists(label_lists):
    if not label_lists:
        raise ValueError("need at least one ranked question")
    for i, labels in enumerate(label_lists):
        if len(labels) == 0:
            raise ValueError(f"ranked list {i} is empty")
        if any(l not in (0, 1) for l in labels):
            raise ValueError(f"ranked list {i} has non-binary labels")
        if not any(labels):
            raise ValueError(f"ranked list {i} has no positive candidate; exclude it upstream")


def mrr(label_lists) -> float:
    """Mean reciprocal rank of the first positive, ranks 1-based.

    Each element is that question's gold labels in rank order.
    """
    label_lists = [tuple(l) for l in label_lists]
    _validate_label_lists(label_lists)
    total = 0.0
    for labels in label_lists:
        total += 1.0 / (labels.index(1) + 1)
    return total / len(label_lists)


def average_precision(labels) -> float:
    """Precision averaged over the ranks of the positives."""
    labels = tuple(labels)
    _validate_label_lists([labels])
    hits = 0
    total = 0.0
    for rank, y in enumerate(labels, start=1):
        if y == 1:
            hits += 1
            total += hits / rank
    return total / hits


def mean_average_precision(label_lists) -> float:
    label_lists = [tuple(l) for l in label_lists]
    _validate_label_lists(label_lists)
    return sum(average_precision(l) for l in label_lists) / len(label_lists)


@dataclass(frozen=True)
class ScoredQuestion:
    """One question's ranking plus the gold labels (by original candidate
    index) needed to score it."""

    question_id: str
    wh_type: str
    ranking: RankedList
    labels: tuple[int, ...]

    def labels_ranked(self) -> tuple[int, ...]:
        return tuple(self.labels[e.candidate_index] for e in self.ranking.entries)


@dataclass(frozen=True)
class SubsetMetrics:
    subset: str
    questions: int
    skipped: int
    map: float
    mrr: float


@dataclass(frozen=True)
class MetricsReport:
    rows: tuple[SubsetMetrics, ...]

    def row(self, subset: str) -> SubsetMetrics:
        for r in self.rows:
            if r.subset == subset:
                return r
        raise KeyError(subset)

    def to_tsv(self) -> str:
        lines = [REPORT_HEADER]
        for r in self.rows:
            lines.append(f"{r.subset}\t{r.questions}\t{r.skipped}\t{r.map!r}\t{r.mrr!r}")
        return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class EvaluationResult:
    report: MetricsReport
    rankings: tuple[ScoredQuestion, ...]


def _build_report(evaluated: list[ScoredQuestion], skipped: dict[str, int]) -> MetricsReport:
    rows = []
    by_type: dict[str, list] = {wh: [] for wh in WH_TYPES}
    for sq in evaluated:
        by_type[sq.wh_type].append(sq.labels_ranked())
    all_lists = [sq.labels_ranked() for sq in evaluated]
    for subset in REPORT_SUBSETS:
        if subset == "Combined":
            lists = all_lists
            skip = sum(skipped.values())
        else:
            lists = by_type.get(subset, [])
            skip = skipped.get(subset, 0)
        if lists:
            rows.append(SubsetMetrics(subset, len(lists), skip,
                                      mean_average_precision(lists), mrr(lists)))
        else:
            rows.append(SubsetMetrics(subset, 0, skip, math.nan, math.nan))
    return MetricsReport(rows=tuple(rows))


def _skip_reason(question, prototypes) -> str | None:
    if not any(c.label == 1 for c in question.candidates):
        return "no positive candidate"
    if question.wh_type == OTHER or not prototypes.get(question.wh_type):
        return "no same-type prototypes"
    if len(question.text) == 0 or any(len(c.text) == 0 for c in question.candidates):
        return "empty sentence"
    return None


def evaluate(encode_fn, dataset: QADataset, prototypes: dict[str, list[Prototype]],
             mode: str = ENERGY_MODE, eps: float = 1e-8) -> EvaluationResult:
    """Rank every scorable question's candidates against its same-type
    prototypes and aggregate MRR/MAP per subset.

    encode_fn maps a token sequence to a fixed-length numpy vector; both
    the learned encoder and the mean-embedding baseline plug in here, so
    the ranking logic downstream is byte-for-byte shared.
    """
    proto_vecs: dict[str, list] = {}
    for wh, protos in prototypes.items():
        proto_vecs[wh] = [(encode_fn(pr.question), encode_fn(pr.answer)) for pr in protos]

    evaluated: list[ScoredQuestion] = []
    skipped: dict[str, int] = {}
    for q in dataset.questions:
        reason = _skip_reason(q, prototypes)
        if reason is not None:
            skipped[q.wh_type] = skipped.get(q.wh_type, 0) + 1
            continue
        q_vec = encode_fn(q.text)
        cand_vecs = [encode_fn(c.text) for c in q.candidates]
        ranking = rank_candidates(q_vec, cand_vecs, proto_vecs[q.wh_type], mode=mode, eps=eps)
        evaluated.append(ScoredQuestion(
            question_id=q.question_id, wh_type=q.wh_type, ranking=ranking,
            labels=tuple(c.label for c in q.candidates)))
    return EvaluationResult(report=_build_report(evaluated, skipped), rankings=tuple(evaluated))


def mean_embedding_encoder(table: EmbeddingTable):
    """Sentence vector = unweighted mean of token vectors, OOV included."""
    def encode_fn(tokens):
        if len(tokens) == 0:
            raise ValueError("cannot embed an empty sentence")
        return np.mean([table.lookup(t) for t in tokens], axis=0, dtype=np.float64)
    return encode_fn


def baseline_rank(dataset: QADataset, table: EmbeddingTable,
                  prototypes: dict[str, list[Prototype]],
                  mode: str = ENERGY_MODE, eps: float = 1e-8) -> EvaluationResult:
    """Mean-embedding sentences pushed through the identical ranking path."""
    return evaluate(mean_embedding_encoder(table), dataset, prototypes, mode=mode, eps=eps)


def random_rank(dataset: QADataset, prototypes: dict[str, list[Prototype]],
                seed: int = 0) -> EvaluationResult:
    """Seeded random scores over the same skip rules; a sanity floor.

    best_prototype_index is -1 on every entry since no prototype takes part.
    """
    rng = np.random.default_rng(seed)
    evaluated: list[ScoredQuestion] = []
    skipped: dict[str, int] = {}
    for q in dataset.questions:
        reason = _skip_reason(q, prototypes)
        if reason is not None:
            skipped[q.wh_type] = skipped.get(q.wh_type, 0) + 1
            continue
        scores = rng.random(len(q.candidates))
        order = sorted(range(len(scores)), key=lambda i: -scores[i])
        entries = tuple(
            RankedCandidate(candidate_index=i, score=float(scores[i]), rank=r + 1,
                            best_prototype_index=-1)
            for r, i in enumerate(order))
        ranking = RankedList(entries=entries, mode=ENERGY_MODE, degenerate_count=0)
        evaluated.append(ScoredQuestion(
            question_id=q.question_id, wh_type=q.wh_type, ranking=ranking,
            labels=tuple(c.label for c in q.candidates)))
    return EvaluationResult(report=_build_report(evaluated, skipped), rankings=tuple(evaluated))


@dataclass(frozen=True)
class SweepRow:
    p: int
    map: float
    mrr: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    warnings: tuple[str, ...]

    def to_tsv(self) -> str:
        lines = [SWEEP_HEADER]
        for r in self.rows:
            lines.append(f"{r.p}\t{r.map!r}\t{r.mrr!r}")
        return "".join(line + "\n" for line in lines)


def sweep_prototypes(encode_fn, eval_dataset: QADataset, proto_dataset: QADataset,
                     p_values, seed: int, mode: str = ENERGY_MODE,
                     eps: float = 1e-8) -> SweepResult:
    """Evaluate once per requested prototype count, re-selecting with the
    same seed (so smaller sets are prefixes of larger ones)."""
    p_values = list(p_values)
    if not p_values:
        raise ValueError("p_values must be non-empty")
    rows = []
    warnings = []
    for p in p_values:
        prototypes = select_prototypes(proto_dataset, p, seed)
        for wh in WH_TYPES:
            got = len(prototypes[wh])
            if got < p:
                warnings.append(f"p={p}: only {got} answerable {wh} questions available")
        result = evaluate(encode_fn, eval_dataset, prototypes, mode=mode, eps=eps)
        combined = result.report.row("Combined")
        rows.append(SweepRow(p=p, map=combined.map, mrr=combined.mrr))
    return SweepResult(rows=tuple(rows), warnings=tuple(warnings))


def rankings_to_tsv(rankings) -> str:
    """CLI `rank` payload: one row per (question, candidate)."""
    lines = ["question_id\tcandidate_index\tscore\trank\tbest_prototype_index"]
    for sq in rankings:
        for e in sq.ranking.entries:
            lines.append(f"{sq.question_id}\t{e.candidate_index}\t{e.score!r}\t{e.rank}\t{e.best_prototype_index}")
    return "".join(line + "\n" for line in lines)
