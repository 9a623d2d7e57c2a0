## Train on the bundled trivia set and watch one question get ranked.

import pathlib

from analogia import (
    TrainConfig,
    baseline_rank,
    evaluate,
    load_embeddings,
    load_qa_dataset,
    select_prototypes,
    sentence_encoder,
    train,
)

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

dataset = load_qa_dataset(DATA / "toy_qa.tsv")
table = load_embeddings(DATA / "toy_vectors.vec")
print(f"{len(dataset)} questions, {table.dim}-d vectors")
for wh in ("Who", "When", "Where", "Other"):
    print(f"  {wh:6s} {len(dataset.by_type(wh))}")

## Two prototypes per type anchor every quadruple.
prototypes = select_prototypes(dataset, p=2, seed=0)
for pr in prototypes["Where"]:
    print("Where prototype:", " ".join(pr.question), "->", " ".join(pr.answer))

cfg = TrainConfig(dim=16, epochs=15, batch_size=8, dropout=0.3, seed=0)
result = train(cfg, dataset, prototypes, table)
print(f"\ntrained on {result.quadruple_count} quadruples; "
      f"loss {result.loss_log[0].mean_loss:.3f} -> {result.loss_log[-1].mean_loss:.3f}")

## Rank a single question by hand to see the moving parts.
encode_fn = sentence_encoder(table, result.params)
question = dataset.by_type("Who")[2]
print("\nquestion:", " ".join(question.text))

scored = evaluate(encode_fn, dataset, prototypes)
ranking = next(sq.ranking for sq in scored.rankings if sq.question_id == question.question_id)
for entry in ranking.entries:
    cand = question.candidates[entry.candidate_index]
    marker = "*" if cand.label == 1 else " "
    print(f"  rank {entry.rank} {marker} E={entry.score:+.3f} "
          f"(prototype {entry.best_prototype_index})  {' '.join(cand.text)}")

## Side-by-side with the order-blind mean-embedding baseline.
model_report = scored.report
base_report = baseline_rank(dataset, table, prototypes).report
print("\n        model            baseline")
for subset in ("Who", "When", "Where", "Combined"):
    m = model_report.row(subset)
    b = base_report.row(subset)
    print(f"{subset:9s} MRR {m.mrr:.3f}      MRR {b.mrr:.3f}")
