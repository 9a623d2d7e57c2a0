## Analogical proportions as vector geometry.
##
## The whole method rests on one idea: "a is to b as c is to d" means the
## shift a-b points the same way as the shift c-d.  This script walks that
## idea on tiny hand-made vectors before any neural network enters the
## picture.

import numpy as np

from analogia import ShiftPair, analogical_dissimilarity, energy, rank_candidates

## Toy word vectors, 2-d so the geometry is visible by eye.
king = np.array([3.0, 4.0])
man = np.array([1.0, 1.0])
woman = np.array([1.0, 3.0])
queen = king - man + woman  # the classic offset construction

print("queen =", queen)

## Analogical dissimilarity v = ||(a-b) - (c-d)||.  A constructed
## parallelogram closes exactly, so v is zero.
v = analogical_dissimilarity(king, man, queen, woman)
print("v(king, man, queen, woman) =", v)

## Perturb one corner and v grows with the defect.
for noise in (0.1, 0.5, 2.0):
    v = analogical_dissimilarity(king, man, queen + noise, woman)
    print(f"  corner off by {noise}: v = {v:.3f}")

## The energy of a quadruple is the cosine between its two shifts: +1 for
## parallel shifts, 0 for orthogonal, -1 for opposed.
print()
for label, cd in (("parallel", king - man), ("orthogonal", np.array([-3.0, 2.0])),
                  ("opposed", man - king)):
    E, degenerate = energy(ShiftPair(king - man, cd))
    print(f"energy, {label} shift: {E:+.3f} (degenerate={degenerate})")

## A zero-length shift has no direction; the score is neutral and flagged.
E, degenerate = energy(ShiftPair(king - man, np.zeros(2)))
print(f"energy, zero shift: {E:+.3f} (degenerate={degenerate})")

## Ranking: candidates answer a "question" by closing the parallelogram.
## The prototype pair plays (a, b); each candidate d_i competes to make
## (a, b, question, d_i) as proportional as possible.
print()
prototype = (king, man)  # question vector, answer vector
question = queen
candidates = [woman, np.array([0.0, 5.0]), np.array([2.0, 2.0])]

ranked = rank_candidates(question, candidates, [prototype], mode="energy")
print("energy ranking   :", ranked.order(), "scores",
      [round(e.score, 3) for e in ranked.entries])

ranked = rank_candidates(question, candidates, [prototype], mode="dissimilarity")
print("dissim. ranking  :", ranked.order(), "scores",
      [round(e.score, 3) for e in ranked.entries])

## Both modes agree that `woman` (index 0) best completes the analogy.
