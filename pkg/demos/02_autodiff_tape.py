## The reverse-mode tape that trains the encoder.
##
## analogia.numerics is a dense, rank <= 2 autodiff kernel: immutable
## tensors, a context-manager tape, one backward pass per tape.  Here we
## differentiate a few expressions and audit the results against central
## finite differences.

import numpy as np

from analogia import GradTape, Tensor, finite_difference_check, tensor
from analogia import numerics as nx

## A scalar chain: f(w, b) = sum((x @ w + b)^2).
x = tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
w = tensor(np.array([[0.5], [-0.25]]))
b = tensor(np.array([0.1]))

with GradTape() as tape:
    tape.watch(w, b)
    h = nx.add(nx.matmul(x, w), b)
    loss = nx.sum_all(nx.hadamard(h, h))

grads = tape.gradient(loss)  # {watched tensor: ndarray}
print("loss =", loss.values)
print("dL/dw =", grads[w].ravel(), " dL/db =", grads[b])

## The same gradient, audited: finite_difference_check perturbs every
## entry and reports the max relative error.
def f(wt: Tensor):
    h = nx.add(nx.matmul(x, wt), b)
    return nx.sum_all(nx.hadamard(h, h))

err = finite_difference_check(f, w)
print(f"finite-difference max relative error: {err:.2e}")

## Max pooling routes gradient only to the winning rows.
rows = tensor(np.array([[1.0, 5.0, 2.0],
                        [4.0, 0.0, 2.0]]))
with GradTape() as tape:
    tape.watch(rows)
    pooled = nx.maxpool_time(rows)
    total = nx.sum_all(pooled)
print("pooled =", pooled.values, "\ngradient lands on the winners:\n",
      tape.gradient(total)[rows])

## Ties split deterministically toward the earliest row, so training is
## reproducible bit for bit.
tied = tensor(np.array([[3.0, 1.0], [3.0, 2.0]]))
with GradTape() as tape:
    tape.watch(tied)
    total = nx.sum_all(nx.maxpool_time(tied))
print("tie routing:\n", tape.gradient(total)[tied])

## Tapes are single-use and explicit about it.
with GradTape() as tape:
    tape.watch(w)
    total = nx.sum_all(nx.scale(w, 2.0))
tape.gradient(total)
try:
    tape.gradient(total)
except RuntimeError as exc:
    print("second backward:", exc)
