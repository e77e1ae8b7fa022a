"""Problem instances: datasets, losses, composite objectives.

An instance is

    F(x) = (1/n) sum_i loss_i(x) + (nu/2)||x||^2 + mu ||B x||_1

with per-sample losses

    square:    0.5 * (a_i'x - b_i)^2
    logistic:  log(1 + exp(-b_i a_i'x))
    hinge:     max(0, 1 - b_i a_i'x)
"""

from dataclasses import dataclass

import numpy as np

from spdfp.sparse import SparseMatrix

LOSSES = ("square", "logistic", "hinge")


@dataclass(frozen=True)
class Dataset:
    """n samples as rows of a sparse matrix, with one real label per row."""

    samples: SparseMatrix
    labels: np.ndarray

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if self.samples.n_rows < 1:
            raise ValueError("dataset needs at least one sample")
        if labels.shape != (self.samples.n_rows,):
            raise ValueError("one label per sample required")

    @property
    def n(self):
        return self.samples.n_rows

    @property
    def dim(self):
        return self.samples.n_cols

    def check_classification_labels(self):
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("classification losses need labels in {-1, +1}")


@dataclass(frozen=True)
class ProblemSpec:
    """A full composite instance: loss kind, data, weights and operator B."""

    loss: str
    dataset: Dataset
    l2_weight: float
    composite_weight: float
    B: SparseMatrix

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.l2_weight < 0 or self.composite_weight < 0:
            raise ValueError("regularization weights must be nonnegative")
        if self.B.n_cols != self.dataset.dim:
            raise ValueError("B column count must equal the feature dimension")
        if self.loss in ("logistic", "hinge"):
            self.dataset.check_classification_labels()

    @property
    def dim(self):
        return self.dataset.dim

    @property
    def n(self):
        return self.dataset.n


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_values(loss, margins, labels):
    """Per-sample loss values given margins a_i'x."""
    if loss == "square":
        return 0.5 * (margins - labels) ** 2
    if loss == "logistic":
        return np.logaddexp(0.0, -labels * margins)
    if loss == "hinge":
        return np.maximum(0.0, 1.0 - labels * margins)
    raise ValueError(f"unknown loss {loss!r}")


def loss_weights(loss, margins, labels):
    """Per-sample scalars w_i with d loss_i / dx = w_i * a_i.

    The hinge subgradient takes the value 0 at the kink b_i a_i'x = 1.
    """
    if loss == "square":
        return margins - labels
    if loss == "logistic":
        return -labels * _sigmoid(-labels * margins)
    if loss == "hinge":
        return np.where(labels * margins < 1.0, -labels, 0.0)
    raise ValueError(f"unknown loss {loss!r}")


def objective_value(spec, x):
    """F(x) = mean loss + (nu/2)||x||^2 + mu ||Bx||_1."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.dim,):
        raise ValueError(f"x must have dimension {spec.dim}")
    margins = spec.dataset.samples.matvec(x)
    val = float(np.mean(loss_values(spec.loss, margins, spec.dataset.labels)))
    if spec.l2_weight:
        val += 0.5 * spec.l2_weight * float(x @ x)
    if spec.composite_weight:
        val += spec.composite_weight * float(np.sum(np.abs(spec.B.matvec(x))))
    return val
