"""Empirical risk objectives and sample-gradient oracles.

For least squares each sample contributes ``f_i(x) = 0.5 * (a_i @ x - y_i)**2``
so that ``F(x) = ||A x - y||**2 / (2 n)``. The logistic objective uses labels in
``{-1, +1}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

__all__ = [
    "Dataset",
    "GradientAccount",
    "LEAST_SQUARES",
    "LOGISTIC",
    "loss",
    "grad_batch",
    "full_gradient",
    "residual_norm",
    "bregman",
    "read_dataset",
    "write_dataset",
]

LEAST_SQUARES = "least-squares"
LOGISTIC = "logistic"


@dataclass(frozen=True, eq=False)
class Dataset:
    a_matrix: np.ndarray
    y: np.ndarray
    kind: str = LEAST_SQUARES

    def __post_init__(self):
        a = np.array(self.a_matrix, dtype=np.float64, order="C", ndmin=2)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"design matrix must be n x p with n, p >= 1, got {a.shape}")
        if len(y) != a.shape[0]:
            raise ValueError(f"{a.shape[0]} rows but {len(y)} targets")
        if self.kind not in (LEAST_SQUARES, LOGISTIC):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.kind == LOGISTIC and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("logistic targets must be -1 or +1")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def p(self) -> int:
        return self.a_matrix.shape[1]


class GradientAccount:
    """Counter of per-sample gradient evaluations."""

    def __init__(self):
        self.sample_gradients_evaluated = 0

    def charge(self, count: int) -> None:
        if count < 0:
            raise ValueError("cannot charge a negative count")
        self.sample_gradients_evaluated += int(count)

    def __repr__(self):
        return f"GradientAccount({self.sample_gradients_evaluated})"


def _check_x(dataset, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if len(x) != dataset.p:
        raise ValueError(f"x has length {len(x)}, expected {dataset.p}")
    return x


def loss(dataset: Dataset, x) -> float:
    x = _check_x(dataset, x)
    z = dataset.a_matrix @ x
    if dataset.kind == LEAST_SQUARES:
        r = z - dataset.y
        return float(r @ r) / (2 * dataset.n)
    return float(np.mean(np.logaddexp(0.0, -dataset.y * z)))


def grad_batch(dataset: Dataset, batch, x, account: GradientAccount | None = None):
    """Mean per-sample gradient over ``batch`` (indices may repeat)."""
    x = _check_x(dataset, x)
    idx = np.asarray(batch, dtype=np.int64).reshape(-1)
    if len(idx) == 0:
        raise ValueError("empty batch")
    if idx.min() < 0 or idx.max() >= dataset.n:
        raise ValueError("batch index out of range")
    a = dataset.a_matrix[idx]
    z = a @ x
    if dataset.kind == LEAST_SQUARES:
        w = z - dataset.y[idx]
    else:
        yb = dataset.y[idx]
        w = -yb * expit(-yb * z)
    if account is not None:
        account.charge(len(idx))
    return (w @ a) / len(idx)


def full_gradient(dataset: Dataset, x, account: GradientAccount | None = None):
    return grad_batch(dataset, np.arange(dataset.n), x, account)


def residual_norm(dataset: Dataset, x) -> float:
    """``||A x - y||``, unsquared and unnormalized."""
    if dataset.kind != LEAST_SQUARES:
        raise ValueError("residual norm is only defined for least squares")
    x = _check_x(dataset, x)
    return float(np.linalg.norm(dataset.a_matrix @ x - dataset.y))


def bregman(dataset: Dataset, x, y_pt) -> float:
    x = _check_x(dataset, x)
    y_pt = _check_x(dataset, y_pt)
    if dataset.kind == LEAST_SQUARES:
        # exact quadratic form avoids cancellation between the loss values
        d = dataset.a_matrix @ (x - y_pt)
        return float(d @ d) / (2 * dataset.n)
    g = full_gradient(dataset, y_pt)
    return loss(dataset, x) - loss(dataset, y_pt) - float(g @ (x - y_pt))


def write_dataset(dataset: Dataset, path) -> None:
    """CSV with header ``n,p,kind`` then one row of features plus target per sample."""
    path = Path(path)
    body = np.column_stack([dataset.a_matrix, dataset.y])
    with path.open("w") as fh:
        fh.write(f"{dataset.n},{dataset.p},{dataset.kind}\n")
        for row in body:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_dataset(path) -> Dataset:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        if len(header) != 3:
            raise ValueError(f"{path}: header must be 'n,p,kind'")
        n, p, kind = int(header[0]), int(header[1]), header[2].strip()
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if body.shape != (n, p + 1):
        raise ValueError(f"{path}: expected {n} rows of {p + 1} values, got {body.shape}")
    return Dataset(body[:, :p], body[:, p], kind)
