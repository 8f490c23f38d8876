"""Pruned naive Bayes structures and their count statistics.

A structure is a subset of feature indices: selected features are children
of the class root, unselected features are parentless nodes.  Every
parameter vector carries a uniform Dirichlet prior, so the Bayesian
predictive probability of a cell is its Laplace-smoothed count ratio and
the parameter-posterior mode is the plain empirical frequency.  All of the
selection criteria in :mod:`nbselect.criteria` are functions of the count
tables kept here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .dataset import Dataset, Schema
from .errors import UsageError


@dataclass(frozen=True)
class Structure:
    """A feature subset, canonically a bit pattern (bit j = feature j in)."""

    n_features: int
    mask: int = 0

    def __post_init__(self) -> None:
        if self.n_features < 0:
            raise ValueError("negative feature count")
        if not 0 <= self.mask < (1 << self.n_features):
            raise ValueError(f"mask {self.mask} out of range for {self.n_features} features")

    @cached_property
    def selected(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.n_features) if self.mask >> j & 1)

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def feature_names(self, schema: Schema) -> list[str]:
        return [schema.feature_names[j] for j in self.selected]

    @classmethod
    def empty(cls, n_features: int) -> "Structure":
        return cls(n_features, 0)

    @classmethod
    def full(cls, n_features: int) -> "Structure":
        return cls(n_features, (1 << n_features) - 1)

    @classmethod
    def from_indices(cls, n_features: int, indices: Sequence[int]) -> "Structure":
        mask = 0
        for j in indices:
            if not 0 <= j < n_features:
                raise ValueError(f"feature index {j} out of range")
            mask |= 1 << j
        return cls(n_features, mask)


def parse_structure(text: str, feature_names: Sequence[str]) -> Structure:
    """Parse a structure from a canonical integer or comma-separated names."""
    n = len(feature_names)
    text = text.strip()
    if text == "":
        return Structure.empty(n)
    try:
        mask = int(text)
    except ValueError:
        mask = None
    if mask is not None:
        try:
            return Structure(n, mask)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    names = [p.strip() for p in text.split(",") if p.strip()]
    lookup = {name: j for j, name in enumerate(feature_names)}
    try:
        return Structure.from_indices(n, [lookup[name] for name in names])
    except KeyError as exc:
        raise UsageError(
            f"unknown feature {exc.args[0]!r}; structure must be a canonical "
            f"integer or comma-separated names from: {', '.join(feature_names)}"
        ) from None


class SuffStats:
    """Count tables for one structure: class counts, class-conditional counts
    for selected features, and plain marginal counts for every feature."""

    __slots__ = ("schema", "structure", "class_counts", "cond_counts", "marg_counts", "total")

    def __init__(self, schema: Schema, structure: Structure):
        if schema.n_features != structure.n_features:
            raise ValueError(
                f"structure has {structure.n_features} features but the schema has "
                f"{schema.n_features}"
            )
        self.schema = schema
        self.structure = structure
        k = schema.class_cardinality
        cards = schema.feature_cardinalities
        self.class_counts = np.zeros(k, dtype=np.int64)
        self.cond_counts = {j: np.zeros((k, cards[j]), dtype=np.int64) for j in structure.selected}
        self.marg_counts = [np.zeros(cards[j], dtype=np.int64) for j in range(schema.n_features)]
        self.total = 0


def collect_stats(train: Dataset, structure: Structure) -> SuffStats:
    """Batch-count a dataset into fresh sufficient statistics."""
    stats = SuffStats(train.schema, structure)
    v = train.class_column
    k = train.schema.class_cardinality
    cards = train.schema.feature_cardinalities
    fm = train.feature_matrix
    stats.class_counts += np.bincount(v, minlength=k)
    for j in range(train.schema.n_features):
        col = fm[:, j]
        stats.marg_counts[j] += np.bincount(col, minlength=cards[j])
        if j in stats.cond_counts:
            stats.cond_counts[j] += np.bincount(
                v * cards[j] + col, minlength=k * cards[j]
            ).reshape(k, cards[j])
    stats.total = train.n_rows
    return stats


def _check_row(stats: SuffStats, row: Sequence[int] | np.ndarray) -> np.ndarray:
    row = np.asarray(row, dtype=np.int64)
    if row.shape != (stats.schema.n_variables,):
        raise ValueError("row length does not match the schema")
    cards = stats.schema.cardinalities
    for i, val in enumerate(row):
        if not 0 <= val < cards[i]:
            raise ValueError(f"value {val} out of range for column {i}")
    return row


def _apply_row_counts(stats: SuffStats, v: int, feats: Sequence[int], sign: int) -> None:
    """Unchecked count update shared by the public op and the hot resampling
    loops (which remove/re-add rows already known to be counted)."""
    stats.class_counts[v] += sign
    for j, val in enumerate(feats):
        stats.marg_counts[j][val] += sign
        if j in stats.cond_counts:
            stats.cond_counts[j][v, val] += sign
    stats.total += sign


def update_stats(stats: SuffStats, row: Sequence[int] | np.ndarray, direction: str = "add") -> SuffStats:
    """Add or remove one full row, in place; returns the same stats object."""
    if direction not in ("add", "remove"):
        raise ValueError(f"direction must be 'add' or 'remove', got {direction!r}")
    row = _check_row(stats, row)
    sign = 1 if direction == "add" else -1
    v = int(row[stats.schema.class_index])
    feats = [int(row[c]) for c in stats.schema.feature_columns]
    if sign < 0:
        low = stats.total < 1 or stats.class_counts[v] < 1
        low = low or any(stats.marg_counts[j][feats[j]] < 1 for j in range(len(feats)))
        low = low or any(stats.cond_counts[j][v, feats[j]] < 1 for j in stats.cond_counts)
        if low:
            raise ValueError("removal would drive a count negative")
    _apply_row_counts(stats, v, feats, sign)
    return stats


@dataclass(frozen=True, eq=False)
class ClassDistribution:
    """A normalized distribution over class values."""

    probs: np.ndarray
    degenerate: bool = False

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("probs must be a non-empty vector")
        if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", probs)


def _check_features(stats: SuffStats, u: Sequence[int] | np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    if u.shape != (stats.schema.n_features,):
        raise ValueError("feature vector length does not match the schema")
    cards = stats.schema.feature_cardinalities
    for j in stats.structure.selected:
        if not 0 <= u[j] < cards[j]:
            raise ValueError(f"value {u[j]} out of range for feature {j}")
    return u


def _smoothed_class_log_scores(
    stats: SuffStats, u: Sequence[int], selected: Sequence[int]
) -> np.ndarray:
    """Unnormalized class log scores: smoothed class term times smoothed
    selected-feature conditionals (no validation; u indexed by feature)."""
    k = stats.schema.class_cardinality
    cards = stats.schema.feature_cardinalities
    t = np.log(stats.class_counts + 1.0) - np.log(stats.total + k)
    for j in selected:
        t += np.log(stats.cond_counts[j][:, u[j]] + 1.0)
        t -= np.log(stats.class_counts + float(cards[j]))
    return t


def class_predictive(stats: SuffStats, u: Sequence[int] | np.ndarray, structure: Structure) -> ClassDistribution:
    """Bayesian predictive P(class | selected features), Laplace smoothed.

    P(c | u) is proportional to (N_c + 1) / (N + K) times, for each selected
    feature j, (N_{c,j,u_j} + 1) / (N_c + r_j).  Unselected features never
    enter.  Smoothing keeps every class probability strictly positive.
    """
    u = _check_features(stats, u)
    t = _smoothed_class_log_scores(stats, u, structure.selected)
    p = np.exp(t - logsumexp(t))
    return ClassDistribution(p / p.sum())


def row_log_marginal_predictive(stats: SuffStats, row: Sequence[int] | np.ndarray, structure: Structure) -> float:
    """Log predictive probability of one full row given the counts so far.

    Factorizes as class term x selected-feature conditionals x unselected
    marginals, each Laplace smoothed, so exponentials over all possible rows
    sum to one for any stats.
    """
    row = _check_row(stats, row)
    k = stats.schema.class_cardinality
    cards = stats.schema.feature_cardinalities
    v = int(row[stats.schema.class_index])
    feats = [int(row[c]) for c in stats.schema.feature_columns]
    n_c = int(stats.class_counts[v])
    out = np.log((n_c + 1.0) / (stats.total + k))
    for j, val in enumerate(feats):
        if j in stats.cond_counts:
            out += np.log((stats.cond_counts[j][v, val] + 1.0) / (n_c + cards[j]))
        else:
            out += np.log((stats.marg_counts[j][val] + 1.0) / (stats.total + cards[j]))
    return float(out)


@dataclass(frozen=True, eq=False)
class PluginParameters:
    """Posterior-mode (empirical frequency) tables; zero-count rows fall back
    to uniform, the prior mode."""

    class_probs: np.ndarray
    cond_probs: dict[int, np.ndarray]
    marg_probs: dict[int, np.ndarray]


def _normalize_rows(counts: np.ndarray) -> np.ndarray:
    counts = counts.astype(np.float64)
    if counts.ndim == 1:
        counts = counts[None, :]
        squeeze = True
    else:
        squeeze = False
    sums = counts.sum(axis=1, keepdims=True)
    out = np.where(sums > 0, counts / np.where(sums > 0, sums, 1.0), 1.0 / counts.shape[1])
    return out[0] if squeeze else out


def plugin_params(stats: SuffStats, structure: Structure) -> PluginParameters:
    """Empirical-frequency tables for the structure's plug-in predictives."""
    cond = {j: _normalize_rows(stats.cond_counts[j]) for j in structure.selected}
    marg = {
        j: _normalize_rows(stats.marg_counts[j])
        for j in range(stats.schema.n_features)
        if j not in stats.cond_counts
    }
    return PluginParameters(_normalize_rows(stats.class_counts), cond, marg)


def plugin_class_predictive(params: PluginParameters, u: Sequence[int] | np.ndarray, structure: Structure) -> ClassDistribution:
    """Plug-in P(class | selected features); uniform with a degeneracy flag
    when every class gets zero score."""
    u = np.asarray(u, dtype=np.int64)
    k = params.class_probs.size
    with np.errstate(divide="ignore"):
        t = np.log(params.class_probs)
        for j in structure.selected:
            col = params.cond_probs[j][:, u[j]]
            t = t + np.log(col)
    if np.all(np.isinf(t)):
        return ClassDistribution(np.full(k, 1.0 / k), degenerate=True)
    p = np.exp(t - logsumexp(t))
    return ClassDistribution(p / p.sum())


def batch_class_log_scores(stats: SuffStats, features: np.ndarray, structure: Structure) -> np.ndarray:
    """Unnormalized Bayesian class log-scores for many feature rows at once.

    Row i of the result holds, per class c, log of the smoothed class term
    times the smoothed selected-feature conditionals; normalizing each row
    over classes reproduces :func:`class_predictive`.
    """
    k = stats.schema.class_cardinality
    cards = stats.schema.feature_cardinalities
    cls = np.log(stats.class_counts + 1.0) - np.log(stats.total + k)
    t = np.broadcast_to(cls, (features.shape[0], k)).copy()
    for j in structure.selected:
        table = np.log(stats.cond_counts[j] + 1.0) - np.log(
            stats.class_counts.astype(np.float64) + cards[j]
        )[:, None]
        t += table[:, features[:, j]].T
    return t
