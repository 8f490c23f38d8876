"""Shared test fixtures: dataset builders and randomized instances."""

from __future__ import annotations

import numpy as np

from nbselect import Dataset
from nbselect.model import Structure


def make_dataset(rows, cards, class_index=-1) -> Dataset:
    return Dataset.from_arrays(rows, cards, class_index)


def random_instance(
    rng: np.random.Generator,
    max_rows: int = 20,
    max_features: int = 4,
    max_card: int = 3,
    min_rows: int = 1,
) -> tuple[Dataset, Structure]:
    """A random small dataset (class column last) and a random structure."""
    n_features = int(rng.integers(0, max_features + 1))
    cards = [int(rng.integers(2, max_card + 1)) for _ in range(n_features + 1)]
    n_rows = int(rng.integers(min_rows, max_rows + 1))
    rows = np.column_stack(
        [rng.integers(0, c, size=n_rows) for c in cards]
    ) if n_rows else np.zeros((0, len(cards)), dtype=int)
    mask = int(rng.integers(0, 1 << n_features))
    return Dataset.from_arrays(rows, cards, class_index=len(cards) - 1), Structure(n_features, mask)


def as_oracle_args(data: Dataset, structure: Structure):
    """(rows, cards, class_index, selected) view of a dataset for the oracles."""
    rows = [tuple(int(x) for x in row) for row in data.rows]
    cards = [v.cardinality for v in data.schema.variables]
    return rows, cards, data.schema.class_index, set(structure.selected)


def make_synthetic(seed: int, n_rows: int = 400) -> Dataset:
    """Pinned generator: binary class, three informative and three noise features.

    Informative features lean toward the class value with per-feature signal
    strengths; noise features are class-independent.  Feature order is
    informative 0..2 then noise 3..5 (noise feature 5 is ternary).
    """
    rng = np.random.default_rng(seed)
    v = rng.integers(0, 2, size=n_rows)
    cols = []
    for p_match in (0.80, 0.72, 0.65):
        flip = rng.random(n_rows) < p_match
        cols.append(np.where(flip, v, 1 - v))
    cols.append(rng.integers(0, 2, size=n_rows))
    cols.append((rng.random(n_rows) < 0.3).astype(int))
    cols.append(rng.integers(0, 3, size=n_rows))
    rows = np.column_stack(cols + [v])
    cards = [2, 2, 2, 2, 2, 3, 2]
    return Dataset.from_arrays(rows, cards, class_index=6)


NOISE_FEATURES = (3, 4, 5)
