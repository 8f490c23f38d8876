"""Dataset ingestion, discretization, and stratified orderings.

A :class:`Dataset` is an immutable matrix of category indices plus a
:class:`Schema` describing every column.  CSV ingestion encodes string
categories in first-appearance order, maps missing cells to a reserved
``<missing>`` category, and bins numeric columns with one-dimensional
k-means.  The category universe is frozen at load time, so splits of the
same dataset always share a schema and never meet unknown categories.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

MISSING_LABEL = "<missing>"
DEFAULT_MISSING_MARKERS = ("?", "")
DEFAULT_BINS = 5


@dataclass(frozen=True)
class Variable:
    """One column: a name, its origin kind, and its ordered category labels."""

    name: str
    kind: str  # "discrete" | "continuous" (continuous = binned numeric input)
    categories: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("discrete", "continuous"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if len(self.categories) < 1:
            raise ValueError(f"variable {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError(f"variable {self.name!r} has duplicate category labels")

    @property
    def cardinality(self) -> int:
        return len(self.categories)


@dataclass(frozen=True)
class Schema:
    variables: tuple[Variable, ...]
    class_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.class_index < len(self.variables):
            raise ValueError("class_index out of range")

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_features(self) -> int:
        return len(self.variables) - 1

    @property
    def class_variable(self) -> Variable:
        return self.variables[self.class_index]

    @property
    def class_cardinality(self) -> int:
        return self.class_variable.cardinality

    @cached_property
    def feature_columns(self) -> tuple[int, ...]:
        """Column index of each feature, in feature order (class skipped)."""
        return tuple(i for i in range(len(self.variables)) if i != self.class_index)

    @cached_property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(self.variables[c].name for c in self.feature_columns)

    @cached_property
    def feature_cardinalities(self) -> tuple[int, ...]:
        return tuple(self.variables[c].cardinality for c in self.feature_columns)

    @cached_property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable N x n matrix of category indices under a fixed schema."""

    schema: Schema
    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.int64))
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-D matrix")
        if rows.shape[1] != self.schema.n_variables:
            raise ValueError(
                f"rows have {rows.shape[1]} cells but the schema has "
                f"{self.schema.n_variables} variables"
            )
        if rows.size:
            cards = np.asarray(self.schema.cardinalities, dtype=np.int64)
            if rows.min() < 0 or (rows >= cards[None, :]).any():
                raise ValueError("cell value out of range for its column")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @cached_property
    def class_column(self) -> np.ndarray:
        return self.rows[:, self.schema.class_index]

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        """Rows restricted to feature columns, in feature order."""
        return np.ascontiguousarray(self.rows[:, list(self.schema.feature_columns)])

    def take(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        """Row subset (by position) sharing this dataset's schema."""
        return Dataset(self.schema, self.rows[np.asarray(indices, dtype=np.int64)])

    @classmethod
    def from_arrays(
        cls,
        rows: Sequence[Sequence[int]] | np.ndarray,
        cardinalities: Sequence[int],
        class_index: int = -1,
        names: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a dataset from raw integer codes, synthesizing a schema."""
        cards = [int(c) for c in cardinalities]
        if class_index < 0:
            class_index += len(cards)
        if names is None:
            names = [f"x{i}" if i != class_index else "class" for i in range(len(cards))]
        variables = tuple(
            Variable(name, "discrete", tuple(str(v) for v in range(card)))
            for name, card in zip(names, cards)
        )
        mat = np.asarray(rows, dtype=np.int64)
        if mat.size == 0:
            mat = mat.reshape(0, len(cards))
        return cls(Schema(variables, class_index), mat)


@dataclass(frozen=True, eq=False)
class Ordering:
    """A permutation of row indices 0..N-1."""

    perm: np.ndarray

    def __post_init__(self) -> None:
        perm = np.asarray(self.perm, dtype=np.int64)
        if perm.ndim != 1:
            raise ValueError("ordering must be one-dimensional")
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("ordering is not a permutation of 0..N-1")
        perm.flags.writeable = False
        object.__setattr__(self, "perm", perm)

    @property
    def n(self) -> int:
        return self.perm.size

    @classmethod
    def identity(cls, n: int) -> "Ordering":
        return cls(np.arange(n, dtype=np.int64))


def discretize_column(
    values: Sequence[float] | np.ndarray, k: int, seed: int = 0
) -> tuple[list[int], list[float]]:
    """Bin a numeric column with one-dimensional k-means (Lloyd iteration).

    Centroids start at k evenly spaced quantiles and iterate to a fixed
    point; they are returned sorted ascending, so bin indices preserve
    value order.  Ties (a value exactly between two centroids) go to the
    lower bin.  At most ``min(k, #distinct values)`` bins come back, and
    bins that end up empty are dropped.  The procedure is deterministic;
    ``seed`` is accepted for interface stability but has no effect because
    every tie is broken canonically.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("no values to discretize")
    if not np.isfinite(vals).all():
        raise ValueError("non-finite value in numeric column")
    if k < 1:
        raise ValueError("bin count must be >= 1")

    uniq = np.unique(vals)
    k_eff = min(int(k), uniq.size)
    if k_eff == 1:
        return [0] * vals.size, [float(vals.mean())]
    if k_eff == uniq.size:
        # one bin per distinct value: already the k-means fixed point
        labels = np.searchsorted(uniq, vals)
        return labels.astype(int).tolist(), [float(u) for u in uniq]

    centroids = np.quantile(vals, (np.arange(k_eff) + 0.5) / k_eff)
    if np.unique(centroids).size < k_eff:
        # heavy ties collapsed some quantiles; restart from distinct values
        idx = np.floor((np.arange(k_eff) + 0.5) / k_eff * uniq.size).astype(int)
        centroids = uniq[idx].astype(np.float64)

    svals = np.sort(vals)
    assign = np.zeros(svals.size, dtype=np.int64)
    for _ in range(200):
        cuts = (centroids[1:] + centroids[:-1]) / 2.0
        assign = np.searchsorted(cuts, svals, side="left")
        new = centroids.copy()
        for i in range(k_eff):
            members = svals[assign == i]
            if members.size:
                new[i] = members.mean()
        if np.array_equal(new, centroids):
            break
        centroids = new

    keep = np.array([np.any(assign == i) for i in range(k_eff)])
    centroids = centroids[keep]
    cuts = (centroids[1:] + centroids[:-1]) / 2.0
    labels = np.searchsorted(cuts, vals, side="left")
    return labels.astype(int).tolist(), [float(c) for c in centroids]


def _resolve_class_column(header: list[str], class_column: str | int) -> int:
    if isinstance(class_column, int):
        if not 0 <= class_column < len(header):
            raise ValueError(f"class column index {class_column} absent (have {len(header)} columns)")
        return class_column
    if class_column in header:
        return header.index(class_column)
    if class_column.lstrip("-").isdigit():
        idx = int(class_column)
        if 0 <= idx < len(header):
            return idx
    raise ValueError(f"class column {class_column!r} absent (header: {', '.join(header)})")


def _is_numeric_column(cells: list[str], missing: frozenset[str]) -> bool:
    """All non-missing cells parse as finite decimals, and at least one exists."""
    seen = False
    for cell in cells:
        if cell in missing:
            continue
        seen = True
        try:
            x = float(cell)
        except ValueError:
            return False
        if not math.isfinite(x):
            return False
    return seen


def load_csv_text(
    text: str,
    class_column: str | int,
    *,
    bins: int = DEFAULT_BINS,
    missing_markers: Sequence[str] = DEFAULT_MISSING_MARKERS,
    seed: int = 0,
) -> Dataset:
    """Parse CSV text (header line first) into an encoded :class:`Dataset`.

    Categories get indices in first-appearance order.  Cells matching a
    missing marker map to a ``<missing>`` category appended after the real
    ones.  Feature columns whose non-missing cells all parse as finite
    decimals are treated as numeric and binned via :func:`discretize_column`;
    the class column is always categorical.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty file: no header line") from None
    header = [h.strip() for h in header]
    raw = [row for row in reader if row]
    if not raw:
        raise ValueError("no data rows after the header")
    for i, row in enumerate(raw):
        if len(row) != len(header):
            raise ValueError(f"ragged row {i + 1}: {len(row)} cells, expected {len(header)}")

    class_idx = _resolve_class_column(header, class_column)
    missing = frozenset(missing_markers)
    n_rows, n_cols = len(raw), len(header)
    codes = np.zeros((n_rows, n_cols), dtype=np.int64)
    variables: list[Variable] = []

    for j in range(n_cols):
        cells = [row[j].strip() for row in raw]
        has_missing = any(c in missing for c in cells)
        if j != class_idx and _is_numeric_column(cells, missing):
            numeric = [float(c) for c in cells if c not in missing]
            labels, centroids = discretize_column(numeric, bins, seed)
            categories = [f"bin{i}~{c:.6g}" for i, c in enumerate(centroids)]
            it = iter(labels)
            col = [len(categories) if c in missing else next(it) for c in cells]
            kind = "continuous"
        else:
            categories = []
            index: dict[str, int] = {}
            col = []
            for c in cells:
                if c in missing:
                    col.append(-1)  # patched to the missing slot below
                    continue
                if c not in index:
                    index[c] = len(categories)
                    categories.append(c)
                col.append(index[c])
            kind = "discrete"
        if has_missing:
            miss_code = len(categories)
            categories = categories + [MISSING_LABEL]
            col = [miss_code if c == -1 else c for c in col]
        codes[:, j] = col
        variables.append(Variable(header[j], kind, tuple(categories)))

    schema = Schema(tuple(variables), class_idx)
    return Dataset(schema, codes)


def load_csv(
    path: str | Path,
    class_column: str | int,
    *,
    bins: int = DEFAULT_BINS,
    missing_markers: Sequence[str] = DEFAULT_MISSING_MARKERS,
    seed: int = 0,
) -> Dataset:
    """File wrapper over :func:`load_csv_text`."""
    text = Path(path).read_text(encoding="utf-8")
    return load_csv_text(
        text, class_column, bins=bins, missing_markers=missing_markers, seed=seed
    )


def _interleave_quota(counts: list[int]) -> list[int]:
    """Class sequence whose every prefix satisfies both lower and upper quota.

    House-monotone apportionment: at each step, among classes still below
    their upper quota ceil(m * N_c / N), award the slot to the largest
    N_c / (picked_c + 1); ties go to the lowest class index.  Every prefix
    of length m then holds between floor(m*N_c/N) and ceil(m*N_c/N) rows
    of class c, i.e. within one of the proportional share.
    """
    n_classes = len(counts)
    total = sum(counts)
    picked = [0] * n_classes
    out: list[int] = []
    for m in range(total):
        best = -1
        for c in range(n_classes):
            if picked[c] >= counts[c]:
                continue
            if (m + 1) * counts[c] <= picked[c] * total:
                continue  # already at upper quota for the new prefix length
            if best < 0 or counts[c] * (picked[best] + 1) > counts[best] * (picked[c] + 1):
                best = c
        out.append(best)
        picked[best] += 1
    return out


def stratified_order(data: Dataset, seed: int) -> Ordering:
    """Seeded row permutation keeping every prefix's class mix proportional.

    Rows are grouped by class value, each group is shuffled with the seeded
    generator, and the groups are interleaved by a quota schedule so that
    each prefix's per-class counts stay within one row of the prefix's
    proportional share.  Deterministic given (data, seed).
    """
    if data.n_rows < 1:
        raise ValueError("cannot order an empty dataset")
    rng = np.random.default_rng(int(seed) & ((1 << 64) - 1))
    v = data.class_column
    groups = []
    for c in range(data.schema.class_cardinality):
        idx = np.flatnonzero(v == c)
        rng.shuffle(idx)
        groups.append(idx)
    counts = [g.size for g in groups]
    cursor = [0] * len(groups)
    perm = np.empty(data.n_rows, dtype=np.int64)
    for pos, c in enumerate(_interleave_quota(counts)):
        perm[pos] = groups[c][cursor[c]]
        cursor[c] += 1
    return Ordering(perm)


def split_half(data: Dataset, ordering: Ordering) -> tuple[Dataset, Dataset]:
    """First ceil(N/2) rows of the ordering train, the rest test; shared schema."""
    if data.n_rows < 2:
        raise ValueError("need at least 2 rows to split")
    if ordering.n != data.n_rows:
        raise ValueError("ordering length does not match the dataset")
    cut = (data.n_rows + 1) // 2
    return data.take(ordering.perm[:cut]), data.take(ordering.perm[cut:])
