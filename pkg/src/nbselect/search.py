"""Exhaustive enumeration of feature subsets and score-maximizing selection.

All 2^n structures are scored (no heuristic search); selection breaks score
ties toward fewer selected features, then toward the smaller canonical
integer, so the result is deterministic regardless of how the work is
chunked across processes.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from dataclasses import dataclass

import numpy as np

from .criteria import CriterionSpec, evaluate_criterion
from .dataset import Dataset
from .model import Structure

DEFAULT_FEATURE_CAP = 14


def enumerate_structures(n_features: int, cap: int = DEFAULT_FEATURE_CAP) -> list[Structure]:
    """All structures in canonical (ascending mask) order."""
    if n_features < 0:
        raise ValueError("negative feature count")
    if n_features > cap:
        raise ValueError(
            f"{n_features} features would enumerate 2^{n_features} structures; "
            f"raise the cap (currently {cap}) to force this"
        )
    return [Structure(n_features, mask) for mask in range(1 << n_features)]


@dataclass(frozen=True)
class ScoreTable:
    """Every enumerated structure with its score, in canonical order."""

    criterion: CriterionSpec
    entries: tuple[tuple[Structure, float], ...]


@dataclass(frozen=True)
class SelectionResult:
    best: Structure
    table: ScoreTable
    degenerate: bool = False


def table_to_csv(table: ScoreTable, feature_names: tuple[str, ...] | list[str]) -> str:
    """CSV export: structure_mask, structure_names, score."""
    lines = ["structure_mask,structure_names,score"]
    for structure, score in table.entries:
        names = "+".join(feature_names[j] for j in structure.selected)
        lines.append(f"{structure.mask},{names},{score!r}")
    return "\n".join(lines) + "\n"


def pick_best(entries: list[tuple[Structure, float]] | tuple) -> tuple[Structure, bool]:
    """Max score with sparser-then-smaller-mask tie-breaking.

    When every score is -inf there is nothing to choose between, so the
    empty structure comes back with a degeneracy flag.
    """
    if not entries:
        raise ValueError("no structures to choose from")
    best_structure, best_score = entries[0]
    best_key = (best_score, -best_structure.size, -best_structure.mask)
    for structure, score in entries[1:]:
        key = (score, -structure.size, -structure.mask)
        if key > best_key:
            best_key = key
            best_structure = structure
    if math.isinf(best_key[0]) and best_key[0] < 0:
        return Structure.empty(best_structure.n_features), True
    return best_structure, False


_WORKER: dict = {}


def _init_worker(train: Dataset, spec: CriterionSpec) -> None:
    _WORKER["train"] = train
    _WORKER["spec"] = spec


def _score_masks(masks: list[int]) -> list[float]:
    train = _WORKER["train"]
    spec = _WORKER["spec"]
    n = train.schema.n_features
    return [evaluate_criterion(train, Structure(n, mask), spec) for mask in masks]


def select_best(
    train: Dataset,
    spec: CriterionSpec,
    *,
    workers: int | None = None,
    cap: int = DEFAULT_FEATURE_CAP,
) -> SelectionResult:
    """Score every structure under the criterion and return the best.

    The canonical enumeration is split into static chunks over the worker
    pool; scores are reassembled in canonical order before the reduction,
    so worker count never changes the result.
    """
    if train.n_rows == 0:
        raise ValueError("cannot select on an empty dataset")
    structures = enumerate_structures(train.schema.n_features, cap)
    masks = [s.mask for s in structures]
    if workers is None or workers <= 0:
        workers = os.cpu_count() or 1
    workers = min(workers, len(masks))
    # below a few hundred structures the fork/teardown overhead dominates
    if workers <= 1 or len(masks) < 256:
        scores = _score_all_serial(train, spec, masks)
    else:
        chunks = [list(c) for c in np.array_split(masks, workers * 4) if len(c)]
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers, initializer=_init_worker, initargs=(train, spec)) as pool:
            parts = pool.map(_score_masks, chunks)
        scores = [s for part in parts for s in part]
    entries = tuple(zip(structures, scores))
    best, degenerate = pick_best(list(entries))
    return SelectionResult(best, ScoreTable(spec, entries), degenerate)


def _score_all_serial(train: Dataset, spec: CriterionSpec, masks: list[int]) -> list[float]:
    n = train.schema.n_features
    return [evaluate_criterion(train, Structure(n, mask), spec) for mask in masks]
