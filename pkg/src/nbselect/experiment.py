"""Selection-experiment protocol and relative prediction gains.

One experiment: stratify-order the data, split it in half, let every
criterion pick its structure on the training half, and measure the picked
structure's 0/1 and log losses on the held-out half.  Repeat with fresh
orderings and average.  Losses are reported relative to the full-structure
baseline (no pruning), and an oracle row records the best test loss any
structure could have achieved, an upper bound obtained by peeking at the
test data.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from . import __version__
from .criteria import (
    LOG,
    LOSS_PARAMETERIZED,
    ZERO_ONE,
    CriterionSpec,
    criterion_label,
    spec_to_dict,
)
from .dataset import Dataset, split_half, stratified_order
from .model import Structure, batch_class_log_scores, collect_stats
from .search import select_best
from .seeding import child_seed

EVAL_LOSSES = (ZERO_ONE, LOG)
BASELINE_KEY = "baseline"
ORACLE_KEY = "oracle"

# sub-seed path tags
_P_SUBSAMPLE = 0
_P_ORDER = 1
_P_CRITERION = 2


def _test_losses_for_structure(
    train: Dataset, test: Dataset, structure: Structure
) -> tuple[float, float]:
    """(mean 0/1 loss, mean log loss) of the Bayesian predictive on the test rows."""
    stats = collect_stats(train, structure)
    t = batch_class_log_scores(stats, test.feature_matrix, structure)
    lse = logsumexp(t, axis=1)
    v = test.class_column
    rows = np.arange(test.n_rows)
    mean_log = float(np.mean(lse - t[rows, v]))
    mean_01 = float(np.mean(np.argmax(t, axis=1) != v))
    return mean_01, mean_log


def evaluate_loss(structure: Structure, train: Dataset, test: Dataset, loss: str) -> float:
    """Mean test loss of the structure trained (counted) on the train half.

    The predictive is the smoothed Bayesian one, so the log loss is always
    finite.
    """
    if train.schema != test.schema:
        raise ValueError("train and test must share a schema")
    if test.n_rows == 0:
        raise ValueError("empty test set")
    mean_01, mean_log = _test_losses_for_structure(train, test, structure)
    if loss == ZERO_ONE:
        return mean_01
    if loss == LOG:
        return mean_log
    raise ValueError(f"unknown loss {loss!r}")


def relative_prediction_gain(method_loss: float, baseline_loss: float) -> float | None:
    """Percent reduction in loss versus the baseline; None when undefined
    (non-positive baseline loss)."""
    if baseline_loss <= 0:
        return None
    return 100.0 * (baseline_loss - method_loss) / baseline_loss


def _loss_arrays(train: Dataset, test: Dataset) -> dict[str, np.ndarray]:
    """Per-structure test losses over the whole canonical enumeration."""
    n = train.schema.n_features
    out01 = np.empty(1 << n)
    outlog = np.empty(1 << n)
    for mask in range(1 << n):
        out01[mask], outlog[mask] = _test_losses_for_structure(
            train, test, Structure(n, mask)
        )
    return {ZERO_ONE: out01, LOG: outlog}


def _argbest(losses: np.ndarray, n_features: int) -> int:
    """Mask minimizing (loss, selected count, mask)."""
    return min(
        range(losses.size), key=lambda m: (losses[m], Structure(n_features, m).size, m)
    )


def _json_score(x: float) -> float | str:
    return x if math.isfinite(x) else repr(x)


def _cell(structure: Structure, schema, train_score: float | None, test_loss: float) -> dict:
    return {
        "structure_mask": structure.mask,
        "features": structure.feature_names(schema),
        "train_score": None if train_score is None else _json_score(train_score),
        "test_loss": test_loss,
    }


def run_experiment(
    data: Dataset,
    criteria: Sequence[CriterionSpec],
    *,
    repetitions: int = 50,
    sample_size: int | None = 500,
    seed: int = 0,
    workers: int | None = None,
    cap: int = 14,
    redraw_per_repetition: bool = False,
    extra_config: dict | None = None,
) -> dict:
    """Run the full protocol and return a JSON-ready report.

    The dataset is stratify-truncated to ``sample_size`` rows once up front
    (or per repetition when ``redraw_per_repetition``).  Each repetition
    derives its own child seeds, so reports are byte-identical across runs
    and any repetition can be replayed alone.  Criteria that take a loss
    and were given none are selected twice per repetition, once per
    reported loss.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if data.schema.class_cardinality < 2:
        raise ValueError("need at least 2 classes")
    if not criteria:
        raise ValueError("no criteria given")
    if data.schema.n_features > cap:
        raise ValueError(
            f"{data.schema.n_features} features exceed the cap ({cap}); raise it to force this"
        )

    labels = []
    for spec in criteria:
        label = criterion_label(spec)
        while label in labels:
            label += "'"
        labels.append(label)

    def subsample(sub_seed: int) -> Dataset:
        if sample_size is None or sample_size >= data.n_rows:
            return data
        order = stratified_order(data, sub_seed)
        return data.take(order.perm[: int(sample_size)])

    fixed_sub = None if redraw_per_repetition else subsample(child_seed(seed, _P_SUBSAMPLE))
    probe = fixed_sub if fixed_sub is not None else subsample(child_seed(seed, _P_SUBSAMPLE, 0))
    if probe.n_rows < 2:
        raise ValueError("sample too small to split")

    schema = data.schema
    rep_rows = []
    for r in range(repetitions):
        sub = fixed_sub if fixed_sub is not None else subsample(child_seed(seed, _P_SUBSAMPLE, r))
        ordering_seed = child_seed(seed, _P_ORDER, r)
        train, test = split_half(sub, stratified_order(sub, ordering_seed))
        arrays = _loss_arrays(train, test)

        cells: dict[str, dict] = {}
        for ci, spec in enumerate(criteria):
            per_loss = {}
            if spec.kind in LOSS_PARAMETERIZED and spec.loss is None:
                for li, loss in enumerate(EVAL_LOSSES):
                    sel = replace(spec, loss=loss, seed=child_seed(seed, _P_CRITERION, r, ci, li))
                    res = select_best(train, sel, workers=workers, cap=cap)
                    score = res.table.entries[res.best.mask][1]
                    per_loss[loss] = _cell(res.best, schema, score, float(arrays[loss][res.best.mask]))
            else:
                sel = replace(spec, seed=child_seed(seed, _P_CRITERION, r, ci, 0))
                res = select_best(train, sel, workers=workers, cap=cap)
                score = res.table.entries[res.best.mask][1]
                for loss in EVAL_LOSSES:
                    per_loss[loss] = _cell(res.best, schema, score, float(arrays[loss][res.best.mask]))
            cells[labels[ci]] = per_loss

        full = Structure.full(schema.n_features)
        cells[BASELINE_KEY] = {
            loss: _cell(full, schema, None, float(arrays[loss][full.mask])) for loss in EVAL_LOSSES
        }
        cells[ORACLE_KEY] = {}
        for loss in EVAL_LOSSES:
            best_mask = _argbest(arrays[loss], schema.n_features)
            cells[ORACLE_KEY][loss] = _cell(
                Structure(schema.n_features, best_mask), schema, None, float(arrays[loss][best_mask])
            )

        rep_rows.append({"repetition": r, "ordering_seed": ordering_seed, "criteria": cells})

    aggregates: dict[str, dict] = {}
    base_mean = {
        loss: float(np.mean([rep["criteria"][BASELINE_KEY][loss]["test_loss"] for rep in rep_rows]))
        for loss in EVAL_LOSSES
    }
    for label in labels + [BASELINE_KEY, ORACLE_KEY]:
        row: dict[str, float | None] = {}
        for loss, tag in ((ZERO_ONE, "01"), (LOG, "log")):
            mean = float(np.mean([rep["criteria"][label][loss]["test_loss"] for rep in rep_rows]))
            row[f"mean_loss_{tag}"] = mean
            if label == BASELINE_KEY:
                row[f"gain_{tag}"] = 0.0
            else:
                row[f"gain_{tag}"] = relative_prediction_gain(mean, base_mean[loss])
        aggregates[label] = row

    used = fixed_sub if fixed_sub is not None else probe
    config = {
        "seed": seed,
        "repetitions": repetitions,
        "sample_size": None if sample_size is None else int(sample_size),
        "redraw_per_repetition": redraw_per_repetition,
        "workers": workers,
        "feature_cap": cap,
        "eval_losses": list(EVAL_LOSSES),
        "criteria": [spec_to_dict(s) for s in criteria],
    }
    config.update(extra_config or {})
    return {
        "tool": {"name": "nbselect", "version": __version__},
        "units": {"train_score": "nats", "log_loss": "nats"},
        "config": config,
        "dataset": {
            "n_rows_total": data.n_rows,
            "n_rows_used": used.n_rows,
            "n_features": schema.n_features,
            "feature_names": list(schema.feature_names),
            "class_name": schema.class_variable.name,
            "class_cardinality": schema.class_cardinality,
        },
        "repetitions": rep_rows,
        "aggregates": aggregates,
    }


def compare_reports(reports: Sequence[dict]) -> dict:
    """Average relative gains per criterion across several reports.

    Gains that a report marks unavailable (null) are skipped; the per-
    criterion count of contributing reports is included alongside the mean.
    """
    if not reports:
        raise ValueError("no reports to compare")
    labels: list[str] = []
    for rep in reports:
        for label in rep.get("aggregates", {}):
            if label not in labels:
                labels.append(label)
    criteria = {}
    for label in labels:
        row: dict[str, float | int | None] = {}
        for tag in ("01", "log"):
            gains = [
                rep["aggregates"][label][f"gain_{tag}"]
                for rep in reports
                if label in rep.get("aggregates", {})
                and rep["aggregates"][label].get(f"gain_{tag}") is not None
            ]
            row[f"gain_{tag}"] = float(np.mean(gains)) if gains else None
            row[f"n_{tag}"] = len(gains)
        criteria[label] = row
    sources = [rep.get("config", {}).get("data") for rep in reports]
    return {
        "tool": {"name": "nbselect", "version": __version__},
        "n_reports": len(reports),
        "sources": sources,
        "criteria": criteria,
    }
