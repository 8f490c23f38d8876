"""Model-selection scoring criteria for feature-subset structures.

Every criterion maps (training data, structure) to a log-domain score in
nats where larger is better; cross-validation style criteria therefore
return the *negated* mean per-row loss so that maximizing the score
minimizes the loss.  Scores of -inf sort below every finite score.

The criteria split into three families:

* evidence scores that integrate parameters out under uniform Dirichlet
  priors (``score_uevi``, ``score_sevi_exact``),
* sequential one-step-ahead prediction scores along a data ordering
  (``score_preq``, ``feature_prequential``), and
* plug-in / resampling scores built on empirical-frequency parameters or
  held-out predictions (``score_sevi_approx``, ``score_trloss``,
  ``score_loocv``, ``score_kfold``, ``score_bic``).

Two structural identities tie the families together and are enforced by the
test suite: the joint evidence equals the product of sequential joint
predictives for any ordering, and it factors into the class-sequential score
times the feature-sequential score for the same ordering.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .dataset import Dataset, Ordering, stratified_order
from .errors import UsageError
from .model import (
    ClassDistribution,
    Structure,
    _apply_row_counts,
    _smoothed_class_log_scores,
    collect_stats,
    plugin_params,
)
from .seeding import child_seed

ZERO_ONE = "zero_one"
LOG = "log"
LOSSES = (ZERO_ONE, LOG)

DEFAULT_LOSS = LOG
DEFAULT_FOLDS = 10
DEFAULT_CONFIG_BUDGET = 1 << 20

KINDS = ("uevi", "sevi_approx", "sevi_exact", "preq", "loocv", "kcv", "trloss", "bic")

# kinds whose score depends on a loss function
LOSS_PARAMETERIZED = ("loocv", "kcv", "trloss")

# CLI-facing criterion names -> (kind, folds, orderings)
CRITERION_NAMES = {
    "uevi": ("uevi", None, 1),
    "sevi-approx": ("sevi_approx", None, 1),
    "sevi-exact": ("sevi_exact", None, 1),
    "preq": ("preq", None, 1),
    "preq10": ("preq", None, 10),
    "loocv": ("loocv", None, 1),
    "fcv": ("kcv", 10, 1),
    "fcv10": ("kcv", 10, 10),
    "trloss": ("trloss", None, 1),
    "bic": ("bic", None, 1),
}


def loss_of_distribution(dist: ClassDistribution, true_class: int, loss: str) -> float:
    """Per-row loss of a class distribution at the true class.

    0/1 loss predicts the argmax class with ties to the lowest index; log
    loss is -ln p(true class), +inf when a plug-in probability is zero.
    """
    if loss == ZERO_ONE:
        return 0.0 if int(np.argmax(dist.probs)) == int(true_class) else 1.0
    if loss == LOG:
        p = float(dist.probs[int(true_class)])
        return float("inf") if p <= 0.0 else -math.log(p)
    raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")


@dataclass(frozen=True)
class CriterionSpec:
    """A criterion identifier plus its configuration.

    ``loss`` may stay ``None`` for loss-parameterized kinds, meaning "decide
    at use time" (the experiment protocol matches it to the loss being
    evaluated; direct evaluation falls back to log loss).
    """

    kind: str
    loss: str | None = None
    folds: int = DEFAULT_FOLDS
    orderings: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise UsageError(f"unknown criterion kind {self.kind!r}; expected one of {KINDS}")
        if self.loss is not None and self.loss not in LOSSES:
            raise UsageError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.folds < 2:
            raise UsageError("folds must be >= 2")
        if self.orderings < 1:
            raise UsageError("orderings must be >= 1")


def parse_criterion(
    name: str,
    *,
    loss: str | None = None,
    folds: int | None = None,
    orderings: int | None = None,
    seed: int = 0,
) -> CriterionSpec:
    """Resolve a CLI criterion name into a spec; explicit options override
    the name's defaults."""
    key = name.strip().lower()
    if key not in CRITERION_NAMES:
        raise UsageError(
            f"unknown criterion {name!r}; valid criteria: {', '.join(sorted(CRITERION_NAMES))}"
        )
    kind, default_folds, default_orderings = CRITERION_NAMES[key]
    return CriterionSpec(
        kind=kind,
        loss=loss,
        folds=folds if folds is not None else (default_folds or DEFAULT_FOLDS),
        orderings=orderings if orderings is not None else default_orderings,
        seed=seed,
    )


def criterion_label(spec: CriterionSpec) -> str:
    """Canonical report/CLI label for a spec."""
    if spec.kind == "preq":
        return "preq" if spec.orderings == 1 else f"preq{spec.orderings}"
    if spec.kind == "kcv":
        return "fcv" if spec.orderings == 1 else f"fcv{spec.orderings}"
    return spec.kind.replace("_", "-")


def spec_to_dict(spec: CriterionSpec) -> dict:
    return {
        "label": criterion_label(spec),
        "kind": spec.kind,
        "loss": spec.loss,
        "folds": spec.folds,
        "orderings": spec.orderings,
        "seed": spec.seed,
    }


# ---------------------------------------------------------------------------
# evidence scores


def _family_log_marginal(counts: np.ndarray) -> float:
    """Log evidence of one q x r count table under unit Dirichlet priors:
    sum over parent rows of lnG(r) - lnG(N_row + r) + sum_v lnG(n_v + 1)."""
    counts = np.asarray(counts, dtype=np.float64)
    q, r = counts.shape
    return float(
        q * gammaln(r) - gammaln(counts.sum(axis=1) + r).sum() + gammaln(counts + 1.0).sum()
    )


def score_uevi(train: Dataset, structure: Structure) -> float:
    """Log marginal likelihood (evidence) of the full data matrix.

    Closed form: one table per node, with the class as the only parent of
    selected features and unselected features parentless (their marginal
    tables still enter, so the score stays a joint evidence over all
    columns).
    """
    stats = collect_stats(train, structure)
    total = _family_log_marginal(stats.class_counts[None, :])
    for j in range(train.schema.n_features):
        if j in stats.cond_counts:
            total += _family_log_marginal(stats.cond_counts[j])
        else:
            total += _family_log_marginal(stats.marg_counts[j][None, :])
    return total


def _logsumexp_fsum(values: Sequence[float]) -> float:
    """Order-insensitive logsumexp (exact inner summation)."""
    top = max(values)
    if math.isinf(top) and top < 0:
        return float("-inf")
    return top + math.log(math.fsum(math.exp(x - top) for x in values))


def score_sevi_exact(
    train: Dataset, structure: Structure, budget: int = DEFAULT_CONFIG_BUDGET
) -> float:
    """Exact log evidence of the class column given all feature columns.

    Computed as log joint evidence minus log of the sum of joint evidences
    over every possible class-column configuration; the number of
    configurations is K^N, so this is an oracle for small instances only.
    The parentless-feature factor is an additive constant across
    configurations and cancels from the ratio, so it is omitted.
    """
    n = train.n_rows
    k = train.schema.class_cardinality
    if k**n > budget:
        raise ValueError(f"class-configuration budget exceeded: {k}^{n} > {budget}")
    if n == 0:
        return 0.0
    fm = train.feature_matrix
    cards = train.schema.feature_cardinalities

    def class_part(vcol: np.ndarray) -> float:
        cc = np.bincount(vcol, minlength=k)
        total = _family_log_marginal(cc[None, :])
        for j in structure.selected:
            r = cards[j]
            table = np.bincount(vcol * r + fm[:, j], minlength=k * r).reshape(k, r)
            total += _family_log_marginal(table)
        return total

    actual = class_part(train.class_column)
    configs = (
        class_part(np.asarray(cfg, dtype=np.int64))
        for cfg in itertools.product(range(k), repeat=n)
    )
    return actual - _logsumexp_fsum(list(configs))


# ---------------------------------------------------------------------------
# sequential (prequential) scores


def _sequential_class_log_scores(
    train: Dataset, structure: Structure, ordering: Ordering | None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step unnormalized class log scores along an ordering.

    Entry [i, c] is the log of the smoothed class term times the smoothed
    selected-feature conditionals of row i, computed from the counts of
    rows 0..i-1 in the ordering.  Running cumulative count tables make the
    whole sequential scan a handful of array operations.
    """
    rows = train.rows if ordering is None else train.rows[ordering.perm]
    n = rows.shape[0]
    k = train.schema.class_cardinality
    cards = train.schema.feature_cardinalities
    v = rows[:, train.schema.class_index]
    idx = np.arange(n)

    onehot_v = np.zeros((n, k))
    onehot_v[idx, v] = 1.0
    before_c = np.cumsum(onehot_v, axis=0) - onehot_v  # class counts before row i
    t = np.log(before_c + 1.0) - np.log(idx + k)[:, None]
    for j in structure.selected:
        r = cards[j]
        u = rows[:, train.schema.feature_columns[j]]
        onehot = np.zeros((n, k, r))
        onehot[idx, v, u] = 1.0
        before = np.cumsum(onehot, axis=0) - onehot
        t += np.log(before[idx, :, u] + 1.0) - np.log(before_c + float(r))
    return t, v


def score_preq(train: Dataset, structure: Structure, ordering: Ordering | None = None) -> float:
    """Sequential class score: sum of log one-step-ahead class predictives.

    Each step conditions on all rows before it in the ordering (the data's
    own order when ``ordering`` is None).  Smoothing keeps it finite.  The
    value genuinely depends on the ordering.
    """
    if train.n_rows == 0:
        return 0.0
    t, v = _sequential_class_log_scores(train, structure, ordering)
    lse = logsumexp(t, axis=1)
    return float(math.fsum(t[np.arange(train.n_rows), v] - lse))


def feature_prequential(
    train: Dataset, structure: Structure, ordering: Ordering | None = None
) -> float:
    """Sequential feature score: sum of log one-step-ahead feature predictives.

    The step-i term marginalizes the class out of the selected-feature
    block and multiplies in the unselected features' smoothed marginal
    predictives.  Added to :func:`score_preq` for the same ordering it
    reconstructs :func:`score_uevi` exactly.
    """
    n = train.n_rows
    if n == 0:
        return 0.0
    if structure.selected:
        t, _ = _sequential_class_log_scores(train, structure, ordering)
        total = math.fsum(logsumexp(t, axis=1))
    else:
        # no selected block: the class marginalizes out exactly, term by term
        total = 0.0
    rows = train.rows if ordering is None else train.rows[ordering.perm]
    idx = np.arange(n)
    cards = train.schema.feature_cardinalities
    for j in range(train.schema.n_features):
        if j in structure.selected:
            continue
        r = cards[j]
        u = rows[:, train.schema.feature_columns[j]]
        onehot = np.zeros((n, r))
        onehot[idx, u] = 1.0
        before = np.cumsum(onehot, axis=0) - onehot
        total += math.fsum(np.log(before[idx, u] + 1.0) - np.log(idx + float(r)))
    return float(total)


def score_preq_avg(train: Dataset, structure: Structure, orderings: int, seed: int) -> float:
    """Mean of :func:`score_preq` over seed-derived stratified orderings."""
    if orderings < 1:
        raise ValueError("orderings must be >= 1")
    vals = [
        score_preq(train, structure, stratified_order(train, child_seed(seed, t)))
        for t in range(orderings)
    ]
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# cross-validation scores


def _held_out_loss_term(stats, feats: list[int], v: int, selected, loss: str) -> float:
    """Loss of the smoothed class predictive at the true class; same math as
    loss_of_distribution(class_predictive(...)) without the container cost."""
    t = _smoothed_class_log_scores(stats, feats, selected)
    if loss == ZERO_ONE:
        return 0.0 if int(np.argmax(t)) == v else 1.0
    top = t.max()
    return float(top + np.log(np.exp(t - top).sum()) - t[v])


def score_loocv(train: Dataset, structure: Structure, loss: str) -> float:
    """Negated mean leave-one-out loss, via remove/add on one set of counts."""
    n = train.n_rows
    if n < 2:
        raise ValueError("leave-one-out needs at least 2 rows")
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    stats = collect_stats(train, structure)
    feats = train.feature_matrix.tolist()
    v = train.class_column.tolist()
    selected = structure.selected
    terms = []
    for i in range(n):
        _apply_row_counts(stats, v[i], feats[i], -1)
        terms.append(_held_out_loss_term(stats, feats[i], v[i], selected, loss))
        _apply_row_counts(stats, v[i], feats[i], 1)
    return -math.fsum(terms) / n


def score_kfold(
    train: Dataset,
    structure: Structure,
    k: int,
    loss: str,
    orderings: int = 1,
    seed: int = 0,
) -> float:
    """Negated mean held-out loss over k contiguous folds of a stratified
    ordering, averaged over ``orderings`` seed-derived orderings.

    Fold f is held out while the counts of the other folds predict its
    rows; with k = N this reduces to :func:`score_loocv` exactly.
    """
    n = train.n_rows
    if not 2 <= k <= n:
        raise ValueError(f"fold count {k} out of range for {n} rows")
    if orderings < 1:
        raise ValueError("orderings must be >= 1")
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    stats = collect_stats(train, structure)
    feats = train.feature_matrix.tolist()
    v = train.class_column.tolist()
    selected = structure.selected
    base, rem = divmod(n, k)
    means = []
    for t in range(orderings):
        perm = stratified_order(train, child_seed(seed, t)).perm.tolist()
        terms = []
        start = 0
        for f in range(k):
            size = base + (1 if f < rem else 0)
            chunk = perm[start : start + size]
            start += size
            for rid in chunk:
                _apply_row_counts(stats, v[rid], feats[rid], -1)
            for rid in chunk:
                terms.append(_held_out_loss_term(stats, feats[rid], v[rid], selected, loss))
            for rid in chunk:
                _apply_row_counts(stats, v[rid], feats[rid], 1)
        means.append(math.fsum(terms) / n)
    return -float(np.mean(means))


# ---------------------------------------------------------------------------
# plug-in scores


def _plugin_log_scores(train: Dataset, structure: Structure) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized plug-in class log scores per training row (may be -inf)."""
    params = plugin_params(collect_stats(train, structure), structure)
    fm = train.feature_matrix
    k = params.class_probs.size
    with np.errstate(divide="ignore"):
        t = np.broadcast_to(np.log(params.class_probs), (train.n_rows, k)).copy()
        for j in structure.selected:
            t += np.log(params.cond_probs[j])[:, fm[:, j]].T
    return t, train.class_column


def score_sevi_approx(train: Dataset, structure: Structure) -> float:
    """Plug-in class log-likelihood of the training rows.

    Sum over rows of the log plug-in class predictive at the true class;
    -inf as soon as any row's true class has plug-in probability zero.
    Rows whose every class scores zero fall back to the uniform
    distribution (probability 1/K), mirroring the degenerate plug-in
    predictive.
    """
    if train.n_rows == 0:
        return 0.0
    t, v = _plugin_log_scores(train, structure)
    with np.errstate(invalid="ignore"):
        lse = logsumexp(t, axis=1)
        terms = t[np.arange(train.n_rows), v] - lse
    k = train.schema.class_cardinality
    all_zero = np.isneginf(lse)
    terms = np.where(all_zero, -math.log(k), terms)
    return float(math.fsum(terms))


def score_trloss(train: Dataset, structure: Structure, loss: str) -> float:
    """Negated mean plug-in loss on the training data itself.

    Under log loss this is the plug-in class log-likelihood divided by N
    (one shared code path, so N times this score reproduces
    :func:`score_sevi_approx` exactly, -inf included).  Empty data scores 0
    by convention.
    """
    n = train.n_rows
    if n == 0:
        return 0.0
    if loss == LOG:
        return score_sevi_approx(train, structure) / n
    if loss != ZERO_ONE:
        raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
    t, v = _plugin_log_scores(train, structure)
    pred = np.argmax(t, axis=1)  # all -inf rows give 0, the uniform-tie argmax
    return -float(np.mean(pred != v))


def score_bic(train: Dataset, structure: Structure) -> float:
    """Plug-in joint log-likelihood minus half the parameter count times ln N.

    The likelihood covers every node (class, selected conditionals,
    unselected marginals) at the empirical-frequency parameters; the
    dimension is (K-1) + sum over selected K(r_j - 1) + sum over unselected
    (r_j - 1).  Computed from the count tables, so it is exactly invariant
    under row permutation.
    """
    n = train.n_rows
    if n < 1:
        raise ValueError("need at least 1 row")
    stats = collect_stats(train, structure)
    params = plugin_params(stats, structure)
    k = train.schema.class_cardinality
    cards = train.schema.feature_cardinalities

    def cell_ll(counts: np.ndarray, probs: np.ndarray) -> float:
        counts = counts.astype(np.float64)
        mask = counts > 0
        return float(np.sum(counts[mask] * np.log(probs[mask])))

    ll = cell_ll(stats.class_counts, params.class_probs)
    dim = k - 1
    for j in range(train.schema.n_features):
        if j in stats.cond_counts:
            ll += cell_ll(stats.cond_counts[j], params.cond_probs[j])
            dim += k * (cards[j] - 1)
        else:
            ll += cell_ll(stats.marg_counts[j], params.marg_probs[j])
            dim += cards[j] - 1
    return ll - 0.5 * dim * math.log(n)


# ---------------------------------------------------------------------------
# dispatch


def evaluate_criterion(train: Dataset, structure: Structure, spec: CriterionSpec) -> float:
    """Score one structure under a criterion spec.

    Loss-parameterized criteria with ``loss=None`` fall back to log loss.
    The single-ordering sequential criterion follows the data's own row
    order (the experiment protocol hands it stratified-ordered training
    data); the averaged variant derives its orderings from the spec seed.
    """
    loss = spec.loss or DEFAULT_LOSS
    if spec.kind == "uevi":
        return score_uevi(train, structure)
    if spec.kind == "sevi_approx":
        return score_sevi_approx(train, structure)
    if spec.kind == "sevi_exact":
        return score_sevi_exact(train, structure)
    if spec.kind == "preq":
        if spec.orderings == 1:
            return score_preq(train, structure)
        return score_preq_avg(train, structure, spec.orderings, spec.seed)
    if spec.kind == "loocv":
        return score_loocv(train, structure, loss)
    if spec.kind == "kcv":
        return score_kfold(train, structure, spec.folds, loss, spec.orderings, spec.seed)
    if spec.kind == "trloss":
        return score_trloss(train, structure, loss)
    if spec.kind == "bic":
        return score_bic(train, structure)
    raise UsageError(f"unknown criterion kind {spec.kind!r}")
