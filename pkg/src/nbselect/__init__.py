"""Feature-subset selection for pruned naive Bayes classifiers.

The model family is the set of naive-Bayes-like networks over one discrete
class variable and n discrete features, where an arc from the class to a
feature exists only for features in a chosen subset.  Scoring a subset,
enumerating all 2^n subsets, and replaying the selection experiment are the
three layers of the package (``criteria``, ``search``, ``experiment``); a
FastAPI service and a thin CLI client sit on top.
"""

__version__ = "0.1.0"

from .dataset import Dataset, Ordering, Schema, Variable, discretize_column, load_csv, load_csv_text, split_half, stratified_order
from .errors import UsageError
from .model import (
    ClassDistribution,
    PluginParameters,
    Structure,
    SuffStats,
    class_predictive,
    collect_stats,
    plugin_class_predictive,
    plugin_params,
    row_log_marginal_predictive,
    update_stats,
)
from .criteria import (
    LOG,
    ZERO_ONE,
    CriterionSpec,
    criterion_label,
    evaluate_criterion,
    feature_prequential,
    parse_criterion,
    score_bic,
    score_kfold,
    score_loocv,
    score_preq,
    score_preq_avg,
    score_sevi_approx,
    score_sevi_exact,
    score_trloss,
    score_uevi,
)
from .search import ScoreTable, SelectionResult, enumerate_structures, select_best
from .experiment import compare_reports, evaluate_loss, relative_prediction_gain, run_experiment

__all__ = [
    "__version__",
    "Dataset",
    "Ordering",
    "Schema",
    "Variable",
    "discretize_column",
    "load_csv",
    "load_csv_text",
    "split_half",
    "stratified_order",
    "UsageError",
    "ClassDistribution",
    "PluginParameters",
    "Structure",
    "SuffStats",
    "class_predictive",
    "collect_stats",
    "plugin_class_predictive",
    "plugin_params",
    "row_log_marginal_predictive",
    "update_stats",
    "LOG",
    "ZERO_ONE",
    "CriterionSpec",
    "criterion_label",
    "evaluate_criterion",
    "feature_prequential",
    "parse_criterion",
    "score_bic",
    "score_kfold",
    "score_loocv",
    "score_preq",
    "score_preq_avg",
    "score_sevi_approx",
    "score_sevi_exact",
    "score_trloss",
    "score_uevi",
    "ScoreTable",
    "SelectionResult",
    "enumerate_structures",
    "select_best",
    "compare_reports",
    "evaluate_loss",
    "relative_prediction_gain",
    "run_experiment",
]
