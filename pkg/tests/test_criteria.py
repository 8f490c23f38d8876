import math

import numpy as np
import pytest

from nbselect.criteria import (
    LOG,
    ZERO_ONE,
    CriterionSpec,
    criterion_label,
    evaluate_criterion,
    feature_prequential,
    loss_of_distribution,
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
from nbselect.dataset import Ordering, stratified_order
from nbselect.errors import UsageError
from nbselect.model import ClassDistribution, Structure, collect_stats, plugin_class_predictive, plugin_params
from nbselect.seeding import child_seed

import oracles
from helpers import as_oracle_args, make_dataset, random_instance

M0 = Structure(0, 0)
M1 = Structure(1, 1)


def _class_only(values, card=2):
    return make_dataset([[v] for v in values], [card], class_index=0)


def _permuted(data, rng):
    perm = rng.permutation(data.n_rows)
    return data.take(perm)


class TestGoldenValues:
    def test_uevi_class_only(self):
        assert score_uevi(_class_only([0, 1, 0]), M0) == pytest.approx(math.log(1 / 12), abs=1e-12)

    def test_uevi_one_selected_feature(self):
        data = make_dataset([[0, 0], [1, 1]], [2, 2])
        assert score_uevi(data, M1) == pytest.approx(math.log(1 / 24), abs=1e-12)

    def test_uevi_empty_dataset(self):
        data = make_dataset(np.zeros((0, 1), dtype=int), [2], class_index=0)
        assert score_uevi(data, M0) == 0.0

    def test_preq_natural_order(self):
        data = make_dataset([[0, 0], [1, 1], [0, 0]], [2, 2])
        assert score_preq(data, M1) == pytest.approx(math.log(1 / 7), abs=1e-12)

    def test_preq_class_only_equals_uevi(self):
        data = _class_only([0, 1, 0])
        assert score_preq(data, M0) == pytest.approx(math.log(1 / 12), abs=1e-12)

    def test_preq_empty(self):
        data = make_dataset(np.zeros((0, 1), dtype=int), [2], class_index=0)
        assert score_preq(data, M0) == 0.0

    def test_feature_prequential_golden(self):
        data = make_dataset([[0, 0], [1, 1]], [2, 2])
        assert feature_prequential(data, M1) == pytest.approx(math.log(7 / 36), abs=1e-12)

    def test_feature_prequential_no_features(self):
        assert feature_prequential(_class_only([0, 1, 1]), M0) == 0.0

    def test_factorization_identity_golden(self):
        data = make_dataset([[0, 0], [1, 1]], [2, 2])
        assert score_preq(data, M1) + feature_prequential(data, M1) == pytest.approx(
            math.log(1 / 24), abs=1e-12
        )
        assert score_preq(data, M1) == pytest.approx(math.log(3 / 14), abs=1e-12)

    def test_sevi_exact_golden(self):
        data = make_dataset([[0, 0], [1, 1]], [2, 2])
        assert score_sevi_exact(data, M1) == pytest.approx(math.log(3 / 14), abs=1e-12)

    def test_loocv_log_golden(self):
        assert score_loocv(_class_only([0, 1, 0]), M0, LOG) == pytest.approx(
            -math.log(16) / 3, abs=1e-12
        )

    def test_loocv_zero_one_golden(self):
        assert score_loocv(_class_only([0, 1, 0]), M0, ZERO_ONE) == pytest.approx(
            -1 / 3, abs=1e-12
        )

    def test_loocv_two_rows(self):
        assert score_loocv(_class_only([0, 0]), M0, LOG) == pytest.approx(
            -math.log(1.5), abs=1e-12
        )

    def test_kfold_golden(self):
        data = _class_only([0, 1, 0, 1])
        for seed in (0, 7):
            assert score_kfold(data, M0, 2, LOG, seed=seed) == pytest.approx(
                -math.log(2), abs=1e-12
            )

    def test_sevi_approx_deterministic_conditionals(self):
        data = make_dataset([[0, 0], [0, 0], [1, 1]], [2, 2])
        assert score_sevi_approx(data, M1) == 0.0

    def test_sevi_approx_class_marginal_only(self):
        data = make_dataset([[0, 0], [0, 1]], [2, 2])
        assert score_sevi_approx(data, M1) == pytest.approx(2 * math.log(0.5), abs=1e-12)

    def test_sevi_approx_empty(self):
        data = make_dataset(np.zeros((0, 2), dtype=int), [2, 2])
        assert score_sevi_approx(data, M1) == 0.0

    def test_trloss_golden(self):
        data = make_dataset([[0, 0], [0, 0], [1, 1]], [2, 2])
        assert score_trloss(data, M1, LOG) == 0.0
        assert score_trloss(data, M1, ZERO_ONE) == 0.0

    def test_trloss_empty(self):
        data = make_dataset(np.zeros((0, 2), dtype=int), [2, 2])
        assert score_trloss(data, M1, LOG) == 0.0

    def test_bic_golden(self):
        data = make_dataset([[0, 0], [0, 0], [1, 1]], [2, 2])
        expected = math.log(4 / 27) - 1.5 * math.log(3)  # about -3.5574 with d = 3
        assert score_bic(data, M1) == pytest.approx(expected, abs=1e-12)

    def test_bic_dimension_formula(self):
        # binary class, two binary features, one selected: d = 1 + 2 + 1 = 4
        data = make_dataset([[0, 0, 0], [1, 1, 1]], [2, 2, 2])
        m = Structure(2, 1)
        ll = score_bic(data, m) + 2.0 * math.log(2)  # undo -(4/2) ln 2
        plain = score_bic(make_dataset([[0, 0, 0], [1, 1, 1]], [2, 2, 2]), m)
        assert plain == pytest.approx(ll - 2.0 * math.log(2), abs=1e-12)

    def test_bic_single_row_no_penalty(self):
        data = make_dataset([[0, 0]], [2, 2])
        params_ll = math.log(1.0)  # deterministic tables
        assert score_bic(data, M1) == pytest.approx(params_ll, abs=1e-12)


class TestOracleAgreement:
    def test_uevi_matches_exact_chain(self):
        rng = np.random.default_rng(101)
        for _ in range(60):
            data, structure = random_instance(rng, min_rows=0)
            rows, cards, ci, sel = as_oracle_args(data, structure)
            expected = oracles.joint_chain(rows, cards, ci, sel)
            got = score_uevi(data, structure)
            assert got == pytest.approx(math.log(expected) if expected != 1 else 0.0, abs=1e-9)

    def test_preq_matches_exact_chain(self):
        rng = np.random.default_rng(102)
        for _ in range(40):
            data, structure = random_instance(rng, min_rows=1)
            order = rng.permutation(data.n_rows)
            rows, cards, ci, sel = as_oracle_args(data, structure)
            expected = oracles.preq_chain(rows, cards, ci, sel, order.tolist())
            got = score_preq(data, structure, Ordering(order))
            assert got == pytest.approx(math.log(expected), abs=1e-9)

    def test_feature_prequential_matches_exact_chain(self):
        rng = np.random.default_rng(103)
        for _ in range(40):
            data, structure = random_instance(rng, min_rows=1)
            order = rng.permutation(data.n_rows)
            rows, cards, ci, sel = as_oracle_args(data, structure)
            expected = oracles.feature_chain(rows, cards, ci, sel, order.tolist())
            got = feature_prequential(data, structure, Ordering(order))
            assert got == pytest.approx(math.log(expected), abs=1e-9)

    def test_loocv_matches_from_scratch_recounts(self):
        rng = np.random.default_rng(104)
        for _ in range(25):
            data, structure = random_instance(rng, min_rows=2)
            rows, cards, ci, sel = as_oracle_args(data, structure)
            dists = oracles.loocv_class_probs(rows, cards, ci, sel)
            for loss in (LOG, ZERO_ONE):
                if loss == LOG:
                    expected = -sum(-math.log(d[r[ci]]) for d, r in zip(dists, rows)) / len(rows)
                else:
                    expected = -sum(
                        0.0 if max(range(len(d)), key=lambda c: (d[c], -c)) == r[ci] else 1.0
                        for d, r in zip(dists, rows)
                    ) / len(rows)
                assert score_loocv(data, structure, loss) == pytest.approx(expected, abs=1e-9)

    def test_sevi_exact_matches_fraction_ratio(self):
        rng = np.random.default_rng(105)
        for _ in range(20):
            data, structure = random_instance(rng, max_rows=5, max_features=2, min_rows=1)
            rows, cards, ci, sel = as_oracle_args(data, structure)
            expected = oracles.sevi_exact_fraction(rows, cards, ci, sel)
            assert score_sevi_exact(data, structure) == pytest.approx(
                math.log(expected), abs=1e-9
            )


class TestSequentialIdentities:
    def test_joint_chain_identity(self):
        rng = np.random.default_rng(201)
        from nbselect.model import SuffStats, row_log_marginal_predictive, update_stats

        for _ in range(40):
            data, structure = random_instance(rng, max_rows=30, min_rows=1)
            order = rng.permutation(data.n_rows)
            stats = SuffStats(data.schema, structure)
            chain = 0.0
            for i in order:
                chain += row_log_marginal_predictive(stats, data.rows[i], structure)
                update_stats(stats, data.rows[i], "add")
            assert chain == pytest.approx(score_uevi(data, structure), abs=1e-9)

    def test_factorization_identity_random(self):
        rng = np.random.default_rng(202)
        for _ in range(40):
            data, structure = random_instance(rng, max_rows=30, min_rows=1)
            order = Ordering(rng.permutation(data.n_rows))
            lhs = score_preq(data, structure, order) + feature_prequential(data, structure, order)
            assert lhs == pytest.approx(score_uevi(data, structure), abs=1e-9)

    def test_sevi_exact_equals_marginalization_chain(self):
        rng = np.random.default_rng(203)
        for _ in range(15):
            data, structure = random_instance(rng, max_rows=5, max_features=2, min_rows=1)
            rows, cards, ci, sel = as_oracle_args(data, structure)
            chain = oracles.sevi_chain_log(rows, cards, ci, sel)
            assert score_sevi_exact(data, structure) == pytest.approx(chain, abs=1e-9)

    def test_sevi_exact_normalizes(self):
        data = make_dataset([[0, 0], [1, 1], [0, 1]], [2, 2])
        total = 0.0
        for cfg in np.ndindex(2, 2, 2):
            rows = data.rows.copy()
            rows[:, 1] = cfg
            total += math.exp(score_sevi_exact(make_dataset(rows, [2, 2]), M1))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_sevi_exact_budget_guard(self):
        data = _class_only([0, 1] * 8)
        with pytest.raises(ValueError, match="budget"):
            score_sevi_exact(data, M0, budget=2**10)


class TestOrderingBehavior:
    def test_order_invariant_criteria_are_bit_identical(self):
        rng = np.random.default_rng(301)
        for _ in range(20):
            data, structure = random_instance(rng, min_rows=2)
            shuffled = _permuted(data, rng)
            assert score_uevi(data, structure) == score_uevi(shuffled, structure)
            assert score_sevi_approx(data, structure) == score_sevi_approx(shuffled, structure)
            assert score_bic(data, structure) == score_bic(shuffled, structure)
            for loss in (LOG, ZERO_ONE):
                assert score_loocv(data, structure, loss) == score_loocv(shuffled, structure, loss)
                assert score_trloss(data, structure, loss) == score_trloss(shuffled, structure, loss)

    def test_sevi_exact_bit_identical_under_permutation(self):
        rng = np.random.default_rng(302)
        for _ in range(10):
            data, structure = random_instance(rng, max_rows=5, max_features=2, min_rows=2)
            shuffled = _permuted(data, rng)
            assert score_sevi_exact(data, structure) == score_sevi_exact(shuffled, structure)

    def test_preq_depends_on_ordering_witness(self):
        data = make_dataset([[0, 0], [1, 1], [1, 0]], [2, 2])
        natural = score_preq(data, M1)
        reversed_ = score_preq(data, M1, Ordering(np.array([2, 1, 0])))
        assert natural != reversed_

    def test_preq_with_empty_structure_is_order_invariant(self):
        rng = np.random.default_rng(303)
        data, _ = random_instance(rng, max_rows=15, min_rows=1)
        empty = Structure.empty(data.schema.n_features)
        vals = {
            score_preq(data, empty, Ordering(rng.permutation(data.n_rows)))
            for _ in range(5)
        }
        ref = score_uevi(_class_only(data.class_column.tolist(), data.schema.class_cardinality), M0)
        for v in vals:
            assert v == pytest.approx(ref, abs=1e-9)


class TestSupervisedLocality:
    """Supervised scores never read unselected feature columns; the joint
    evidence and its penalized plug-in cousin do."""

    @staticmethod
    def _instance():
        rng = np.random.default_rng(42)
        rows = np.column_stack([
            rng.integers(0, 2, 12),
            rng.integers(0, 3, 12),
            rng.integers(0, 2, 12),
        ])
        return make_dataset(rows, [2, 3, 2]), Structure(2, 1)  # feature 1 unselected

    def _supervised_scores(self, data, m):
        return (
            score_preq(data, m),
            score_loocv(data, m, LOG),
            score_loocv(data, m, ZERO_ONE),
            score_sevi_approx(data, m),
            score_trloss(data, m, ZERO_ONE),
            score_sevi_exact(data, m, budget=2**13),
        )

    def test_relabeling_unselected_column(self):
        data, m = self._instance()
        rows = data.rows.copy()
        rows[:, 1] = (rows[:, 1] + 1) % 3  # bijective relabeling
        relabeled = make_dataset(rows, [2, 3, 2])
        assert self._supervised_scores(data, m) == self._supervised_scores(relabeled, m)

    def test_shuffling_unselected_column(self):
        data, m = self._instance()
        rng = np.random.default_rng(0)
        rows = data.rows.copy()
        rows[:, 1] = rng.permutation(rows[:, 1])
        shuffled = make_dataset(rows, [2, 3, 2])
        assert self._supervised_scores(data, m) == self._supervised_scores(shuffled, m)

    def test_count_changing_rewrite_moves_only_joint_scores(self):
        data, m = self._instance()
        rows = data.rows.copy()
        rows[:, 1] = 0  # collapse the unselected column; marginal counts change
        rewritten = make_dataset(rows, [2, 3, 2])
        assert self._supervised_scores(data, m) == self._supervised_scores(rewritten, m)
        assert score_uevi(data, m) != score_uevi(rewritten, m)
        assert score_bic(data, m) != score_bic(rewritten, m)


class TestPluginEquivalences:
    def test_trloss_log_is_scaled_plugin_likelihood(self):
        rng = np.random.default_rng(401)
        for _ in range(100):
            data, structure = random_instance(rng, min_rows=1)
            n = data.n_rows
            assert score_trloss(data, structure, LOG) == score_sevi_approx(data, structure) / n

    def test_scale_identity_exact_for_power_of_two_rows(self):
        rng = np.random.default_rng(402)
        for _ in range(100):
            n = int(2 ** rng.integers(1, 6))
            n_features = int(rng.integers(0, 4))
            cards = [int(rng.integers(2, 4)) for _ in range(n_features + 1)]
            rows = np.column_stack([rng.integers(0, c, n) for c in cards])
            data = make_dataset(rows, cards, class_index=n_features)
            structure = Structure(n_features, int(rng.integers(0, 1 << n_features)))
            assert n * score_trloss(data, structure, LOG) == score_sevi_approx(data, structure)

    def test_scale_identity_close_for_any_n(self):
        rng = np.random.default_rng(403)
        for _ in range(50):
            data, structure = random_instance(rng, min_rows=1)
            lhs = data.n_rows * score_trloss(data, structure, LOG)
            rhs = score_sevi_approx(data, structure)
            assert lhs == pytest.approx(rhs, rel=1e-14, abs=1e-14)

    def test_sevi_approx_matches_per_row_composition(self):
        rng = np.random.default_rng(404)
        for _ in range(30):
            data, structure = random_instance(rng, min_rows=1)
            params = plugin_params(collect_stats(data, structure), structure)
            total = 0.0
            for i in range(data.n_rows):
                dist = plugin_class_predictive(params, data.feature_matrix[i], structure)
                p = dist.probs[data.class_column[i]]
                total += math.log(p) if p > 0 else float("-inf")
            got = score_sevi_approx(data, structure)
            if math.isinf(total):
                assert math.isinf(got)
            else:
                assert got == pytest.approx(total, abs=1e-9)


class TestKFold:
    def test_equals_loocv_when_k_is_n(self):
        rng = np.random.default_rng(501)
        for _ in range(25):
            data, structure = random_instance(rng, min_rows=2)
            for loss in (LOG, ZERO_ONE):
                assert score_kfold(data, structure, data.n_rows, loss) == score_loocv(
                    data, structure, loss
                )

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(502)
        data, structure = random_instance(rng, max_rows=30, min_rows=12)
        a = score_kfold(data, structure, 4, LOG, orderings=10, seed=99)
        b = score_kfold(data, structure, 4, LOG, orderings=10, seed=99)
        assert a == b

    def test_fold_count_validated(self):
        data = _class_only([0, 1, 0, 1])
        with pytest.raises(ValueError, match="fold count"):
            score_kfold(data, M0, 1, LOG)
        with pytest.raises(ValueError, match="fold count"):
            score_kfold(data, M0, 5, LOG)

    def test_loocv_needs_two_rows(self):
        with pytest.raises(ValueError):
            score_loocv(_class_only([0]), M0, LOG)


class TestPreqAvg:
    def test_single_ordering_degenerate_average(self):
        rng = np.random.default_rng(601)
        data, structure = random_instance(rng, max_rows=20, min_rows=2)
        seed = 31
        expected = score_preq(data, structure, stratified_order(data, child_seed(seed, 0)))
        assert score_preq_avg(data, structure, 1, seed) == expected

    def test_no_selected_features_matches_uevi_any_ordering(self):
        rng = np.random.default_rng(602)
        data, _ = random_instance(rng, max_rows=15, min_rows=2)
        empty = Structure.empty(data.schema.n_features)
        ref = score_uevi(_class_only(data.class_column.tolist(), data.schema.class_cardinality), M0)
        assert score_preq_avg(data, empty, 6, seed=5) == pytest.approx(ref, abs=1e-9)

    def test_same_seed_reproduces(self):
        rng = np.random.default_rng(603)
        data, structure = random_instance(rng, max_rows=25, min_rows=3)
        assert score_preq_avg(data, structure, 10, 7) == score_preq_avg(data, structure, 10, 7)


class TestSpecsAndDispatch:
    def test_parse_names(self):
        spec = parse_criterion("preq10", seed=3)
        assert spec.kind == "preq" and spec.orderings == 10 and spec.seed == 3
        assert criterion_label(spec) == "preq10"
        spec = parse_criterion("fcv")
        assert spec.kind == "kcv" and spec.folds == 10 and spec.orderings == 1
        assert criterion_label(spec) == "fcv"
        assert criterion_label(parse_criterion("sevi-approx")) == "sevi-approx"

    def test_unknown_name_lists_valid_set(self):
        with pytest.raises(UsageError, match="valid criteria"):
            parse_criterion("zzz")

    def test_spec_validation(self):
        with pytest.raises(UsageError):
            CriterionSpec(kind="nope")
        with pytest.raises(UsageError):
            CriterionSpec(kind="kcv", folds=1)
        with pytest.raises(UsageError):
            CriterionSpec(kind="preq", orderings=0)
        with pytest.raises(UsageError):
            CriterionSpec(kind="loocv", loss="hinge")

    def test_dispatch_covers_every_kind(self):
        rng = np.random.default_rng(701)
        data, structure = random_instance(rng, max_rows=8, max_features=2, min_rows=4)
        for name in ("uevi", "sevi-approx", "sevi-exact", "preq", "preq10", "loocv", "fcv", "fcv10", "trloss", "bic"):
            spec = parse_criterion(name, folds=2 if name.startswith("fcv") else None)
            value = evaluate_criterion(data, structure, spec)
            assert isinstance(value, float)

    def test_preq_single_ordering_uses_data_order(self):
        data = make_dataset([[0, 0], [1, 1], [0, 0]], [2, 2])
        spec = parse_criterion("preq")
        assert evaluate_criterion(data, M1, spec) == score_preq(data, M1)


class TestLossFunction:
    def test_zero_one_tie_goes_to_lowest_class(self):
        dist = ClassDistribution(np.array([0.5, 0.5]))
        assert loss_of_distribution(dist, 0, ZERO_ONE) == 0.0
        assert loss_of_distribution(dist, 1, ZERO_ONE) == 1.0

    def test_log_loss_of_zero_probability(self):
        dist = ClassDistribution(np.array([1.0, 0.0]))
        assert loss_of_distribution(dist, 1, LOG) == float("inf")
        assert loss_of_distribution(dist, 0, LOG) == 0.0

    def test_unknown_loss(self):
        dist = ClassDistribution(np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            loss_of_distribution(dist, 0, "brier")
