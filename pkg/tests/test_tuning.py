import math

import numpy as np
import pytest

from conftest import disagreement_fixture, mixture_fixture
from strataconf import (
    DEFAULT_LAMBDA_GRID,
    DEFAULT_STRATA,
    GeneratorConfig,
    LambdaGrid,
    LogitDataset,
    MethodParams,
    PredictionSet,
    generate,
    select_k_reg,
    stratified_coverage,
    stratum_of,
    tune_lambda_adaptive,
    tune_lambda_size,
)
from strataconf.errors import SplitError


def brute_force_choice(report, criterion):
    """Independent re-minimization of the recorded per-penalty objectives."""
    if criterion == "size":
        objective = {r.lam: r.avg_size for r in report.records}
    else:
        objective = {r.lam: r.max_violation for r in report.records}
    best = min(sorted(objective), key=lambda lam: (objective[lam], lam))
    return best


class TestLambdaGrid:
    def test_default_is_paper_grid(self):
        assert DEFAULT_LAMBDA_GRID.values == (0.0, 1e-5, 1e-4, 8e-4, 9e-4, 1e-3,
                                              1.5e-3, 2e-3)

    def test_must_ascend(self):
        with pytest.raises(ValueError):
            LambdaGrid((0.0, 0.1, 0.1))
        with pytest.raises(ValueError):
            LambdaGrid(())


class TestStratumOf:
    def test_singleton_in_first_stratum(self):
        assert stratum_of(1, DEFAULT_STRATA) == 0

    def test_three_in_second(self):
        assert stratum_of(3, DEFAULT_STRATA) == 1

    def test_empty_set_in_first(self):
        assert stratum_of(0, DEFAULT_STRATA) == 0


def _sets(sizes_covered):
    out = []
    for i, (size, cov) in enumerate(sizes_covered):
        classes = tuple(range(size))
        label = 0 if cov else size  # in the set iff covered
        out.append(PredictionSet.from_classes(i, classes, label))
    return out


class TestStratifiedCoverage:
    def test_all_singletons(self):
        sets = _sets([(1, True)] * 93 + [(1, False)] * 7)
        per = stratified_coverage(sets, DEFAULT_STRATA, min_count=1)
        assert per[0].n == 100 and per[0].coverage == pytest.approx(0.93)
        assert all(s.n == 0 and not s.populated and s.coverage is None
                   for s in per[1:])

    def test_ten_pairs_six_covered(self):
        sets = _sets([(2, True)] * 6 + [(2, False)] * 4)
        per = stratified_coverage(sets, DEFAULT_STRATA)
        assert per[1].n == 10 and per[1].coverage == pytest.approx(0.600)

    def test_empty_input(self):
        per = stratified_coverage([], DEFAULT_STRATA)
        assert all(s.n == 0 and not s.populated for s in per)

    def test_min_count_gates_population(self):
        sets = _sets([(2, True)] * 5)
        per = stratified_coverage(sets, DEFAULT_STRATA, min_count=10)
        assert per[1].n == 5 and not per[1].populated


class TestSelectKReg:
    def test_fixed_mode(self, small_dataset):
        assert select_k_reg(small_dataset, 1) == 1
        assert select_k_reg(small_dataset, 4) == 4

    def test_all_rank_one(self):
        data = mixture_fixture((50, 0, 0), (0, 0, 0))
        assert select_k_reg(data, "auto", alpha=0.1) == 1

    def test_order_statistic(self):
        # ranks {1 x8, 2, 3}: ceil(11 * 0.9) = 10th smallest = 3
        data = mixture_fixture((8, 0, 0), (0, 0, 0))
        flat = mixture_fixture((0, 1, 0), (0, 0, 1))  # ranks 2 and 3
        merged = np.vstack([data.logits, flat.logits])
        labels = np.concatenate([data.labels, flat.labels])
        assert select_k_reg(LogitDataset(merged, labels), "auto", alpha=0.1) == 3


class TestSizeCriterion:
    def test_singleton_grid(self, ambiguous_dataset):
        report = tune_lambda_size(ambiguous_dataset, LambdaGrid((5e-4,)), 1,
                                  MethodParams("raps", alpha=0.1))
        assert report.chosen_lambda == 5e-4

    def test_truncating_lambda_preferred(self):
        data, grid = disagreement_fixture()
        report = tune_lambda_size(data, grid, 1, MethodParams("raps", alpha=0.1))
        assert report.chosen_lambda == 0.25
        by_lam = {r.lam: r.avg_size for r in report.records}
        assert by_lam[0.25] < by_lam[0.0]

    def test_tie_breaks_to_smallest(self):
        # a grid of tiny penalties leaves the atom-valued sets unchanged
        data = mixture_fixture((500, 10, 0), (30, 28, 5))
        report = tune_lambda_size(data, LambdaGrid((0.0, 1e-9, 2e-9)), 1,
                                  MethodParams("raps", alpha=0.1))
        sizes = {r.avg_size for r in report.records}
        assert len(sizes) == 1
        assert report.chosen_lambda == 0.0

    def test_too_small_to_split(self):
        data = mixture_fixture((1, 0, 0), (0, 0, 0))
        with pytest.raises(SplitError):
            tune_lambda_size(data, DEFAULT_LAMBDA_GRID, 1,
                             MethodParams("raps", alpha=0.1))


class TestAdaptiveCriterion:
    def test_argmin_direction_large_lambda(self):
        # flats undercover badly at lambda 0 (25% rank-3 labels), so the
        # truncating grid point has the smaller worst violation
        data = mixture_fixture((4410, 90, 0), (225, 150, 125))
        report = tune_lambda_adaptive(data, LambdaGrid((0.0, 0.3)), 1,
                                      MethodParams("raps", alpha=0.1))
        assert report.chosen_lambda == 0.3
        by_lam = {r.lam: r.max_violation for r in report.records}
        assert by_lam[0.3] < by_lam[0.0]

    def test_argmin_direction_zero_lambda(self):
        data, grid = disagreement_fixture()
        report = tune_lambda_adaptive(data, grid, 1, MethodParams("raps", alpha=0.1))
        assert report.chosen_lambda == 0.0
        by_lam = {r.lam: r.max_violation for r in report.records}
        assert by_lam[0.0] < by_lam[0.25]
        # the big penalty's violation is exactly 0.9: its surviving pair sets
        # never contain the (rank-3) label
        assert by_lam[0.25] == pytest.approx(0.9)

    def test_criteria_disagree_deterministically(self):
        data, grid = disagreement_fixture()
        for _ in range(2):
            size = tune_lambda_size(data, grid, 1, MethodParams("raps", alpha=0.1))
            adaptive = tune_lambda_adaptive(data, grid, 1,
                                            MethodParams("raps", alpha=0.1))
            assert size.chosen_lambda == 0.25
            assert adaptive.chosen_lambda == 0.0

    def test_chosen_matches_brute_force(self):
        data, grid = disagreement_fixture()
        for seed in range(4):
            report = tune_lambda_adaptive(data, grid, 1,
                                          MethodParams("raps", alpha=0.1),
                                          inner_split_seed=seed)
            assert report.chosen_lambda == brute_force_choice(report, "adaptive")
            objective = {r.lam: r.max_violation for r in report.records}
            chosen = objective[report.chosen_lambda]
            assert all(chosen <= v for v in objective.values())

    def test_unpopulated_gives_infinite_objective(self):
        data = mixture_fixture((400, 8, 0), (25, 23, 4))
        report = tune_lambda_adaptive(data, LambdaGrid((0.0, 0.2)), 1,
                                      MethodParams("raps", alpha=0.1),
                                      min_count=10 ** 6)
        assert all(math.isinf(r.max_violation) for r in report.records)
        assert report.chosen_lambda == 0.0  # all infinite: smallest wins

    def test_identical_objectives_tie_to_zero(self):
        data = mixture_fixture((500, 10, 0), (30, 28, 5))
        report = tune_lambda_adaptive(data, LambdaGrid((0.0, 1e-9)), 1,
                                      MethodParams("raps", alpha=0.1))
        assert report.chosen_lambda == 0.0

    def test_report_is_deterministic(self, ambiguous_dataset):
        kwargs = dict(grid=DEFAULT_LAMBDA_GRID, k_reg=1,
                      params=MethodParams("raps", alpha=0.1),
                      inner_split_seed=7)
        a = tune_lambda_adaptive(ambiguous_dataset, **kwargs)
        b = tune_lambda_adaptive(ambiguous_dataset, **kwargs)
        assert a == b

    def test_records_carry_both_objectives(self, ambiguous_dataset):
        report = tune_lambda_adaptive(ambiguous_dataset, LambdaGrid((0.0, 1e-3)), 1,
                                      MethodParams("raps", alpha=0.1))
        for r in report.records:
            assert r.avg_size >= 0
            assert r.max_violation >= 0
            assert len(r.per_stratum) == DEFAULT_STRATA.n_strata


class TestGeneratorGridSelection:
    def test_brute_force_on_generated_data(self):
        # argmin consistency must hold on organic data too, for both criteria
        data = generate(GeneratorConfig(n_classes=6, n_samples=2000, seed=21,
                                        sharpness=4.5,
                                        confusion_pairs=((0, 1, 4.5),),
                                        noise_sd=1.2, ambiguous_fraction=0.2))
        for seed in (0, 1):
            size = tune_lambda_size(data, DEFAULT_LAMBDA_GRID, 1,
                                    MethodParams("raps", alpha=0.1),
                                    inner_split_seed=seed)
            adaptive = tune_lambda_adaptive(data, DEFAULT_LAMBDA_GRID, 1,
                                            MethodParams("raps", alpha=0.1),
                                            inner_split_seed=seed)
            assert size.chosen_lambda == brute_force_choice(size, "size")
            assert adaptive.chosen_lambda == brute_force_choice(adaptive, "adaptive")
