import itertools
import math
import random

import numpy as np
import pytest

from triphoton.discrimination import (
    DiscriminationConfig,
    KUnidentifiable,
    NoDiscriminatingSetting,
    discriminate,
    divergence_map,
    fit_k,
    hellinger,
    likelihood_ratio_test,
    optimal_settings,
    required_samples,
)
from triphoton.measurement import settings_from_angles
from triphoton.models import (
    Copenhagen,
    TimeSymmetricBell,
    TimeSymmetricTriphoton,
    eq2_closed_form,
    eq3_time_symmetric,
    predict_rate,
)
from triphoton.montecarlo import CountRecord, SimulationConfig, simulate_counts
from triphoton.state import bell_state, ghz_state

GHZ = Copenhagen(ghz_state())
TS = TimeSymmetricTriphoton(0.5)
Z99 = 2.3263478740408408  # standard normal 0.99 quantile


def record(angles, n, count, model=TS):
    settings = tuple(settings_from_angles(angles))
    return CountRecord(settings, n, count, predict_rate(model, settings))


class TestHellinger:
    def test_bounds(self):
        assert hellinger(0.3, 0.3) == 0.0
        assert hellinger(0.0, 1.0) == pytest.approx(1.0)

    def test_matches_bhattacharyya_form(self):
        for p, q in [(0.1, 0.4), (0.0, 0.5), (0.25, 0.9)]:
            bc = math.sqrt(p * q) + math.sqrt((1 - p) * (1 - q))
            assert hellinger(p, q) == pytest.approx(math.sqrt(1 - bc), abs=1e-12)


class TestDivergenceMap:
    def test_origin_row(self):
        table = divergence_map(GHZ, TS, grid=64)
        angles, ra, rb, delta = table.row_at((0.0, 0.0, 0.0))
        assert ra == 0.0 and rb == 0.5 and delta == 0.5

    def test_grid_maximum_against_brute_force(self):
        table = divergence_map(GHZ, TS, grid=64)
        # independent oracle: plain loops over the closed forms
        axis = [i * math.pi / 64 for i in range(64)]
        best = max(
            abs(eq2_closed_form(a, b, c) - eq3_time_symmetric(a, b, c, 0.5))
            for a, b, c in itertools.product(axis, repeat=3)
        )
        assert best == pytest.approx(0.5, abs=1e-12)
        assert table.delta[0] == pytest.approx(best, abs=1e-12)
        assert len(table) == 64**3

    def test_rows_descending(self):
        table = divergence_map(GHZ, TimeSymmetricTriphoton(0.3), grid=8)
        assert np.all(np.diff(table.delta) <= 0)

    def test_bell_models_agree(self):
        table = divergence_map(Copenhagen(bell_state()), TimeSymmetricBell(), grid=32)
        assert table.delta.max() <= 1e-12

    def test_model_against_itself(self):
        assert divergence_map(GHZ, GHZ, grid=8).delta.max() == 0.0

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            divergence_map(GHZ, TimeSymmetricBell())


class TestOptimalSettings:
    def test_default_k(self):
        best = optimal_settings(DiscriminationConfig(GHZ, TS))
        assert best.divergence == pytest.approx(0.5, abs=1e-12)
        assert best.rate_a == pytest.approx(0.0, abs=1e-12)
        a, b, c = best.angles
        assert math.cos(c - a - b) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_supremum_on_random_points(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, math.pi, size=(200_000, 3))
        a, b, c = pts.T
        eq2 = 0.5 * (np.cos(a) * np.cos(b) * np.sin(c) + np.sin(a) * np.sin(b) * np.cos(c)) ** 2
        eq3 = 0.5 * np.cos(c - a - b) ** 2
        assert np.abs(eq2 - eq3).max() <= 0.5 + 1e-12

    def test_bell_has_no_discriminating_setting(self):
        with pytest.raises(NoDiscriminatingSetting, match="no discriminating setting"):
            optimal_settings(DiscriminationConfig(Copenhagen(bell_state()), TimeSymmetricBell()))

    def test_small_k(self):
        best = optimal_settings(DiscriminationConfig(GHZ, TimeSymmetricTriphoton(0.25)))
        assert best.divergence >= 0.25 - 1e-12
        a, b, c = best.angles
        again = abs(eq2_closed_form(a, b, c) - eq3_time_symmetric(a, b, c, 0.25))
        assert again == pytest.approx(best.divergence, abs=1e-15)

    @pytest.mark.parametrize("grid, k", [(4, 0.3), (5, 0.8), (7, 0.11), (16, 0.5)])
    def test_refinement_never_worse_than_grid(self, grid, k):
        best = optimal_settings(DiscriminationConfig(GHZ, TimeSymmetricTriphoton(k), angle_grid=grid))
        assert best.hellinger >= best.grid_hellinger - 1e-12

    def test_refinement_improves_coarse_grid(self):
        # against a generic state the optimum lies off the grid
        from conftest import random_state

        other = Copenhagen(random_state(np.random.default_rng(4), 3))
        best = optimal_settings(DiscriminationConfig(GHZ, other, angle_grid=5))
        assert best.hellinger > best.grid_hellinger + 1e-6

    @pytest.mark.parametrize("field, value", [("alpha", 0.0), ("beta", 1.0), ("angle_grid", 1)])
    def test_config_validation(self, field, value):
        with pytest.raises(ValueError):
            DiscriminationConfig(GHZ, TS, **{field: value})


class TestRequiredSamples:
    def test_normal_branch(self):
        oracle = math.ceil(
            ((Z99 * math.sqrt(0.25 * 0.75) + Z99 * math.sqrt(0.5 * 0.5)) / (0.25 - 0.5)) ** 2
        )
        assert oracle == 76
        assert required_samples(0.25, 0.5, 0.01, 0.01) == 76

    def test_normal_branch_power_by_simulation(self):
        n = required_samples(0.25, 0.5, 0.01, 0.01)
        threshold = n * 0.25 + Z99 * math.sqrt(n * 0.25 * 0.75)
        counts = np.random.default_rng(31).binomial(n, 0.5, size=20_000)
        assert np.mean(counts > threshold) >= 0.99

    def test_degenerate_branch(self):
        assert math.ceil(math.log(0.01) / math.log(0.5)) == 7
        assert required_samples(0.0, 0.5, 0.01, 0.01) == 7
        assert required_samples(1.0, 0.5, 0.01, 0.01) == 7
        assert required_samples(0.0, 1.0, 0.01, 0.01) == 1

    def test_equal_probabilities(self):
        with pytest.raises(ValueError):
            required_samples(0.3, 0.3, 0.01, 0.01)

    def test_symmetric(self):
        for pa, pb in [(0.1, 0.2), (0.0, 0.3), (0.45, 0.5), (0.9, 1.0)]:
            assert required_samples(pa, pb, 0.05, 0.05) == required_samples(pb, pa, 0.05, 0.05)

    def test_decreasing_in_gap(self):
        ns = [required_samples(0.2, 0.2 + d, 0.01, 0.01) for d in (0.01, 0.02, 0.05, 0.1, 0.3)]
        assert all(a >= b for a, b in zip(ns, ns[1:]))
        assert ns[0] > ns[-1]

    def test_at_least_one(self):
        assert required_samples(0.01, 0.99, 0.4, 0.4) >= 1


class TestLikelihoodRatioTest:
    def test_identical_models(self):
        recs = [record([0.1, 0.2, 0.3], 100, 40)]
        out = likelihood_ratio_test(recs, TS, TS, alpha=0.05)
        assert out.decision == "inconclusive"
        assert out.log_likelihood_ratio == 0.0

    def test_impossible_observation_rejects_model(self):
        recs = [record([0, 0, 0], 10, 3)]
        out = likelihood_ratio_test(recs, GHZ, TS, alpha=0.01)
        assert out.decision == "model_b"
        assert out.log_likelihood_ratio == -math.inf
        assert out.p_value_estimate == 0.0

    def test_log_lr_value(self):
        angles = [0.3, 0.2, 1.4]
        pa, pb = eq2_closed_form(*angles), eq3_time_symmetric(*angles, 0.5)
        recs = [record(angles, 200, 30)]
        expected = 30 * math.log(pa / pb) + 170 * math.log((1 - pa) / (1 - pb))
        out = likelihood_ratio_test(recs, GHZ, TS, alpha=0.05)
        assert out.log_likelihood_ratio == pytest.approx(expected, rel=1e-12)

    def test_invariant_under_reordering(self):
        rng = np.random.default_rng(12)
        settings = rng.uniform(0, math.pi, size=(6, 3))
        recs = simulate_counts(SimulationConfig(GHZ, settings, n_emitted=40, master_seed=3))
        base = likelihood_ratio_test(recs, GHZ, TS, alpha=0.05, seed=1)
        shuffled = list(recs)
        for s in range(5):
            random.Random(s).shuffle(shuffled)
            out = likelihood_ratio_test(shuffled, GHZ, TS, alpha=0.05, seed=1)
            assert out.decision == base.decision
            assert out.log_likelihood_ratio == base.log_likelihood_ratio
            assert out.p_value_estimate == base.p_value_estimate

    def test_type_one_error_calibration(self):
        # close rates, so wrong selections are possible
        angles = [0.5, 0.4, 1.2]
        pa, pb = eq2_closed_form(*angles), eq3_time_symmetric(*angles, 0.5)
        assert abs(pa - pb) > 0.01
        n = 60
        wrong = 0
        trials = 500
        for t in range(trials):
            recs = simulate_counts(SimulationConfig(GHZ, [angles], n_emitted=n, master_seed=1000 + t))
            if likelihood_ratio_test(recs, GHZ, TS, alpha=0.05, seed=t).decision == "model_b":
                wrong += 1
        se = math.sqrt(0.05 * 0.95 / trials)
        assert wrong / trials <= 0.05 + 3 * se

    def test_deterministic_given_seed(self):
        recs = [record([0.5, 0.4, 1.2], 60, 12)]
        a = likelihood_ratio_test(recs, GHZ, TS, seed=4)
        b = likelihood_ratio_test(recs, GHZ, TS, seed=4)
        assert a == b

    def test_profile_k(self):
        rng = np.random.default_rng(2)
        settings = rng.uniform(0, math.pi, size=(8, 3))
        recs = simulate_counts(SimulationConfig(TimeSymmetricTriphoton(0.3), settings, 5000, master_seed=6))
        out = likelihood_ratio_test(recs, GHZ, TS, alpha=0.01, profile_k=True)
        assert out.model_b_fit is not None
        assert abs(out.model_b_fit.k - 0.3) < 5 * out.model_b_fit.standard_error
        assert out.decision == "model_b"

    def test_empty_records(self):
        with pytest.raises(ValueError):
            likelihood_ratio_test([], GHZ, TS)


class TestFitK:
    def test_noiseless(self):
        # counts equal k * cos^2(...) * n exactly
        recs = [record([0.2, 0.3, 0.5], 100, 37), record([0.0, 0.0, math.pi / 4], 200, 37)]
        fit = fit_k(recs)
        assert fit.k == pytest.approx(0.37, abs=1e-6)

    def test_zero_counts_hit_lower_bound(self):
        recs = [record([0.0, 0.0, 0.0], 1000, 0), record([0.1, 0.2, 0.3], 1000, 0)]
        fit = fit_k(recs)
        assert fit.k <= 1e-6
        assert any("lower search bound" in w for w in fit.warnings)

    def test_unidentifiable(self):
        recs = [record([0.0, 0.0, math.pi / 2], 100, 0)]
        with pytest.raises(KUnidentifiable, match="unidentifiable"):
            fit_k(recs)

    def test_large_sample(self):
        rng = np.random.default_rng(21)
        settings = _informative_settings(rng, 10)
        recs = simulate_counts(SimulationConfig(TS, settings, n_emitted=10**6, master_seed=77))
        fit = fit_k(recs)
        assert abs(fit.k - 0.5) <= 3 * fit.standard_error
        assert fit.standard_error < 1e-3

    def test_error_shrinks_with_n(self):
        rng = np.random.default_rng(5)
        settings = _informative_settings(rng, 10)
        model = TimeSymmetricTriphoton(0.37)
        errors = []
        for n in (10**3, 10**5):
            recs = simulate_counts(SimulationConfig(model, settings, n_emitted=n, master_seed=19))
            errors.append(abs(fit_k(recs).k - 0.37))
        assert errors[1] < errors[0]

    def test_rejects_two_photon_records(self):
        recs = [record([0.0, 0.0], 10, 5, model=TimeSymmetricBell())]
        with pytest.raises(ValueError):
            fit_k(recs)


def _informative_settings(rng, count):
    out = []
    while len(out) < count:
        a = rng.uniform(0, math.pi, size=3)
        if math.cos(a[2] - a[0] - a[1]) ** 2 > 0.2:
            out.append(a)
    return out


class TestDiscriminate:
    def test_report_under_each_model(self):
        cfg = DiscriminationConfig(GHZ, TS)
        rep_a = discriminate(cfg, "model_a", seed=3)
        rep_b = discriminate(cfg, "model_b", seed=3)
        for rep in (rep_a, rep_b):
            assert rep.divergence == pytest.approx(abs(rep.rate_a - rep.rate_b), abs=1e-15)
            assert rep.required_n == 7
        assert rep_a.decision == "copenhagen"
        assert rep_a.generating_model == "copenhagen"
        assert rep_b.generating_model == "timesym"

    def test_explicit_sample_size(self):
        cfg = DiscriminationConfig(GHZ, TS, n_emitted_per_setting=50)
        assert discriminate(cfg, "model_b", seed=1).n_emitted == 50

    def test_bell_raises(self):
        with pytest.raises(NoDiscriminatingSetting):
            discriminate(DiscriminationConfig(Copenhagen(bell_state()), TimeSymmetricBell()))

    def test_to_dict_encodes_infinity(self):
        rep = discriminate(DiscriminationConfig(GHZ, TS), "model_b", seed=3)
        d = rep.to_dict()
        assert set(d["best_settings"]) == {"theta_a", "theta_b", "theta_c"}
        if rep.n_coincidence > 0:
            assert d["log_likelihood_ratio"] == "-inf"
