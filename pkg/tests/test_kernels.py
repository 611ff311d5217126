import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prionpde.errors import (
    AsymmetricK0,
    LevelInconsistent,
    NonEvaluableKernel,
    NonPositiveTau,
    SupportExceedsGrid,
    UnnormalizedK0,
)
from prionpde.grid import GridFunction, build_grid, project
from prionpde.kernels import (
    HypothesisFamily,
    KernelSet,
    ModelParams,
    TruncationLevel,
    make_bounded_family,
    make_k0_family,
    make_powerlaw_family,
    make_special_family,
    mollify_rate,
    plan_truncation_levels,
    smooth_cut,
    smoothstep,
    truncate,
    validate_kernel_set,
    with_join_cutoff,
)


def check_by_name(report, name):
    matches = [c for c in report.checks if c.name == name]
    assert len(matches) == 1, f"{name} missing from report"
    return matches[0]


class TestFamilies:
    def test_special_family_validates(self):
        k = make_special_family(1.0, 1.0, 1.0, 1.0)
        report = validate_kernel_set(k, samples=32)
        assert report.family is HypothesisFamily.WEAK_UNBOUNDED
        assert report.all_passed, report.format()

    def test_special_family_daughter_normalization_exact(self):
        k = make_special_family(1.0, 0.1, 0.5, 0.2)
        report = validate_kernel_set(k, samples=16)
        assert check_by_name(report, "daughter_number_normalization").residual < 1e-12
        assert check_by_name(report, "daughter_mass_normalization").residual < 1e-12

    def test_zero_join_passes_with_zero_residual(self):
        k = make_special_family(1.0, 0.0, 0.0, 0.0)
        report = validate_kernel_set(k, samples=16)
        assert check_by_name(report, "join_symmetry").residual == 0.0
        assert report.all_passed

    def test_nonpositive_growth_rejected(self):
        with pytest.raises(NonPositiveTau):
            make_special_family(0.0, 0.1, 0.5, 0.2)
        with pytest.raises(ValueError):
            make_special_family(1.0, -0.1, 0.5, 0.2)

    def test_k0_uniform_profile_matches_builtin(self):
        k = make_k0_family(lambda s: np.ones_like(s), growth_value=1.0)
        ref = make_special_family(1.0, 0.0, 0.0, 0.0)
        y = np.array([2.0, 5.0, 40.0])
        z = np.array([1.3, 2.0, 39.0])
        assert np.allclose(k.daughter(z, y), ref.daughter(z, y), rtol=1e-14)

    def test_k0_parabolic_profile_validates(self):
        k = make_k0_family(lambda s: 6.0 * s * (1.0 - s),
                           growth_value=1.0, frag_slope=0.5)
        report = validate_kernel_set(k, samples=24)
        assert check_by_name(report, "daughter_symmetry").passed
        assert check_by_name(report, "daughter_number_normalization").passed
        assert check_by_name(report, "daughter_mass_normalization").passed

    def test_k0_rejects_asymmetric_profile(self):
        with pytest.raises(AsymmetricK0):
            make_k0_family(lambda s: s)

    def test_k0_rejects_unnormalized_profile(self):
        with pytest.raises(UnnormalizedK0):
            make_k0_family(lambda s: 12.0 * s * (1.0 - s))

    def test_k0_rejects_nonfinite_profile(self):
        with pytest.raises(NonEvaluableKernel):
            make_k0_family(lambda s: np.where(s > 0.5, np.nan, 1.0))

    def test_asymmetric_daughter_detected_by_validator(self):
        base = make_special_family(1.0, 0.0, 1.0, 0.0)

        def lopsided(z, y):
            z = np.asarray(z, dtype=float)
            y = np.asarray(y, dtype=float)
            z, y = np.broadcast_arrays(z, y)
            safe = np.where(y > 0, y, 1.0)
            return np.where((z > 0) & (z < y), 2.0 * z / safe**2, 0.0)

        import dataclasses
        k = dataclasses.replace(base, daughter=lopsided)
        report = validate_kernel_set(k, samples=32)
        sym = check_by_name(report, "daughter_symmetry")
        assert not sym.passed and sym.residual > 0.1

    def test_powerlaw_envelope_holds_and_large_size_mass_fails(self):
        # uniform daughter cannot satisfy the large-size mass-fraction
        # condition: twice its mass above min_size tends to the full y
        k = make_powerlaw_family(join_scale=0.1, join_exp_low=0.5, join_exp_high=1.0)
        assert k.growth_constants.join_exp_total == pytest.approx(1.5)
        report = validate_kernel_set(k, samples=32)
        assert check_by_name(report, "join_growth_envelope").passed
        assert check_by_name(report, "frag_lower_bound").passed
        assert check_by_name(report, "frag_exponent_admissible").passed
        mass = check_by_name(report, "daughter_large_size_mass")
        assert not mass.passed and mass.residual > 0.01
        assert not report.all_passed

    def test_bounded_family_validates_with_caps(self):
        k = make_bounded_family(1.0, 0.05, 0.1, 0.05)
        report = validate_kernel_set(k, samples=24)
        assert report.family is HypothesisFamily.BOUNDED_CLASSICAL
        assert report.all_passed, report.format()


class TestCutoffs:
    def test_join_cutoff_vanishes_beyond(self):
        k = with_join_cutoff(make_special_family(1.0, 0.0, 0.0, 0.5), 40.0)
        y = np.linspace(1.0, 60.0, 40)
        vals = k.join(y[:, None], y[None, :])
        over = (y[:, None] + y[None, :]) >= 40.0
        assert np.all(vals[over] == 0.0)
        under = (y[:, None] + y[None, :]) <= 40.0 - 5.0
        assert np.allclose(vals[under], 0.5, rtol=1e-14)
        report = validate_kernel_set(k, samples=16)
        assert check_by_name(report, "join_cutoff_metadata").passed

    def test_smoothstep_shape(self):
        s = np.linspace(-0.5, 1.5, 201)
        v = smoothstep(s)
        assert np.all(v[s <= 0] == 0.0)
        assert np.all(v[s >= 1] == 1.0)
        inner = v[(s > 0.02) & (s < 0.98)]
        assert np.all(np.diff(inner) > 0)
        assert smoothstep(0.5) == pytest.approx(0.5)

    def test_smooth_cut_endpoints(self):
        x = np.array([0.0, 34.9, 35.0, 39.0, 40.0, 41.0])
        v = smooth_cut(x, 40.0, 5.0)
        assert v[0] == 1.0 and v[1] == 1.0
        assert 0.0 < v[3] < 1.0
        assert v[4] == 0.0 and v[5] == 0.0

    def test_mollify_exact_for_affine(self):
        fn = mollify_rate(lambda y: 2.0 + 3.0 * np.asarray(y, dtype=float), 0.25)
        y = np.linspace(1.0, 10.0, 17)
        assert np.allclose(fn(y), 2.0 + 3.0 * y, rtol=1e-12)

    def test_mollify_floor(self):
        fn = mollify_rate(lambda y: np.zeros(np.shape(y)), 0.1, floor=0.5)
        assert np.all(fn(np.array([1.0, 2.0])) == 0.5)


class TestTruncation:
    def setup_method(self):
        self.grid = build_grid(1.0, 200.0, 128, "geometric")
        self.u0 = project(
            lambda y: np.exp(-0.5 * ((y - 3.0) / 0.3) ** 2), self.grid)
        self.k = make_special_family(
            1.0, 0.1, 1.0, 0.2,
            ModelParams(production=1.0, degradation=0.5, saturation=0.0, min_size=1.0))

    def test_plan_levels_monotone_and_consistent(self):
        levels = plan_truncation_levels(self.k, self.u0, 2.0, 1.0, [1, 2, 4, 8])
        pair = [lv.pair_cutoff for lv in levels]
        rate = [lv.rate_cutoff for lv in levels]
        assert all(a < b for a, b in zip(pair, pair[1:]))
        assert all(a <= b for a, b in zip(rate, rate[1:]))
        for lv in levels:
            kn, u0n = truncate(self.k, lv, 1.0, self.u0, 2.0)
            assert kn.hypothesis_family is HypothesisFamily.BOUNDED_CLASSICAL
            assert kn.join_zero_beyond == lv.pair_cutoff

    def test_truncated_set_passes_bounded_validation(self):
        lv = plan_truncation_levels(self.k, self.u0, 2.0, 1.0, [2])[0]
        kn, _ = truncate(self.k, lv, 1.0, self.u0, 2.0)
        report = validate_kernel_set(kn, samples=24, probe_max=200.0)
        assert report.all_passed, report.format()

    def test_truncated_rates_cut_sharply(self):
        lv = plan_truncation_levels(self.k, self.u0, 2.0, 1.0, [1])[0]
        kn, _ = truncate(self.k, lv, 1.0, self.u0, 2.0)
        y = np.array([lv.rate_cutoff * 0.99, lv.rate_cutoff * 1.01, 150.0])
        assert kn.death(y)[0] > 0 and kn.death(y)[1] == 0.0 and kn.death(y)[2] == 0.0
        assert kn.frag(y)[0] > 0 and kn.frag(y)[1] == 0.0

    def test_truncated_join_vanishes_beyond_pair_cutoff(self):
        lv = TruncationLevel(index=1, pair_cutoff=4.0, rate_cutoff=60.0,
                             mollifier_width=0.5)
        kn, _ = truncate(self.k, lv, 1.0, self.u0, 2.0)
        y = np.linspace(1.0, 10.0, 30)
        vals = kn.join(y[:, None], y[None, :])
        assert np.all(vals[(y[:, None] + y[None, :]) >= 4.0] == 0.0)

    def test_zero_join_stays_zero(self):
        import dataclasses
        k = dataclasses.replace(self.k, join=lambda y, z: np.zeros(
            np.broadcast_shapes(np.shape(y), np.shape(z))))
        lv = plan_truncation_levels(k, self.u0, 2.0, 1.0, [1])[0]
        kn, _ = truncate(k, lv, 1.0, self.u0, 2.0)
        y = np.linspace(1.0, 100.0, 20)
        assert np.all(kn.join(y[:, None], y[None, :]) == 0.0)

    def test_low_rate_cutoff_rejected(self):
        lv = TruncationLevel(index=1, pair_cutoff=10.0, rate_cutoff=10.5,
                             mollifier_width=0.5)
        with pytest.raises(LevelInconsistent):
            truncate(self.k, lv, 1.0, self.u0, 2.0)

    def test_pair_cutoff_below_twice_min_size_rejected(self):
        lv = TruncationLevel(index=1, pair_cutoff=1.5, rate_cutoff=60.0,
                             mollifier_width=0.5)
        with pytest.raises(LevelInconsistent):
            truncate(self.k, lv, 1.0, self.u0, 2.0)

    def test_cutoff_beyond_grid_rejected(self):
        lv = TruncationLevel(index=1, pair_cutoff=4.0, rate_cutoff=300.0,
                             mollifier_width=0.5)
        with pytest.raises(SupportExceedsGrid):
            truncate(self.k, lv, 1.0, self.u0, 2.0)

    def test_initial_density_cut_at_pair_cutoff(self):
        lv = TruncationLevel(index=1, pair_cutoff=4.0, rate_cutoff=60.0,
                             mollifier_width=0.5)
        _, u0n = truncate(self.k, lv, 1.0, self.u0, 2.0)
        assert np.all(u0n.values[self.grid.centers >= 4.0] == 0.0)
        keep = self.grid.centers <= 4.0 - 0.5
        assert np.allclose(u0n.values[keep], self.u0.values[keep], rtol=1e-14)


@settings(max_examples=8, deadline=None)
@given(p=st.floats(0.25, 3.0, allow_nan=False))
def test_symmetric_beta_profiles_accepted(p):
    norm = math.gamma(2.0 * p + 2.0) / math.gamma(p + 1.0) ** 2

    def profile(s):
        s = np.asarray(s, dtype=float)
        return norm * (s * (1.0 - s)) ** p

    k = make_k0_family(profile, frag_slope=1.0)
    report = validate_kernel_set(k, samples=12)
    assert check_by_name(report, "daughter_symmetry").passed
    assert check_by_name(report, "daughter_number_normalization").passed
