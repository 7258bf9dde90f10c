import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerwalk.curve import SolverError, cramer_transform
from cornerwalk.model import InvalidModelError, parse_model_text
from cornerwalk.montecarlo import (
    BATCH_SIZE,
    SimConfig,
    brownian_halfplane_kernel,
    estimate_escape,
    estimate_green,
    estimate_halfplane_survival,
    green_direction_scan,
    martin_kernel_estimate,
    martin_kernel_profile,
    skipfree_exit_root,
)

from oracles import (
    fib_escape_exact,
    green_enum,
    sf2_exact_ratio,
    sf2_exact_root,
    sf2_model_text,
)


def exact_steps(dist):
    return dict(zip(dist.steps, dist.exact))


def z_score(est, truth):
    return (est.mean - truth) / est.std_error


class TestReproducibility:
    def test_bit_identical_across_runs(self, fib):
        # n_paths straddles a batch boundary on purpose
        cfg = SimConfig(seed=99, n_paths=BATCH_SIZE + 4000, horizon=60)
        assert estimate_escape(fib, (1, 1), cfg) == estimate_escape(fib, (1, 1), cfg)

    def test_seed_changes_answer(self, fib):
        a = estimate_escape(fib, (1, 1), SimConfig(seed=1, n_paths=4096, horizon=50))
        b = estimate_escape(fib, (1, 1), SimConfig(seed=2, n_paths=4096, horizon=50))
        assert a.mean != b.mean

    def test_green_reproducible_with_twist(self, all_five, all_five_geom):
        tw = cramer_transform(all_five_geom, (1 / math.sqrt(2), 1 / math.sqrt(2)))
        cfg = SimConfig(seed=3, n_paths=30000, horizon=12, twist=tw)
        assert estimate_green(all_five, (1, 1), (4, 4), cfg) == estimate_green(
            all_five, (1, 1), (4, 4), cfg
        )


class TestEscape:
    def test_matches_series_value(self, fib):
        cfg = SimConfig(seed=20260819, n_paths=20000, horizon=2000)
        est = estimate_escape(fib, (1, 1), cfg)
        truth = float(fib_escape_exact(1, 1))
        assert est.censored_fraction == 0.0
        assert abs(z_score(est, truth)) < 3.5

    def test_short_horizon_matches_enumeration(self, fib):
        cfg = SimConfig(seed=17, n_paths=BATCH_SIZE, horizon=4)
        est = estimate_escape(fib, (2, 1), cfg)
        truth = float(escape_truth(fib, (2, 1), 4))
        assert abs(z_score(est, truth)) < 3.5

    def test_monotone_in_horizon(self, fib):
        # same seed: the horizon-2H survivors are a pathwise subset
        short = estimate_escape(fib, (1, 2), SimConfig(seed=5, n_paths=20000, horizon=200))
        long = estimate_escape(fib, (1, 2), SimConfig(seed=5, n_paths=20000, horizon=400))
        assert long.mean <= short.mean + 2 * short.std_error
        assert long.mean <= short.mean  # exact, by the shared stream

    def test_deep_start_nearly_certain(self, fib):
        cfg = SimConfig(seed=4, n_paths=5000, horizon=100)
        assert estimate_escape(fib, (50, 50), cfg).mean >= 0.999

    def test_rejections(self, fib):
        with pytest.raises(ValueError, match="strictly inside"):
            estimate_escape(fib, (0, 1), SimConfig(seed=0, n_paths=10, horizon=5))
        with pytest.raises(ValueError, match="horizon"):
            estimate_escape(fib, (1, 1), SimConfig(seed=0, n_paths=10))

    def test_invalid_model_rejected(self):
        bad = parse_model_text("1 1 1/2\n1 -1 1/2\n")  # no (-1,1) mass
        with pytest.raises(InvalidModelError):
            estimate_escape(bad, (1, 1), SimConfig(seed=0, n_paths=10, horizon=5))


def escape_truth(dist, x, horizon):
    from oracles import escape_enum_lower

    return escape_enum_lower(exact_steps(dist), x, horizon)


class TestHalfplaneSurvival:
    @pytest.mark.parametrize("height,survival", [(1, 0.5), (2, 0.75), (3, 0.875)])
    def test_fibonacci_gamblers_ruin(self, fib, height, survival):
        # exit root c = 1/2, so survival from height z is 1 - 2^-z
        cfg = SimConfig(seed=7, n_paths=40000, horizon=4000)
        est = estimate_halfplane_survival(fib, height, cfg)
        assert abs(z_score(est, survival)) < 3.5

    def test_height_must_be_positive(self, fib):
        with pytest.raises(ValueError, match="height"):
            estimate_halfplane_survival(fib, 0, SimConfig(seed=0, n_paths=10, horizon=5))


class TestGreen:
    def test_parity_unreachable_is_exact_zero(self, fib):
        # diagonal steps preserve i+j mod 2; (1,1) -> (2,3) crosses classes
        est = estimate_green(fib, (1, 1), (2, 3), SimConfig(seed=1, n_paths=8192))
        assert est.mean == 0.0
        assert est.std_error == 0.0

    def test_matches_enumeration(self, fib):
        cfg = SimConfig(seed=21, n_paths=BATCH_SIZE, horizon=4)
        est = estimate_green(fib, (1, 1), (2, 2), cfg)
        truth = float(green_enum(exact_steps(fib), (1, 1), (2, 2), 4))
        assert abs(z_score(est, truth)) < 3.5

    def test_twisted_matches_enumeration(self, all_five, all_five_geom):
        truth = float(green_enum(exact_steps(all_five), (2, 2), (3, 3), 4))
        tw = cramer_transform(all_five_geom, (2 / math.sqrt(5), 1 / math.sqrt(5)))
        twisted = estimate_green(
            all_five, (2, 2), (3, 3),
            SimConfig(seed=5, n_paths=BATCH_SIZE, horizon=4, twist=tw),
        )
        plain = estimate_green(
            all_five, (2, 2), (3, 3), SimConfig(seed=6, n_paths=BATCH_SIZE, horizon=4)
        )
        assert abs(z_score(twisted, truth)) < 3.5
        assert abs(z_score(plain, truth)) < 3.5

    def test_default_horizon_recorded(self, all_five):
        est = estimate_green(all_five, (1, 1), (3, 4), SimConfig(seed=2, n_paths=2048))
        assert est.horizon == 10 * 5
        assert 0.0 <= est.censored_fraction <= 1.0

    def test_twist_weight_overflow_guarded(self, fib, fib_geom):
        tw = cramer_transform(fib_geom, (2 / math.sqrt(5), 1 / math.sqrt(5)))
        with pytest.raises(SolverError, match="overflow"):
            estimate_green(
                fib, (1, 1), (12001, 2),
                SimConfig(seed=0, n_paths=1, horizon=1, twist=tw),
            )

    def test_endpoints_validated(self, fib):
        with pytest.raises(ValueError):
            estimate_green(fib, (0, 1), (2, 2), SimConfig(seed=0, n_paths=8, horizon=4))
        with pytest.raises(ValueError):
            estimate_green(fib, (1, 1), (2, 0), SimConfig(seed=0, n_paths=8, horizon=4))


class TestMartinKernel:
    def test_base_point_ratio_is_exactly_one(self, all_five):
        # common random numbers: both starts replay the same stream
        est = martin_kernel_estimate(
            all_five, (1, 1), (6, 6), SimConfig(seed=9, n_paths=16384)
        )
        assert est.mean == 1.0
        assert est.std_error == 0.0

    def test_parity_numerator_vanishes_honestly(self, fib):
        est = martin_kernel_estimate(
            fib, (2, 3), (4, 4), SimConfig(seed=3, n_paths=16384, horizon=80)
        )
        assert est.mean == 0.0

    def test_parity_denominator_raises(self, fib):
        with pytest.raises(SolverError, match="no visits"):
            martin_kernel_estimate(
                fib, (2, 3), (3, 4), SimConfig(seed=3, n_paths=16384, horizon=80)
            )

    def test_profile_matches_single_target_runs(self, all_five):
        # target bookkeeping must not perturb the stream
        cfg = SimConfig(seed=12, n_paths=8192, horizon=120)
        prof = martin_kernel_profile(all_five, (2, 3), [(8, 8), (9, 9)], cfg)
        for y, est in zip([(8, 8), (9, 9)], prof):
            assert martin_kernel_estimate(all_five, (2, 3), y, cfg) == est

    def test_converges_toward_harmonic_ratio(self, all_five, all_five_geom):
        from cornerwalk.compensation import build_sequence, harmonic_eval

        seq = build_sequence(all_five_geom, (0.0, 0.0), imin=2)
        ref = harmonic_eval(seq, 2, 3).value / harmonic_eval(seq, 1, 1).value
        est = martin_kernel_estimate(
            all_five, (2, 3), (10, 10), SimConfig(seed=2, n_paths=50000)
        )
        assert est.std_error > 0.0
        assert abs(est.mean - ref) / ref < 0.1


class TestDirectionScan:
    def test_fields_and_positivity(self, fib):
        cfg = SimConfig(seed=11, n_paths=20000)
        pts = green_direction_scan(fib, (1, 1), (1.0, 1.0), [6, 10], cfg)
        assert [p.radius for p in pts] == [6.0, 10.0]
        assert pts[0].y == (4, 4)
        assert pts[1].y == (7, 7)
        for p in pts:
            assert p.norm == pytest.approx(math.hypot(*p.y))
            assert p.value > 0.0
            assert p.std_error > 0.0

    def test_scaled_values_order_by_start(self, fib):
        cfg = SimConfig(seed=12, n_paths=100000)
        vals = [
            green_direction_scan(fib, x, (1.0, 1.0), [22], cfg)[0].value
            for x in [(1, 1), (3, 3), (5, 5)]
        ]
        assert vals[0] < vals[1] < vals[2]

    def test_direction_validated(self, fib):
        cfg = SimConfig(seed=0, n_paths=16)
        for u in [(0.0, 1.0), (1.0, 0.0), (1.0, -0.2), (0.0, 0.0)]:
            with pytest.raises(ValueError, match="direction"):
                green_direction_scan(fib, (1, 1), u, [5], cfg)
        with pytest.raises(ValueError, match="positive"):
            green_direction_scan(fib, (1, 1), (1.0, 1.0), [0], cfg)


class TestSkipfreeRoot:
    def test_fibonacci_half(self, fib):
        assert skipfree_exit_root(fib) == pytest.approx(0.5, abs=1e-13)

    @pytest.mark.parametrize("delta", [Fraction(1, 2), Fraction(3, 4), Fraction(7, 8)])
    def test_sf2_family_closed_form(self, delta):
        dist = parse_model_text(sf2_model_text(delta))
        assert skipfree_exit_root(dist) == pytest.approx(
            float(sf2_exact_root(delta)), abs=1e-12
        )
        assert float(sf2_exact_ratio(delta)) == pytest.approx(float(1 - delta))

    def test_nonpositive_drift_returns_one(self):
        dist = parse_model_text("1 -1 1/2\n-1 1 1/4\n1 1 1/4\n")
        assert skipfree_exit_root(dist) == 1.0

    def test_twisted_root_solves_twisted_marginal(self, fib, fib_geom):
        tw = cramer_transform(fib_geom, (1 / math.sqrt(5), 2 / math.sqrt(5)))
        c = skipfree_exit_root(fib, twist=tw)
        assert 0.0 < c < 1.0
        weights = [
            p * math.exp(tw.phi[0] * di + tw.phi[1] * dj)
            for (di, dj), p in zip(fib.steps, fib.probs)
        ]
        total = sum(weights)
        resid = math.fsum(
            (w / total) * c**dj for (_, dj), w in zip(fib.steps, weights)
        ) - 1.0
        assert abs(resid) < 1e-12

    def test_validates_model(self):
        with pytest.raises(InvalidModelError):
            skipfree_exit_root(parse_model_text("1 1 1\n"))


class TestBrownianKernel:
    def test_boundary_start_or_target_is_zero(self):
        eye = np.eye(2)
        assert brownian_halfplane_kernel(1.0, (0.3, 0.0), (1.0, 2.0), (0, 0), eye) == 0.0
        assert brownian_halfplane_kernel(1.0, (0.3, 1.0), (1.0, 0.0), (0, 0), eye) == 0.0

    def test_unit_check_value(self):
        got = brownian_halfplane_kernel(1.0, (0.0, 1.0), (0.0, 1.0), (0.0, 0.0), np.eye(2))
        assert got == (1.0 - math.exp(-2.0)) / (2.0 * math.pi)

    def test_symmetric_in_endpoints_without_drift(self):
        sigma = np.array([[2.0, 0.4], [0.4, 1.0]])
        a = brownian_halfplane_kernel(2.5, (0.2, 0.7), (1.4, 2.1), (0, 0), sigma)
        b = brownian_halfplane_kernel(2.5, (1.4, 2.1), (0.2, 0.7), (0, 0), sigma)
        assert a == pytest.approx(b, rel=1e-12)

    def test_upper_bound_random_inputs(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            a = rng.normal(size=(2, 2))
            sigma = a @ a.T + 0.05 * np.eye(2)
            t = float(rng.uniform(0.1, 5.0))
            x = (float(rng.normal()), float(rng.uniform(0, 3)))
            y = (float(rng.normal()), float(rng.uniform(0, 3)))
            mu = rng.normal(size=2)
            val = brownian_halfplane_kernel(t, x, y, mu, sigma)
            d = np.array(y) - np.array(x) - t * mu
            quad = float(d @ np.linalg.inv(sigma) @ d) / (2 * t)
            gauss = math.exp(-quad) / (2 * math.pi * t * math.sqrt(np.linalg.det(sigma)))
            cap = (2 * x[1] * y[1] / (t * sigma[0, 0])) * gauss
            assert val <= cap * (1 + 1e-12)

    def test_equivalence_at_small_ratio(self):
        t = 1.0e6
        val = brownian_halfplane_kernel(t, (0.0, 1.0), (0.0, 1.0), (0, 0), np.eye(2))
        u = 2.0 / t
        gauss = 1.0 / (2 * math.pi * t)
        assert abs(val / (u * gauss) - 1.0) < 0.01

    def test_rejections(self):
        eye = np.eye(2)
        with pytest.raises(ValueError, match="time"):
            brownian_halfplane_kernel(0.0, (0, 1), (0, 1), (0, 0), eye)
        with pytest.raises(ValueError, match="nonnegative"):
            brownian_halfplane_kernel(1.0, (0, -1), (0, 1), (0, 0), eye)
        with pytest.raises(ValueError, match="symmetric"):
            brownian_halfplane_kernel(1.0, (0, 1), (0, 1), (0, 0), [[1, 0.3], [0.1, 1]])
        with pytest.raises(SolverError, match="positive definite"):
            brownian_halfplane_kernel(1.0, (0, 1), (0, 1), (0, 0), [[1, 1], [1, 1]])


@settings(deadline=None, max_examples=15)
@given(st.integers(0, 2**63 - 1))
def test_property_estimates_reproducible(fib, seed):
    cfg = SimConfig(seed=seed, n_paths=512, horizon=16)
    assert estimate_escape(fib, (1, 1), cfg) == estimate_escape(fib, (1, 1), cfg)
