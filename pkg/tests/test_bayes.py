"""Posterior region probabilities: quadrature and Monte Carlo oracles."""

import math
import random

import pytest
from scipy import integrate

from sebench.bayes import (
    CompareError,
    PairedDifferences,
    PosteriorSummary,
    correlated_t_test,
    signed_rank_test,
)

ROPE = (-0.01, 0.01)


# ---------------------------------------------------------------------------
# Quadrature oracle for the correlated t-test: integrate the density directly
# ---------------------------------------------------------------------------

def t_density(x, df, loc, scale):
    z = (x - loc) / scale
    log_norm = (math.lgamma((df + 1) / 2) - math.lgamma(df / 2)
                - 0.5 * math.log(df * math.pi) - math.log(scale))
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(z * z / df))


def quadrature_triple(values, rho, lo, hi):
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    scale = math.sqrt(var * (1 / n + rho / (1 - rho)))
    df = n - 1
    dens = lambda x: t_density(x, df, mean, scale)
    p_left, _ = integrate.quad(dens, -math.inf, lo)
    p_rope, _ = integrate.quad(dens, lo, hi)
    p_right, _ = integrate.quad(dens, hi, math.inf)
    return p_left, p_rope, p_right


T_TEST_FIXTURES = [
    # the 100-value arithmetic grid 0.02, 0.04, ..., 2.00
    tuple(0.02 * k for k in range(1, 101)),
    # ten mixed-sign differences hovering around the rope
    (0.02, -0.015, 0.007, 0.012, -0.004, 0.025, -0.018, 0.009, 0.001, 0.016),
    # mostly-negative differences
    (-0.05, -0.03, -0.07, -0.02, -0.06, -0.04, 0.01, -0.05),
]


class TestCorrelatedTTest:
    def test_point_mass_in_rope(self):
        d = PairedDifferences((0.0,) * 10)
        summary = correlated_t_test(d, ROPE, rho=0.1)
        assert summary.p_rope == 1.0
        assert summary.p_left == summary.p_right == 0.0

    def test_point_mass_right_of_rope(self):
        d = PairedDifferences((0.5,) * 10)
        summary = correlated_t_test(d, ROPE, rho=0.1)
        assert summary.p_right == 1.0

    def test_point_mass_left_of_rope(self):
        d = PairedDifferences((-0.5,) * 6)
        summary = correlated_t_test(d, ROPE, rho=0.1)
        assert summary.p_left == 1.0

    @pytest.mark.parametrize("values", T_TEST_FIXTURES)
    def test_matches_quadrature_oracle(self, values):
        summary = correlated_t_test(PairedDifferences(values), ROPE, rho=0.1)
        expected = quadrature_triple(values, 0.1, *ROPE)
        assert summary.p_left == pytest.approx(expected[0], abs=1e-6)
        assert summary.p_rope == pytest.approx(expected[1], abs=1e-6)
        assert summary.p_right == pytest.approx(expected[2], abs=1e-6)

    @pytest.mark.parametrize("values", T_TEST_FIXTURES)
    def test_antisymmetry_exact(self, values):
        d_pos = PairedDifferences(values)
        d_neg = PairedDifferences(tuple(-v for v in values))
        pos = correlated_t_test(d_pos, ROPE, rho=0.1)
        neg = correlated_t_test(d_neg, ROPE, rho=0.1)
        assert pos.p_left == pytest.approx(neg.p_right, abs=1e-12)
        assert pos.p_right == pytest.approx(neg.p_left, abs=1e-12)

    @pytest.mark.parametrize("values", T_TEST_FIXTURES)
    def test_scale_equivariance_exact(self, values):
        c = 7.3
        base = correlated_t_test(PairedDifferences(values), ROPE, rho=0.1)
        scaled = correlated_t_test(
            PairedDifferences(tuple(c * v for v in values)),
            (ROPE[0] * c, ROPE[1] * c), rho=0.1)
        assert scaled.p_left == pytest.approx(base.p_left, abs=1e-12)
        assert scaled.p_rope == pytest.approx(base.p_rope, abs=1e-12)

    def test_simplex(self):
        for values in T_TEST_FIXTURES:
            s = correlated_t_test(PairedDifferences(values), ROPE, rho=0.1)
            assert s.p_left + s.p_rope + s.p_right == pytest.approx(1.0, abs=1e-9)

    def test_n_below_two_is_error(self):
        with pytest.raises(CompareError):
            correlated_t_test(PairedDifferences((0.1,)), ROPE, rho=0.1)

    def test_rho_required(self):
        with pytest.raises(CompareError, match="rho"):
            correlated_t_test(PairedDifferences((0.1, 0.2)), ROPE)

    def test_rho_carried_by_differences(self):
        d = PairedDifferences((0.1, 0.2, 0.15), rho=0.1)
        explicit = correlated_t_test(PairedDifferences((0.1, 0.2, 0.15)),
                                     ROPE, rho=0.1)
        implicit = correlated_t_test(d, ROPE)
        assert implicit.p_right == explicit.p_right

    def test_invalid_rope_rejected(self):
        with pytest.raises(CompareError):
            correlated_t_test(PairedDifferences((0.1, 0.2)), (0.01, -0.01),
                              rho=0.1)


# ---------------------------------------------------------------------------
# Signed-rank test: frozen values from an independent Monte Carlo oracle
# ---------------------------------------------------------------------------

FIXTURE_10 = (0.02, -0.01, 0.03, 0.005, -0.02, 0.04, 0.015, -0.005, 0.025, 0.01)

# Computed by mc_oracle() below with reps=50_000, seed=991 (stdlib gamma
# draws, explicit double-loop accumulation): frozen so the fast test does
# not re-run the slow pure-Python loop.
ORACLE_P = (0.00052, 0.52114, 0.47834)
ORACLE_MEAN_THETA = (0.04935, 0.47762, 0.47303)


def mc_oracle(values, lo, hi, reps, prior_weight=0.5, seed=991):
    rng = random.Random(seed)
    z = [0.0] + list(values)
    n = len(z)
    alpha = [prior_weight] + [1.0] * (n - 1)
    pair_mean = [[(z[i] + z[j]) / 2.0 for j in range(n)] for i in range(n)]
    wins = [0, 0, 0]
    for _ in range(reps):
        g = [rng.gammavariate(a, 1.0) for a in alpha]
        total = sum(g)
        w = [x / total for x in g]
        tl = tr = 0.0
        for i in range(n):
            wi = w[i]
            row = pair_mean[i]
            for j in range(n):
                m = row[j]
                if m < lo:
                    tl += wi * w[j]
                elif m > hi:
                    tr += wi * w[j]
        trope = 1.0 - tl - tr
        if tl > tr and tl > trope:
            wins[0] += 1
        elif tr > tl and tr > trope:
            wins[2] += 1
        else:
            wins[1] += 1
    return tuple(w / reps for w in wins)


class TestSignedRankTest:
    def test_matches_frozen_mc_oracle(self):
        s = signed_rank_test(PairedDifferences(FIXTURE_10), ROPE,
                             mc_samples=50_000, seed=0)
        assert s.p_left == pytest.approx(ORACLE_P[0], abs=0.01)
        assert s.p_rope == pytest.approx(ORACLE_P[1], abs=0.01)
        assert s.p_right == pytest.approx(ORACLE_P[2], abs=0.01)
        for got, want in zip(s.mean_theta, ORACLE_MEAN_THETA):
            assert got == pytest.approx(want, abs=0.01)

    @pytest.mark.slow
    def test_oracle_rederivation(self):
        rederived = mc_oracle(FIXTURE_10, *ROPE, reps=50_000)
        for got, want in zip(rederived, ORACLE_P):
            assert got == pytest.approx(want, abs=1e-9)

    def test_all_values_far_right(self):
        d = PairedDifferences((1.0,) * 12)
        s = signed_rank_test(d, ROPE, mc_samples=10_000, seed=1)
        assert s.p_right >= 0.99

    def test_all_values_far_left(self):
        d = PairedDifferences((-1.0,) * 12)
        s = signed_rank_test(d, ROPE, mc_samples=10_000, seed=1)
        assert s.p_left >= 0.99

    def test_simplex(self):
        s = signed_rank_test(PairedDifferences(FIXTURE_10), ROPE,
                             mc_samples=5_000, seed=3)
        assert s.p_left + s.p_rope + s.p_right == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_within_mc_tolerance(self):
        values = (0.05, -0.05, 0.08, -0.08, 0.02, -0.02, 0.11, -0.11)
        s = signed_rank_test(PairedDifferences(values), (-0.01, 0.01),
                             mc_samples=50_000, seed=5)
        assert abs(s.p_left - s.p_right) <= 0.02

    def test_antisymmetry_within_mc_tolerance(self):
        pos = signed_rank_test(PairedDifferences(FIXTURE_10), ROPE,
                               mc_samples=50_000, seed=7)
        neg = signed_rank_test(
            PairedDifferences(tuple(-v for v in FIXTURE_10)), ROPE,
            mc_samples=50_000, seed=7)
        assert abs(pos.p_left - neg.p_right) <= 0.02
        assert abs(pos.p_right - neg.p_left) <= 0.02

    def test_scale_equivariance_same_seed(self):
        # values chosen so no pairwise mean sits exactly on a rope bound,
        # where float rescaling could flip a strict inequality
        values = (0.0213, -0.0117, 0.0309, 0.0052, -0.0198, 0.0411,
                  0.0153, -0.0049, 0.0257, 0.0101)
        c = 3.0
        base = signed_rank_test(PairedDifferences(values), ROPE,
                                mc_samples=5_000, seed=11)
        scaled = signed_rank_test(
            PairedDifferences(tuple(c * v for v in values)),
            (ROPE[0] * c, ROPE[1] * c), mc_samples=5_000, seed=11)
        assert scaled.p_left == base.p_left
        assert scaled.p_rope == base.p_rope
        assert scaled.p_right == base.p_right

    def test_seed_reproducibility(self):
        one = signed_rank_test(PairedDifferences(FIXTURE_10), ROPE,
                               mc_samples=5_000, seed=13)
        two = signed_rank_test(PairedDifferences(FIXTURE_10), ROPE,
                               mc_samples=5_000, seed=13)
        assert one == two

    def test_invalid_rope_rejected(self):
        with pytest.raises(CompareError):
            signed_rank_test(PairedDifferences(FIXTURE_10), (0.01, 0.01))

    def test_minimum_samples_enforced(self):
        with pytest.raises(CompareError):
            signed_rank_test(PairedDifferences(FIXTURE_10), ROPE,
                             mc_samples=10)


class TestPairedDifferences:
    def test_from_results_pairs_up(self):
        d = PairedDifferences.from_results([0.9, 0.8], [0.7, 0.85])
        assert d.values == pytest.approx((0.2, -0.05))

    def test_length_mismatch(self):
        with pytest.raises(CompareError):
            PairedDifferences.from_results([0.9], [0.7, 0.8])

    def test_rho_validated(self):
        with pytest.raises(CompareError):
            PairedDifferences((0.1,), rho=1.0)


class TestPosteriorSummary:
    def test_simplex_enforced(self):
        with pytest.raises(CompareError):
            PosteriorSummary(0.5, 0.2, 0.2, rope=ROPE, method="correlated_t")

    def test_serialization(self):
        s = signed_rank_test(PairedDifferences(FIXTURE_10), ROPE,
                             mc_samples=2_000, seed=0)
        payload = s.as_dict()
        assert payload["method"] == "signed_rank"
        assert payload["mc_samples"] == 2_000
        assert len(payload["mean_theta"]) == 3
