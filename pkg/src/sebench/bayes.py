"""Bayesian comparison of two classifiers from paired fold differences.

Two posteriors over the three decision regions (left of the ROPE, inside
it, right of it): a correlated t-test whose Student-t posterior inflates
the variance by rho/(1-rho) to account for overlapping cross-validation
training sets, and a Dirichlet-weighted Monte Carlo signed-rank test with
a pseudo-observation at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats


class CompareError(Exception):
    pass


@dataclass(frozen=True)
class PairedDifferences:
    """Per-fold metric differences metric_A - metric_B."""

    values: tuple[float, ...]
    rho: Optional[float] = None

    def __post_init__(self) -> None:
        if self.rho is not None and not 0.0 <= self.rho < 1.0:
            raise CompareError(f"rho must be in [0, 1), got {self.rho}")

    @property
    def n(self) -> int:
        return len(self.values)

    @classmethod
    def from_results(cls, a: Sequence[float], b: Sequence[float],
                     rho: Optional[float] = None) -> "PairedDifferences":
        if len(a) != len(b):
            raise CompareError(
                f"paired results have different lengths ({len(a)} vs {len(b)})")
        return cls(values=tuple(x - y for x, y in zip(a, b)), rho=rho)


@dataclass(frozen=True)
class PosteriorSummary:
    p_left: float
    p_rope: float
    p_right: float
    rope: tuple[float, float]
    method: str  # "signed_rank" | "correlated_t"
    mc_samples: Optional[int] = None
    seed: Optional[int] = None
    mean_theta: Optional[tuple[float, float, float]] = None

    def __post_init__(self) -> None:
        total = self.p_left + self.p_rope + self.p_right
        if abs(total - 1.0) > 1e-9:
            raise CompareError(f"posterior probabilities sum to {total}, not 1")

    def as_dict(self) -> dict:
        out = {
            "method": self.method,
            "rope": list(self.rope),
            "p_left": self.p_left,
            "p_rope": self.p_rope,
            "p_right": self.p_right,
        }
        if self.mc_samples is not None:
            out["mc_samples"] = self.mc_samples
        if self.seed is not None:
            out["seed"] = self.seed
        if self.mean_theta is not None:
            out["mean_theta"] = list(self.mean_theta)
        return out


def _check_rope(rope: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(rope[0]), float(rope[1])
    if not lo < hi:
        raise CompareError(f"rope bounds must satisfy lo < hi, got ({lo}, {hi})")
    return lo, hi


def correlated_t_test(d: PairedDifferences, rope: tuple[float, float],
                      rho: Optional[float] = None) -> PosteriorSummary:
    """Student-t posterior over the mean difference with correlation correction.

    The posterior has n-1 degrees of freedom, location at the sample mean and
    squared scale s^2 * (1/n + rho/(1-rho)) with s^2 the sample variance.
    When s is zero the posterior degenerates to a point mass at the mean.
    """
    lo, hi = _check_rope(rope)
    if d.n < 2:
        raise CompareError(f"correlated t-test needs n >= 2, got {d.n}")
    if rho is None:
        rho = d.rho
    if rho is None:
        raise CompareError("rho is required (1/k for k-fold cross-validation)")
    if not 0.0 <= rho < 1.0:
        raise CompareError(f"rho must be in [0, 1), got {rho}")

    values = np.asarray(d.values, dtype=float)
    mean = float(values.mean())
    var = float(values.var(ddof=1))
    if var == 0.0:
        if mean < lo:
            triple = (1.0, 0.0, 0.0)
        elif mean > hi:
            triple = (0.0, 0.0, 1.0)
        else:
            triple = (0.0, 1.0, 0.0)
        return PosteriorSummary(*triple, rope=(lo, hi), method="correlated_t")

    scale = float(np.sqrt(var * (1.0 / d.n + rho / (1.0 - rho))))
    posterior = stats.t(df=d.n - 1, loc=mean, scale=scale)
    p_left = float(posterior.cdf(lo))
    p_right = float(1.0 - posterior.cdf(hi))
    p_rope = 1.0 - p_left - p_right
    return PosteriorSummary(p_left, p_rope, p_right, rope=(lo, hi),
                            method="correlated_t")


def signed_rank_test(d: PairedDifferences, rope: tuple[float, float],
                     mc_samples: int = 50_000, prior_weight: float = 0.5,
                     seed: int = 0) -> PosteriorSummary:
    """Dirichlet-weighted Monte Carlo posterior over pairwise mean differences.

    The data are augmented with a pseudo-observation z0 = 0 carrying prior
    weight ``prior_weight``. Each repetition draws Dirichlet weights and
    accumulates theta_region = sum_ij w_i w_j [(z_i+z_j)/2 in region]; the
    reported probability of a region is the fraction of repetitions in which
    its theta is strictly greatest, ties credited to the ROPE. The mean
    theta triple is included for transparency.
    """
    lo, hi = _check_rope(rope)
    if d.n < 1:
        raise CompareError("signed-rank test needs at least one difference")
    if mc_samples < 1000:
        raise CompareError(f"mc_samples must be >= 1000, got {mc_samples}")

    z = np.concatenate([[0.0], np.asarray(d.values, dtype=float)])
    pair_means = (z[:, None] + z[None, :]) / 2.0
    left_mask = (pair_means < lo).astype(float)
    right_mask = (pair_means > hi).astype(float)

    rng = np.random.default_rng(seed)
    alpha = np.concatenate([[prior_weight], np.ones(d.n)])
    weights = rng.dirichlet(alpha, size=mc_samples)

    theta_left = np.einsum("ri,ij,rj->r", weights, left_mask, weights)
    theta_right = np.einsum("ri,ij,rj->r", weights, right_mask, weights)
    theta_rope = 1.0 - theta_left - theta_right

    wins_left = (theta_left > theta_right) & (theta_left > theta_rope)
    wins_right = (theta_right > theta_left) & (theta_right > theta_rope)
    p_left = float(wins_left.mean())
    p_right = float(wins_right.mean())
    p_rope = 1.0 - p_left - p_right

    return PosteriorSummary(
        p_left, p_rope, p_right, rope=(lo, hi), method="signed_rank",
        mc_samples=mc_samples, seed=seed,
        mean_theta=(float(theta_left.mean()), float(theta_rope.mean()),
                    float(theta_right.mean())))
