"""TrueSkill updates for strict rankings of single-entity teams.

Each ranking is a chain factor graph: skill -> performance -> difference of
adjacent performances -> truncation (the better-ranked entity performed
better).  Messages are Gaussians in natural parameters and the chain is swept
forward and backward until the truncation messages settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..numerics.special import normal_cdf, normal_pdf

MU0 = 25.0
SIGMA0 = MU0 / 3.0
BETA = SIGMA0 / 2.0
TAU = SIGMA0 / 100.0
TOL = 1e-6
MAX_SWEEPS = 100


class RankingError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, residual, sweeps):
        super().__init__(f"message passing did not converge after {sweeps} sweeps (residual {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True)
class Rating:
    mu: float = MU0
    sigma: float = SIGMA0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def conservative(self):
        return self.mu - 3.0 * self.sigma


@dataclass(frozen=True)
class Gaussian:
    """Natural parameters: precision ``pi`` and precision-adjusted mean ``tau``."""

    pi: float = 0.0
    tau: float = 0.0

    @classmethod
    def from_moments(cls, mu, var):
        pi = 1.0 / var
        return cls(pi, pi * mu)

    @property
    def mu(self):
        return self.tau / self.pi if self.pi else 0.0

    @property
    def var(self):
        return 1.0 / self.pi if self.pi else math.inf

    def __mul__(self, other):
        return Gaussian(self.pi + other.pi, self.tau + other.tau)

    def __truediv__(self, other):
        return Gaussian(self.pi - other.pi, self.tau - other.tau)


UNIFORM = Gaussian()


def v_win(t):
    """Mean correction of a Gaussian truncated to positive values."""
    denom = normal_cdf(t)
    if denom < 1e-300:
        # Asymptotic limit of phi(t)/Phi(t) for very negative t.
        return -t
    return normal_pdf(t) / denom


def w_win(t):
    v = v_win(t)
    return v * (v + t)


def _sum_message(a, b, sign):
    """Message a + sign*b through a linear factor; uniform if either side is uniform."""
    if a.pi == 0.0 or b.pi == 0.0:
        return UNIFORM
    return Gaussian.from_moments(a.mu + sign * b.mu, a.var + b.var)


def _check_ranking(order, ratings):
    if len(order) < 2:
        raise RankingError("a ranking needs at least two entities")
    if len(set(order)) != len(order):
        raise RankingError(f"ranking repeats an entity: {list(order)}")
    missing = [e for e in order if e not in ratings]
    if missing:
        raise RankingError(f"unrated entities in ranking: {missing}")


def rate(ratings, order, beta=BETA, tau=TAU, tol=TOL, max_sweeps=MAX_SWEEPS):
    """Posterior ratings after one strict ranking (``order[0]`` best).

    ``ratings`` maps entity -> Rating; entities not in ``order`` are returned unchanged.
    """
    _check_ranking(order, ratings)
    n = len(order)
    skill_prior = [Gaussian.from_moments(ratings[e].mu, ratings[e].sigma ** 2 + tau**2) for e in order]
    perf_prior = [Gaussian.from_moments(s.mu, s.var + beta**2) for s in skill_prior]
    up = [UNIFORM] * (n - 1)  # diff factor k -> perf k (winner side)
    down = [UNIFORM] * (n - 1)  # diff factor k -> perf k+1 (loser side)
    trunc = [UNIFORM] * (n - 1)  # truncation -> diff k

    def perf_marginal(i):
        g = perf_prior[i]
        if i > 0:
            g = g * down[i - 1]
        if i < n - 1:
            g = g * up[i]
        return g

    def update(k):
        cav_a = perf_marginal(k) / up[k]
        cav_b = perf_marginal(k + 1) / down[k]
        d = _sum_message(cav_a, cav_b, -1.0)
        c = math.sqrt(d.var)
        t = d.mu / c
        v, w = v_win(t), w_win(t)
        marg = Gaussian.from_moments(d.mu + c * v, d.var * (1.0 - w))
        new = marg / d
        delta = max(abs(new.mu - trunc[k].mu), abs(math.sqrt(new.var) - math.sqrt(trunc[k].var))) if trunc[k].pi else math.inf
        trunc[k] = new
        up[k] = _sum_message(new, cav_b, 1.0)
        down[k] = _sum_message(cav_a, new, -1.0)
        return delta

    schedule = list(range(n - 1)) + list(range(n - 3, -1, -1))
    residual = math.inf
    for sweep in range(1, max_sweeps + 1):
        residual = max(update(k) for k in schedule)
        if n == 2 or residual < tol:
            break
    else:
        raise ConvergenceError(residual, max_sweeps)

    out = dict(ratings)
    for i, e in enumerate(order):
        lik = perf_marginal(i) / perf_prior[i]
        post = skill_prior[i]
        if lik.pi:
            post = post * Gaussian.from_moments(lik.mu, lik.var + beta**2)
        out[e] = Rating(post.mu, math.sqrt(post.var))
    return out


def rate_all(entities, rankings, **kw):
    """Apply rankings sequentially from default priors."""
    ratings = {e: Rating() for e in entities}
    for order in rankings:
        ratings = rate(ratings, order, **kw)
    return ratings
