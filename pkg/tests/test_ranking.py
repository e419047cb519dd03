import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retake_move.ranking import (
    BETA,
    MU0,
    SIGMA0,
    TAU,
    RankingError,
    RankingFileError,
    Rating,
    analyze,
    dunn_posthoc,
    kruskal_wallis,
    midranks,
    parse_rankings,
    rate,
    rate_all,
)

integrate = pytest.importorskip("scipy.integrate")
stats = pytest.importorskip("scipy.stats")


def quadrature_posterior(winner, loser, beta=BETA, tau=TAU):
    """Exact posterior moments of both skills after one win, by 1-D numerical integration."""
    out = []
    for me, other, sign in ((winner, loser, 1.0), (loser, winner, -1.0)):
        m, s = me.mu, math.sqrt(me.sigma**2 + tau**2)
        so = math.sqrt(other.sigma**2 + tau**2)
        c = math.sqrt(2 * beta**2 + so**2)

        def dens(x):
            return stats.norm.pdf(x, m, s) * stats.norm.cdf(sign * (x - other.mu) / c)

        lo, hi = m - 12 * s, m + 12 * s
        z = integrate.quad(dens, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        mean = integrate.quad(lambda x: x * dens(x), lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0] / z
        var = integrate.quad(lambda x: (x - mean) ** 2 * dens(x), lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0] / z
        out.append(Rating(mean, math.sqrt(var)))
    return out


@pytest.mark.parametrize("a,b", [(Rating(), Rating()), (Rating(30.0, 4.0), Rating(22.0, 7.0)), (Rating(18.0, 2.0), Rating(35.0, 6.0))])
def test_two_entity_update_matches_quadrature(a, b):
    post = rate({"a": a, "b": b}, ["a", "b"])
    qa, qb = quadrature_posterior(a, b)
    assert abs(post["a"].mu - qa.mu) <= 1e-4 and abs(post["a"].sigma - qa.sigma) <= 1e-4
    assert abs(post["b"].mu - qb.mu) <= 1e-4 and abs(post["b"].sigma - qb.sigma) <= 1e-4


def test_two_entity_symmetric_update_is_exactly_antisymmetric():
    post = rate({"a": Rating(), "b": Rating()}, ["a", "b"])
    assert abs((post["a"].mu - MU0) - (MU0 - post["b"].mu)) <= 1e-9
    assert post["a"].sigma < SIGMA0 and post["b"].sigma < SIGMA0


@settings(max_examples=30, deadline=None)
@given(st.floats(10, 40), st.floats(1, 9), st.integers(2, 6))
def test_symmetric_priors_give_antisymmetric_updates(mu, sigma, n):
    names = [f"e{i}" for i in range(n)]
    post = rate({e: Rating(mu, sigma) for e in names}, names)
    # Longer chains stop at the message-passing tolerance, so symmetry holds to that level.
    tol = 1e-9 if n == 2 else 1e-5
    for i in range(n):
        j = n - 1 - i
        assert abs((post[names[i]].mu - mu) + (post[names[j]].mu - mu)) <= tol
        assert abs(post[names[i]].sigma - post[names[j]].sigma) <= tol


@settings(max_examples=20, deadline=None)
@given(st.permutations(range(4)), st.lists(st.floats(15, 35), min_size=4, max_size=4))
def test_relabeling_permutes_outputs(perm, mus):
    names = ["a", "b", "c", "d"]
    ratings = {n: Rating(m, 5.0) for n, m in zip(names, mus)}
    post = rate(ratings, names)
    renamed = {f"x{perm[i]}": ratings[n] for i, n in enumerate(names)}
    post2 = rate(renamed, [f"x{perm[i]}" for i in range(4)])
    for i, n in enumerate(names):
        assert post2[f"x{perm[i]}"] == post[n]


def test_sigma_never_grows_beyond_dynamics():
    rng = np.random.default_rng(0)
    for _ in range(20):
        ratings = {e: Rating(rng.uniform(15, 35), rng.uniform(1, 8)) for e in "abcd"}
        order = list(rng.permutation(list("abcd")))
        post = rate(ratings, order)
        for e in "abcd":
            assert post[e].sigma <= math.sqrt(ratings[e].sigma ** 2 + TAU**2) + 1e-12


def test_always_first_entity_ends_on_top():
    rng = np.random.default_rng(1)
    rankings = [["X"] + list(rng.permutation(["p", "q", "r"])) for _ in range(120)]
    r = rate_all(["X", "p", "q", "r"], rankings)
    assert max(r, key=lambda e: r[e].mu) == "X"
    assert all(r["X"].mu > r[e].mu for e in "pqr")


def test_unanimous_rankings_order_strictly():
    order = ["x", "y", "z", "w"]
    r = rate_all(order, [order] * 10)
    mus = [r[e].mu for e in order]
    assert all(a > b for a, b in zip(mus, mus[1:]))
    assert all(r[e].sigma < SIGMA0 for e in order)


def test_rate_leaves_others_and_rejects_bad_rankings():
    base = {"a": Rating(), "b": Rating(), "c": Rating(MU0 + 1)}
    post = rate(base, ["b", "a"])
    assert post["c"] == base["c"]
    for bad in (["a"], ["a", "a"], ["a", "q"]):
        with pytest.raises(RankingError):
            rate(base, bad)


def test_midranks_share_ties():
    np.testing.assert_array_equal(midranks([3, 1, 3, 2]), [3.5, 1, 3.5, 2])


def test_kruskal_wallis_fixture():
    groups = [[1, 2, 3], [4, 5, 6], [7, 8, 9]]
    h, p = kruskal_wallis(groups)
    assert abs(h - 7.2) <= 1e-9
    assert p == pytest.approx(math.exp(-3.6), abs=1e-12)
    ref = stats.kruskal(*groups)
    assert h == pytest.approx(ref.statistic, abs=1e-12)


def test_kruskal_wallis_with_ties_matches_scipy():
    groups = [[1, 1, 2, 3], [2, 2, 4], [3, 4, 4, 4, 1]]
    h, p = kruskal_wallis(groups)
    ref = stats.kruskal(*groups)
    assert h == pytest.approx(ref.statistic, abs=1e-12) and p == pytest.approx(ref.pvalue, abs=1e-10)


def test_all_tied_is_no_evidence():
    assert kruskal_wallis([[2, 2], [2, 2, 2]]) == (0.0, 1.0)


def test_kruskal_wallis_null_calibration():
    rng = np.random.default_rng(2)
    ps = [kruskal_wallis([rng.normal(size=1000), rng.normal(size=1000)])[1] for _ in range(100)]
    assert 0.2 <= np.median(ps) <= 0.8


def test_dunn_identical_groups():
    (d,) = dunn_posthoc([[1, 2, 3], [1, 2, 3]])
    assert d.z == 0 and d.p_adjusted == 1.0


def test_dunn_adjusted_p_not_below_raw():
    rng = np.random.default_rng(3)
    for d in dunn_posthoc([rng.normal(size=20) + k * 0.3 for k in range(4)]):
        assert d.p_adjusted >= d.p


def test_dunn_fixture():
    d = {(r.i, r.j): r for r in dunn_posthoc([[1, 2, 3], [4, 5, 6], [7, 8, 9]])}
    # Mean ranks 2, 5, 8 with standard error sqrt(n(n+1)/12 * (1/3 + 1/3)) = sqrt(5).
    assert d[(0, 1)].z == pytest.approx(-3 / math.sqrt(5), abs=1e-12)
    assert d[(0, 2)].z == pytest.approx(-6 / math.sqrt(5), abs=1e-12)
    assert d[(1, 2)].z == pytest.approx(-3 / math.sqrt(5), abs=1e-12)
    assert d[(0, 2)].p_adjusted == pytest.approx(min(1.0, 3 * 2 * stats.norm.sf(6 / math.sqrt(5))), abs=1e-12)


def test_parse_rankings_collects_rejects():
    rows = [
        "evaluator,round,rank1,rank2,rank3",
        "e1,r1,human,mlmove,rule",
        "e1,r2,human,human,rule",
        "e2,r1,human,mlmove",
        "e2,r2,mlmove,rule,human",
        "e3,r3,mlmove,rule,robot",
    ]
    records, rejects = parse_rankings(rows)
    assert [r.order for r in records] == [("human", "mlmove", "rule"), ("mlmove", "rule", "human")]
    assert [ln for ln, _ in rejects] == [3, 4, 6]
    with pytest.raises(RankingFileError):
        parse_rankings([])


def test_analyze_table_is_sorted_by_mean():
    records, _ = parse_rankings(["a,1,x,y,z", "b,1,x,z,y", "c,2,x,y,z"])
    res = analyze(records)
    assert [row["entity"] for row in res["ratings"]][0] == "x"
    assert res["rankings"] == 3 and len(res["dunn"]) == 3
