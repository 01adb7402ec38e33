import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrcd.acceptance import LISTED_M2
from lrcd.cumulant_lab import (
    Partition, SizeGuardError, TreeGraph, TwoWayTable, admissible_partitions,
    admissible_partitions_by_filter, cumulant_from_moments, enumerate_partitions,
    enumerate_trees, is_indecomposable, leaf_sum, lmsd_component_cumulant, lmsd_table,
    lognormal_pair_cumulant, loglog_slope, mc_cumulant, naive_tree_sum, path_tree,
    product_cumulant, prufer_decode, set_partitions, star_tree, tree_sum, tree_sum_slope,
)
from lrcd.duration_models import LmsdSpec
from lrcd.gaussian_lm import LongMemoryGaussianSpec, autocovariance_h

BELL = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 6: 203, 7: 877, 8: 4140, 9: 21147, 10: 115975}


def _part(*blocks):
    return Partition(tuple(frozenset(b) for b in blocks))


@pytest.mark.parametrize("n", range(2, 11))
def test_partition_counts_are_bell(n):
    table = TwoWayTable((n,))
    if n <= 6:
        parts = enumerate_partitions(table)
        assert len(parts) == BELL[n]
        assert len({p.blocks for p in parts}) == BELL[n]
        assert all(p.covers(table) for p in parts)
    else:
        assert sum(1 for _ in set_partitions(range(n))) == BELL[n]


def test_partition_size_guard():
    with pytest.raises(SizeGuardError):
        enumerate_partitions(TwoWayTable((7, 6)))


def test_partition_rejects_overlap():
    with pytest.raises(ValueError):
        _part({(1, 1), (1, 2)}, {(1, 2)})


def test_indecomposable_examples():
    t = lmsd_table(2)
    assert is_indecomposable(_part({(1, 1), (2, 1)}, {(1, 2), (2, 2)}), t)
    assert not is_indecomposable(_part({(1, 1), (1, 2)}, {(2, 1), (2, 2)}), t)
    single = TwoWayTable((3,))
    assert is_indecomposable(_part({(1, 1)}, {(1, 2)}, {(1, 3)}), single)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_indecomposable_invariant_under_relabeling(data):
    rows = data.draw(st.lists(st.integers(1, 3), min_size=1, max_size=3))
    table = TwoWayTable(tuple(rows))
    parts = enumerate_partitions(table)
    part = parts[data.draw(st.integers(0, len(parts) - 1))]
    row_perm = data.draw(st.permutations(range(1, len(rows) + 1)))
    col_perms = [data.draw(st.permutations(range(1, r + 1))) for r in rows]
    # the relabeled table has row row_perm[i-1] holding the entries of row i
    new_rows = [0] * len(rows)
    for i, r in enumerate(rows, 1):
        new_rows[row_perm[i - 1] - 1] = r
    relabel = {(i, j): (row_perm[i - 1], col_perms[i - 1][j - 1])
               for i, r in enumerate(rows, 1) for j in range(1, r + 1)}
    moved = Partition(tuple(frozenset(relabel[e] for e in b) for b in part.blocks))
    assert is_indecomposable(part, table) == is_indecomposable(moved, TwoWayTable(tuple(new_rows)))


def test_admissible_m2_matches_listed_set():
    got = {frozenset(p.blocks) for parts in admissible_partitions(2).values() for p in parts}
    assert got == LISTED_M2


def test_admissible_m3_groups():
    groups = admissible_partitions(3)
    assert {k: len(v) for k, v in groups.items()} == {1: 5, 2: 9, 3: 1}


@pytest.mark.parametrize("m", [2, 3, 4])
def test_admissible_product_construction_matches_filter(m):
    a = admissible_partitions(m)
    b = admissible_partitions_by_filter(m)
    assert {k: {p.blocks for p in v} for k, v in a.items()} == \
        {k: {p.blocks for p in v} for k, v in b.items()}


def test_admissible_m4_single_e_block_oracle():
    # with the e column in one block every eps partition already communicates
    # through it, so L=1 has Bell(4) members; brute-force filter count is frozen at 15
    assert len(admissible_partitions(4)[1]) == BELL[4] == 15


def test_admissible_range_guard():
    with pytest.raises(SizeGuardError):
        admissible_partitions(7)


def test_product_cumulant_single_entry_rows_is_covariance():
    t = TwoWayTable((1, 1))
    oracle = lambda b: 0.7 if len(b) == 2 else 5.0
    assert product_cumulant(t, oracle) == pytest.approx(0.7)


def test_product_cumulant_independent_rows_is_zero():
    t = TwoWayTable((2, 2))
    oracle = lambda b: 0.0 if len({i for i, _ in b}) > 1 else 1.3
    assert product_cumulant(t, oracle) == 0.0


def test_lmsd_covariance_from_partitions(lmsd03):
    g = lmsd03.gaussian
    lag = 5
    oracle = lmsd_component_cumulant(lmsd03, (0, lag))
    formula = math.exp(g.variance) * math.expm1(autocovariance_h(g, lag))
    assembled = product_cumulant(lmsd_table(2), oracle)
    assert assembled == pytest.approx(formula, rel=1e-12)
    # Monte Carlo oracle on independent (tau_0, tau_5) pairs
    rng = np.random.default_rng(55)
    r0, r = autocovariance_h(g, 0), autocovariance_h(g, lag)
    n = 10 ** 6
    h = rng.multivariate_normal([0, 0], [[r0, r], [r, r0]], size=n)
    tau = np.exp(h) * rng.standard_exponential((n, 2))
    est = mc_cumulant(tau, 2)
    assert abs(est.value - formula) < 3 * est.se


def test_lmsd_variance_from_partitions(lmsd03):
    # lag 0: var(e^h eps) = E e^{2h} E eps^2 - (E e^h)^2 = e^{2 s2} 2 - e^{s2}
    s2 = lmsd03.gaussian.variance
    assembled = product_cumulant(lmsd_table(2), lmsd_component_cumulant(lmsd03, (0, 0)))
    assert assembled == pytest.approx(2 * math.exp(2 * s2) - math.exp(s2), rel=1e-12)


def test_cumulant_from_moments_exponential():
    # E X^k = k! for unit exponential; cumulants are (r-1)!
    moment = lambda items: float(math.factorial(len(items)))
    for r in range(1, 6):
        assert cumulant_from_moments(moment, list(range(r))) == pytest.approx(math.factorial(r - 1))


def test_lognormal_pair_cumulant():
    white = LongMemoryGaussianSpec(0.0, sigma_e=0.8)
    assert lognormal_pair_cumulant(white, 3) == 0.0
    spec = LongMemoryGaussianSpec.with_variance(0.3, 0.5)
    assert lognormal_pair_cumulant(spec, 0) == pytest.approx(math.exp(0.5) * math.expm1(0.5))


def test_lognormal_pair_lag10_monte_carlo(g03):
    rng = np.random.default_rng(10)
    r0, r = autocovariance_h(g03, 0), autocovariance_h(g03, 10)
    h = rng.multivariate_normal([0, 0], [[r0, r], [r, r0]], size=10 ** 6)
    est = mc_cumulant(np.exp(h), 2)
    assert abs(est.value - lognormal_pair_cumulant(g03, 10)) < 3 * est.se


@pytest.mark.parametrize("m", range(2, 8))
def test_tree_counts(m):
    trees = enumerate_trees(m)
    assert len(trees) == m ** (m - 2)
    assert len({t.edges for t in trees}) == len(trees)
    assert all(len(t.edges) == m - 1 for t in trees)


def test_prufer_known_code():
    # code (3, 3, 3) on 5 vertices is the star at 3 plus the final edge
    assert sorted(tuple(sorted(e)) for e in prufer_decode((3, 3, 3), 5)) == \
        [(0, 3), (1, 3), (2, 3), (3, 4)]


def test_tree_graph_invariants():
    with pytest.raises(ValueError):
        TreeGraph((0, 1, 2, 3), ((0, 1), (2, 3), (0, 1)))
    with pytest.raises(ValueError):
        TreeGraph((0, 1, 2, 3), ((0, 1), (2, 3)))
    with pytest.raises(ValueError):
        TreeGraph((0, 1, 2, 3), ((0, 1), (1, 2), (2, 0)))
    with pytest.raises(SizeGuardError):
        enumerate_trees(8)


def test_tree_sum_matches_naive(g03):
    for m in (2, 3):
        for tree in enumerate_trees(m):
            for n in (1, 2, 5, 16, 64):
                assert tree_sum(g03, tree, n) == pytest.approx(naive_tree_sum(g03, tree, n),
                                                               rel=1e-10)
    for tree in (path_tree(4), star_tree(4)):
        assert tree_sum(g03, tree, 12) == pytest.approx(naive_tree_sum(g03, tree, 12), rel=1e-10)


def test_tree_sum_guards(g03):
    with pytest.raises(SizeGuardError):
        tree_sum(g03, path_tree(7), 8)
    with pytest.raises(SizeGuardError):
        tree_sum(g03, path_tree(2), 2 ** 13 + 1)


def test_tree_sum_slopes(g03):
    grid = [2 ** k for k in range(6, 13)]
    assert tree_sum_slope(g03, path_tree(2), grid).slope == pytest.approx(1.6, abs=0.15)
    assert tree_sum_slope(g03, path_tree(3), grid).slope == pytest.approx(2.2, abs=0.15)


@pytest.mark.parametrize("tree", [path_tree(2), path_tree(3), star_tree(4), path_tree(5)],
                         ids=["M2", "M3", "star4", "path5"])
def test_tree_sum_short_memory_slope(tree):
    spec = LongMemoryGaussianSpec(0.0, a=0.5)
    slope = tree_sum_slope(spec, tree, [2 ** k for k in range(6, 13)]).slope
    assert slope == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("d", [0.1, 0.25, 0.3, 0.4])
def test_leaf_sum_growth(d):
    spec = LongMemoryGaussianSpec.with_variance(d, 0.5)
    grid = [2 ** k for k in range(6, 14)]
    slope = loglog_slope(grid, [leaf_sum(spec, 1, n) for n in grid]).slope
    assert slope == pytest.approx(2 * d, abs=0.1)


def test_mc_cumulant_trivial_cases():
    rng = np.random.default_rng(0)
    z = rng.standard_normal(100_000)
    k4 = mc_cumulant(z, 4)
    assert abs(k4.value) < 3 * k4.se
    e = rng.standard_exponential(100_000)
    for order, target in ((2, 1.0), (3, 2.0)):
        est = mc_cumulant(e, order)
        assert abs(est.value - target) < 3 * est.se


def test_mc_cumulant_k_statistic_unbiased_small_samples():
    # the k-statistics are unbiased at every n; average many small samples
    rng = np.random.default_rng(1)
    x = rng.standard_exponential((400, 1000))
    k3 = np.mean([mc_cumulant(row, 3, groups=10).value for row in x])
    assert k3 == pytest.approx(2.0, abs=0.1)


def test_mc_cumulant_errors():
    with pytest.raises(ValueError):
        mc_cumulant(np.zeros(999), 2)
    with pytest.raises(ValueError):
        mc_cumulant(np.zeros(2000), 5)
    with pytest.raises(ValueError):
        mc_cumulant(np.zeros((2000, 3)), 2)
