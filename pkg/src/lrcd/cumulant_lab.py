"""Two-way tables, indecomposable partitions, product cumulants, labeled
trees and the tree-indexed covariance sums that bound LMSD cumulants."""

from dataclasses import dataclass
from functools import reduce
import itertools
import math
from typing import NamedTuple

import numpy as np

from . import _kernels
from .gaussian_lm import autocovariance_h

MAX_ENTRIES = 12
MAX_TREE_SIZE = 7
MAX_TREE_SUM_SIZE = 6
MAX_TREE_SUM_N = 2 ** 13


class SizeGuardError(ValueError):
    pass


# --------------------------------------------------------------------------
# tables and partitions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoWayTable:
    """Rows of entries (i, j), 1-based, with an optional symbol tag per entry."""

    row_lengths: tuple
    tags: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "row_lengths", tuple(int(j) for j in self.row_lengths))
        if len(self.row_lengths) < 1 or min(self.row_lengths) < 1:
            raise ValueError("a table needs at least one row and no empty rows")
        if self.tags is not None:
            tags = tuple(tuple(r) for r in self.tags)
            if tuple(len(r) for r in tags) != self.row_lengths:
                raise ValueError("tag layout does not match row lengths")
            object.__setattr__(self, "tags", tags)

    @property
    def entries(self):
        return [(i + 1, j + 1) for i, jn in enumerate(self.row_lengths) for j in range(jn)]

    @property
    def rows(self):
        return len(self.row_lengths)

    def tag(self, entry):
        i, j = entry
        return None if self.tags is None else self.tags[i - 1][j - 1]


def lmsd_table(m):
    """m x 2 table whose row k holds the symbols e^{h_k} ('e') and eps_k ('eps')."""
    return TwoWayTable((2,) * m, (("e", "eps"),) * m)


@dataclass(frozen=True)
class Partition:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted((frozenset(b) for b in self.blocks), key=lambda b: sorted(b)))
        object.__setattr__(self, "blocks", blocks)
        seen = set()
        for b in blocks:
            if not b or seen & b:
                raise ValueError("blocks must be nonempty and disjoint")
            seen |= b

    def __len__(self):
        return len(self.blocks)

    def covers(self, table):
        return set().union(*self.blocks) == set(table.entries)


def _restricted_growth_strings(n):
    """All a_0..a_{n-1} with a_0 = 0 and a_i <= 1 + max(a_0..a_{i-1})."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    m = [0] * n  # m[i] = max(a[0..i-1]), m[0] unused

    def rec(i):
        if i == n:
            yield tuple(a)
            return
        for v in range(m[i - 1] + 2 if i else 1):
            a[i] = v
            if i + 1 < n:
                m[i] = max(m[i - 1], v) if i else v
            yield from rec(i + 1)

    yield from rec(0)


def set_partitions(items):
    """Every partition of ``items`` as a list of blocks (lists)."""
    items = list(items)
    for rgs in _restricted_growth_strings(len(items)):
        blocks = [[] for _ in range(max(rgs) + 1 if rgs else 0)]
        for item, label in zip(items, rgs):
            blocks[label].append(item)
        yield blocks


def enumerate_partitions(table):
    entries = table.entries
    if len(entries) > MAX_ENTRIES:
        raise SizeGuardError(f"{len(entries)} entries exceed the guard of {MAX_ENTRIES}")
    return [Partition(tuple(frozenset(b) for b in blocks)) for blocks in set_partitions(entries)]


def is_indecomposable(partition, table):
    """True when the block graph, with an edge between blocks sharing a row, is connected."""
    blocks = partition.blocks
    parent = list(range(len(blocks)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    first_block_in_row = {}
    for b, block in enumerate(blocks):
        for i, _ in block:
            if i in first_block_in_row:
                ra, rb = find(first_block_in_row[i]), find(b)
                if ra != rb:
                    parent[ra] = rb
            else:
                first_block_in_row[i] = b
    return len({find(b) for b in range(len(blocks))}) == 1


def is_mixed(block, table):
    return len({table.tag(e) for e in block}) > 1


def admissible_partitions(m):
    """Indecomposable partitions of the m x 2 LMSD table with no block mixing
    e-symbols and eps-symbols, grouped by the number L of e-blocks.

    An unmixed partition is exactly a pair (partition of the e column,
    partition of the eps column), so the product of the two column
    enumerations is filtered for indecomposability.
    """
    if not 2 <= m <= 6:
        raise SizeGuardError("m must lie in 2..6")
    table = lmsd_table(m)
    e_col = [(k, 1) for k in range(1, m + 1)]
    eps_col = [(k, 2) for k in range(1, m + 1)]
    groups = {}
    for pe in set_partitions(e_col):
        for pn in set_partitions(eps_col):
            part = Partition(tuple(frozenset(b) for b in pe + pn))
            if is_indecomposable(part, table):
                groups.setdefault(len(pe), []).append(part)
    return dict(sorted(groups.items()))


def admissible_partitions_by_filter(m):
    """Same groups as :func:`admissible_partitions`, by filtering every partition of the table."""
    table = lmsd_table(m)
    groups = {}
    for part in enumerate_partitions(table):
        if any(is_mixed(b, table) for b in part.blocks):
            continue
        if not is_indecomposable(part, table):
            continue
        L = sum(1 for b in part.blocks if table.tag(next(iter(b))) == "e")
        groups.setdefault(L, []).append(part)
    return dict(sorted(groups.items()))


def product_cumulant(table, component_cumulant):
    """cum(Y_1, ..., Y_I) for row products Y_i, summed over indecomposable partitions.

    ``component_cumulant`` maps a frozenset of entries to the joint cumulant
    of the corresponding variables.
    """
    total = 0.0
    for part in enumerate_partitions(table):
        if is_indecomposable(part, table):
            total += reduce(lambda acc, b: acc * component_cumulant(b), part.blocks, 1.0)
    return total


def cumulant_from_moments(moment, items):
    """Joint cumulant of ``items`` from a joint-moment function.

    kappa = sum over partitions pi of (-1)^{|pi|-1} (|pi|-1)! prod_B E[prod_{i in B} X_i].
    """
    total = 0.0
    for blocks in set_partitions(items):
        q = len(blocks)
        term = (-1) ** (q - 1) * math.factorial(q - 1)
        for b in blocks:
            term *= moment(tuple(b))
        total += term
    return total


def lmsd_component_cumulant(spec, indices):
    """Component-cumulant oracle for the LMSD table with row k carrying time ``indices[k-1]``.

    e-blocks: joint lognormal cumulants of e^{h_t}; eps-blocks: the
    innovation cumulant if all times coincide, else 0; mixed blocks: 0.
    """
    g = spec.gaussian

    def lognormal_moment(times):
        t = np.asarray(times)
        cov = autocovariance_h(g, t[:, None] - t[None, :])
        return math.exp(0.5 * float(np.sum(cov)))

    def oracle(block):
        tags = {c for _, c in block}
        if len(tags) > 1:
            return 0.0
        times = [indices[i - 1] for i, _ in sorted(block)]
        if tags == {1}:
            return cumulant_from_moments(lognormal_moment, times)
        if len(set(times)) > 1:
            return 0.0
        return spec.innovation.cumulant(len(times))

    return oracle


def lognormal_pair_cumulant(spec, lag):
    """cum(e^{h_k}, e^{h_{k+lag}}) = e^{sigma_h^2} (e^{r_lag} - 1)."""
    return math.exp(spec.variance) * math.expm1(autocovariance_h(spec, lag))


# --------------------------------------------------------------------------
# labeled trees
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeGraph:
    labels: tuple
    edges: tuple
    prufer: tuple = None

    def __post_init__(self):
        labels = tuple(self.labels)
        edges = tuple(tuple(sorted(e)) for e in self.edges)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edges", tuple(sorted(edges)))
        m = len(labels)
        if len(set(labels)) != m:
            raise ValueError("vertex labels must be distinct")
        if len(edges) != m - 1:
            raise ValueError(f"a tree on {m} vertices has {m - 1} edges, got {len(edges)}")
        if any(u not in labels or v not in labels or u == v for u, v in edges):
            raise ValueError("edge endpoints must be distinct known vertices")
        if not _connected(labels, edges):
            raise ValueError("graph is not connected")

    @property
    def size(self):
        return len(self.labels)

    def adjacency(self):
        adj = {v: [] for v in self.labels}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj


def _connected(labels, edges):
    if not labels:
        return False
    adj = {v: set() for v in labels}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen = {labels[0]}
    stack = [labels[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(labels)


def prufer_decode(code, m):
    """Edges of the labeled tree on vertices 0..m-1 with Prüfer code ``code``."""
    degree = [1] * m
    for v in code:
        degree[v] += 1
    edges = []
    for v in code:
        leaf = next(u for u in range(m) if degree[u] == 1)
        edges.append((leaf, v))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = (x for x in range(m) if degree[x] == 1)
    edges.append((u, w))
    return edges


def enumerate_trees(m):
    """All m^(m-2) labeled trees on vertices 0..m-1."""
    if not 2 <= m <= MAX_TREE_SIZE:
        raise SizeGuardError(f"m must lie in 2..{MAX_TREE_SIZE}")
    return [TreeGraph(tuple(range(m)), tuple(prufer_decode(code, m)), tuple(code))
            for code in itertools.product(range(m), repeat=m - 2)]


def path_tree(m):
    return TreeGraph(tuple(range(m)), tuple((i, i + 1) for i in range(m - 1)))


def star_tree(m):
    return TreeGraph(tuple(range(m)), tuple((0, i) for i in range(1, m)))


# --------------------------------------------------------------------------
# tree sums
# --------------------------------------------------------------------------

def tree_weights(spec, n):
    """w_s = |e^{r_s} - 1| for s = 0..n-1."""
    return np.abs(np.expm1(autocovariance_h(spec, np.arange(n))))


def tree_sum(spec, tree, n):
    """S(n) = sum over k in {1..n}^M of prod over tree edges of |e^{r_{|k_i - k_j|}} - 1|.

    Leaves are summed out one at a time: each vertex carries a message
    m_v(i) = prod over children c of sum_j w(|i - j|) m_c(j), so the whole
    sum costs M - 1 Toeplitz products.
    """
    if tree.size > MAX_TREE_SUM_SIZE:
        raise SizeGuardError(f"tree size must be <= {MAX_TREE_SUM_SIZE}")
    if not 1 <= n <= MAX_TREE_SUM_N:
        raise SizeGuardError(f"n must lie in 1..{MAX_TREE_SUM_N}")
    w = tree_weights(spec, n)
    adj = tree.adjacency()
    root = tree.labels[0]
    order, parent = [], {root: None}
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for c in adj[v]:
            if c != parent[v]:
                parent[c] = v
                stack.append(c)
    message = {v: np.ones(n) for v in tree.labels}
    for v in reversed(order):
        p = parent[v]
        if p is not None:
            message[p] = message[p] * _kernels.toeplitz_matvec(w, message[v])
    return float(message[root].sum())


def naive_tree_sum(spec, tree, n):
    """Brute-force M-fold sum over the full index grid; for cross-checks only."""
    M = tree.size
    if n ** M > 5 * 10 ** 7:
        raise SizeGuardError("naive sum too large")
    idx = np.arange(n)
    W = tree_weights(spec, n)[np.abs(idx[:, None] - idx[None, :])]
    pos = {v: a for a, v in enumerate(tree.labels)}
    total = np.ones((1,) * M)
    for u, v in tree.edges:
        shape = [1] * M
        shape[pos[u]] = n
        shape[pos[v]] = n
        total = total * W.reshape(shape)
    return float(total.sum())


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    n_grid: tuple
    values: tuple


def loglog_slope(n_grid, values):
    x = np.log(np.asarray(n_grid, dtype=np.float64))
    y = np.log(np.asarray(values, dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    return SlopeFit(float(slope), float(intercept), tuple(int(v) for v in n_grid),
                    tuple(float(v) for v in values))


def tree_sum_slope(spec, tree, n_grid):
    return loglog_slope(n_grid, [tree_sum(spec, tree, int(n)) for n in n_grid])


def leaf_sum(spec, i, n):
    """sum_{j=1..n} |e^{r_{|i-j|}} - 1| for a fixed 1-based index i."""
    w = tree_weights(spec, n + abs(i))
    j = np.arange(1, n + 1)
    return float(w[np.abs(i - j)].sum())


# --------------------------------------------------------------------------
# Monte Carlo cumulants
# --------------------------------------------------------------------------

class CumulantEstimate(NamedTuple):
    value: float
    se: float
    order: int
    n: int


def _kstat(x):
    """Unbiased joint k-statistic of the columns of x (order = number of columns)."""
    n, order = x.shape
    if order == 1:
        return float(x[:, 0].mean())
    dev = x - x.mean(axis=0)
    if order == 2:
        return float(dev[:, 0] @ dev[:, 1]) / (n - 1)
    if order == 3:
        return float(np.sum(dev[:, 0] * dev[:, 1] * dev[:, 2])) * n / ((n - 1) * (n - 2))
    m = lambda *c: float(np.mean(np.prod(dev[:, list(c)], axis=1)))
    m1234 = m(0, 1, 2, 3)
    pairs = m(0, 1) * m(2, 3) + m(0, 2) * m(1, 3) + m(0, 3) * m(1, 2)
    return n * n * ((n + 1) * m1234 - (n - 1) * pairs) / ((n - 1) * (n - 2) * (n - 3))


def mc_cumulant(samples, order=None, groups=200):
    """Joint cumulant estimate with a delete-a-group jackknife SE.

    ``samples`` is (N, k): the joint cumulant of the k columns is estimated
    (k = order). A 1-D array with ``order`` gives the univariate cumulant.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        if order is None:
            raise ValueError("order is required for univariate samples")
        x = np.repeat(x[:, None], order, axis=1)
    elif order is None:
        order = x.shape[1]
    elif order != x.shape[1]:
        raise ValueError("order must equal the number of columns")
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be 1..4")
    n = x.shape[0]
    if n < 1000:
        raise ValueError("need at least 1000 samples")
    value = _kstat(x)
    g = min(groups, n)
    labels = np.arange(n) % g
    loo = np.array([_kstat(x[labels != k]) for k in range(g)])
    se = math.sqrt((g - 1) / g * float(np.sum((loo - loo.mean()) ** 2)))
    return CumulantEstimate(value, se, order, n)
