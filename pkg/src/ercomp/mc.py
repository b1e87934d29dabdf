"""Seeded Monte Carlo: component sampling, the crossing-time sampler, the
block-model sampler, replica orchestration, and goodness-of-fit statistics.

Determinism contract: replica i draws from a generator seeded by
(master_seed, i) through numpy's SeedSequence, so every sampler output is a
pure function of (parameters, algorithm, master_seed, i).  run_replicas
aggregates rows in replica order no matter how work is split across
processes, which makes summaries bitwise independent of the thread count.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2

from .exact import GnpParams
from .precision import DomainError, ResourceCapError
from .sbm import SbmParams

RNG_ALGORITHM = "pcg64"
RAW_BUDGET_CELLS = 50_000_000  # int64 cells of retained raw samples


@dataclass(frozen=True)
class RngSpec:
    """Named generator + master seed; replica streams derive from both."""

    master_seed: int
    algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.algorithm != RNG_ALGORITHM:
            raise DomainError(f"unknown rng algorithm {self.algorithm!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise DomainError("master_seed must fit in 64 bits")

    def replica_rng(self, i: int) -> np.random.Generator:
        # SeedSequence is the documented mixer h(master_seed, i)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(i,))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class ComponentSample:
    size_of_vertex1: int
    largest: int
    second_largest: int


@dataclass(frozen=True)
class SbmSample:
    label_sizes: tuple  # label-wise size vector of vertex 1's component
    largest: int


# ---------------------------------------------------------------- samplers


def _edge_positions(n: int, p: float, rng) -> np.ndarray:
    """Indices of present edges in the row-major upper-triangle order.

    Geometric skips: the gap to the next present pair is Geometric(p), so the
    cost is O(1 + p n^2) draws instead of n(n-1)/2 Bernoullis.
    """
    m = n * (n - 1) // 2
    mean = m * p
    chunk = int(mean * 1.1 + 6.0 * math.sqrt(mean + 1.0)) + 16
    parts = []
    total = 0
    while True:
        gaps = rng.geometric(p, size=chunk)
        pos = np.cumsum(gaps) + (total - 1)
        parts.append(pos)
        total = int(pos[-1]) + 1
        if total > m:
            break
    pos = np.concatenate(parts) if len(parts) > 1 else parts[0]
    return pos[pos < m]


def _pairs_from_positions(n: int, pos: np.ndarray):
    """Invert the linearization: position -> (u, v) with u < v.

    Row u (pairs (u, u+1)..(u, n-1)) starts at offset u(2n-1-u)/2.
    """
    rows = np.arange(n - 1, dtype=np.int64)
    starts = rows * (2 * n - 1 - rows) // 2
    us = np.searchsorted(starts, pos, side="right") - 1
    vs = pos - starts[us] + us + 1
    return us, vs


def _union_find(n: int, us, vs):
    """Merge edge lists; returns (parent, size) with sizes valid at roots."""
    parent = list(range(n))
    size = [1] * n
    for a, b in zip(us, vs):
        ra = a
        while parent[ra] != ra:
            ra = parent[ra]
        rb = b
        while parent[rb] != rb:
            rb = parent[rb]
        # path compression
        while parent[a] != ra:
            parent[a], a = ra, parent[a]
        while parent[b] != rb:
            parent[b], b = rb, parent[b]
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
    return parent, size


def _root(parent, a):
    while parent[a] != a:
        a = parent[a]
    return a


def union_find_component_sizes(n: int, us, vs):
    """Size of each vertex's component (reference surface for testing)."""
    us = np.asarray(us, dtype=np.int64).tolist() if len(us) else []
    vs = np.asarray(vs, dtype=np.int64).tolist() if len(vs) else []
    parent, size = _union_find(n, us, vs)
    return [size[_root(parent, v)] for v in range(n)]


def sample_components(params: GnpParams, rng) -> ComponentSample:
    """One draw of (component of vertex 1, largest, second largest)."""
    n = params.n
    p = _edge_prob_float(params)
    if n == 1:
        return ComponentSample(1, 1, 0)
    if p <= 0.0:
        return ComponentSample(1, 1, 1)
    if p >= 1.0:
        return ComponentSample(n, n, 0)
    pos = _edge_positions(n, p, rng)
    us, vs = _pairs_from_positions(n, pos)
    parent, size = _union_find(n, us.tolist(), vs.tolist())
    s1 = size[_root(parent, 0)]
    top = second = 0
    for v in range(n):
        if parent[v] == v:
            sv = size[v]
            if sv > top:
                top, second = sv, top
            elif sv > second:
                second = sv
    return ComponentSample(s1, top, second)


def rigid_sample(n: int, t: float, rng) -> int:
    """First index k where sum_{i<=k} (t - X_i) dips below 0; X_i has rate
    (1 - i/n), so the index-n increment is -infinity almost surely and the
    walk must stop by n.  The sampler draws only the n-1 finite increments
    and returns n when none of those partial sums crossed."""
    if not isinstance(n, int) or n < 1:
        raise DomainError("n must be an integer >= 1")
    if not t > 0:
        raise DomainError("t must be positive")
    if n == 1:
        return 1
    ks = np.arange(1, n)
    x = rng.exponential(scale=n / (n - ks))
    sums = np.cumsum(t - x)
    hits = np.nonzero(sums < 0)[0]
    if hits.size:
        return int(hits[0]) + 1
    return n


def sample_sbm(sbm: SbmParams, rng) -> SbmSample:
    """One block-model draw: uniform labelling, independent cross-pair edges."""
    n = sbm.n
    base = np.repeat(np.arange(sbm.labels), sbm.label_counts)
    labels = base[rng.permutation(n)]
    if n == 1:
        sizes = [0] * sbm.labels
        sizes[int(labels[0])] = 1
        return SbmSample(tuple(sizes), 1)
    us, vs = np.triu_indices(n, 1)  # row-major pair order, fixed
    pmat = np.array([[float(v) for v in row] for row in sbm.p_matrix])
    keep = rng.random(us.size) < pmat[labels[us], labels[vs]]
    parent, size = _union_find(n, us[keep].tolist(), vs[keep].tolist())
    root1 = _root(parent, 0)
    kvec = [0] * sbm.labels
    top = 0
    for v in range(n):
        r = _root(parent, v)
        if r == root1:
            kvec[int(labels[v])] += 1
        if parent[v] == v and size[v] > top:
            top = size[v]
    return SbmSample(tuple(kvec), top)


def _edge_prob_float(params: GnpParams) -> float:
    if params.t is not None:
        return -math.expm1(-params.t / params.n)
    return float(params.p)


# ------------------------------------------------------- replica plumbing


@dataclass(frozen=True)
class GnpTask:
    params: GnpParams
    field_names = ("size1", "largest", "second")
    joint_width = 0

    def run(self, rng):
        s = sample_components(self.params, rng)
        return (s.size_of_vertex1, s.largest, s.second_largest)


@dataclass(frozen=True)
class RigidTask:
    n: int
    t: float
    field_names = ("size",)
    joint_width = 0

    def run(self, rng):
        return (rigid_sample(self.n, self.t, rng),)


@dataclass(frozen=True)
class SbmTask:
    sbm: SbmParams

    @property
    def field_names(self):
        l = self.sbm.labels
        return tuple(f"k_{j + 1}" for j in range(l)) + ("largest",)

    @property
    def joint_width(self):
        return self.sbm.labels

    def run(self, rng):
        s = sample_sbm(self.sbm, rng)
        return s.label_sizes + (s.largest,)


@dataclass(frozen=True)
class EmpiricalSummary:
    """Replica-ordered aggregation of an integer-valued sampler.

    mean/variance are per field (variance is the unbiased ddof=1 estimator,
    0.0 when count < 2).  counts holds a Counter per scalar field; joint is
    the Counter of leading-field tuples for vector-valued tasks (else None).
    raw is the (count, fields) int64 array when retention was requested.
    """

    count: int
    field_names: tuple
    mean: tuple
    variance: tuple
    counts: dict
    joint: Optional[Counter]
    raw: Optional[np.ndarray]


def _chunk_rows(task, rng_spec: RngSpec, start: int, stop: int):
    return [task.run(rng_spec.replica_rng(i)) for i in range(start, stop)]


def _chunk_worker(args):
    return _chunk_rows(*args)


def run_replicas(
    task,
    count: int,
    rng_spec: RngSpec,
    threads: int = 1,
    keep_raw: bool = False,
    raw_budget: int = RAW_BUDGET_CELLS,
) -> EmpiricalSummary:
    """Run count replicas with derived seeds; deterministic in (task, count,
    rng_spec) regardless of threads.  Raw retention over the budget raises."""
    if not isinstance(count, int) or count < 1:
        raise DomainError("count must be an integer >= 1")
    width = len(task.field_names)
    if keep_raw and count * width > raw_budget:
        raise ResourceCapError(
            f"raw retention of {count}x{width} exceeds {raw_budget} cells"
        )
    threads = max(1, int(threads))
    if threads == 1 or count < 2 * threads:
        rows = _chunk_rows(task, rng_spec, 0, count)
    else:
        bounds = [count * w // threads for w in range(threads + 1)]
        jobs = [
            (task, rng_spec, bounds[w], bounds[w + 1])
            for w in range(threads)
            if bounds[w] < bounds[w + 1]
        ]
        rows = []
        with ProcessPoolExecutor(max_workers=threads) as pool:
            # map preserves submission order: replica order survives chunking
            for part in pool.map(_chunk_worker, jobs):
                rows.extend(part)
    arr = np.asarray(rows, dtype=np.int64)
    joint_w = task.joint_width
    means = tuple(float(arr[:, c].mean()) for c in range(width))
    if count < 2:
        variances = tuple(0.0 for _ in range(width))
    else:
        variances = tuple(float(arr[:, c].var(ddof=1)) for c in range(width))
    counts = {
        name: Counter(arr[:, c].tolist())
        for c, name in enumerate(task.field_names)
    }
    joint = None
    if joint_w:
        joint = Counter(tuple(map(int, row[:joint_w])) for row in arr)
    return EmpiricalSummary(
        count=count,
        field_names=tuple(task.field_names),
        mean=means,
        variance=variances,
        counts=counts,
        joint=joint,
        raw=arr if keep_raw else None,
    )


def write_raw_csv(fileobj, summary: EmpiricalSummary):
    if summary.raw is None:
        raise DomainError("summary retained no raw samples")
    fileobj.write("replica," + ",".join(summary.field_names) + "\n")
    for i, row in enumerate(summary.raw):
        fileobj.write(str(i) + "," + ",".join(str(int(v)) for v in row) + "\n")


# ------------------------------------------------------------ fit statistics


def ks_statistic(standardized_samples) -> float:
    """sup-distance between the sample's empirical CDF and the standard
    normal CDF, by the sorted two-sided formula."""
    xs = np.sort(np.asarray(standardized_samples, dtype=float))
    m = xs.size
    if m == 0:
        raise DomainError("need a nonempty sample")
    cdf = ndtr(xs)
    ranks = np.arange(1, m + 1, dtype=float) / m
    d_plus = float(np.max(ranks - cdf))
    d_minus = float(np.max(cdf - (ranks - 1.0 / m)))
    return max(d_plus, d_minus)


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    pvalue: float
    bins: int

    def rejected(self, significance: float) -> bool:
        return self.pvalue < significance


def chi_square_gof(
    observed: Counter,
    expected_probs,
    count: int,
    min_expected: float = 20.0,
) -> GofResult:
    """Chi-square test of integer samples against probs for values 1..n.

    Adjacent values are pooled left to right until each bin's expected count
    reaches min_expected; a deficient final bin is merged backwards.
    """
    probs = [float(v) for v in expected_probs]
    n = len(probs)
    for v in observed:
        if not 1 <= v <= n:
            raise DomainError(f"observed value {v} outside support 1..{n}")
    edges = []  # inclusive (lo, hi) value ranges
    lo = 1
    acc = 0.0
    for k in range(1, n + 1):
        acc += probs[k - 1] * count
        if acc >= min_expected:
            edges.append((lo, k))
            lo = k + 1
            acc = 0.0
    if lo <= n:
        if edges:
            edges[-1] = (edges[-1][0], n)  # fold the deficient tail backwards
        else:
            edges.append((1, n))
    if len(edges) < 2:
        raise DomainError("support too concentrated to form two bins")
    stat = 0.0
    for lo, hi in edges:
        e = sum(probs[k - 1] for k in range(lo, hi + 1)) * count
        o = sum(observed.get(k, 0) for k in range(lo, hi + 1))
        stat += (o - e) ** 2 / e
    dof = len(edges) - 1
    return GofResult(stat, dof, float(chi2.sf(stat, dof)), len(edges))
