import io
import math
from collections import Counter
from fractions import Fraction as F
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ercomp import (
    DomainError,
    GnpParams,
    GnpTask,
    PrecisionCtx,
    ResourceCapError,
    RigidTask,
    RngSpec,
    SbmParams,
    SbmTask,
    chi_square_gof,
    component_dist,
    ks_statistic,
    moment,
    rigid_sample,
    run_replicas,
    sample_components,
    sample_sbm,
    sbm_enumerate_dist,
    union_find_component_sizes,
    write_raw_csv,
)
from ercomp import mc

import oracles

P_MIX = ((F(1, 2), F(1, 3)), (F(1, 3), F(1, 4)))


# ----------------------------------------------------------- union-find


def _per_vertex_from_components(sizes):
    out = []
    for s in sizes:
        out.extend([s] * s)
    return sorted(out)


def test_union_find_basics():
    assert union_find_component_sizes(5, [], []) == [1] * 5
    assert union_find_component_sizes(4, [0, 1, 2], [1, 2, 3]) == [4] * 4
    assert union_find_component_sizes(6, [0, 2, 4], [1, 3, 5]) == [2] * 6


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=40),
    data=st.data(),
)
def test_union_find_matches_bfs(n, data):
    edge = st.tuples(
        st.integers(min_value=0, max_value=n - 1),
        st.integers(min_value=0, max_value=n - 1),
    )
    edges = data.draw(st.lists(edge, max_size=80))
    edges = [(u, v) for u, v in edges if u != v]  # duplicates stay, loops go
    got = union_find_component_sizes(n, [u for u, _ in edges], [v for _, v in edges])
    want = _per_vertex_from_components(oracles.bfs_component_sizes(n, edges))
    assert sorted(got) == want


def test_pair_linearization_exhaustive():
    for n in (2, 3, 5, 8):
        m = n * (n - 1) // 2
        us, vs = mc._pairs_from_positions(n, np.arange(m))
        assert list(zip(us.tolist(), vs.tolist())) == list(combinations(range(n), 2))


# -------------------------------------------------------------- sampler


def test_sampler_degenerate_graphs():
    rng = RngSpec(3).replica_rng(0)
    s = sample_components(GnpParams(6, F(0)), rng)
    assert (s.size_of_vertex1, s.largest, s.second_largest) == (1, 1, 1)
    s = sample_components(GnpParams(6, F(1)), rng)
    assert (s.size_of_vertex1, s.largest, s.second_largest) == (6, 6, 0)
    s = sample_components(GnpParams(1, F(1, 2)), rng)
    assert (s.size_of_vertex1, s.largest, s.second_largest) == (1, 1, 0)


def test_sampler_structural_invariants():
    rng = RngSpec(11).replica_rng(0)
    for _ in range(300):
        s = sample_components(GnpParams(25, 0.06), rng)
        assert 1 <= s.size_of_vertex1 <= s.largest <= 25
        assert 0 <= s.second_largest <= s.largest
        if s.second_largest:
            assert s.largest + s.second_largest <= 25
        else:
            assert s.largest == 25


def test_edge_count_mean_matches_binomial():
    n, p, reps = 30, 0.3, 2000
    npairs = n * (n - 1) // 2
    rng = RngSpec(23).replica_rng(0)
    total = sum(len(mc._edge_positions(n, p, rng)) for _ in range(reps))
    se = math.sqrt(npairs * p * (1 - p) / reps)
    assert total / reps == pytest.approx(npairs * p, abs=5 * se)


def test_sampler_distribution_total_variation():
    n, p, count = 30, 0.05, 100_000
    summary = run_replicas(GnpTask(GnpParams(n, p)), count, RngSpec(101))
    exact = component_dist(GnpParams(n, p), PrecisionCtx.double())
    emp = summary.counts["size1"]
    tv = 0.5 * sum(
        abs(emp.get(k, 0) / count - float(exact.prob(k))) for k in range(1, n + 1)
    )
    assert tv <= 0.01


# ---------------------------------------------------------------- rigid


def test_rigid_support_and_domain():
    rng = RngSpec(5).replica_rng(0)
    draws = [rigid_sample(12, 0.9, rng) for _ in range(200)]
    assert all(1 <= d <= 12 for d in draws)
    assert len(set(draws)) > 1
    with pytest.raises(DomainError):
        rigid_sample(12, 0.0, rng)
    with pytest.raises(DomainError):
        rigid_sample(0, 0.5, rng)


def test_rigid_mean_matches_exact_law():
    n, t, count = 30, 0.8, 30_000
    summary = run_replicas(RigidTask(n, t), count, RngSpec(17))
    dist = component_dist(GnpParams(n, t=t), PrecisionCtx.double())
    mean = float(moment(dist, 1))
    var = float(moment(dist, 2)) - mean**2
    se = math.sqrt(var / count)
    assert summary.mean[0] == pytest.approx(mean, abs=5 * se)


def test_rigid_full_distribution_chisquare():
    n, t, count = 20, 0.5, 50_000
    summary = run_replicas(RigidTask(n, t), count, RngSpec(29))
    dist = component_dist(GnpParams(n, t=t), PrecisionCtx.double())
    probs = [float(dist.prob(k)) for k in range(1, n + 1)]
    res = chi_square_gof(summary.counts["size"], probs, count)
    assert not res.rejected(1e-4)
    assert res.dof == res.bins - 1


# ------------------------------------------------------------------ sbm


def test_sbm_sampler_single_label_matches_er_law():
    counts = 40_000
    summary = run_replicas(SbmTask(SbmParams((12,), ((0.1,),))), counts, RngSpec(31))
    exact = component_dist(GnpParams(12, 0.1), PrecisionCtx.double())
    emp = summary.counts["k_1"]
    tv = 0.5 * sum(
        abs(emp.get(k, 0) / counts - float(exact.prob(k))) for k in range(1, 13)
    )
    assert tv <= 0.02


def test_sbm_sampler_joint_law_total_variation():
    model = SbmParams((3, 2), P_MIX)
    count = 100_000
    summary = run_replicas(SbmTask(model), count, RngSpec(37))
    exact = sbm_enumerate_dist(model, PrecisionCtx.rational())
    tv = 0.5 * sum(
        abs(summary.joint.get(k, 0) / count - float(exact.prob(k)))
        for k in exact.support()
    )
    assert tv <= 0.02


def test_sbm_sample_invariants():
    model = SbmParams((3, 2), P_MIX)
    rng = RngSpec(41).replica_rng(0)
    for _ in range(200):
        s = sample_sbm(model, rng)
        assert sum(s.label_sizes) >= 1
        assert all(0 <= k <= c for k, c in zip(s.label_sizes, (3, 2)))
        assert sum(s.label_sizes) <= s.largest <= 5 or s.largest >= sum(s.label_sizes)


# ----------------------------------------------------------- replication


def test_replicas_thread_count_is_invisible():
    task = GnpTask(GnpParams(40, 0.04))
    base = run_replicas(task, 600, RngSpec(53), threads=1)
    for threads in (2, 3):
        other = run_replicas(task, 600, RngSpec(53), threads=threads)
        assert other.mean == base.mean
        assert other.variance == base.variance
        assert other.counts == base.counts


def test_replicas_seed_sensitivity_and_reproducibility():
    task = RigidTask(15, 0.6)
    a = run_replicas(task, 400, RngSpec(1))
    b = run_replicas(task, 400, RngSpec(1))
    c = run_replicas(task, 400, RngSpec(2))
    assert a.mean == b.mean and a.counts == b.counts
    assert a.counts != c.counts


def test_replicas_raw_matrix():
    task = GnpTask(GnpParams(10, 0.2))
    s = run_replicas(task, 25, RngSpec(61), keep_raw=True)
    assert s.raw.shape == (25, 3) and s.raw.dtype == np.int64
    assert s.field_names == ("size1", "largest", "second")
    # summary statistics recompute from the raw matrix (up to summation order)
    assert s.mean == pytest.approx(tuple(s.raw.mean(axis=0)), rel=1e-12)
    assert s.variance == pytest.approx(tuple(s.raw.var(axis=0, ddof=1)), rel=1e-12)
    buf = io.StringIO()
    write_raw_csv(buf, s)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "replica,size1,largest,second"
    assert len(lines) == 26


def test_replicas_budget_and_small_counts():
    task = GnpTask(GnpParams(10, 0.2))
    with pytest.raises(ResourceCapError):
        run_replicas(task, 1000, RngSpec(1), keep_raw=True, raw_budget=100)
    one = run_replicas(task, 1, RngSpec(1))
    assert one.count == 1 and one.variance == (0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        run_replicas(task, 0, RngSpec(1))


def test_rng_spec_validation():
    with pytest.raises(DomainError):
        RngSpec(5, algorithm="mt19937")
    r0 = RngSpec(5).replica_rng(0)
    r0b = RngSpec(5).replica_rng(0)
    r1 = RngSpec(5).replica_rng(1)
    a, b, c = r0.random(4), r0b.random(4), r1.random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# -------------------------------------------------------- gof statistics


def test_ks_statistic_known_cases():
    assert ks_statistic([0.0] * 10) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        ks_statistic([])
    rng = RngSpec(71).replica_rng(0)
    z = rng.standard_normal(100_000)
    assert ks_statistic(z) < 0.01
    assert ks_statistic(z + 1.5) > 0.3


def test_chi_square_binning_rules():
    # uniform over 1..6, exact counts: statistic 0, all bins kept
    res = chi_square_gof(
        Counter({k: 50 for k in range(1, 7)}), [1 / 6] * 6, 300
    )
    assert res.statistic == pytest.approx(0.0, abs=1e-12)
    assert res.bins == 6 and res.dof == 5 and res.pvalue == pytest.approx(1.0)
    # sparse tail folds backwards into the last viable bin
    probs = [0.5, 0.3, 0.1, 0.05, 0.03, 0.02]
    res = chi_square_gof(Counter({1: 50, 2: 30, 3: 20}), probs, 100)
    assert res.bins == 3  # 20-expected floor pools the tail
    with pytest.raises(DomainError):
        chi_square_gof(Counter({1: 100}), [1.0], 100)
    with pytest.raises(DomainError):
        chi_square_gof(Counter({9: 5}), [0.5, 0.5], 5)


def test_chi_square_detects_wrong_law():
    rng = RngSpec(79).replica_rng(0)
    draws = Counter(rng.integers(1, 5, size=5000).tolist())  # uniform on 1..4
    skewed = [0.7, 0.1, 0.1, 0.1]
    assert chi_square_gof(draws, skewed, 5000).rejected(1e-4)
    fair = [0.25] * 4
    assert not chi_square_gof(draws, fair, 5000).rejected(1e-4)
