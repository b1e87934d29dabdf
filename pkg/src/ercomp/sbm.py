"""Label-structured (block-model) generalization of the component identities.

Vertices carry one of l labels with fixed counts (n_1, ..., n_l); a pair with
labels (a, b) keeps its edge independently with probability p_ab.  The object
of interest is the label-wise size vector of vertex 1's component,
k = (k_1, ..., k_l).  This module evaluates the multi-label weight factor

    g(J, k) = prod_{i,j} (1 - p_ij)^(k_i J_j)
              * prod_j prod_{i=0}^{k_j - 1} (n_j + J_j - i) / (n_j - i),

checks the expectation identity and the two-population change of measure
against an exhaustive tiny-n enumeration oracle, and solves the
nonpositive-shift linear system to re-derive the joint law.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .exact import VerifyResult
from .precision import (
    RATIONAL,
    ConditioningError,
    DomainError,
    PrecisionCtx,
    ResourceCapError,
    format_value,
)

ENUM_CAP = 7  # labellings x 2^(pairs) blows up fast past this


@dataclass(frozen=True)
class SbmParams:
    """Label counts plus the symmetric matrix of edge probabilities."""

    label_counts: tuple
    p_matrix: tuple  # tuple of tuples, entries Fraction or float in [0,1]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.label_counts)
        object.__setattr__(self, "label_counts", counts)
        if len(counts) < 1 or any(c < 0 for c in counts):
            raise DomainError("label counts must be nonnegative, at least one label")
        if sum(counts) < 1:
            raise DomainError("need at least one vertex")
        l = len(counts)
        mat = tuple(tuple(row) for row in self.p_matrix)
        object.__setattr__(self, "p_matrix", mat)
        if len(mat) != l or any(len(row) != l for row in mat):
            raise DomainError("p_matrix must be square, one row per label")
        for i in range(l):
            for j in range(l):
                if not 0 <= mat[i][j] <= 1:
                    raise DomainError("p entries must lie in [0, 1]")
                if mat[i][j] != mat[j][i]:
                    raise DomainError("p_matrix must be symmetric")

    @property
    def labels(self) -> int:
        return len(self.label_counts)

    @property
    def n(self) -> int:
        return sum(self.label_counts)


@dataclass(frozen=True)
class SbmShift:
    """Integer shift vector J with J_j >= -n_j and sum(J) > -n.

    nonpositive marks the all-entries-<=0 subset, where the identity's
    right-hand side collapses to the count ratio alone.
    """

    shifts: tuple
    nonpositive: bool

    @classmethod
    def for_params(cls, sbm: SbmParams, shifts) -> "SbmShift":
        J = tuple(int(v) for v in shifts)
        if len(J) != sbm.labels:
            raise DomainError("shift vector length must match label count")
        for v, c in zip(J, sbm.label_counts):
            if v < -c:
                raise DomainError("each shift must be >= -count for its label")
        if sum(J) <= -sbm.n:
            raise DomainError("total shift must exceed -n")
        return cls(J, all(v <= 0 for v in J))


@dataclass(frozen=True)
class SbmDist:
    """Joint law of the label-wise component vector of vertex 1.

    Support: 0 <= k_j <= n_j with sum >= 1, ordered lexicographically.
    Stored sparsely; prob() returns an exact 0 off the recorded support.
    """

    label_counts: tuple
    ctx: PrecisionCtx
    probs: dict

    def prob(self, k):
        return self.probs.get(tuple(k), self.ctx.zero())

    def support(self):
        return kspace(self.label_counts)

    def to_csv(self, fileobj):
        l = len(self.label_counts)
        fileobj.write(",".join(f"k_{j + 1}" for j in range(l)) + ",prob\n")
        for k in self.support():
            row = ",".join(str(v) for v in k)
            fileobj.write(f"{row},{format_value(self.ctx, self.prob(k))}\n")


def kspace(label_counts):
    """All admissible component vectors, lexicographically."""
    ranges = [range(c + 1) for c in label_counts]
    for k in itertools.product(*ranges):
        if sum(k) >= 1:
            yield k


def shift_space_nonpositive(label_counts):
    """All nonpositive shift vectors with total > -n, lexicographically."""
    n = sum(label_counts)
    ranges = [range(-c, 1) for c in label_counts]
    for J in itertools.product(*ranges):
        if sum(J) > -n:
            yield J


def sbm_g_factor(sbm: SbmParams, shift: SbmShift, k, ctx: PrecisionCtx):
    """Multi-label weight; exactly 0 when any k_j > n_j + J_j."""
    k = tuple(int(v) for v in k)
    _check_kvec(sbm, k)
    J = shift.shifts
    with ctx.workspace():
        val = ctx.one()
        for i in range(sbm.labels):
            for j in range(sbm.labels):
                e = k[i] * J[j]
                if e == 0:
                    continue
                pij = sbm.p_matrix[i][j]
                if pij == 1 and e < 0:
                    raise DomainError("p = 1 with a negative exponent is undefined")
                val = val * (1 - ctx.real(pij)) ** e
        for j in range(sbm.labels):
            nj, Jj = sbm.label_counts[j], J[j]
            if k[j] > nj + Jj:
                return ctx.zero()
            for i in range(k[j]):
                val = val * (nj + Jj - i) / (nj - i)
        return val


def sbm_enumerate_dist(
    sbm: SbmParams, ctx: PrecisionCtx, cap: int = ENUM_CAP
) -> SbmDist:
    """Exact joint law by brute force over labellings and edge sets.

    Vertex 1's label is random under the uniform labelling, so its law is
    P[label = a] = n_a / n; conditionally on that label the component vector
    law is invariant under permuting the remaining vertices, so one canonical
    labelling per value of a suffices (weighted n_a / n) instead of iterating
    every multiset permutation.  A property test cross-checks this collapse
    against the full iteration at tiny n.

    Results are memoized (params and ctx are immutable); sweeps that revisit
    the same model pay for the mask iteration once.
    """
    if sbm.n > cap:
        raise ResourceCapError(f"enumeration needs n <= {cap}, got {sbm.n}")
    return _enumerate_cached(sbm, ctx)


@lru_cache(maxsize=512)
def _enumerate_cached(sbm: SbmParams, ctx: PrecisionCtx) -> SbmDist:
    n = sbm.n
    with ctx.workspace():
        acc = {}
        for a in range(sbm.labels):
            if sbm.label_counts[a] == 0:
                continue
            weight = ctx.real(Fraction(sbm.label_counts[a], n))
            labels = _canonical_labels(sbm.label_counts, a)
            for k, pr in _joint_law_fixed_labels(sbm, labels, ctx).items():
                acc[k] = acc.get(k, ctx.zero()) + weight * pr
        return SbmDist(sbm.label_counts, ctx, acc)


def sbm_enumerate_dist_all_labellings(
    sbm: SbmParams, ctx: PrecisionCtx, cap: int = 4
) -> SbmDist:
    """Reference enumeration over every distinct labelling (slow; testing only)."""
    n = sbm.n
    if n > cap:
        raise ResourceCapError(f"full labelling enumeration capped at n = {cap}")
    base = []
    for j, c in enumerate(sbm.label_counts):
        base.extend([j] * c)
    with ctx.workspace():
        seen = set(itertools.permutations(base))
        weight = ctx.real(Fraction(1, len(seen)))
        acc = {}
        for labels in sorted(seen):
            for k, pr in _joint_law_fixed_labels(sbm, list(labels), ctx).items():
                acc[k] = acc.get(k, ctx.zero()) + weight * pr
        return SbmDist(sbm.label_counts, ctx, acc)


def sbm_verify_identity(
    sbm: SbmParams, shift: SbmShift, ctx: PrecisionCtx, cap: int = ENUM_CAP
) -> VerifyResult:
    """Both sides of the multi-label expectation identity.

    lhs = E[g(J, K)] under the enumerated law; rhs = (sum(n_j + J_j)/n) times
    the probability that the shifted model keeps every label coordinate within
    the original counts (exactly 1 for nonpositive shifts).
    """
    dist = sbm_enumerate_dist(sbm, ctx, cap=cap)
    with ctx.workspace():
        lhs = ctx.zero()
        for k, pr in dist.probs.items():
            lhs = lhs + sbm_g_factor(sbm, shift, k, ctx) * pr
        ratio = ctx.real(Fraction(sbm.n + sum(shift.shifts), sbm.n))
        if shift.nonpositive:
            rhs = ratio
        else:
            wide_counts = tuple(
                c + J for c, J in zip(sbm.label_counts, shift.shifts)
            )
            wide = sbm_enumerate_dist(
                SbmParams(wide_counts, sbm.p_matrix), ctx, cap=cap
            )
            inside = ctx.zero()
            for k, pr in wide.probs.items():
                if all(kj <= c for kj, c in zip(k, sbm.label_counts)):
                    inside = inside + pr
            rhs = ratio * inside
        return VerifyResult(lhs, rhs, abs(lhs - rhs))


def sbm_verify_change_of_measure(
    counts_m, counts_n, p_matrix, k, ctx: PrecisionCtx, cap: int = ENUM_CAP
) -> VerifyResult:
    """Exact transfer of the joint law between two count vectors.

    rhs = P_N[k] * (sum(N)/sum(M))
          * prod_{i,j} (1 - p_ij)^((M_j - N_j) k_i)
          * prod_j prod_{i=0}^{k_j - 1} (M_j - i) / (N_j - i).

    The per-label product starts at i = 0, so its leading factors M_j/N_j
    together with the count ratio reduce to the familiar single-label form
    (which starts at i = 1 and has no ratio).  Automatically 0 on both sides
    when some k_j > M_j.
    """
    sbm_m = SbmParams(tuple(counts_m), tuple(tuple(r) for r in p_matrix))
    sbm_n = SbmParams(tuple(counts_n), tuple(tuple(r) for r in p_matrix))
    if sbm_m.labels != sbm_n.labels:
        raise DomainError("count vectors must have the same length")
    k = tuple(int(v) for v in k)
    _check_kvec(sbm_n, k)
    dist_m = sbm_enumerate_dist(sbm_m, ctx, cap=cap)
    dist_n = sbm_enumerate_dist(sbm_n, ctx, cap=cap)
    M, N = sbm_m.label_counts, sbm_n.label_counts
    with ctx.workspace():
        factor = ctx.real(Fraction(sbm_n.n, sbm_m.n))
        for i in range(sbm_m.labels):
            for j in range(sbm_m.labels):
                e = (M[j] - N[j]) * k[i]
                if e == 0:
                    continue
                pij = sbm_m.p_matrix[i][j]
                if pij == 1 and e < 0:
                    raise DomainError("p = 1 with a negative exponent is undefined")
                factor = factor * (1 - ctx.real(pij)) ** e
        zero_hit = False
        for j in range(sbm_m.labels):
            for i in range(k[j]):
                if M[j] - i == 0:
                    zero_hit = True
                    break
                factor = factor * (M[j] - i) / (N[j] - i)
            if zero_hit:
                break
        rhs = ctx.zero() if zero_hit else dist_n.prob(k) * factor
        lhs = dist_m.prob(k)
        return VerifyResult(lhs, rhs, abs(lhs - rhs))


def sbm_recover_dist(sbm: SbmParams, ctx: PrecisionCtx) -> SbmDist:
    """Solve the nonpositive-shift equations for the joint law (rational only).

    Rows are indexed by the nonpositive shift vectors (lexicographic), columns
    by the component vectors (lexicographic); entries are g(J, k) and the
    right-hand sides are the count ratios.  Exact Gaussian elimination; a
    singular system raises ConditioningError.
    """
    if ctx.mode != RATIONAL:
        raise DomainError("recovery solve is exact-rational only")
    cols = list(kspace(sbm.label_counts))
    rows = list(shift_space_nonpositive(sbm.label_counts))
    if len(rows) < len(cols):
        raise ConditioningError("fewer shift equations than unknowns")
    A = []
    b = []
    for J in rows:
        shift = SbmShift.for_params(sbm, J)
        A.append([Fraction(sbm_g_factor(sbm, shift, k, ctx)) for k in cols])
        b.append(Fraction(sbm.n + sum(J), sbm.n))
    x = _solve_exact(A, b, len(cols))
    probs = {k: x[idx] for idx, k in enumerate(cols)}
    return SbmDist(sbm.label_counts, ctx, probs)


def _canonical_labels(label_counts, first_label: int):
    """One labelling with the given counts and vertex 1 carrying first_label."""
    labels = [first_label]
    for j, c in enumerate(label_counts):
        labels.extend([j] * (c - (1 if j == first_label else 0)))
    return labels


def _joint_law_fixed_labels(sbm: SbmParams, labels, ctx: PrecisionCtx):
    """Joint component-vector law of vertex 0 for one fixed labelling."""
    n = len(labels)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    pe = [ctx.real(sbm.p_matrix[labels[u]][labels[v]]) for (u, v) in pairs]
    qe = [1 - w for w in pe]
    law = {}
    for mask in range(1 << len(pairs)):
        w = ctx.one()
        adj = [[] for _ in range(n)]
        for idx, (u, v) in enumerate(pairs):
            if mask >> idx & 1:
                w = w * pe[idx]
                adj[u].append(v)
                adj[v].append(u)
            else:
                w = w * qe[idx]
        if w == 0:
            continue
        seen = [False] * n
        seen[0] = True
        stack = [0]
        kvec = [0] * sbm.labels
        while stack:
            u = stack.pop()
            kvec[labels[u]] += 1
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        key = tuple(kvec)
        law[key] = law.get(key, ctx.zero()) + w
    return law


def _check_kvec(sbm: SbmParams, k):
    if len(k) != sbm.labels:
        raise DomainError("component vector length must match label count")
    for kj, c in zip(k, sbm.label_counts):
        if not 0 <= kj <= c:
            raise DomainError("component vector must satisfy 0 <= k_j <= n_j")
    if sum(k) < 1:
        raise DomainError("component vector must have at least one vertex")


def _solve_exact(A, b, ncols):
    """Gaussian elimination over Fractions; tolerates extra consistent rows."""
    rows = len(A)
    A = [row[:] for row in A]
    b = b[:]
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if piv is None:
            raise ConditioningError("shift system is singular")
        A[r], A[piv] = A[piv], A[r]
        b[r], b[piv] = b[piv], b[r]
        inv = 1 / A[r][c]
        A[r] = [v * inv for v in A[r]]
        b[r] = b[r] * inv
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [vi - f * vr for vi, vr in zip(A[i], A[r])]
                b[i] = b[i] - f * b[r]
        r += 1
    for i in range(ncols, rows):
        if any(A[i][c] != 0 for c in range(ncols)) or b[i] != 0:
            raise ConditioningError("inconsistent extra shift equation")
    return b[:ncols]
