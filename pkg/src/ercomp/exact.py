"""Exact component-size laws for sparse random graphs and their identities.

A graph on n labelled vertices keeps each of the n(n-1)/2 possible edges
independently with probability p; |C| is the size of the component containing
vertex 1.  This module computes the law of |C| exactly (to working precision),
evaluates the size-biased weight factor

    g(n, p, j, k) = (1-p)^(j*k) * prod_{i=0}^{k-1} (n - i + j) / (n - i),

verifies the expectation identity

    E[g(n, p, j, |C|)] = ((n+j)/n) * (1 - P_{n+j,p}[|C| > n]),

(the tail term vanishing for j <= 0), verifies the two-population change of
measure, and numerically inverts the j <= 0 slice of the identity to recover
the law of |C| from the right-hand sides alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .precision import (
    DOUBLE,
    EXTENDED,
    RATIONAL,
    ConditioningError,
    DomainError,
    PrecisionCtx,
    ResourceCapError,
    format_value,
)

DIST_CAP = 5000
RECOVER_CAP = 300
RECOVER_DOUBLE_CAP = 50


@dataclass(frozen=True)
class GnpParams:
    """Edge-probability model on n vertices.

    Give p directly, or give the intensity t with p = 1 - exp(-t/n).  When
    both are supplied t wins and p is derived in the active precision, never
    stored, so the two can't drift apart.
    """

    n: int
    p: object = None
    t: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise DomainError("n must be an integer >= 1")
        if self.p is None and self.t is None:
            raise DomainError("need p or t")
        if self.p is not None and not 0 <= self.p <= 1:
            raise DomainError("p must lie in [0, 1]")
        if self.t is not None and not self.t >= 0:
            raise DomainError("t must be >= 0")

    def edge_weights(self, ctx: PrecisionCtx):
        """Return (p, 1-p) in mode arithmetic; call inside ctx.workspace()."""
        if self.t is not None:
            if self.t == 0:
                return ctx.zero(), ctx.one()
            mt = ctx.real(self.t)
            # q first: exp(-t/n) keeps full precision, 1-p would not
            q = ctx.exp(-mt / self.n)
            return -ctx.expm1(-mt / self.n), q
        p = ctx.real(self.p)
        return p, 1 - p

    def intensity(self) -> float:
        if self.t is not None:
            return float(self.t)
        if self.p == 1:
            return math.inf
        return -self.n * math.log1p(-float(self.p))


@dataclass(frozen=True)
class ComponentDist:
    """Law of the first-vertex component size: probs[k-1] = P[|C| = k].

    sum_dev and min_entry record |sum - 1| and the most negative raw entry
    before clamping; warning is True when either exceeds the ctx tolerance,
    i.e. when the arithmetic mode could not certify the result.  Entries that
    rounded below zero are clamped to 0 after the flag is computed.
    """

    n: int
    ctx: PrecisionCtx
    probs: tuple
    sum_dev: float
    min_entry: float
    warning: bool

    def prob(self, k: int):
        if 1 <= k <= self.n:
            return self.probs[k - 1]
        return self.ctx.zero()

    def support(self):
        return range(1, self.n + 1)

    def to_csv(self, fileobj):
        fileobj.write("k,prob\n")
        for k in self.support():
            fileobj.write(f"{k},{format_value(self.ctx, self.probs[k - 1])}\n")


@dataclass(frozen=True)
class VerifyResult:
    lhs: object
    rhs: object
    absdiff: object

    def within(self, tol) -> bool:
        return self.absdiff <= tol


@dataclass(frozen=True)
class RecoveredDist:
    """recover_dist output: the distribution plus solve diagnostics."""

    dist: ComponentDist
    max_violation: float  # how far any solved entry left [0, 1]


def g_factor(n: int, p, j: int, k: int, ctx: PrecisionCtx):
    """Size-biased weight g(n, p, j, k); exactly 0 iff k > n + j (for p < 1).

    j must be an integer > -n.  p = 1 with j < 0 is outside the domain
    (0 raised to a negative power).
    """
    _check_n(n)
    if not isinstance(j, int) or j <= -n:
        raise DomainError("shift j must be an integer > -n")
    if not isinstance(k, int) or not 1 <= k <= n:
        raise DomainError("k must be an integer in [1, n]")
    if p == 1 and j < 0:
        raise DomainError("p = 1 with negative shift is undefined")
    with ctx.workspace():
        q = 1 - ctx.real(p)
        if k > n + j:
            return ctx.zero()
        val = q ** (j * k)
        for i in range(k):
            val = val * (n - i + j) / (n - i)
        return val


def f_factor(n: int, t, lam, k: int, ctx: PrecisionCtx):
    """Intensity-parametrized weight: prod_{i<k} exp(-lam*t) * (1 + lam/(1 - i/n)).

    Agrees with g_factor(n, 1-exp(-t/n), j, k) at lam = j/n.  Needs lam > -1.
    """
    _check_n(n)
    if not lam > -1:
        raise DomainError("lam must exceed -1")
    if not t >= 0:
        raise DomainError("t must be >= 0")
    if not isinstance(k, int) or not 1 <= k <= n:
        raise DomainError("k must be an integer in [1, n]")
    with ctx.workspace():
        lam_m = ctx.real(lam)
        decay = ctx.exp(-(lam_m * ctx.real(t))) if lam_m * t != 0 else ctx.one()
        acc = ctx.one()
        for i in range(k):
            acc = acc * decay * (1 + lam_m * n / (n - i))
        return acc


def lambda_star(lam, n: int) -> Fraction:
    """Snap lam to the largest lattice point floor(n*lam)/n at or below it.

    Defined for lam > -1 + 1/n; below that the lattice has no point in
    (-1, lam], so the snap would leave the admissible range.
    """
    _check_n(n)
    if not lam > -1:
        raise DomainError("lam must exceed -1")
    snapped = Fraction(math.floor(lam * n), n)
    if snapped <= -1:
        raise DomainError("no lattice point in (-1, lam] at this n")
    return snapped


def connectivity_prob(k: int, p, ctx: PrecisionCtx, cap: int = DIST_CAP):
    """P[a random graph on k vertices with edge probability p is connected]."""
    if not isinstance(k, int) or k < 1:
        raise DomainError("k must be an integer >= 1")
    if k > cap:
        raise ResourceCapError(f"connectivity size {k} exceeds cap {cap}")
    if not 0 <= p <= 1:
        raise DomainError("p must lie in [0, 1]")
    # degenerate weights are exact in every mode; skip the recursion
    if p == 0:
        return ctx.one() if k == 1 else ctx.zero()
    if p == 1:
        return ctx.one()
    with ctx.workspace():
        q = 1 - ctx.real(p)
        return _connected_probs(k, q, ctx)[k]


def component_dist(
    params: GnpParams, ctx: PrecisionCtx, cap: int = DIST_CAP
) -> ComponentDist:
    """Exact law of the component size of vertex 1 under params.

    Runs the inclusion-exclusion recursion for the connectivity numbers, then
    P[|C| = k] = binom(n-1, k-1) * conn(k) * (1-p)^(k(n-k)).  Binomials are
    exact integers converted once; everything else is mode arithmetic.
    """
    n = params.n
    if n > cap:
        raise ResourceCapError(f"n = {n} exceeds distribution cap {cap}")
    with ctx.workspace():
        _, q = params.edge_weights(ctx)
        if q == 1 or q == 0:  # empty or complete graph, exact in any mode
            probs = [ctx.zero() for _ in range(n)]
            probs[0 if q == 1 else n - 1] = ctx.one()
            return _assemble_dist(n, ctx, probs)
        conn = _connected_probs(n, q, ctx)
        probs = []
        binom = 1
        for k in range(1, n + 1):
            if k > 1:
                binom = binom * (n - k + 1) // (k - 1)
            probs.append(ctx.real(binom) * conn[k] * q ** (k * (n - k)))
        return _assemble_dist(n, ctx, probs)


def moment(dist: ComponentDist, i: int):
    """E[|C|^i] under dist, in the dist's own arithmetic mode."""
    if not isinstance(i, int) or i < 0:
        raise DomainError("moment order must be an integer >= 0")
    with dist.ctx.workspace():
        total = dist.ctx.zero()
        for k in dist.support():
            total = total + (k**i) * dist.probs[k - 1]
        return total


def verify_identity(
    n: int, p, j: int, ctx: PrecisionCtx, cap: int = DIST_CAP
) -> VerifyResult:
    """Evaluate both sides of the size-biased expectation identity.

    lhs = E[g(n, p, j, |C|)]; rhs = ((n+j)/n) * (1 - tail) where tail is the
    probability that the (n+j)-vertex model puts the first component above n
    (zero for j <= 0).
    """
    if p == 1 and j < 0:
        raise DomainError("p = 1 with negative shift is undefined")
    if not isinstance(j, int) or j <= -n:
        raise DomainError("shift j must be an integer > -n")
    dist = component_dist(GnpParams(n, p=p), ctx, cap=cap)
    with ctx.workspace():
        q = 1 - ctx.real(p)
        lhs = ctx.zero()
        # g along k by one-step updates: g(j, k+1)/g(j, k) = q^j (n-k+j)/(n-k)
        qj = q**j
        gk = qj * (n + j) / ctx.real(n)
        for k in range(1, n + 1):
            if k > n + j:
                break
            lhs = lhs + gk * dist.probs[k - 1]
            if k < n:
                gk = gk * qj * (n - k + j) / (n - k)
        ratio = ctx.real(Fraction(n + j, n))
        if j <= 0:
            rhs = ratio
        else:
            wide = component_dist(GnpParams(n + j, p=p), ctx, cap=cap)
            tail = ctx.zero()
            for k in range(n + 1, n + j + 1):
                tail = tail + wide.probs[k - 1]
            rhs = ratio * (1 - tail)
        return VerifyResult(lhs, rhs, abs(lhs - rhs))


def verify_change_of_measure(
    m: int, n: int, p, k: int, ctx: PrecisionCtx, cap: int = DIST_CAP
) -> VerifyResult:
    """Check P_m[|C|=k] against the reweighted P_n[|C|=k].

    Correction factor: (1-p)^((m-n)k) * prod_{i=1}^{k-1} (m-i)/(n-i); the rhs
    is automatically 0 when k > m because the product hits the factor 0.
    """
    _check_n(m)
    _check_n(n)
    if not isinstance(k, int) or not 1 <= k <= n:
        raise DomainError("k must be an integer in [1, n]")
    if p == 1 and m < n:
        raise DomainError("p = 1 with m < n is undefined")
    dist_m = component_dist(GnpParams(m, p=p), ctx, cap=cap)
    dist_n = component_dist(GnpParams(n, p=p), ctx, cap=cap)
    with ctx.workspace():
        q = 1 - ctx.real(p)
        factor = q ** ((m - n) * k)
        for i in range(1, k):
            factor = factor * (m - i) / (n - i)
        lhs = dist_m.prob(k)
        rhs = dist_n.probs[k - 1] * factor
        return VerifyResult(lhs, rhs, abs(lhs - rhs))


def recover_dist(
    n: int,
    p,
    ctx: PrecisionCtx,
    cap: int = RECOVER_CAP,
    tol_rec: Optional[float] = None,
) -> RecoveredDist:
    """Recover the component-size law from the nonpositive-shift identities.

    The weights g(n, p, -r, k) vanish for k > n - r, so the n equations
    sum_k g(n, p, -r, k) x_k = (n-r)/n, r = 0..n-1, form an anti-triangular
    system solved by back-substitution from the r = n-1 row.  Each row's
    weights are built by one-step updates, O(n^2) arithmetic overall.

    Entries outside [-tol_rec, 1 + tol_rec] raise ConditioningError.  Double
    mode is gated at n = 50; beyond that the row weights q^(-rk) amplify
    roundoff past any useful tolerance, use extended bits instead.
    """
    _check_n(n)
    if n > cap:
        raise ResourceCapError(f"n = {n} exceeds recovery cap {cap}")
    if ctx.mode == DOUBLE and n > RECOVER_DOUBLE_CAP:
        raise ResourceCapError(
            f"double precision recovery is capped at n = {RECOVER_DOUBLE_CAP}; "
            "use ext:<bits>"
        )
    if not 0 <= p < 1:
        raise DomainError("recovery needs p in [0, 1)")
    if tol_rec is None:
        tol_rec = 0.0 if ctx.mode == RATIONAL else 1e-6
    with ctx.workspace():
        q = 1 - ctx.real(p)
        x = [None] * (n + 1)
        worst = 0.0
        for r in range(n - 1, -1, -1):
            width = n - r  # unknowns k = 1..width appear in this row
            qj = q ** (-r)
            gk = qj * (n - r) / ctx.real(n)
            acc = ctx.zero()
            for k in range(1, width):
                acc = acc + gk * x[k]
                gk = gk * qj * (n - k - r) / (n - k)
            xk = (ctx.real(Fraction(n - r, n)) - acc) / gk
            bad = max(float(-xk), float(xk - 1), 0.0)
            worst = max(worst, bad)
            if bad > tol_rec:
                raise ConditioningError(
                    f"recovered P[|C| = {width}] = {float(xk):.6g} leaves "
                    f"[0, 1] by {bad:.3g} (> {tol_rec:.3g}); raise precision"
                )
            x[width] = xk
        # the solve certifies entries to tol_rec, not to the ctx default
        dist = _assemble_dist(n, ctx, x[1:], warn_tol=max(ctx.tol, tol_rec))
        return RecoveredDist(dist, worst)


def suggested_bits(n: int, t: Optional[float] = None, p=None) -> int:
    """Working precision that keeps the distribution recursion clean at n.

    The recursion loses roughly (rate(t) + 0.55) bits per vertex where rate
    is the entropy-vs-intensity envelope max_x [H(x) - t x (1-x)] / ln 2;
    the 0.55 margin and 160-bit floor were calibrated on runs up to n = 4096.
    """
    if t is None:
        if p is None:
            raise DomainError("need t or p")
        t = math.inf if p == 1 else -n * math.log1p(-float(p))
    if t == math.inf:
        return 256
    return max(256, int(n * (_static_loss_rate(t) + 0.55)) + 160)


def _static_loss_rate(t: float) -> float:
    ln2 = math.log(2.0)
    best = 0.0
    for i in range(1, 1000):
        x = i / 1000.0
        h = -x * math.log(x) - (1 - x) * math.log(1 - x)
        best = max(best, (h - t * x * (1 - x)) / ln2)
    return best


def _check_n(n):
    if not isinstance(n, int) or n < 1:
        raise DomainError("n must be an integer >= 1")


def _connected_probs(n: int, q, ctx: PrecisionCtx):
    """conn[k] = P[graph on k vertices with edge weight q = 1-p is connected].

    conn[k] = 1 - sum_{j<k} binom(k-1, j-1) conn[j] q^(j(k-j)).  The inner
    products are kept as B[j] = conn[j] q^(j(k-j)) / (j-1)! and updated by a
    single multiply per (j, k) pair, so the whole table costs ~3 n^2 / 2
    multiplications.
    """
    one = ctx.one()
    conn = [None] * (n + 1)
    conn[1] = one
    if n == 1:
        return conn
    invfact = [one]
    f = one
    for m in range(1, n):
        f = f / m
        invfact.append(f)
    qpow = [one]
    for _ in range(1, n):
        qpow.append(qpow[-1] * q)
    B = [None] * n
    fact = one
    for k in range(2, n + 1):
        fact = fact * (k - 1)
        B[k - 1] = conn[k - 1] * invfact[k - 2] * qpow[k - 1]
        s = ctx.zero()
        for j in range(1, k):
            if j < k - 1:
                B[j] = B[j] * qpow[j]
            s = s + B[j] * invfact[k - j]
        conn[k] = 1 - fact * s
    return conn


def _assemble_dist(n: int, ctx: PrecisionCtx, probs, warn_tol=None) -> ComponentDist:
    if warn_tol is None:
        warn_tol = ctx.tol
    total = ctx.zero()
    low = ctx.zero()
    for v in probs:
        total = total + v
        if v < low:
            low = v
    dev = abs(float(total - 1))
    low_f = float(low)
    warning = dev > warn_tol or low_f < -warn_tol
    if not (math.isfinite(dev) and math.isfinite(low_f)):
        warning = True  # nan compares false against any tolerance
    if ctx.mode != RATIONAL:
        probs = [v if v > 0 else ctx.zero() for v in probs]
    elif low_f < 0 or dev != 0:
        # exact arithmetic cannot produce either defect
        raise ConditioningError("rational-mode distribution failed exactness")
    return ComponentDist(n, ctx, tuple(probs), dev, low_f, warning)
