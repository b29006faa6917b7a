"""Closed-form quantities for the app-based (digital) tracing model.

Early in a large outbreak the epidemic behaves like a two-type branching
process: type 1 are *app-user clusters* (a maximal group of app-users linked
by transmission, rooted at an app-user infected by a non-app-user) and type 2
are individual non-app-users.  A cluster is wiped out as a unit the moment
any of its members is diagnosed, so cluster dynamics reduce to a birth/death
random walk on the number of currently infectious members with an added
killing event:

* birth (a member infects another app-user)  at rate ``k*beta*pi``
* death (natural recovery)                   at rate ``k*gamma``
* kill  (anyone in the cluster is diagnosed) at rate ``k*delta``

All three rates scale with the cluster size ``k``, so the embedded jump chain
has size-independent step probabilities.  That makes the number of jumps a
cluster survives, and everything derived from it, tractable in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import Params, r0


class DivergentSeries(ValueError):
    """The expected jump count is infinite for these parameters."""


class SeriesCapError(RuntimeError):
    """Series truncation cap reached before the tolerance was met."""


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for the expected-jump-count series."""

    tol: float = 1e-10
    kmax: int = 10**6

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.kmax < 1:
            raise ValueError("kmax must be at least 1")


DEFAULT_SERIES = SeriesControl()

PROV_EXACT = "exact"
PROV_SERIES = "series-truncated"
PROV_ESTIMATED = "estimated"


@dataclass(frozen=True)
class OffspringMatrix:
    """2x2 mean offspring matrix with per-element provenance.

    Element ``m_ij`` is the mean number of type-j offspring produced by one
    type-i individual.  Provenance tags are row-major: "exact",
    "series-truncated", or "estimated" (Monte Carlo, standard errors carried
    separately by the estimator that produced the matrix).
    """

    m11: float
    m12: float
    m21: float
    m22: float
    provenance: tuple[str, str, str, str]
    series_terms: int | None = None

    def __post_init__(self):
        for name in ("m11", "m12", "m21", "m22"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=float)


def _walk_pieces(params: Params):
    """Survival factor per jump and the up/down split of the embedded walk."""
    bp = params.beta * params.pi
    total = bp + params.gamma + params.delta
    survive = (bp + params.gamma) / total  # P(next jump is not a kill)
    up = bp / (bp + params.gamma)          # P(birth | not a kill)
    down = params.gamma / (bp + params.gamma)
    return bp, survive, up, down


def tail_prob_jumps(k: int, params: Params) -> float:
    """P(an app-user cluster makes more than ``k`` jumps before dying out).

    Equals s^k times the probability that the underlying birth/death walk
    started from one member is not yet absorbed at zero after k steps, where
    s is the per-jump probability that the step is not a kill.  The walk
    absorption mass at odd step 2j-1 is a Catalan-weighted binomial term;
    binomials are evaluated in log space so large j cannot overflow.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if params.pi == 0.0 or params.beta == 0.0:
        # a cluster with no app-side growth makes exactly one jump
        return 0.0
    bp, survive, up, down = _walk_pieces(params)
    log_up, log_down = math.log(up), math.log(down)
    absorbed = 0.0
    for j in range(1, k // 2 + 2):  # j ranges over odd absorption times 2j-1 <= k
        if 2 * j - 1 > k:
            break
        log_binom = math.lgamma(2 * j) - math.lgamma(j + 1) - math.lgamma(j)
        absorbed += math.exp(
            log_binom - math.log(2 * j - 1) + (j - 1) * log_up + j * log_down
        )
    alive = max(0.0, 1.0 - absorbed)
    return alive * survive**k


def expected_jumps(params: Params, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """Mean number of jumps an app-user cluster makes before dying out.

    Computed as 1 plus the tail sum of :func:`tail_prob_jumps`.  The sum
    converges iff ``delta > 0`` or ``beta*pi < gamma``; otherwise the cluster
    has a positive chance of growing forever and the mean is infinite.

    Raises:
        DivergentSeries: if the convergence condition fails.
        SeriesCapError: if ``ctrl.kmax`` terms did not reach ``ctrl.tol``.
    """
    value, _ = _expected_jumps_info(params, ctrl)
    return value


def _expected_jumps_info(params: Params, ctrl: SeriesControl) -> tuple[float, int]:
    """(series value, number of tail terms summed)."""
    bp = params.beta * params.pi
    gamma, delta = params.gamma, params.delta
    if delta <= 0 and bp >= gamma:
        raise DivergentSeries(
            "expected cluster jump count E[N_c] diverges: "
            "need delta > 0 or beta*pi < gamma"
        )
    # Mean absorption time of the pure birth/death walk (no killing); finite
    # exactly when the walk drifts down.  At delta=0 the series equals it.
    walk_mean = (bp + gamma) / (gamma - bp) if bp < gamma else math.inf
    if delta <= 0:
        return walk_mean, 0
    if bp == 0.0:
        return 1.0, 0  # all tail probabilities vanish

    _, survive, up, down = _walk_pieces(params)
    total = 1.0        # leading 1
    alive = 1.0        # P(walk not absorbed within k steps); shrinks as terms arrive
    walk_partial = 1.0 # running sum of alive-probabilities = partial walk mean
    spow = 1.0
    term = 0.0
    j = 0
    for k in range(1, ctrl.kmax + 1):
        spow *= survive
        if k % 2 == 1:
            # one new absorption term per odd step; Catalan ratio keeps it O(1)
            j += 1
            term = down if j == 1 else term * 2.0 * (2 * j - 3) / j * up * down
            alive -= term
            if alive < 0.0:
                alive = 0.0
        total += alive * spow
        # Two rigorous tail bounds; either one below tol ends the sum:
        # remaining mass is at most the geometric kill-survival tail, and at
        # most the walk mean not yet accounted for (alive probs only shrink).
        geo_tail = spow * survive / (1.0 - survive)
        walk_tail = walk_mean - walk_partial
        walk_partial += alive
        if min(geo_tail, walk_tail) < ctrl.tol:
            return total, k
    raise SeriesCapError(
        f"expected-jump series needed more than kmax={ctrl.kmax} terms "
        f"(tol={ctrl.tol}); raise kmax or avoid near-zero delta"
    )


def mean_infections_per_jump(params: Params) -> float:
    """Mean non-app-users infected by a cluster between consecutive jumps.

    Between jumps a size-k cluster waits Exp(k*(beta*pi+gamma+delta)) and
    infects non-app-users at rate k*beta*(1-pi); the count is geometric with
    mean beta*(1-pi)/(beta*pi+gamma+delta), independent of k.
    """
    return params.beta * (1.0 - params.pi) / (
        params.beta * params.pi + params.gamma + params.delta
    )


def offspring_matrix_digital(
    params: Params, ctrl: SeriesControl = DEFAULT_SERIES
) -> OffspringMatrix:
    """Mean offspring matrix of the cluster/non-app-user branching process.

    Clusters never spawn clusters (an infected app-user joins its infector's
    cluster), so m11 = 0.  Non-app-users are never traced and infect both
    types geometrically.  The cluster-to-non-app-user mean m12 is the mean
    infections per jump times the expected jump count.
    """
    base = r0(params)
    m21 = params.pi * base
    m22 = (1.0 - params.pi) * base
    if params.pi == 0.0 or params.beta == 0.0 or params.pi == 1.0:
        # expected jump count is exactly 1 (pi=0) or irrelevant (m12 factor 0)
        m12 = mean_infections_per_jump(params) * (1.0 if params.pi == 0.0 else 0.0)
        if params.beta == 0.0:
            m12 = 0.0
        return OffspringMatrix(
            0.0, m12, m21, m22, (PROV_EXACT,) * 4, series_terms=None
        )
    jumps, terms = _expected_jumps_info(params, ctrl)
    m12 = mean_infections_per_jump(params) * jumps
    return OffspringMatrix(
        0.0,
        m12,
        m21,
        m22,
        (PROV_EXACT, PROV_SERIES, PROV_EXACT, PROV_EXACT),
        series_terms=terms,
    )


def _spectral_radius(m11: float, m12: float, m21: float, m22: float) -> float:
    # larger root of x^2 - (m11+m22) x + (m11 m22 - m12 m21); the discriminant
    # rewrites as ((m11-m22)/2)^2 + m12 m21 >= 0 for nonnegative matrices
    half_diff = 0.5 * (m11 - m22)
    return 0.5 * (m11 + m22) + math.sqrt(half_diff * half_diff + m12 * m21)


def spectral_radius_2x2(m: OffspringMatrix) -> float:
    """Largest eigenvalue of a nonnegative 2x2 mean offspring matrix."""
    return _spectral_radius(m.m11, m.m12, m.m21, m.m22)


def r_component_digital(params: Params, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """Cluster-level reproduction number for app-based tracing only.

    Spectral radius of :func:`offspring_matrix_digital`; with m11 = 0 it is
    m22/2 + sqrt(m22^2/4 + m12*m21).  Threshold at 1.
    """
    return spectral_radius_2x2(offspring_matrix_digital(params, ctrl))


def mean_component_size(params: Params, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """Mean number of app-users ever infected in one app-user cluster.

    The cluster gains one member exactly at each birth jump, and every jump
    is a birth with probability beta*pi/(beta*pi+gamma+delta) independent of
    the past, so the mean size is 1 plus that fraction of the expected jump
    count.  Cross-checked against direct cluster simulation.
    """
    if params.pi == 0.0 or params.beta == 0.0:
        return 1.0
    bp = params.beta * params.pi
    birth_frac = bp / (bp + params.gamma + params.delta)
    return 1.0 + birth_frac * expected_jumps(params, ctrl)


def r_individual_digital(params: Params, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """Per-individual reproduction number under app-based tracing.

    A newly infected individual is an app-user with probability pi; the mean
    infections attributed to one app-user is the cluster total (internal
    births plus external non-app infections) divided by the cluster size,
    while a non-app-user simply infects beta/(gamma+delta) others.  Shares
    the threshold at 1 with the cluster-level number.
    """
    base = r0(params)
    if params.pi == 0.0:
        return base
    matrix = offspring_matrix_digital(params, ctrl)
    size = mean_component_size(params, ctrl)
    per_app_user = ((size - 1.0) + matrix.m12) / size
    return params.pi * per_app_user + (1.0 - params.pi) * base
