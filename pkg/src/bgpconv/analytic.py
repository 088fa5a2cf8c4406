"""Closed-form convergence-time evaluation.

Everything here evaluates expectations of the dissemination model
described in :mod:`bgpconv.model`: per-step bgp-degrees for each
topology family, the expected convergence time as the P_sdn-weighted
sum of per-step delays, and the two-branch composition used for the
tiered Internet-core setting.

The bgp-degree D(i|x) is the number of uninformed ASes adjacent to the
informed set at step i; the next propagation event is the minimum of
D(i|x) independent Exp(lam) clocks, so the step delay is
1 / (lam * D(i|x)).  Full-mesh degrees are exact; Poisson and
config-model degrees are expectations substituted for the random degree
(a convexity argument makes the resulting time an underestimate of the
true mean for the exact model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTailError, DomainError, ModelDegenerateError, UnreachableTopologyError
from .model import (
    ConfigModel,
    FullMesh,
    ModelParams,
    Poisson,
    StepContext,
    TieredCore,
    TopologySpec,
    informed_count,
    informed_counts_row,
    p_sdn_distribution,
)

# Finiteness floor for closed-form degrees.  A raw value below this is
# treated as a degenerate step: the default is to raise, because a
# silently clamped 1/EPS_DEGREE delay would dominate the whole sum.
EPS_DEGREE = 1e-6

# Clamp-mode repair threshold.  One uninformed eligible neighbor is the
# smallest degree any reachable pre-convergence state can have, so once
# the approximate recurrence drops below 1 its premise (mean residual
# degree small against the uninformed pool) has collapsed and the
# remaining steps are evaluated with the exact full-mesh degree instead.
TAIL_FLOOR = 1.0


@dataclass(frozen=True, eq=False)
class BgpDegreeProfile:
    """Matrix of bgp-degrees D(i|x), rows x in [0, N-k], columns i in [1, N-k]."""

    model: TopologySpec
    values: np.ndarray

    def validate(self) -> None:
        if np.any(self.values <= 0):
            bad = np.argwhere(self.values <= 0)[0]
            raise ModelDegenerateError(int(bad[1]) + 1, int(bad[0]), float(self.values[bad[0], bad[1]]))


@dataclass(frozen=True, eq=False)
class ConvergenceEstimate:
    """Expected convergence time with its conditional decomposition."""

    expected_time: float
    per_x_expectation: np.ndarray  # E[T|x] for x in [0, N-k]
    profile: BgpDegreeProfile
    p_sdn: np.ndarray

    def __post_init__(self) -> None:
        recombined = math.fsum(
            float(t) * float(p) for t, p in zip(self.per_x_expectation, self.p_sdn)
        )
        scale = max(abs(self.expected_time), 1.0)
        if abs(recombined - self.expected_time) > 1e-9 * scale:
            raise AssertionError("per-x decomposition does not recombine")


@dataclass(frozen=True)
class CoreEstimate:
    """Decomposed expected convergence time for the tiered-core setting."""

    t_peering: float
    t_x_tier1: float
    t_tier1: float
    t_tier1_tier2: float
    t_transit: float
    t_total: float

    def __post_init__(self) -> None:
        parts = self.t_x_tier1 + self.t_tier1 + self.t_tier1_tier2
        if abs(parts - self.t_transit) > 1e-9 * max(self.t_transit, 1.0):
            raise AssertionError("t_transit does not equal the sum of its parts")
        if self.t_total != max(self.t_peering, self.t_transit):
            raise AssertionError("t_total is not the max of its branches")


def degree_full_mesh(ctx: StepContext, params: ModelParams) -> int:
    """Exact bgp-degree on the full mesh: every uninformed node is eligible."""
    return params.n_total - informed_count(ctx, params)


def degree_poisson(ctx: StepContext, params: ModelParams, p_edge: float) -> float:
    """Expected bgp-degree on an edge-probability-p graph.

    Each of the N - n uninformed nodes is adjacent to at least one of
    the n informed nodes with probability 1 - (1 - p)^n.
    """
    if not 0.0 <= p_edge <= 1.0:
        raise DomainError(f"p_edge must be in [0, 1], got {p_edge}")
    n = informed_count(ctx, params)
    return (params.n_total - n) * (1.0 - (1.0 - p_edge) ** n)


def degree_config_first(x: int, params: ModelParams, mu_d: float) -> float:
    """Expected first-step bgp-degree on a config-model graph.

    For x > 0 the announcer is a typical node, so its expected degree is
    mu_d.  For x = 0 the whole k-cluster is informed at once and the
    expected count of distinct outside neighbors is
    (N - k) * mu_d * ln(N / (N - k)).
    """
    if not mu_d > 0:
        raise DomainError(f"mu_d must be positive, got {mu_d}")
    n, k = params.n_total, params.k_cluster
    if k == n:
        raise DomainError("no steps remain when the cluster spans the network")
    steps = params.steps
    if not 0 <= x <= steps:
        raise DomainError(f"x must be in [0, {steps}], got {x}")
    if x > 0:
        return mu_d
    return (n - k) * mu_d * math.log(n / (n - k))


def mean_residual_degree(
    j: int, x: int, params: ModelParams, mu_d: float, cv_d: float
) -> float:
    """Expected degree of the j-th informed node, mu_d(j|x).

    Early steps preferentially reach high-degree nodes, so the residual
    mean decays: mu_d * prod_{m=1}^{j-1} (1 - cv_d^2 / (N - n(m|x) - 1)).
    """
    if j < 1:
        raise DomainError(f"j must be >= 1, got {j}")
    if cv_d < 0:
        raise DomainError(f"cv_d must be >= 0, got {cv_d}")
    n_total = params.n_total
    value = mu_d
    cv2 = cv_d * cv_d
    for m in range(1, j):
        n_m = informed_count(StepContext(m, x), params)
        denom = n_total - n_m - 1
        if denom <= 0:
            raise DegenerateTailError(m, x, denom)
        value *= 1.0 - cv2 / denom
    return value


def _config_row_raw(
    x: int, params: ModelParams, mu_d: float, cv_d: float
) -> np.ndarray:
    """Raw closed-form config-model degree row D(.|x), no floor applied.

    Evaluated through the running recurrence
    D(i) = A(i-1) * D(i-1) + (mu_d(i-1) - 1),
    which unrolls to the product-plus-sum closed form exactly.
    """
    n_total, k = params.n_total, params.k_cluster
    steps = params.steps
    out = np.empty(steps, dtype=np.float64)
    out[0] = degree_config_first(x, params, mu_d)
    mu_j = mu_d
    cv2 = cv_d * cv_d
    for i in range(2, steps + 1):
        j = i - 1
        n_j = j if j <= x else j + k - 1
        denom = n_total - n_j - 1
        if denom <= 0:
            raise DegenerateTailError(j, x, denom)
        attenuation = 1.0 - mu_j / denom
        out[i - 1] = attenuation * out[i - 2] + (mu_j - 1.0)
        mu_j *= 1.0 - cv2 / denom
    return out


def config_degree_row(
    x: int,
    params: ModelParams,
    mu_d: float,
    cv_d: float,
    degenerate: str = "error",
) -> np.ndarray:
    """Config-model degree row with degenerate-step handling.

    degenerate="error": raise ModelDegenerateError at the first step
    whose raw value falls below EPS_DEGREE.  degenerate="clamp": from
    the first step whose raw value falls below TAIL_FLOOR, substitute
    the exact full-mesh degree N - n(i|x) for the rest of the row.
    """
    row = _config_row_raw(x, params, mu_d, cv_d)
    if degenerate == "error":
        bad = np.flatnonzero(row < EPS_DEGREE)
        if bad.size:
            i = int(bad[0])
            raise ModelDegenerateError(i + 1, x, float(row[i]))
        return row
    if degenerate == "clamp":
        low = np.flatnonzero(row < TAIL_FLOOR)
        if low.size:
            i0 = int(low[0])
            n_row = informed_counts_row(x, params)
            row[i0:] = params.n_total - n_row[i0:]
        return row
    raise DomainError(f"degenerate must be 'error' or 'clamp', got {degenerate!r}")


def degree_config(
    ctx: StepContext,
    params: ModelParams,
    mu_d: float,
    cv_d: float,
    floor: float = EPS_DEGREE,
) -> float:
    """Closed-form config-model bgp-degree E[D(i|x)], floored at ``floor``.

    The floor keeps downstream 1/D sums finite; callers that need to
    distinguish a degenerate step from a small healthy one should use
    config_degree_row with degenerate="error".
    """
    ctx.validate(params)
    row = _config_row_raw(ctx.sdn_hit_step, params, mu_d, cv_d)
    return max(float(row[ctx.step - 1]), floor)


def recursion_degree_row(
    x: int, params: ModelParams, mu_d: float, cv_d: float
) -> np.ndarray:
    """Diagnostic variant from the derivation's running argument.

    Uses D(i) = D(i-1) - 1 + mu_d(i-1) * (1 - D(i-1) / (N - n(i-1|x))),
    whose denominator is N - n rather than the closed form's N - n - 1.
    The two disagree (this one gives 4.0 where the closed form gives
    3.875 on the documented worked example); the closed form is the
    canonical result, this row exists for comparison only.
    """
    n_total, k = params.n_total, params.k_cluster
    steps = params.steps
    out = np.empty(steps, dtype=np.float64)
    out[0] = degree_config_first(x, params, mu_d)
    mu_j = mu_d
    cv2 = cv_d * cv_d
    for i in range(2, steps + 1):
        j = i - 1
        n_j = j if j <= x else j + k - 1
        pool = n_total - n_j
        if pool <= 0:
            raise DegenerateTailError(j, x, pool)
        out[i - 1] = out[i - 2] - 1.0 + mu_j * (1.0 - out[i - 2] / pool)
        denom = pool - 1
        if denom <= 0:
            raise DegenerateTailError(j, x, denom)
        mu_j *= 1.0 - cv2 / denom
    return out


def _profile_rows(spec: TopologySpec, degenerate: str) -> np.ndarray:
    if isinstance(spec, TieredCore):
        raise DomainError("tiered-core has no flat degree profile; use core_convergence_time")
    params = spec.params
    steps = params.steps
    values = np.empty((steps + 1, steps), dtype=np.float64)
    if isinstance(spec, FullMesh):
        for x in range(steps + 1):
            values[x] = params.n_total - informed_counts_row(x, params)
        return values
    if isinstance(spec, Poisson):
        for x in range(steps + 1):
            n_row = informed_counts_row(x, params)
            values[x] = (params.n_total - n_row) * (
                1.0 - (1.0 - spec.p_edge) ** n_row
            )
        return values
    assert isinstance(spec, ConfigModel)
    for x in range(steps + 1):
        values[x] = config_degree_row(
            x, params, spec.mu_d, spec.cv_d, degenerate=degenerate
        )
    return values


def degree_profile(spec: TopologySpec, degenerate: str = "error") -> BgpDegreeProfile:
    """Full D(i|x) matrix for a flat topology spec."""
    return BgpDegreeProfile(model=spec, values=_profile_rows(spec, degenerate))


def convergence_time(spec: TopologySpec, degenerate: str = "error") -> ConvergenceEstimate:
    """Expected convergence time E[T] for a flat topology spec.

    E[T] = (1/lam) * sum_x P_sdn(x) * sum_i 1 / D(i|x), with D(i|x)
    exact for the full mesh and an expectation for the random-graph
    families.  ``degenerate`` selects config-model handling of steps
    where the closed form collapses (see config_degree_row).

    The inner sum over i is evaluated per fixed x; the outer
    P_sdn-weighted accumulation uses compensated summation.
    """
    if isinstance(spec, TieredCore):
        raise DomainError("tiered-core is evaluated by core_convergence_time")
    params = spec.params
    dist = p_sdn_distribution(params)
    if params.steps == 0:
        profile = BgpDegreeProfile(model=spec, values=np.empty((1, 0)))
        return ConvergenceEstimate(
            expected_time=0.0,
            per_x_expectation=np.zeros(1),
            profile=profile,
            p_sdn=dist,
        )
    profile = degree_profile(spec, degenerate=degenerate)
    values = profile.values
    if not isinstance(spec, ConfigModel) and np.any(values < EPS_DEGREE):
        # Config-model rows already resolved degenerate steps per mode;
        # a sub-floor Poisson or full-mesh degree means the spec itself
        # cannot disseminate (e.g. p_edge = 0) whatever the mode.
        bad = np.argwhere(values < EPS_DEGREE)[0]
        raise ModelDegenerateError(int(bad[1]) + 1, int(bad[0]), float(values[bad[0], bad[1]]))
    inv_lam = 1.0 / params.lam
    per_x = (inv_lam / values).sum(axis=1)
    expected = math.fsum(float(t) * float(p) for t, p in zip(per_x, dist))
    return ConvergenceEstimate(
        expected_time=expected,
        per_x_expectation=per_x,
        profile=profile,
        p_sdn=dist,
    )


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def core_convergence_time(spec: TieredCore) -> CoreEstimate:
    """Two-branch expected convergence time for the tiered core.

    The announcer is a tier-2 AS.  Its peers are covered by a full-mesh
    process over round(n2 * p22) nodes (peering branch).  Everyone else
    is covered through transit: time to reach the first provider,
    1 / (lam * p12 * n1); dissemination across tier-1, a Poisson-graph
    process with the cluster; then delivery to the remaining
    round(n2 * (1 - p22)) tier-2 ASes, modeled as a full mesh running at
    the provider-aggregated rate n1 * p12 * lam.  The slower branch
    determines the total.

    Branch sizes of 0 or 1 need no dissemination and contribute 0.
    """
    if spec.p12 == 0.0:
        raise UnreachableTopologyError(
            "p12 = 0 leaves tier-2 ASes without transit; the transit branch never completes"
        )
    lam = spec.lam
    m_peer = _round_half_up(spec.n2 * spec.p22)
    m_rest = _round_half_up(spec.n2 * (1.0 - spec.p22))

    if m_peer > 1:
        t_peering = convergence_time(
            FullMesh(ModelParams(m_peer, 1, lam))
        ).expected_time
    else:
        t_peering = 0.0

    t_x_tier1 = 1.0 / (lam * spec.p12 * spec.n1)

    t_tier1 = convergence_time(
        Poisson(ModelParams(spec.n1, spec.k1, lam), spec.p11)
    ).expected_time

    if m_rest > 1:
        t_tier1_tier2 = convergence_time(
            FullMesh(ModelParams(m_rest, 1, spec.n1 * spec.p12 * lam))
        ).expected_time
    else:
        t_tier1_tier2 = 0.0

    t_transit = t_x_tier1 + t_tier1 + t_tier1_tier2
    return CoreEstimate(
        t_peering=t_peering,
        t_x_tier1=t_x_tier1,
        t_tier1=t_tier1,
        t_tier1_tier2=t_tier1_tier2,
        t_transit=t_transit,
        t_total=max(t_peering, t_transit),
    )
