"""Closed-form engine tests.

Two independent oracles anchor this file:

* a first-passage computation on the explicit informing chain for the
  complete graph, done in exact rational arithmetic (states are "m nodes
  informed, cluster contacted or not"; holding times are 1/(lam*(n-m)));
* a brute-force frontier simulation on sampled 3-regular graphs for the
  prescribed-degree approximation.

Everything else pins worked values that were derived by hand.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

import bgpconv as bc
from bgpconv.analytic import (
    EPS_DEGREE,
    TAIL_FLOOR,
    BgpDegreeProfile,
    config_degree_row,
    convergence_time,
    core_convergence_time,
    degree_config,
    degree_config_first,
    degree_full_mesh,
    degree_poisson,
    degree_profile,
    mean_residual_degree,
    recursion_degree_row,
)
from bgpconv.errors import (
    DegenerateTailError,
    DomainError,
    ModelDegenerateError,
    UnreachableTopologyError,
)
from bgpconv.model import ConfigModel, FullMesh, ModelParams, Poisson, StepContext, TieredCore


def full_mesh_chain_expectation(n: int, k: int) -> Fraction:
    """First-passage time on the complete graph, exact in rationals.

    E_hit(m): all-informed time left once the cluster is in and m nodes
    hold the route (pure harmonic tail).  E_pre(m): same, but the cluster
    is still dark and the next informed node is uniform over the n-m
    uninformed, so the cluster is hit with chance k/(n-m).
    """
    def e_hit(m: int) -> Fraction:
        return sum((Fraction(1, n - j) for j in range(m, n)), Fraction(0))

    e_pre: dict[int, Fraction] = {}
    for m in range(n - k, 0, -1):
        u = n - m
        hit = Fraction(k, u)
        nxt = e_pre[m + 1] if m + 1 <= n - k else Fraction(0)
        e_pre[m] = Fraction(1, u) + hit * e_hit(m + k) + (1 - hit) * nxt
    return Fraction(k, n) * e_hit(k) + Fraction(n - k, n) * e_pre[1]


@pytest.mark.parametrize("n,k", [(2, 1), (4, 2), (5, 3), (10, 4), (30, 7), (30, 29)])
def test_full_mesh_agrees_with_chain_oracle(n, k):
    want = float(full_mesh_chain_expectation(n, k))
    got = convergence_time(FullMesh(ModelParams(n, k, 1.0))).expected_time
    assert got == pytest.approx(want, rel=1e-12)


def test_full_mesh_four_two_is_four_thirds():
    assert full_mesh_chain_expectation(4, 2) == Fraction(4, 3)
    est = convergence_time(FullMesh(ModelParams(4, 2, 1.0)))
    assert est.expected_time == pytest.approx(4 / 3, abs=1e-12)


def test_full_mesh_single_member_is_harmonic_sum():
    h299 = math.fsum(1 / i for i in range(1, 300))
    est = convergence_time(FullMesh(ModelParams(300, 1, 1.0)))
    assert est.expected_time == pytest.approx(h299, rel=1e-12)
    assert est.expected_time == pytest.approx(6.2793, abs=1e-4)


def test_whole_network_centralized_is_instant():
    est = convergence_time(FullMesh(ModelParams(17, 17, 1.0)))
    assert est.expected_time == 0.0
    assert est.per_x_expectation.shape == (1,)


# ---------------------------------------------------------------- degrees

def test_degree_full_mesh_examples():
    params = ModelParams(4, 2, 1.0)
    assert degree_full_mesh(StepContext(1, 0), params) == 2
    assert degree_full_mesh(StepContext(1, 1), params) == 3
    big = ModelParams(300, 1, 1.0)
    for i in (1, 5, 150, 299):
        assert degree_full_mesh(StepContext(i, 1), big) == 300 - i


def test_degree_poisson_examples():
    assert degree_poisson(StepContext(1, 1), ModelParams(3, 1, 1.0), 0.5) == pytest.approx(1.0)
    # p=1 collapses to the full-mesh count
    params = ModelParams(12, 3, 1.0)
    for x in (0, 2, 9):
        for i in range(1, params.steps + 1):
            ctx = StepContext(i, x)
            assert degree_poisson(ctx, params, 1.0) == pytest.approx(
                degree_full_mesh(ctx, params)
            )
    assert degree_poisson(StepContext(1, 1), params, 0.0) == 0.0


def test_poisson_p_one_reduces_to_full_mesh_expectation():
    params = ModelParams(40, 6, 1.0)
    dense = convergence_time(Poisson(params, 1.0)).expected_time
    mesh = convergence_time(FullMesh(params)).expected_time
    assert dense == pytest.approx(mesh, rel=1e-12)


def test_degree_config_first_examples():
    assert degree_config_first(1, ModelParams(100, 10, 1.0), 5.0) == 5.0
    got = degree_config_first(0, ModelParams(100, 10, 1.0), 5.0)
    assert got == pytest.approx(90 * 5 * math.log(100 / 90), rel=1e-12)
    assert got == pytest.approx(47.41, abs=0.01)
    with pytest.raises(DomainError):
        degree_config_first(0, ModelParams(10, 10, 1.0), 5.0)


def test_degree_config_first_sits_above_sampled_graphs():
    # The x=0 closed form is an optimistic early-step approximation: on
    # sampled 5-regular graphs the distinct outside-neighbour count of a
    # random 10-node cluster lands well below it (stub collisions), around
    # 37 of 90 here.  Pin the direction and a generous band so a regression
    # in either the formula or the generator shows up.
    import bgpconv.graphs as gg

    formula = degree_config_first(0, ModelParams(100, 10, 1.0), 5.0)
    vals = []
    for s in range(120):
        g = gg.gen_config_model(ModelParams(100, 10, 1.0), [5] * 100, s)
        cm = g.cluster_mask
        outside = set()
        for m in g.cluster:
            for nb in g.neighbors(int(m)):
                if not cm[nb]:
                    outside.add(int(nb))
        vals.append(len(outside))
    mc = float(np.mean(vals))
    assert mc < formula
    assert 0.6 * formula <= mc <= formula


def test_mean_residual_degree_examples():
    params = ModelParams(10, 1, 1.0)
    assert mean_residual_degree(1, 1, params, 3.0, 1.0) == 3.0
    assert mean_residual_degree(2, 1, params, 3.0, 1.0) == pytest.approx(2.625)
    for j in (1, 2, 5):
        assert mean_residual_degree(j, 1, params, 3.0, 0.0) == pytest.approx(3.0)


def test_degree_config_closed_form_vs_recursion_diagnostic():
    # same inputs, two evaluation orders: the closed form divides by the
    # residual pool (N - n - 1) and gives 3.875; the textbook recursion
    # divides by N - n and gives 4.0.  Both are pinned so a silent swap
    # of denominators cannot slip through.
    params = ModelParams(10, 1, 1.0)
    assert degree_config(StepContext(2, 1), params, 3.0, 0.0) == pytest.approx(3.875)
    row = recursion_degree_row(1, params, 3.0, 0.0)
    assert row[1] == pytest.approx(4.0)


def test_degree_config_scalar_floors_the_raw_row():
    from bgpconv.analytic import _config_row_raw

    params = ModelParams(20, 3, 1.0)
    raw = _config_row_raw(2, params, 4.0, 0.5)
    for i in range(1, params.steps + 1):
        want = max(float(raw[i - 1]), EPS_DEGREE)
        assert degree_config(StepContext(i, 2), params, 4.0, 0.5) == want


def test_ten_node_regular_brute_force_band():
    # brute force: sample 3-regular graphs, walk the informing order
    # uniformly over the live frontier, and average sum(1/frontier_size).
    # That mean IS the expected convergence time at lam=1, conditioned
    # only on the trajectory law, so it is an independent oracle for the
    # prescribed-degree approximation.
    import bgpconv.graphs as gg

    rng = np.random.default_rng(99)
    totals = []
    for s in range(300):
        g = gg.gen_config_model(ModelParams(10, 1, 1.0), [3] * 10, s)
        for _ in range(40):
            informed = np.zeros(10, dtype=bool)
            informed[int(rng.integers(10))] = True
            acc = 0.0
            while True:
                cnt = np.zeros(10, dtype=int)
                for v in range(10):
                    if informed[v]:
                        cnt[g.neighbors(v)] += 1
                frontier = np.flatnonzero(~informed & (cnt > 0))
                if frontier.size == 0:
                    break
                acc += 1.0 / frontier.size
                informed[int(frontier[rng.integers(frontier.size)])] = True
            totals.append(acc)
    oracle = float(np.mean(totals))
    spec = ConfigModel(ModelParams(10, 1, 1.0), mu_d=3.0, cv_d=0.0)
    est = convergence_time(spec, degenerate="clamp")
    assert est.expected_time == pytest.approx(oracle, rel=0.25)


# ------------------------------------------------------- degenerate tails

def test_strict_mode_raises_on_collapsed_row():
    spec = ConfigModel(ModelParams(50, 1, 1.0), mu_d=4.0, cv_d=1.5)
    with pytest.raises(ModelDegenerateError) as exc:
        convergence_time(spec)
    assert exc.value.value < EPS_DEGREE


def test_clamp_mode_substitutes_full_mesh_tail():
    # once the raw recurrence dips under the floor, the row must carry
    # the exact complete-graph counts for every remaining step
    from bgpconv.model import informed_counts_row

    params = ModelParams(50, 1, 1.0)
    row = config_degree_row(1, params, 4.0, 2.5, degenerate="clamp")
    assert row[0] == 4.0  # head untouched: first step is the raw mean
    mesh_tail = params.n_total - informed_counts_row(1, params)
    matches = row == mesh_tail
    assert matches.any()
    i0 = int(np.argmax(matches))
    assert i0 >= 1 and matches[i0:].all()
    assert row[-1] == 1.0
    assert (row >= TAIL_FLOOR).all()
    est = convergence_time(ConfigModel(params, mu_d=4.0, cv_d=2.5), degenerate="clamp")
    assert np.isfinite(est.expected_time) and est.expected_time > 0.0


def test_poisson_disconnected_raises_in_both_modes():
    spec = Poisson(ModelParams(8, 2, 1.0), 0.0)
    for mode in ("error", "clamp"):
        with pytest.raises(ModelDegenerateError):
            convergence_time(spec, degenerate=mode)


def test_profile_validation_rejects_zero_entries():
    params = ModelParams(4, 2, 1.0)
    values = np.ones((3, 2))
    values[1, 1] = 0.0
    with pytest.raises(ModelDegenerateError):
        BgpDegreeProfile(FullMesh(params), values).validate()


# ------------------------------------------------------------- structure

def test_estimate_decomposition_recombines():
    spec = Poisson(ModelParams(30, 4, 1.0), 0.4)
    est = convergence_time(spec)
    recombined = math.fsum(p * t for p, t in zip(est.p_sdn, est.per_x_expectation))
    assert abs(recombined - est.expected_time) <= 1e-9
    assert est.profile.values.shape == (spec.params.steps + 1, spec.params.steps)


def test_rate_scaling_is_exact_for_binary_factors():
    base = convergence_time(FullMesh(ModelParams(25, 3, 1.0))).expected_time
    for c in (2.0, 4.0, 0.5):
        scaled = convergence_time(FullMesh(ModelParams(25, 3, c))).expected_time
        assert scaled == base / c  # bitwise, not approx
    third = convergence_time(FullMesh(ModelParams(25, 3, 3.0))).expected_time
    assert third == pytest.approx(base / 3.0, rel=1e-12)


def test_expected_time_nonincreasing_in_cluster_size():
    mesh = [
        convergence_time(FullMesh(ModelParams(40, k, 1.0))).expected_time
        for k in range(1, 41)
    ]
    assert all(b <= a + 1e-12 for a, b in zip(mesh, mesh[1:]))
    assert mesh[-1] == 0.0
    sparse = [
        convergence_time(Poisson(ModelParams(60, k, 1.0), 0.3)).expected_time
        for k in range(1, 61)
    ]
    assert all(b <= a + 1e-12 for a, b in zip(sparse, sparse[1:]))


def test_tiered_spec_is_rejected_by_flat_evaluator():
    spec = TieredCore(20, 100, 1, 0.5, 0.25, 0.2, 1.0)
    with pytest.raises(DomainError):
        convergence_time(spec)
    with pytest.raises(DomainError):
        degree_profile(spec)


# ------------------------------------------------------------------ core

CORE = TieredCore(20, 100, 1, 0.5, 0.25, 0.2, 1.0)


def test_core_first_transit_hop_example():
    est = core_convergence_time(CORE)
    assert est.t_x_tier1 == pytest.approx(1 / (1.0 * 0.25 * 20), rel=1e-12)
    assert est.t_x_tier1 == 0.2


def test_core_totals_recombine():
    est = core_convergence_time(CORE)
    transit = est.t_x_tier1 + est.t_tier1 + est.t_tier1_tier2
    assert est.t_transit == pytest.approx(transit, abs=1e-12)
    assert est.t_total == max(est.t_peering, est.t_transit)


def test_core_no_transit_edges_is_unreachable():
    with pytest.raises(UnreachableTopologyError):
        core_convergence_time(TieredCore(20, 100, 1, 0.5, 0.0, 0.2, 1.0))


def test_core_full_peering_skips_transit_fill():
    est = core_convergence_time(TieredCore(20, 100, 1, 0.5, 0.25, 1.0, 1.0))
    assert est.t_tier1_tier2 == 0.0
    # every tier-2 peer of the announcer: pure full-mesh harmonic over 100
    h99 = math.fsum(1 / i for i in range(1, 100))
    assert est.t_peering == pytest.approx(h99, rel=1e-12)


def test_core_tiny_branches_contribute_nothing():
    est = core_convergence_time(TieredCore(20, 100, 1, 0.5, 0.25, 0.004, 1.0))
    assert est.t_peering == 0.0


def test_core_both_branch_orderings_are_reachable():
    dense_peering = core_convergence_time(TieredCore(20, 100, 1, 0.5, 0.25, 0.9, 1.0))
    assert dense_peering.t_total == dense_peering.t_peering > dense_peering.t_transit
    sparse_peering = core_convergence_time(TieredCore(20, 100, 1, 0.5, 0.25, 0.1, 1.0))
    assert sparse_peering.t_total == sparse_peering.t_transit > sparse_peering.t_peering


def test_core_rate_scaling_is_exact_for_binary_factors():
    base = core_convergence_time(CORE)
    fast = core_convergence_time(TieredCore(20, 100, 1, 0.5, 0.25, 0.2, 2.0))
    for field in ("t_peering", "t_x_tier1", "t_tier1", "t_tier1_tier2", "t_transit", "t_total"):
        assert getattr(fast, field) == getattr(base, field) / 2.0


def test_core_analytic_monotone_in_cluster_size():
    totals = [
        core_convergence_time(TieredCore(20, 100, k1, 0.5, 0.25, 0.2, 1.0)).t_total
        for k1 in range(1, 21)
    ]
    assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))
