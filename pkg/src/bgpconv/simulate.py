"""Monte Carlo simulator for update dissemination on concrete graphs.

Runs are reproducible: run r under master seed s derives its RNG state
from SeedSequence((s, r)), split into one child for announcer choice
and one for the exponential waiting-time buffer.  Changing the number
of runs therefore never perturbs earlier runs, and batches could be
farmed out run-by-run without shared RNG state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._kernels import run_dissemination
from .errors import DomainError, UnreachableTopologyError
from .graphs import ROLE_TIER2, Graph

Announcer = Union[int, str]


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit sub-seed hashed from integer parts."""
    ss = np.random.SeedSequence(tuple(int(p) for p in parts))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class RunStats:
    """Sample statistics over per-run convergence times."""

    runs: int
    mean: float
    std_dev: float
    std_err: float

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.std_err
        return (self.mean - half, self.mean + half)

    @classmethod
    def from_times(cls, times: np.ndarray) -> "RunStats":
        times = np.asarray(times, dtype=np.float64)
        runs = int(times.size)
        if runs < 1:
            raise DomainError("need at least one run")
        mean = float(times.mean())
        std = float(times.std(ddof=1)) if runs > 1 else 0.0
        return cls(runs=runs, mean=mean, std_dev=std, std_err=std / math.sqrt(runs))


@dataclass(frozen=True, eq=False)
class RunConfig:
    """One simulation setup: a concrete graph plus run parameters.

    announcer is a node id or "uniform" (redrawn per run).  Under the
    "strict" policy a run that cannot cover every node raises; under
    "reachable-only" it converges once all reachable nodes are informed.
    """

    graph: Graph
    announcer: Announcer = "uniform"
    lam: float = 1.0
    seed: int = 0
    policy: str = "strict"

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise DomainError(f"lam must be positive, got {self.lam}")
        if self.policy not in ("strict", "reachable-only"):
            raise DomainError(f"unknown policy {self.policy!r}")
        if isinstance(self.announcer, str):
            if self.announcer != "uniform":
                raise DomainError(f"unknown announcer policy {self.announcer!r}")
        else:
            _check_announcer(self.graph, self.announcer)


@dataclass(frozen=True, eq=False)
class DisseminationTrace:
    """One run's full event history.

    events[i] = (time, nodes informed at that instant).  The first
    event is at time 0.0 and holds the announcer plus, when the
    announcer is a cluster member, the whole cluster.
    """

    announcer: int
    events: tuple[tuple[float, frozenset], ...]
    convergence_time: float

    def informed_after(self, t: float) -> frozenset:
        out: set[int] = set()
        for when, nodes in self.events:
            if when > t:
                break
            out |= nodes
        return frozenset(out)


def _check_announcer(graph: Graph, announcer: int) -> int:
    announcer = int(announcer)
    if not 0 <= announcer < graph.node_count:
        raise DomainError(f"announcer {announcer} out of range")
    if graph.is_tiered and graph.roles[announcer] != ROLE_TIER2:
        raise DomainError("tiered announcements must originate at a tier-2 node")
    return announcer


def _draw_announcer(graph: Graph, rng: np.random.Generator) -> int:
    if graph.is_tiered:
        tier2 = np.flatnonzero(graph.roles == ROLE_TIER2)
        return int(tier2[rng.integers(0, tier2.size)])
    return int(rng.integers(0, graph.node_count))


def _run_times(
    cfg: RunConfig, run_index: int, backend: str | None
) -> tuple[int, np.ndarray]:
    """Resolve the run's announcer and produce per-node informed times."""
    run_ss = np.random.SeedSequence((int(cfg.seed), int(run_index)))
    ann_child, buf_child = run_ss.spawn(2)
    if isinstance(cfg.announcer, str):
        origin = _draw_announcer(cfg.graph, np.random.default_rng(ann_child))
    else:
        origin = _check_announcer(cfg.graph, cfg.announcer)
    times, _ = run_dissemination(
        cfg.graph, origin, 1.0 / float(cfg.lam), buf_child, backend, cfg.policy
    )
    return origin, times


def simulate_once(
    cfg: RunConfig, run_index: int = 0, backend: str | None = None
) -> DisseminationTrace:
    """Run one dissemination and keep the full event trace."""
    origin, times = _run_times(cfg, run_index, backend)
    reached = np.flatnonzero(times >= 0.0)
    order = reached[np.argsort(times[reached], kind="stable")]
    events: list[tuple[float, frozenset]] = []
    cur_t: float | None = None
    cur_nodes: list[int] = []
    for idx in order:
        when = float(times[idx])
        if cur_t is None or when != cur_t:
            if cur_nodes:
                events.append((cur_t, frozenset(cur_nodes)))
            cur_t = when
            cur_nodes = [int(idx)]
        else:
            cur_nodes.append(int(idx))
    if cur_nodes:
        events.append((cur_t, frozenset(cur_nodes)))
    return DisseminationTrace(
        announcer=origin,
        events=tuple(events),
        convergence_time=float(times[reached].max()),
    )


@dataclass(frozen=True, eq=False)
class BatchResult:
    """Convergence times for a batch of runs on one fixed graph."""

    times: np.ndarray
    announcers: np.ndarray
    stats: RunStats


def simulate_batch(
    cfg: RunConfig,
    runs: int,
    announcer_policy: str = "uniform-per-run",
    backend: str | None = None,
) -> BatchResult:
    """Run many disseminations on the fixed graph in cfg.

    announcer_policy "uniform-per-run" redraws the origin each run
    (uniform over all nodes on flat graphs, over tier-2 nodes on tiered
    ones); "fixed" uses cfg.announcer for every run.
    """
    if runs < 1:
        raise DomainError(f"runs must be >= 1, got {runs}")
    if announcer_policy not in ("uniform-per-run", "fixed"):
        raise DomainError(f"unknown announcer policy {announcer_policy!r}")
    if announcer_policy == "fixed" and isinstance(cfg.announcer, str):
        raise DomainError("fixed announcer policy needs a concrete announcer node")
    if announcer_policy == "uniform-per-run" and not isinstance(cfg.announcer, str):
        cfg = RunConfig(cfg.graph, "uniform", cfg.lam, cfg.seed, cfg.policy)
    times = np.empty(runs, dtype=np.float64)
    announcers = np.empty(runs, dtype=np.int64)
    for r in range(runs):
        try:
            origin, node_times = _run_times(cfg, r, backend)
        except UnreachableTopologyError as exc:
            raise UnreachableTopologyError(f"run {r}: {exc}") from exc
        reached = node_times >= 0.0
        times[r] = node_times[reached].max()
        announcers[r] = origin
    return BatchResult(
        times=times, announcers=announcers, stats=RunStats.from_times(times)
    )


def simulate_tiered(
    cfg: RunConfig, run_index: int = 0, backend: str | None = None
) -> DisseminationTrace:
    """simulate_once specialized to tiered graphs.

    The announcer must be a tier-2 node; it forwards over its own
    peering and transit edges, tier-1 nodes forward everywhere, and
    other tier-2 nodes only receive.
    """
    if not cfg.graph.is_tiered:
        raise DomainError("simulate_tiered needs a graph with tier roles")
    return simulate_once(cfg, run_index, backend)


def format_trace(trace: DisseminationTrace) -> str:
    """Line-delimited trace: `time node_ids...`, one event per line."""
    lines = []
    for when, nodes in trace.events:
        ids = " ".join(str(i) for i in sorted(nodes))
        lines.append(f"{format(when, '.9g')} {ids}")
    return "\n".join(lines) + "\n"
