"""Graph generators realizing the topology specs, plus reachability tools.

All generators are deterministic given (parameters, seed) and produce
simple undirected graphs in CSR form.  Tiered-core graphs additionally
carry per-edge kind labels and per-node tier roles; flat graphs carry a
uniform role.  The SDN cluster is stored on the graph so simulation and
reachability can treat it as a single super-node (informing any member
informs all).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import IO, Iterable, Union

import numpy as np

from .errors import DomainError, UnreachableTopologyError
from .model import (
    ConfigModel,
    FullMesh,
    ModelParams,
    Poisson,
    TieredCore,
    TopologySpec,
    degree_stats,
)

log = logging.getLogger(__name__)

ROLE_FLAT = 0
ROLE_TIER1 = 1
ROLE_TIER2 = 2

KIND_PEER11 = 1
KIND_TRANSIT12 = 2
KIND_PEER22 = 3
KIND_NAMES = {KIND_PEER11: "peer11", KIND_TRANSIT12: "transit12", KIND_PEER22: "peer22"}
KIND_CODES = {name: code for code, name in KIND_NAMES.items()}

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph in CSR form.

    ``indices[indptr[u]:indptr[u+1]]`` lists u's neighbors in ascending
    order.  ``kinds`` (tiered graphs only) labels each directed
    half-edge in the same alignment as ``indices``.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    roles: np.ndarray
    cluster: np.ndarray
    kinds: np.ndarray | None = None

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return int(self.indices.size) // 2

    @property
    def is_tiered(self) -> bool:
        return self.kinds is not None

    @property
    def cluster_mask(self) -> np.ndarray:
        mask = np.zeros(self.node_count, dtype=np.bool_)
        mask[self.cluster] = True
        return mask

    def degree_stats(self) -> tuple[float, float]:
        """Realized (mean degree, coefficient of variation)."""
        return degree_stats(self.degrees)

    def validate(self) -> None:
        """Structural invariants: CSR shape, symmetry, simplicity, cluster."""
        n = self.node_count
        if self.indptr.shape != (n + 1,) or self.indptr[0] != 0:
            raise AssertionError("malformed indptr")
        if self.indptr[-1] != self.indices.size:
            raise AssertionError("indptr does not span indices")
        seen = set()
        for u in range(n):
            nbrs = self.neighbors(u)
            if nbrs.size:
                if np.any(np.diff(nbrs) <= 0):
                    raise AssertionError(f"neighbors of {u} not strictly ascending")
                if np.any(nbrs == u):
                    raise AssertionError(f"self loop at {u}")
            for v in nbrs:
                seen.add((u, int(v)))
        for u, v in seen:
            if (v, u) not in seen:
                raise AssertionError(f"asymmetric edge {u}-{v}")
        if self.cluster.size and (
            self.cluster.min() < 0 or self.cluster.max() >= n
        ):
            raise AssertionError("cluster node out of range")
        if self.is_tiered:
            if self.kinds.shape != self.indices.shape:
                raise AssertionError("kinds misaligned with indices")
            if np.any(self.roles[self.cluster] != ROLE_TIER1):
                raise AssertionError("tiered cluster must lie in tier-1")


def from_edges(
    node_count: int,
    u: np.ndarray,
    v: np.ndarray,
    kinds: np.ndarray | None = None,
    roles: np.ndarray | None = None,
    cluster: Iterable[int] = (),
) -> Graph:
    """Build a Graph from undirected edge endpoint arrays.

    Rejects self loops and duplicate edges rather than repairing them;
    generators are responsible for producing simple edge sets.
    """
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.shape != v.shape:
        raise DomainError("edge endpoint arrays differ in length")
    if np.any(u == v):
        raise DomainError("self loops are not allowed")
    if u.size:
        if int(min(u.min(), v.min())) < 0 or int(max(u.max(), v.max())) >= node_count:
            raise DomainError("edge endpoint out of range")
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        pair_ids = lo * np.int64(node_count) + hi
        if np.unique(pair_ids).size != pair_ids.size:
            raise DomainError("duplicate edges are not allowed")
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    half_kinds = None
    if kinds is not None:
        kinds = np.asarray(kinds, dtype=np.uint8)
        if kinds.shape != u.shape:
            raise DomainError("kinds array misaligned with edges")
        half_kinds = np.concatenate([kinds, kinds])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    if half_kinds is not None:
        half_kinds = half_kinds[order]
    counts = np.bincount(src, minlength=node_count)
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    if roles is None:
        roles = np.full(node_count, ROLE_FLAT, dtype=np.uint8)
    cluster_arr = np.array(sorted(int(c) for c in cluster), dtype=np.int64)
    return Graph(
        node_count=node_count,
        indptr=indptr,
        indices=dst,
        roles=np.asarray(roles, dtype=np.uint8),
        cluster=cluster_arr,
        kinds=half_kinds,
    )


@dataclass(frozen=True)
class DegreeSequenceStats:
    """Summary of a degree sequence as the analytic formulas consume it."""

    mu_d: float
    cv_d: float
    min_d: int
    max_d: int

    @classmethod
    def from_degrees(cls, degrees) -> "DegreeSequenceStats":
        arr = np.asarray(degrees, dtype=np.int64)
        mu, cv = degree_stats(arr)
        return cls(mu_d=mu, cv_d=cv, min_d=int(arr.min()), max_d=int(arr.max()))


def _sample_cluster(rng: np.random.Generator, pool_size: int, k: int) -> np.ndarray:
    return np.sort(rng.choice(pool_size, size=k, replace=False).astype(np.int64))


def gen_full_mesh(params: ModelParams, seed: SeedLike) -> Graph:
    """Complete graph on n_total nodes with a uniformly sampled cluster."""
    rng = as_generator(seed)
    n = params.n_total
    u, v = np.triu_indices(n, k=1)
    cluster = _sample_cluster(rng, n, params.k_cluster)
    return from_edges(n, u.astype(np.int64), v.astype(np.int64), cluster=cluster)


# Row block size for pair sampling; keeps memory bounded for large n
# while consuming the RNG stream in the same row-major pair order as a
# single full draw would.
_PAIR_BLOCK_ROWS = 2048


def gen_poisson(params: ModelParams, p_edge: float, seed: SeedLike) -> Graph:
    """Independent-edge graph: each pair connected with probability p_edge."""
    if not 0.0 <= p_edge <= 1.0:
        raise DomainError(f"p_edge must be in [0, 1], got {p_edge}")
    rng = as_generator(seed)
    n = params.n_total
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    for row_start in range(0, n, _PAIR_BLOCK_ROWS):
        row_end = min(row_start + _PAIR_BLOCK_ROWS, n)
        for u_node in range(row_start, row_end):
            count = n - u_node - 1
            if count <= 0:
                continue
            hit = rng.random(count) < p_edge
            if hit.any():
                vv = np.flatnonzero(hit).astype(np.int64) + u_node + 1
                us.append(np.full(vv.size, u_node, dtype=np.int64))
                vs.append(vv)
    u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    cluster = _sample_cluster(rng, n, params.k_cluster)
    return from_edges(n, u, v, cluster=cluster)


def gen_power_law_degrees(
    n: int, d_min: int, d_max: int, exponent: float, seed: SeedLike
) -> np.ndarray:
    """Sample n degrees from a truncated discrete power law.

    P(d) is proportional to d^(-exponent) on the integer support
    [d_min, d_max], sampled by inverse transform.  If the sampled sum is
    odd, one uniformly chosen entry below d_max is incremented to
    restore even stub parity (on single-point support, where no entry
    sits below d_max, one entry is bumped past it instead).
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 1 <= d_min <= d_max:
        raise DomainError(f"need 1 <= d_min <= d_max, got [{d_min}, {d_max}]")
    if d_max >= n:
        raise DomainError(f"d_max must be below n, got {d_max} >= {n}")
    if not exponent > 1.0:
        raise DomainError(f"exponent must be > 1, got {exponent}")
    rng = as_generator(seed)
    support = np.arange(d_min, d_max + 1, dtype=np.float64)
    pmf = support ** (-float(exponent))
    pmf /= pmf.sum()
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0  # guard against cumulative rounding
    draws = rng.random(n)
    degrees = d_min + np.searchsorted(cdf, draws, side="right")
    degrees = degrees.astype(np.int64)
    if int(degrees.sum()) % 2 == 1:
        below = np.flatnonzero(degrees < d_max)
        if below.size:
            degrees[below[rng.integers(0, below.size)]] += 1
        else:
            degrees[rng.integers(0, n)] += 1
    return degrees


def gen_config_model(
    params: ModelParams, degrees: np.ndarray, seed: SeedLike
) -> Graph:
    """Erased configuration model: uniform stub matching, then drop
    self loops and parallel edges.

    Erasure lowers realized degrees below the prescribed sequence, so
    callers comparing against closed forms should read the realized
    stats back from the returned graph (Graph.degree_stats).
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    n = params.n_total
    if degrees.shape != (n,):
        raise DomainError(f"degree sequence length {degrees.size} != n_total {n}")
    if np.any(degrees < 1):
        raise DomainError("every degree must be >= 1")
    if int(degrees.max()) >= n:
        raise DomainError("every degree must be below the node count")
    if int(degrees.sum()) % 2 != 0:
        raise DomainError("degree sum must be even; apply a parity fix first")
    rng = as_generator(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), degrees)
    stubs = rng.permutation(stubs)
    a = stubs[0::2]
    b = stubs[1::2]
    keep = a != b
    a, b = a[keep], b[keep]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    pair_ids = np.unique(lo * np.int64(n) + hi)
    u = (pair_ids // n).astype(np.int64)
    v = (pair_ids % n).astype(np.int64)
    cluster = _sample_cluster(rng, n, params.k_cluster)
    return from_edges(n, u, v, cluster=cluster)


def gen_tiered_core(spec: TieredCore, seed: SeedLike) -> Graph:
    """Two-tier core graph with labeled layers.

    Nodes [0, n1) are tier-1, [n1, n1+n2) are tier-2.  Three
    independent Bernoulli layers: tier-1 peering (p11), transit (p12),
    tier-2 peering (p22).  The cluster is k1 nodes uniform over tier-1.
    """
    rng = as_generator(seed)
    n1, n2 = spec.n1, spec.n2
    n = n1 + n2

    u1, v1 = np.triu_indices(n1, k=1)
    m11 = rng.random(u1.size) < spec.p11
    e11_u = u1[m11].astype(np.int64)
    e11_v = v1[m11].astype(np.int64)

    m12 = rng.random((n1, n2)) < spec.p12
    t1, t2 = np.nonzero(m12)
    e12_u = t1.astype(np.int64)
    e12_v = t2.astype(np.int64) + n1

    u2, v2 = np.triu_indices(n2, k=1)
    m22 = rng.random(u2.size) < spec.p22
    e22_u = u2[m22].astype(np.int64) + n1
    e22_v = v2[m22].astype(np.int64) + n1

    u = np.concatenate([e11_u, e12_u, e22_u])
    v = np.concatenate([e11_v, e12_v, e22_v])
    kinds = np.concatenate(
        [
            np.full(e11_u.size, KIND_PEER11, dtype=np.uint8),
            np.full(e12_u.size, KIND_TRANSIT12, dtype=np.uint8),
            np.full(e22_u.size, KIND_PEER22, dtype=np.uint8),
        ]
    )
    roles = np.concatenate(
        [
            np.full(n1, ROLE_TIER1, dtype=np.uint8),
            np.full(n2, ROLE_TIER2, dtype=np.uint8),
        ]
    )
    cluster = _sample_cluster(rng, n1, spec.k1)
    return from_edges(n, u, v, kinds=kinds, roles=roles, cluster=cluster)


def gen_graph(spec: TopologySpec, seed: SeedLike) -> Graph:
    """Dispatch a topology spec to its generator."""
    if isinstance(spec, FullMesh):
        return gen_full_mesh(spec.params, seed)
    if isinstance(spec, Poisson):
        return gen_poisson(spec.params, spec.p_edge, seed)
    if isinstance(spec, ConfigModel):
        if spec.degree_seq is None:
            raise DomainError(
                "config-model graph generation needs a concrete degree sequence"
            )
        return gen_config_model(
            spec.params, np.asarray(spec.degree_seq, dtype=np.int64), seed
        )
    if isinstance(spec, TieredCore):
        return gen_tiered_core(spec, seed)
    raise DomainError(f"unknown topology spec {type(spec).__name__}")


def forwarder_mask(graph: Graph, announcer: int) -> np.ndarray:
    """Which informed nodes re-forward updates.

    Flat graphs: every node.  Tiered graphs: tier-1 nodes always, plus
    the announcing tier-2 node (its peering and transit edges carry its
    own announcement); other tier-2 nodes receive but do not forward.
    """
    if not graph.is_tiered:
        return np.ones(graph.node_count, dtype=np.bool_)
    mask = graph.roles == ROLE_TIER1
    mask = mask.copy()
    mask[announcer] = True
    return mask


def reachable_set(graph: Graph, announcer: int) -> np.ndarray:
    """Nodes reachable from the announcer along eligible paths.

    The SDN cluster acts as a super-node: reaching any member reaches
    all members.  Only forwarders extend paths; a non-forwarding node is
    reachable when some forwarder neighbors it (one final hop).
    """
    if not 0 <= announcer < graph.node_count:
        raise DomainError(f"announcer {announcer} out of range")
    forwards = forwarder_mask(graph, announcer)
    cluster_mask = graph.cluster_mask
    seen = np.zeros(graph.node_count, dtype=np.bool_)
    seen[announcer] = True
    stack = [int(announcer)]
    cluster_merged = False
    while stack:
        node = stack.pop()
        if cluster_mask[node] and not cluster_merged:
            cluster_merged = True
            for member in graph.cluster:
                member = int(member)
                if not seen[member]:
                    seen[member] = True
                    stack.append(member)
        if not forwards[node]:
            continue
        for nbr in graph.neighbors(node):
            nbr = int(nbr)
            if not seen[nbr]:
                seen[nbr] = True
                stack.append(nbr)
    return seen


def is_fully_reachable(graph: Graph, announcer: int) -> bool:
    return bool(reachable_set(graph, announcer).all())


@dataclass(frozen=True, eq=False)
class ReachableDraw:
    """A (graph, announcer) pair that covers the network, plus retry info."""

    graph: Graph
    announcer: int
    attempts: int       # draws consumed, including the successful one
    failures: int       # draws rejected for unreachable nodes


def _draw_announcer(rng: np.random.Generator, graph: Graph) -> int:
    if graph.is_tiered:
        tier2 = np.flatnonzero(graph.roles == ROLE_TIER2)
        return int(tier2[rng.integers(0, tier2.size)])
    return int(rng.integers(0, graph.node_count))


def ensure_reachable(
    spec: TopologySpec,
    seed: int,
    announcer: int | None = None,
    max_retries: int = 100,
) -> ReachableDraw:
    """Draw (graph, announcer) pairs until every node is reachable.

    Each attempt uses a fresh sub-seed derived from (seed, attempt), so
    the result is deterministic given the arguments.  Raises
    UnreachableTopologyError after max_retries failures.  The failure
    count is returned (and logged) so callers can record the rejection
    rate of the underlying ensemble.
    """
    failures = 0
    last_reached = 0
    node_count = 0
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), attempt)))
        graph = gen_graph(spec, rng)
        chosen = announcer if announcer is not None else _draw_announcer(rng, graph)
        if graph.is_tiered and graph.roles[chosen] != ROLE_TIER2:
            raise DomainError(f"announcer {chosen} is not a tier-2 node")
        reached = reachable_set(graph, chosen)
        if reached.all():
            if failures:
                log.debug(
                    "ensure_reachable: %d rejected draws before success", failures
                )
            return ReachableDraw(
                graph=graph, announcer=chosen, attempts=attempt + 1, failures=failures
            )
        failures += 1
        last_reached = int(reached.sum())
        node_count = graph.node_count
    raise UnreachableTopologyError(
        f"no reachable draw within {max_retries} attempts (seed {seed}); "
        f"last draw reached {last_reached} of {node_count} nodes"
    )


def export_graph(graph: Graph, dest: Union[str, IO[str]]) -> None:
    """Write the edge-list text format.

    Line 1: ``n <node_count>``.  One ``u v`` line per edge (with a kind
    name appended on tiered graphs; transit edges list the tier-1
    endpoint first).  Final line: ``cluster u1 u2 ...``.
    """
    own = isinstance(dest, str)
    fh = open(dest, "w", encoding="ascii") if own else dest
    try:
        fh.write(f"n {graph.node_count}\n")
        for u in range(graph.node_count):
            start, end = graph.indptr[u], graph.indptr[u + 1]
            for pos in range(start, end):
                v = int(graph.indices[pos])
                if v <= u:
                    continue  # each undirected edge once
                if graph.kinds is None:
                    fh.write(f"{u} {v}\n")
                else:
                    kind = int(graph.kinds[pos])
                    a, b = u, v
                    if kind == KIND_TRANSIT12 and graph.roles[u] != ROLE_TIER1:
                        a, b = v, u
                    fh.write(f"{a} {b} {KIND_NAMES[kind]}\n")
        fh.write("cluster " + " ".join(str(int(c)) for c in graph.cluster) + "\n")
    finally:
        if own:
            fh.close()


def import_graph(src: Union[str, IO[str]]) -> Graph:
    """Read the edge-list text format written by export_graph.

    Roles are reconstructed from edge kinds: peer11 endpoints and the
    first endpoint of a transit12 edge are tier-1; peer22 endpoints and
    the second transit12 endpoint are tier-2.  Files without kinds load
    as flat graphs.  Nodes no kind touches default to tier-2.
    """
    own = isinstance(src, str)
    fh = open(src, "r", encoding="ascii") if own else src
    try:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "n":
            raise DomainError("expected header line 'n <count>'")
        n = int(header[1])
        us: list[int] = []
        vs: list[int] = []
        kind_list: list[int] = []
        tier1: set[int] = set()
        tier2: set[int] = set()
        cluster: list[int] = []
        saw_cluster = False
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "cluster":
                cluster = [int(p) for p in parts[1:]]
                saw_cluster = True
                continue
            if len(parts) not in (2, 3):
                raise DomainError(f"malformed edge line: {line.rstrip()}")
            a, b = int(parts[0]), int(parts[1])
            us.append(a)
            vs.append(b)
            if len(parts) == 3:
                kind = KIND_CODES.get(parts[2])
                if kind is None:
                    raise DomainError(f"unknown edge kind {parts[2]!r}")
                kind_list.append(kind)
                if kind == KIND_PEER11:
                    tier1.update((a, b))
                elif kind == KIND_PEER22:
                    tier2.update((a, b))
                else:
                    tier1.add(a)
                    tier2.add(b)
            else:
                kind_list.append(0)
        if not saw_cluster:
            raise DomainError("missing cluster line")
        tiered = any(k != 0 for k in kind_list)
        if tiered and 0 in kind_list:
            raise DomainError("mixed labeled and unlabeled edges")
        if tier1 & tier2:
            raise DomainError(f"conflicting roles for nodes {sorted(tier1 & tier2)}")
        u_arr = np.asarray(us, dtype=np.int64)
        v_arr = np.asarray(vs, dtype=np.int64)
        if tiered:
            roles = np.full(n, ROLE_TIER2, dtype=np.uint8)
            roles[sorted(tier1)] = ROLE_TIER1
            kinds = np.asarray(kind_list, dtype=np.uint8)
            return from_edges(n, u_arr, v_arr, kinds=kinds, roles=roles, cluster=cluster)
        return from_edges(n, u_arr, v_arr, cluster=cluster)
    finally:
        if own:
            fh.close()
