"""Experiment harness: penetration sweeps, the tiered-core case study,
and machine-readable CSV/JSON emission.

Every experiment is deterministic given its master seed.  Point i of a
sweep derives a graph seed and a simulation seed by hashing
(master_seed, i, salt); run r of the case study hashes
(master_seed, point, r, salt) because tiered reachability depends on
the announcer, so graph and announcer are redrawn jointly per run.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, fields
from typing import Sequence, Union

import numpy as np

from ._kernels import run_dissemination
from .analytic import convergence_time, core_convergence_time
from .errors import (
    DegenerateTailError,
    DomainError,
    ModelDegenerateError,
    UnreachableTopologyError,
)
from .graphs import (
    ROLE_TIER2,
    ensure_reachable,
    gen_graph,
    gen_power_law_degrees,
)
from .model import (
    ConfigModel,
    FullMesh,
    ModelParams,
    Poisson,
    TieredCore,
    TopologySpec,
)
from .simulate import RunConfig, RunStats, derive_seed, simulate_batch

_GRAPH_SALT = 1
_SIM_SALT = 2
_DEGSEQ_SALT = 3

# k = 0 is outside the model, so the 0.0 label maps to k = 1 (the
# no-effective-centralization baseline).
DEFAULT_FRACTIONS = tuple(round(i / 10, 1) for i in range(11))

_POINT_ERRORS = (
    DomainError,
    ModelDegenerateError,
    DegenerateTailError,
    UnreachableTopologyError,
)


def fraction_to_k(n_total: int, fraction: float) -> int:
    """Map a penetration label k/N onto a valid cluster size."""
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"penetration fraction must be in [0, 1], got {fraction}")
    return min(n_total, max(1, int(math.floor(n_total * fraction + 0.5))))


def power_law_config_spec(
    n_total: int,
    d_min: int,
    d_max: int,
    exponent: float,
    master_seed: int,
    lam: float = 1.0,
) -> ConfigModel:
    """Configuration-model template with one power-law degree sequence.

    The sequence is drawn once from the master seed and then shared by
    every sweep point, so the sweep varies only the cluster size.
    """
    degrees = gen_power_law_degrees(
        n_total, d_min, d_max, exponent, derive_seed(master_seed, _DEGSEQ_SALT)
    )
    return ConfigModel(
        ModelParams(n_total, 1, lam), degree_seq=tuple(int(d) for d in degrees)
    )


@dataclass(frozen=True)
class SweepSpec:
    """A penetration sweep over one topology template.

    sweep_values are k/N fractions; the template's cluster size is
    replaced point by point.
    """

    topology: TopologySpec
    sweep_values: tuple[float, ...] = DEFAULT_FRACTIONS
    sweep_variable: str = "k"
    runs_per_point: int = 200
    master_seed: int = 0
    policy: str = "regenerate"

    def __post_init__(self) -> None:
        if not self.sweep_values:
            raise DomainError("sweep needs at least one value")
        if self.sweep_variable != "k":
            raise DomainError(
                "run_sweep varies k only; p22/k1 grids belong to run_case_study"
            )
        if self.runs_per_point < 1:
            raise DomainError("runs_per_point must be >= 1")
        if self.policy not in ("regenerate", "reachable-only"):
            raise DomainError(f"unknown policy {self.policy!r}")
        if isinstance(self.topology, TieredCore):
            raise DomainError("penetration sweeps need a flat topology template")
        for v in self.sweep_values:
            if not 0.0 <= float(v) <= 1.0:
                raise DomainError(f"sweep value {v} outside [0, 1]")


@dataclass(frozen=True)
class ComparisonRow:
    """One sweep point: closed form vs Monte Carlo."""

    sweep_value: float
    analytic: float
    sim_mean: float
    sim_std_err: float
    rel_error: float
    jensen_ok: bool
    runs: int
    seed: int
    error: str | None = None


def _respec_k(template: TopologySpec, k: int) -> TopologySpec:
    base = template.params
    params = ModelParams(base.n_total, k, base.lam)
    if isinstance(template, FullMesh):
        return FullMesh(params)
    if isinstance(template, Poisson):
        return Poisson(params, template.p_edge)
    if isinstance(template, ConfigModel):
        if template.degree_seq is None:
            raise DomainError("sweep over a config model needs a degree sequence")
        return ConfigModel(params, degree_seq=template.degree_seq)
    raise DomainError(f"cannot sweep over {type(template).__name__}")


def _rel_error(analytic: float, sim_mean: float) -> float:
    if sim_mean == 0.0:
        return 0.0 if analytic == 0.0 else math.inf
    return abs(analytic - sim_mean) / sim_mean


def run_sweep(spec: SweepSpec, backend: str | None = None) -> list[ComparisonRow]:
    """Evaluate analytic vs simulated convergence across the sweep.

    Each point draws one fixed graph (regenerated until reachable under
    the default policy), evaluates the closed form, then runs a batch
    with per-run uniform announcers.  For configuration models the
    closed form is fed the realized post-erasure degree statistics.
    A failing point is recorded in-row and the sweep continues.
    """
    rows: list[ComparisonRow] = []
    n_total = spec.topology.params.n_total
    run_policy = "strict" if spec.policy == "regenerate" else "reachable-only"
    for i, fraction in enumerate(sorted(float(v) for v in spec.sweep_values)):
        try:
            point = _respec_k(spec.topology, fraction_to_k(n_total, fraction))
            graph_seed = derive_seed(spec.master_seed, i, _GRAPH_SALT)
            if spec.policy == "regenerate":
                graph = ensure_reachable(point, graph_seed).graph
            else:
                graph = gen_graph(
                    point, np.random.SeedSequence((graph_seed, 0))
                )
            if isinstance(point, ConfigModel):
                mu_d, cv_d = graph.degree_stats()
                estimate = convergence_time(
                    ConfigModel(point.params, mu_d=mu_d, cv_d=cv_d),
                    degenerate="clamp",
                )
            else:
                estimate = convergence_time(point)
            analytic = estimate.expected_time
            cfg = RunConfig(
                graph,
                "uniform",
                point.params.lam,
                derive_seed(spec.master_seed, i, _SIM_SALT),
                run_policy,
            )
            stats = simulate_batch(cfg, spec.runs_per_point, backend=backend).stats
            rows.append(
                ComparisonRow(
                    sweep_value=fraction,
                    analytic=analytic,
                    sim_mean=stats.mean,
                    sim_std_err=stats.std_err,
                    rel_error=_rel_error(analytic, stats.mean),
                    jensen_ok=analytic <= stats.mean + 2.0 * stats.std_err,
                    runs=spec.runs_per_point,
                    seed=spec.master_seed,
                )
            )
        except _POINT_ERRORS as exc:
            rows.append(
                ComparisonRow(
                    sweep_value=fraction,
                    analytic=math.nan,
                    sim_mean=math.nan,
                    sim_std_err=math.nan,
                    rel_error=math.nan,
                    jensen_ok=False,
                    runs=spec.runs_per_point,
                    seed=spec.master_seed,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return rows


@dataclass(frozen=True)
class CoreRow:
    """One case-study grid point: tiered closed form vs Monte Carlo."""

    p22: float
    k1: int
    analytic_total: float
    analytic_peering: float
    analytic_transit: float
    sim_mean: float
    sim_std_err: float
    rel_error: float
    runs: int
    seed: int
    beats_baseline: bool
    error: str | None = None


@dataclass(frozen=True, eq=False)
class CaseStudyResult:
    """Grid rows plus, per p22, the smallest k1 whose analytic total
    beats the k1 = 1 flattening-only baseline (None when nothing does)."""

    rows: tuple[CoreRow, ...]
    best_k1: dict


def _case_study_point(
    spec_pt: TieredCore,
    runs: int,
    master_seed: int,
    point_index: int,
    policy: str,
    backend: str | None,
) -> RunStats:
    inv_lam = 1.0 / float(spec_pt.lam)
    times = np.empty(runs, dtype=np.float64)
    for r in range(runs):
        reach_seed = derive_seed(master_seed, point_index, r, _GRAPH_SALT)
        buf_seed = derive_seed(master_seed, point_index, r, _SIM_SALT)
        if policy == "regenerate":
            draw = ensure_reachable(spec_pt, reach_seed)
            node_times, _ = run_dissemination(
                draw.graph, draw.announcer, inv_lam, buf_seed, backend
            )
            times[r] = node_times.max()
        else:
            rng = np.random.default_rng(np.random.SeedSequence((reach_seed, 0)))
            graph = gen_graph(spec_pt, rng)
            tier2 = np.flatnonzero(graph.roles == ROLE_TIER2)
            origin = int(tier2[rng.integers(0, tier2.size)])
            node_times, _ = run_dissemination(
                graph, origin, inv_lam, buf_seed, backend, policy="reachable-only"
            )
            times[r] = node_times[node_times >= 0.0].max()
    return RunStats.from_times(times)


def run_case_study(
    template: TieredCore,
    p22_values: Sequence[float],
    k1_values: Sequence[int],
    runs_per_point: int = 5000,
    master_seed: int = 0,
    policy: str = "regenerate",
    backend: str | None = None,
) -> CaseStudyResult:
    """Grid evaluation over (p22, k1) of the tiered-core model.

    The graph AND the tier-2 announcer are redrawn jointly for every
    run (reachability depends on the announcer in the tiered model).
    Unreachable or otherwise failing grid points are marked in-row and
    the grid continues.
    """
    if runs_per_point < 1:
        raise DomainError("runs_per_point must be >= 1")
    if policy not in ("regenerate", "reachable-only"):
        raise DomainError(f"unknown policy {policy!r}")
    if not p22_values or not k1_values:
        raise DomainError("case study needs nonempty p22 and k1 grids")

    grid = list(
        itertools.product(
            sorted(float(p) for p in p22_values),
            sorted(int(k) for k in k1_values),
        )
    )
    partial = []
    for j, (p22, k1) in enumerate(grid):
        try:
            spec_pt = TieredCore(
                template.n1, template.n2, k1, template.p11, template.p12, p22,
                template.lam,
            )
            est = core_convergence_time(spec_pt)
            stats = _case_study_point(
                spec_pt, runs_per_point, master_seed, j, policy, backend
            )
            partial.append((p22, k1, est, stats, None))
        except _POINT_ERRORS as exc:
            partial.append((p22, k1, None, None, f"{type(exc).__name__}: {exc}"))

    baselines: dict[float, float] = {}
    for p22 in sorted(set(p for p, _ in grid)):
        try:
            base_spec = TieredCore(
                template.n1, template.n2, 1, template.p11, template.p12, p22,
                template.lam,
            )
            baselines[p22] = core_convergence_time(base_spec).t_total
        except _POINT_ERRORS:
            baselines[p22] = math.nan

    rows: list[CoreRow] = []
    best_k1: dict = {}
    for p22, k1, est, stats, err in partial:
        if err is not None:
            rows.append(
                CoreRow(
                    p22=p22, k1=k1,
                    analytic_total=math.nan, analytic_peering=math.nan,
                    analytic_transit=math.nan, sim_mean=math.nan,
                    sim_std_err=math.nan, rel_error=math.nan,
                    runs=runs_per_point, seed=master_seed,
                    beats_baseline=False, error=err,
                )
            )
            continue
        beats = est.t_total < baselines[p22]
        if beats and (p22 not in best_k1 or k1 < best_k1[p22]):
            best_k1[p22] = k1
        rows.append(
            CoreRow(
                p22=p22, k1=k1,
                analytic_total=est.t_total,
                analytic_peering=est.t_peering,
                analytic_transit=est.t_transit,
                sim_mean=stats.mean,
                sim_std_err=stats.std_err,
                rel_error=_rel_error(est.t_total, stats.mean),
                runs=runs_per_point,
                seed=master_seed,
                beats_baseline=beats,
            )
        )
    for p22 in baselines:
        best_k1.setdefault(p22, None)
    return CaseStudyResult(rows=tuple(rows), best_k1=best_k1)


SWEEP_COLUMNS = (
    "sweep_value", "analytic", "sim_mean", "sim_std_err",
    "rel_error", "jensen_ok", "runs", "seed",
)
CORE_COLUMNS = (
    "p22", "k1", "analytic_total", "analytic_peering", "analytic_transit",
    "sim_mean", "sim_std_err", "rel_error", "runs", "seed", "beats_baseline",
)

EmitRows = Union[Sequence[ComparisonRow], Sequence[CoreRow], CaseStudyResult]


def _fmt_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if value is None or isinstance(value, str):
        return value
    return float(format(float(value), ".9g"))  # cap at 9 significant digits


def emit(rows: EmitRows, format: str = "csv", path: str | None = None) -> str:
    """Serialize result rows; optionally write them to path.

    CSV sweep output carries exactly the pinned eight columns (failed
    points serialize as nan); JSON mirrors the field names and adds the
    per-row error marker, plus best_k1 for case-study results.
    """
    best_k1 = None
    if isinstance(rows, CaseStudyResult):
        best_k1 = rows.best_k1
        rows = rows.rows
    rows = list(rows)
    if not rows:
        raise DomainError("no rows to emit")
    if isinstance(rows[0], ComparisonRow):
        columns = SWEEP_COLUMNS
    elif isinstance(rows[0], CoreRow):
        columns = CORE_COLUMNS
    else:
        raise DomainError(f"cannot emit rows of type {type(rows[0]).__name__}")
    if any(not isinstance(r, type(rows[0])) for r in rows):
        raise DomainError("mixed row types in one emission")

    if format == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt_cell(getattr(row, c)) for c in columns))
        text = "\n".join(lines) + "\n"
    elif format == "json":
        payload = [
            {f.name: _json_value(getattr(row, f.name)) for f in fields(row)}
            for row in rows
        ]
        if best_k1 is not None:
            payload = {
                "rows": payload,
                "best_k1": {_fmt_cell(p): best_k1[p] for p in sorted(best_k1)},
            }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        raise DomainError(f"unknown output format {format!r}")

    if path is not None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    return text


def parse_config(path: str) -> dict[str, str]:
    """Read a flat `key = value` config file.

    Blank lines and # comments (full-line or trailing) are ignored;
    later duplicate keys win.  Values stay raw strings; the CLI owns
    type conversion so its flags can override file entries uniformly.
    """
    options: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected `key = value`")
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise DomainError(f"{path}:{lineno}: empty key")
            options[key] = value.strip()
    return options
