"""The six-variant communication cost model and per-level predictions.

All variants share one message form

    T = A*alpha + n*beta*K + C*(h - h_m)*gamma     (gamma term only if enabled)

with A = cores-per-node when the latency multicore penalty is on (else 1),
K = B_max/B_eff when the bandwidth penalty is on (else 1), and C likewise for
the distance term. The evaluation order below is fixed so that adding a
penalty can never decrease a time in floating point, which keeps the variant
family exactly ordered.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .machines import MachineParams
from .phases import Phase
from .topology import HopAnnotatedPlan, RankMapping, TorusTopology, annotate_hops
from .tree import TreeConfig, Zone
from . import phases as _phases


class ModelVariant(enum.Enum):
    """One row of the model family; flags say which penalties apply."""

    #                key                  gamma  beta   c*alpha c*gamma
    BASELINE = ("baseline", False, False, False, False)
    DISTANCE = ("distance", True, False, False, False)
    BANDWIDTH_PENALTY = ("bandwidth_penalty", True, True, False, False)
    ALPHA_PENALTY = ("alpha_penalty", True, True, True, False)
    GAMMA_PENALTY = ("gamma_penalty", True, True, False, True)
    FULL_PENALTY = ("full_penalty", True, True, True, True)

    def __init__(self, key, use_gamma, use_beta_penalty, multicore_on_alpha,
                 multicore_on_gamma):
        self.key = key
        self.use_gamma = use_gamma
        self.use_beta_penalty = use_beta_penalty
        self.multicore_on_alpha = multicore_on_alpha
        self.multicore_on_gamma = multicore_on_gamma

    @classmethod
    def from_text(cls, text: str) -> "ModelVariant":
        t = text.strip().lower()
        for v in cls:
            if t in (v.key, v.key.replace("_penalty", "")):
                return v
        raise ValueError(f"unknown model variant '{text}'")


ALL_VARIANTS = tuple(ModelVariant)


class Aggregation(enum.Enum):
    SUM = "sum"
    MAX = "max"


def message_time(variant: ModelVariant, machine: MachineParams, n: float,
                 h: int, h_m: int) -> float:
    """Predicted seconds for one message of n bytes traveling h hops."""
    if n < 0:
        raise ValueError(f"message size must be >= 0, got {n}")
    if h < h_m:
        raise ValueError(f"hops {h} below minimum hops {h_m}")
    if h_m < 0:
        raise ValueError(f"minimum hops must be >= 0, got {h_m}")
    latency = machine.alpha
    if variant.multicore_on_alpha:
        latency = machine.cores_per_node * machine.alpha
    transfer = n * machine.beta
    if variant.use_beta_penalty:
        transfer = transfer * machine.beta_penalty_factor
    distance = 0.0
    if variant.use_gamma:
        distance = (h - h_m) * machine.gamma
        if variant.multicore_on_gamma:
            distance = machine.cores_per_node * distance
    return (latency + transfer) + distance


def level_time(variant: ModelVariant, machine: MachineParams,
               annotated: HopAnnotatedPlan,
               aggregation: Aggregation = Aggregation.SUM) -> float:
    """Cost of one level's plan: sum of the synchronized one-to-one sends by
    default, or the slowest single send under ``Aggregation.MAX``."""
    times = [message_time(variant, machine, e.payload_bytes, e.hops, e.min_hops)
             for e in annotated.entries]
    if not times:
        return 0.0
    if aggregation is Aggregation.MAX:
        return max(times)
    total = 0.0
    for t in times:
        total += t
    return total


DEFAULT_PHASES = (Phase.GLOBAL_M2L, Phase.LOCAL_M2L)


@dataclass(frozen=True)
class PredictionRow:
    level: int
    phase: Phase
    sends: int
    payload_bytes: int
    mean_hops: float
    extra_hops: int
    times: dict[ModelVariant, float]


@dataclass(frozen=True)
class PredictionReport:
    machine: MachineParams
    num_processes: int
    particles_per_process: int
    variants: tuple[ModelVariant, ...]
    aggregation: Aggregation
    rows: tuple[PredictionRow, ...]


def _phases_for_level(cfg: TreeConfig, level, requested) -> list[Phase]:
    out = []
    for phase in requested:
        if phase in (Phase.GLOBAL_M2L, Phase.GLOBAL_M2M):
            if level.zone is Zone.GLOBAL:
                out.append(phase)
        elif phase is Phase.LOCAL_M2L:
            if level.zone is Zone.LOCAL:
                out.append(phase)
        elif phase is Phase.LOCAL_P2P:
            if level.zone is Zone.LOCAL and level.local_index == cfg.local_depth:
                out.append(phase)
    return out


def predict(cfg: TreeConfig, machine: MachineParams, mapping: RankMapping,
            topo: TorusTopology,
            variants: tuple[ModelVariant, ...] = ALL_VARIANTS,
            phases: tuple[Phase, ...] = DEFAULT_PHASES,
            aggregation: Aggregation = Aggregation.SUM,
            rank: int = 0) -> PredictionReport:
    """Per-level predicted times for the representative rank (grid origin by
    default), one value per requested variant.

    The default phase set covers the far-field exchange at every level, so
    the report lines up one-to-one with the rows of
    :func:`fmmcomm.phases.comm_stats`.
    """
    rows = []
    for level in cfg.levels():
        for phase in _phases_for_level(cfg, level, phases):
            plan = _phases.plan_for(cfg, level, phase)
            annotated = annotate_hops(cfg, plan, mapping, topo, rank)
            times = {v: level_time(v, machine, annotated, aggregation)
                     for v in variants}
            rows.append(PredictionRow(
                level=level.index,
                phase=phase,
                sends=plan.total_sends,
                payload_bytes=plan.total_bytes,
                mean_hops=annotated.mean_hops,
                extra_hops=annotated.total_extra_hops,
                times=times,
            ))
    return PredictionReport(
        machine=machine,
        num_processes=cfg.num_processes,
        particles_per_process=cfg.particles_per_process,
        variants=tuple(variants),
        aggregation=aggregation,
        rows=tuple(rows),
    )


def job_layout(cfg: TreeConfig, machine: MachineParams,
               ranks_per_node: int | None = None,
               dims: TorusTopology | None = None) -> tuple[RankMapping, TorusTopology]:
    """Default placement of a job on a machine: one rank per core (flat MPI),
    torus shaped to the resulting node grid unless explicit dims are given."""
    if ranks_per_node is None:
        ranks_per_node = machine.cores_per_node
    mapping = RankMapping.create(cfg.process_grid, ranks_per_node=ranks_per_node)
    if dims is None:
        dims = machine.torus_for(mapping.node_grid)
    return mapping, dims
