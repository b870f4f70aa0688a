"""Per-level communication plans for the four exchange phases.

Each plan records who a process talks to (grouped into partner classes) and
how much it sends. The two global phases move a constant amount per level;
the two local phases exchange halo shells around the per-process subdomain,
so their volume follows the surface of the local cell block:

  upper-tree far-field exchange   26 partners x 8 cells, every level
  upper-tree upward exchange       7 partners x 1 cell
  local far-field halo            (2**i + 4)**3 - 8**i cells (two layers)
  local near-field halo           (2**i + 2)**3 - 8**i cells (one layer)

where i is the 1-based level inside the local subtree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import WrongPhaseError
from .tree import Level, TreeConfig, Zone, cells_at_level


class Phase(enum.Enum):
    GLOBAL_M2L = "global_m2l"
    GLOBAL_M2M = "global_m2m"
    LOCAL_M2L = "local_m2l"
    LOCAL_P2P = "local_p2p"

    @classmethod
    def from_text(cls, text: str) -> "Phase":
        for phase in cls:
            if phase.value == text:
                return phase
        raise ValueError(f"unknown phase '{text}'")


class PartnerClass(enum.Enum):
    UNIFORM = "uniform"
    FACE = "face"
    EDGE = "edge"
    CORNER = "corner"


@dataclass(frozen=True)
class ClassEntry:
    """One group of identical sends: how many partners, how much each gets.

    ``bytes_per_partner`` may be fractional for the particle phase, where the
    per-cell particle count is an expectation; aggregate byte totals are
    rounded once, at the plan level.
    """

    partner_class: PartnerClass
    partner_count: int
    cells_per_partner: int
    bytes_per_partner: float


@dataclass(frozen=True)
class PhasePlan:
    phase: Phase
    level: Level
    classes: tuple[ClassEntry, ...]

    @property
    def total_sends(self) -> int:
        return sum(c.partner_count for c in self.classes)

    @property
    def total_cells(self) -> int:
        return sum(c.partner_count * c.cells_per_partner for c in self.classes)

    @property
    def total_bytes(self) -> int:
        return round(sum(c.partner_count * c.bytes_per_partner for c in self.classes))

    @property
    def is_empty(self) -> bool:
        return not self.classes


@dataclass(frozen=True)
class CommStatsRow:
    level: int
    cells: int
    sends: int
    bytes: int


def _require_zone(level: Level, zone: Zone, phase: Phase) -> None:
    if level.zone is not zone:
        raise WrongPhaseError(
            f"{phase.value} applies to {zone.value}-zone levels, "
            f"got level {level.index} ({level.zone.value})")


def global_m2l_plan(cfg: TreeConfig, level: Level) -> PhasePlan:
    """Far-field exchange in the upper tree.

    One process per group of eight sibling cells communicates, so every
    participating process sends 8 cells to each of its 26 neighbor groups,
    independent of level, N and P. Levels 0 and 1 have no far-field partners
    (every cell pair there is adjacent) and yield an empty plan.
    """
    _require_zone(level, Zone.GLOBAL, Phase.GLOBAL_M2L)
    if level.index < 2:
        return PhasePlan(Phase.GLOBAL_M2L, level, ())
    entry = ClassEntry(PartnerClass.UNIFORM, 26, 8, 8 * cfg.bytes_per_cell)
    return PhasePlan(Phase.GLOBAL_M2L, level, (entry,))


def global_m2m_plan(cfg: TreeConfig, level: Level) -> PhasePlan:
    """Upward sweep in the upper tree: one cell to each of the 7 siblings.

    The root has no parent exchange, so level 0 yields an empty plan.
    """
    _require_zone(level, Zone.GLOBAL, Phase.GLOBAL_M2M)
    if level.index == 0:
        return PhasePlan(Phase.GLOBAL_M2M, level, ())
    entry = ClassEntry(PartnerClass.UNIFORM, 7, 1, cfg.bytes_per_cell)
    return PhasePlan(Phase.GLOBAL_M2M, level, (entry,))


def local_m2l_plan(cfg: TreeConfig, level: Level) -> PhasePlan:
    """Two-layer halo exchange for the far-field work inside the local tree.

    The halo shell splits geometrically over the 26 neighbors:
    6 faces get 2x4**i cells, 12 edges 4x2**i, 8 corners 8; the class sums
    reproduce the aggregate (2**i + 4)**3 - 8**i exactly.
    """
    _require_zone(level, Zone.LOCAL, Phase.LOCAL_M2L)
    i = level.local_index
    if not 1 <= i <= cfg.local_depth:
        raise WrongPhaseError(
            f"local level {i} outside local tree of depth {cfg.local_depth}")
    b = cfg.bytes_per_cell
    classes = (
        ClassEntry(PartnerClass.FACE, 6, 2 * 4 ** i, 2 * 4 ** i * b),
        ClassEntry(PartnerClass.EDGE, 12, 4 * 2 ** i, 4 * 2 ** i * b),
        ClassEntry(PartnerClass.CORNER, 8, 8, 8 * b),
    )
    return PhasePlan(Phase.LOCAL_M2L, level, classes)


def local_p2p_plan(cfg: TreeConfig) -> PhasePlan:
    """Single-layer halo of leaf cells carrying raw particle data.

    Applies only at the bottom local level. Each halo cell carries the
    expected number of particles (particles_per_process / 8**local_depth,
    generally fractional), at values_per_particle * precision_bytes each.
    """
    i = cfg.local_depth
    level = cfg.level(cfg.num_levels - 1)
    per_cell = (cfg.particles_per_process / 8 ** i) * cfg.bytes_per_particle
    classes = (
        ClassEntry(PartnerClass.FACE, 6, 4 ** i, 4 ** i * per_cell),
        ClassEntry(PartnerClass.EDGE, 12, 2 ** i, 2 ** i * per_cell),
        ClassEntry(PartnerClass.CORNER, 8, 1, per_cell),
    )
    return PhasePlan(Phase.LOCAL_P2P, level, classes)


def plan_for(cfg: TreeConfig, level: Level, phase: Phase) -> PhasePlan:
    """Dispatch to the planner for ``phase``, validating the level's zone."""
    if phase is Phase.GLOBAL_M2L:
        return global_m2l_plan(cfg, level)
    if phase is Phase.GLOBAL_M2M:
        return global_m2m_plan(cfg, level)
    if phase is Phase.LOCAL_M2L:
        return local_m2l_plan(cfg, level)
    _require_zone(level, Zone.LOCAL, Phase.LOCAL_P2P)
    if level.local_index != cfg.local_depth:
        raise WrongPhaseError(
            f"particle exchange happens only at the bottom level "
            f"(local level {cfg.local_depth}), got local level {level.local_index}")
    return local_p2p_plan(cfg)


def comm_stats(cfg: TreeConfig) -> list[CommStatsRow]:
    """Far-field (M2L) traffic per level over the whole tree.

    One row per level from the root down; global levels use the upper-tree
    plan, local levels the halo plan. ``cells`` is the full-octree cell count
    at the level.
    """
    rows = []
    for level in cfg.levels():
        if level.zone is Zone.GLOBAL:
            plan = global_m2l_plan(cfg, level)
        else:
            plan = local_m2l_plan(cfg, level)
        rows.append(CommStatsRow(
            level=level.index,
            cells=cells_at_level(level.index),
            sends=plan.total_sends,
            bytes=plan.total_bytes,
        ))
    return rows


def brute_force_halo(i: int, layers: int) -> int:
    """Count halo cells by enumerating the lattice, no closed form.

    Marks every integer cell in [-layers, 2**i + layers)^3 and counts those
    outside the core block [0, 2**i)^3. Serves as the independent check for
    the halo formulas used by the local-phase planners.
    """
    if i < 0:
        raise ValueError(f"level must be >= 0, got {i}")
    if layers not in (1, 2):
        raise ValueError(f"halo layers must be 1 or 2, got {layers}")
    n = 2 ** i
    coords = np.arange(-layers, n + layers)
    inside = (coords >= 0) & (coords < n)
    core = inside[:, None, None] & inside[None, :, None] & inside[None, None, :]
    return int(core.size - np.count_nonzero(core))
