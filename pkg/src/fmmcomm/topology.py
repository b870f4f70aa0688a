"""Torus interconnects and the embedding of the process grid onto them.

Hop counts here are a reconstruction from the mapping model, not a measured
quantity: a message's hop count is the wrapped Manhattan distance between the
nodes its endpoints map to, and its floor (``min_hops``) is the distance the
same exchange would cover if the partner sat in the nearest grid position in
its direction. The difference is the "extra hops" the distance-penalty cost
models charge for.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError, TopologyMismatchError
from .phases import PartnerClass, Phase, PhasePlan, plan_for
from .tree import Level, TreeConfig, Zone

PATTERN_RANK_GUARD = 2 ** 16

# All 26 direction offsets, deterministic order.
NEIGHBOR_OFFSETS = tuple(
    o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0))


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class TorusTopology:
    """A k-dimensional torus; 3-D for BG/P- and XK7-style machines, 5-D for BG/Q."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"torus extents must all be >= 1, got {self.dims}")

    @property
    def num_nodes(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    @classmethod
    def from_text(cls, text: str) -> "TorusTopology":
        """Parse a descriptor like ``8x4x4`` or ``8x4x4x2x2``."""
        try:
            dims = tuple(int(part) for part in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"bad torus descriptor '{text}'") from None
        return cls(dims)

    @classmethod
    def for_job(cls, node_grid: tuple[int, int, int], ndims: int) -> "TorusTopology":
        """Torus shaped to the job's node grid.

        3-D tori take the node grid directly; other dimensionalities get a
        balanced power-of-two split of the node count, extra bits first.
        """
        if ndims == 3:
            return cls(tuple(node_grid))
        total = 1
        for g in node_grid:
            total *= g
        if not _is_pow2(total):
            raise TopologyMismatchError(
                f"cannot shape a {ndims}-D torus for {total} nodes (not a power of two)")
        bits = total.bit_length() - 1
        base, extra = divmod(bits, ndims)
        return cls(tuple(2 ** (base + (1 if d < extra else 0)) for d in range(ndims)))

    def describe(self) -> str:
        return "x".join(str(d) for d in self.dims)


def hop_distance(topo: TorusTopology, a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """Wrapped Manhattan distance between two node coordinates."""
    if len(a) != len(topo.dims) or len(b) != len(topo.dims):
        raise ValueError(
            f"coordinates must have {len(topo.dims)} components, got {a} and {b}")
    total = 0
    for ac, bc, d in zip(a, b, topo.dims):
        if not (0 <= ac < d and 0 <= bc < d):
            raise ValueError(f"coordinate out of range for extent {d}: {ac}, {bc}")
        delta = abs(ac - bc)
        total += min(delta, d - delta)
    return total


@dataclass(frozen=True)
class RankMapping:
    """How MPI ranks land on network nodes.

    Ranks linearize x-major through the process grid. ``fold_factors`` give
    the block of grid coordinates that shares one node (``ranks_per_node``
    ranks per block); blocks then embed into the torus, identically when the
    node grid equals the torus dims, by x-major bit splitting otherwise.
    """

    process_grid: tuple[int, int, int]
    ranks_per_node: int = 1
    fold_factors: tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        if not _is_pow2(self.ranks_per_node):
            raise ValueError(f"ranks per node must be a power of two, got {self.ranks_per_node}")
        prod = 1
        for f, g in zip(self.fold_factors, self.process_grid):
            if not _is_pow2(f) or g % f:
                raise ValueError(
                    f"fold factors must be powers of two dividing the grid, got "
                    f"{self.fold_factors} on {self.process_grid}")
            prod *= f
        if prod != self.ranks_per_node:
            raise ValueError(
                f"fold factors {self.fold_factors} do not multiply to "
                f"ranks_per_node={self.ranks_per_node}")

    @classmethod
    def create(cls, process_grid: tuple[int, int, int], ranks_per_node: int = 1,
               fold_factors: tuple[int, int, int] | None = None) -> "RankMapping":
        """Derive fold factors if not given: halve the largest node-grid extent
        per fold bit, ties to x, keeping fold blocks compact."""
        if fold_factors is None:
            extents = list(process_grid)
            folds = [1, 1, 1]
            if not _is_pow2(ranks_per_node):
                raise ValueError(f"ranks per node must be a power of two, got {ranks_per_node}")
            bits = ranks_per_node.bit_length() - 1
            for _ in range(bits):
                d = max(range(3), key=lambda k: (extents[k], -k))
                if extents[d] < 2:
                    raise ValueError(
                        f"cannot fold {ranks_per_node} ranks into grid {process_grid}")
                extents[d] //= 2
                folds[d] *= 2
            fold_factors = tuple(folds)
        return cls(process_grid=tuple(process_grid), ranks_per_node=ranks_per_node,
                   fold_factors=fold_factors)

    @property
    def num_ranks(self) -> int:
        gx, gy, gz = self.process_grid
        return gx * gy * gz

    @property
    def node_grid(self) -> tuple[int, int, int]:
        return tuple(g // f for g, f in zip(self.process_grid, self.fold_factors))

    def rank_to_grid(self, rank: int) -> tuple[int, int, int]:
        if not 0 <= rank < self.num_ranks:
            raise ValueError(f"rank {rank} outside 0..{self.num_ranks - 1}")
        _, gy, gz = self.process_grid
        x, rem = divmod(rank, gy * gz)
        y, z = divmod(rem, gz)
        return (x, y, z)

    def grid_to_rank(self, coord: tuple[int, int, int]) -> int:
        _, gy, gz = self.process_grid
        return (coord[0] * gy + coord[1]) * gz + coord[2]


def _embed_node(node_coord: tuple[int, int, int], node_grid: tuple[int, int, int],
                topo: TorusTopology) -> tuple[int, ...]:
    if tuple(node_grid) == topo.dims:
        return tuple(node_coord)
    total_nodes = 1
    for g in node_grid:
        total_nodes *= g
    if total_nodes != topo.num_nodes:
        raise TopologyMismatchError(
            f"node grid {node_grid} has {total_nodes} nodes but torus "
            f"{topo.describe()} has {topo.num_nodes}")
    if not all(_is_pow2(g) for g in node_grid) or not all(_is_pow2(d) for d in topo.dims):
        raise TopologyMismatchError(
            f"bit-splitting embed needs power-of-two extents, got "
            f"{node_grid} onto {topo.describe()}")
    # x-major bit string over the node grid, re-carved across the torus dims
    value = 0
    total_bits = 0
    for c, g in zip(node_coord, node_grid):
        b = g.bit_length() - 1
        value = (value << b) | c
        total_bits += b
    coords = []
    remaining = total_bits
    for d in topo.dims:
        b = d.bit_length() - 1
        remaining -= b
        coords.append((value >> remaining) & (d - 1))
    return tuple(coords)


def map_rank_to_node(mapping: RankMapping, topo: TorusTopology, rank: int) -> tuple[int, ...]:
    """Node coordinate of a rank: grid position, folded, embedded."""
    grid = mapping.rank_to_grid(rank)
    node = tuple(c // f for c, f in zip(grid, mapping.fold_factors))
    return _embed_node(node, mapping.node_grid, topo)


def global_partner_stride(cfg: TreeConfig, level: Level) -> tuple[int, int, int]:
    """Per-dimension rank separation between partner processes of adjacent
    cells at an upper-tree level: max(1, G_d / 2**level)."""
    return tuple(max(1, g >> level.index) for g in cfg.process_grid)


def _sibling_offsets(cfg: TreeConfig, level: Level,
                     grid_coord: tuple[int, int, int]) -> tuple[tuple[int, int, int], ...]:
    # direction to the other child of the parent, per dimension
    dirs = []
    for g, c in zip(cfg.process_grid, grid_coord):
        width = max(1, g >> level.index)
        child_bit = (c // width) & 1
        dirs.append(1 - 2 * child_bit)
    offsets = []
    for mask in itertools.product((0, 1), repeat=3):
        if mask == (0, 0, 0):
            continue
        offsets.append(tuple(m * d for m, d in zip(mask, dirs)))
    return tuple(offsets)


@dataclass(frozen=True)
class PartnerHop:
    offset: tuple[int, int, int]
    partner_rank: int
    cells: int
    payload_bytes: float
    hops: int
    min_hops: int

    @property
    def extra_hops(self) -> int:
        return self.hops - self.min_hops


@dataclass(frozen=True)
class HopAnnotatedPlan:
    plan: PhasePlan
    rank: int
    entries: tuple[PartnerHop, ...]

    @property
    def total_extra_hops(self) -> int:
        return sum(e.extra_hops for e in self.entries)

    @property
    def mean_hops(self) -> float:
        if not self.entries:
            return 0.0
        return sum(e.hops for e in self.entries) / len(self.entries)


def _class_of_offset(offset: tuple[int, int, int]) -> PartnerClass:
    nonzero = sum(1 for o in offset if o)
    return (PartnerClass.FACE, PartnerClass.EDGE, PartnerClass.CORNER)[nonzero - 1]


def _plan_stride(cfg: TreeConfig, plan: PhasePlan) -> tuple[int, int, int]:
    if plan.level.zone is Zone.GLOBAL:
        return global_partner_stride(cfg, plan.level)
    return (1, 1, 1)


def annotate_hops(cfg: TreeConfig, plan: PhasePlan, mapping: RankMapping,
                  topo: TorusTopology, rank: int) -> HopAnnotatedPlan:
    """Attach partner ranks and hop counts to every send in a plan.

    ``hops`` is the torus distance actually covered; ``min_hops`` is the
    distance of the same direction at unit separation (0 when the partner
    shares the node), so stride-1 halo exchanges carry zero extra hops and
    the distance penalty vanishes for them.
    """
    if plan.is_empty:
        return HopAnnotatedPlan(plan=plan, rank=rank, entries=())
    grid = mapping.process_grid
    own_grid = mapping.rank_to_grid(rank)
    own_node = map_rank_to_node(mapping, topo, rank)
    stride = _plan_stride(cfg, plan)

    if plan.phase is Phase.GLOBAL_M2M:
        offsets = _sibling_offsets(cfg, plan.level, own_grid)
    else:
        offsets = NEIGHBOR_OFFSETS
    by_class = {c.partner_class: c for c in plan.classes}

    entries = []
    for offset in offsets:
        entry = by_class.get(PartnerClass.UNIFORM) or by_class[_class_of_offset(offset)]
        partner_grid = tuple((c + o * s) % g
                             for c, o, s, g in zip(own_grid, offset, stride, grid))
        partner_rank = mapping.grid_to_rank(partner_grid)
        partner_node = map_rank_to_node(mapping, topo, partner_rank)
        h = hop_distance(topo, own_node, partner_node)
        if partner_node == own_node:
            h_m = 0
        else:
            unit_grid = tuple((c + o) % g for c, o, g in zip(own_grid, offset, grid))
            unit_node = _embed_node(
                tuple(c // f for c, f in zip(unit_grid, mapping.fold_factors)),
                mapping.node_grid, topo)
            h_m = min(h, max(1, hop_distance(topo, own_node, unit_node)))
        entries.append(PartnerHop(
            offset=offset, partner_rank=partner_rank, cells=entry.cells_per_partner,
            payload_bytes=entry.bytes_per_partner, hops=h, min_hops=h_m))
    return HopAnnotatedPlan(plan=plan, rank=rank, entries=tuple(entries))


@dataclass(frozen=True)
class PatternMatrix:
    """Sparse rank-to-rank byte counts for one level and phase.

    Entries are stored as parallel arrays sorted by (src, dst); self-sends
    (possible only on degenerate one-wide grids) are dropped.
    """

    num_ranks: int
    level: int
    phase: Phase
    src: np.ndarray
    dst: np.ndarray
    payload_bytes: np.ndarray

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.src, weights=self.payload_bytes, minlength=self.num_ranks)

    def nonzeros_per_row(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.num_ranks)

    def to_dense(self, max_ranks: int = 4096) -> np.ndarray:
        if self.num_ranks > max_ranks:
            raise SizeLimitError(
                f"refusing to densify a {self.num_ranks}x{self.num_ranks} matrix")
        dense = np.zeros((self.num_ranks, self.num_ranks))
        dense[self.src, self.dst] = self.payload_bytes
        return dense


def pattern_matrix(cfg: TreeConfig, level: Level, phase: Phase,
                   mapping: RankMapping, topo: TorusTopology) -> PatternMatrix:
    """Who-sends-how-much-to-whom for every rank at one level and phase."""
    num_ranks = mapping.num_ranks
    if num_ranks > PATTERN_RANK_GUARD:
        raise SizeLimitError(
            f"pattern matrix guarded at {PATTERN_RANK_GUARD} ranks, got {num_ranks}")
    plan = plan_for(cfg, level, phase)
    empty = PatternMatrix(num_ranks=num_ranks, level=level.index, phase=phase,
                          src=np.empty(0, dtype=np.int64),
                          dst=np.empty(0, dtype=np.int64),
                          payload_bytes=np.empty(0))
    if plan.is_empty:
        return empty

    gx, gy, gz = cfg.process_grid
    grid = np.array([gx, gy, gz])
    ranks = np.arange(num_ranks)
    coords = np.stack([ranks // (gy * gz), (ranks // gz) % gy, ranks % gz], axis=1)
    stride = np.array(_plan_stride(cfg, plan))
    by_class = {c.partner_class: c for c in plan.classes}

    if phase is Phase.GLOBAL_M2M:
        width = np.maximum(1, grid >> level.index)
        dirs = 1 - 2 * ((coords // width) & 1)  # (P, 3), per-rank sibling direction
        offset_sets = [(np.array(mask) * dirs, by_class[PartnerClass.UNIFORM])
                       for mask in itertools.product((0, 1), repeat=3)
                       if mask != (0, 0, 0)]
    else:
        offset_sets = []
        for off in NEIGHBOR_OFFSETS:
            entry = by_class.get(PartnerClass.UNIFORM) or by_class[_class_of_offset(off)]
            offset_sets.append((np.array(off)[None, :], entry))

    src_parts, dst_parts, byte_parts = [], [], []
    for offsets, entry in offset_sets:
        partner = (coords + offsets * stride) % grid
        partner_rank = (partner[:, 0] * gy + partner[:, 1]) * gz + partner[:, 2]
        keep = partner_rank != ranks
        src_parts.append(ranks[keep])
        dst_parts.append(partner_rank[keep])
        byte_parts.append(np.full(int(keep.sum()), float(entry.bytes_per_partner)))

    src = np.concatenate(src_parts)
    dst = np.concatenate(dst_parts)
    weights = np.concatenate(byte_parts)
    # merge duplicate pairs (offsets can coincide modulo small grid extents)
    keys = src * num_ranks + dst
    unique_keys, inverse = np.unique(keys, return_inverse=True)
    merged = np.bincount(inverse, weights=weights)
    return PatternMatrix(
        num_ranks=num_ranks, level=level.index, phase=phase,
        src=(unique_keys // num_ranks).astype(np.int64),
        dst=(unique_keys % num_ranks).astype(np.int64),
        payload_bytes=merged)
