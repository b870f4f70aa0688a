"""Octree decomposition geometry for a distributed hierarchical N-body solve.

The particle domain is a uniform full octree split in two: an upper (global)
tree whose leaf level distributes cells across processes, and a per-process
lower (local) subtree. Everything here is derived from the process count P
and the per-process particle count, so plans can be produced without any
actual particle data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import UnsupportedConfigError

DEFAULT_COEFFS_PER_CELL = 56
DEFAULT_PRECISION_BYTES = 4
DEFAULT_VALUES_PER_PARTICLE = 4  # x, y, z, charge
DEFAULT_MAX_PARTICLES_PER_LEAF = 16


class Zone(enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class Level:
    """One level of the combined tree.

    ``index`` counts from the root (0). ``local_index`` is the 1-based level
    within the local subtree and is only set for local-zone levels.
    """

    index: int
    zone: Zone
    local_index: int | None = None

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"level index must be >= 0, got {self.index}")
        if self.zone is Zone.LOCAL and self.local_index is None:
            raise ValueError("local-zone level needs a local_index")
        if self.zone is Zone.GLOBAL and self.local_index is not None:
            raise ValueError("global-zone level must not carry a local_index")


def global_depth(num_processes: int) -> int:
    """Depth of the upper tree: smallest L such that level L-1 has at least
    one cell per process (8**(L-1) >= P)."""
    if num_processes < 1:
        raise ValueError(f"process count must be >= 1, got {num_processes}")
    depth = 1
    while 8 ** (depth - 1) < num_processes:
        depth += 1
    return depth


def local_depth(particles_per_process: int, max_particles_per_leaf: int = DEFAULT_MAX_PARTICLES_PER_LEAF) -> int:
    """Depth of the per-process subtree: smallest L (>= 1) whose leaf level
    holds at most ``max_particles_per_leaf`` particles per cell on average."""
    if particles_per_process < 1:
        raise ValueError(f"particles per process must be >= 1, got {particles_per_process}")
    if max_particles_per_leaf < 1:
        raise ValueError(f"leaf capacity must be >= 1, got {max_particles_per_leaf}")
    depth = 1
    while 8 ** depth * max_particles_per_leaf < particles_per_process:
        depth += 1
    return depth


def process_grid(num_processes: int) -> tuple[int, int, int]:
    """Split P = 2**k processes into a 3-D grid, extra bits going to x first.

    The extents are powers of two and differ by at most a factor of two,
    mirroring the geometric partitioning of the octree.
    """
    if num_processes < 1 or num_processes & (num_processes - 1):
        raise UnsupportedConfigError(
            f"process count must be a power of two, got {num_processes}")
    bits = num_processes.bit_length() - 1
    base, extra = divmod(bits, 3)
    return tuple(2 ** (base + (1 if d < extra else 0)) for d in range(3))


def cells_at_level(level: int) -> int:
    """Cell count of a full octree level: 8**level."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    return 8 ** level


@dataclass(frozen=True)
class TreeConfig:
    """Immutable geometry of one run: tree depths, process grid, payload sizes."""

    total_particles: int
    num_processes: int
    particles_per_process: int
    global_depth: int
    local_depth: int
    process_grid: tuple[int, int, int]
    coeffs_per_cell: int = DEFAULT_COEFFS_PER_CELL
    precision_bytes: int = DEFAULT_PRECISION_BYTES
    values_per_particle: int = DEFAULT_VALUES_PER_PARTICLE

    @classmethod
    def from_problem(
        cls,
        num_processes: int,
        particles_per_process: int,
        *,
        max_particles_per_leaf: int = DEFAULT_MAX_PARTICLES_PER_LEAF,
        local_depth_override: int | None = None,
        coeffs_per_cell: int = DEFAULT_COEFFS_PER_CELL,
        precision_bytes: int = DEFAULT_PRECISION_BYTES,
        values_per_particle: int = DEFAULT_VALUES_PER_PARTICLE,
    ) -> "TreeConfig":
        """Derive the full configuration from (P, N/P)."""
        l_global = global_depth(num_processes)
        if local_depth_override is not None:
            if local_depth_override < 1:
                raise ValueError("local depth override must be >= 1")
            l_local = local_depth_override
        else:
            l_local = local_depth(particles_per_process, max_particles_per_leaf)
        return cls(
            total_particles=num_processes * particles_per_process,
            num_processes=num_processes,
            particles_per_process=particles_per_process,
            global_depth=l_global,
            local_depth=l_local,
            process_grid=process_grid(num_processes),
            coeffs_per_cell=coeffs_per_cell,
            precision_bytes=precision_bytes,
            values_per_particle=values_per_particle,
        )

    @property
    def num_levels(self) -> int:
        return self.global_depth + self.local_depth

    @property
    def bytes_per_cell(self) -> int:
        """Payload of one cell's expansion coefficients (224 with defaults)."""
        return self.coeffs_per_cell * self.precision_bytes

    @property
    def bytes_per_particle(self) -> int:
        return self.values_per_particle * self.precision_bytes

    def level(self, index: int) -> Level:
        if not 0 <= index < self.num_levels:
            raise ValueError(
                f"level index {index} outside tree of {self.num_levels} levels")
        if index < self.global_depth:
            return Level(index=index, zone=Zone.GLOBAL)
        return Level(index=index, zone=Zone.LOCAL,
                     local_index=index - self.global_depth + 1)

    def levels(self) -> list[Level]:
        return [self.level(i) for i in range(self.num_levels)]
