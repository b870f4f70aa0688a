"""Machine parameter sets for the communication cost models.

Ships presets for three production systems the models were calibrated on:
Shaheen (IBM BG/P, 3-D torus), Mira (IBM BG/Q, 5-D torus), and Titan
(Cray XK7, 3-D torus). Latency and inverse bandwidth come from best-case
point-to-point benchmark runs; ``beta`` is send time per byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import MachineConfigError
from .topology import TorusTopology


@dataclass(frozen=True)
class MachineParams:
    """Cost-model inputs for one machine.

    ``torus`` is either a concrete :class:`TorusTopology` or an int
    dimensionality, in which case the torus is shaped to the job at
    prediction time. ``b_eff`` defaults to 1/beta, i.e. the benchmarked
    send rate itself.
    """

    name: str
    alpha: float                  # latency per message, seconds
    beta: float                   # send time per byte, seconds
    gamma: float                  # delay per extra network hop, seconds
    b_max: float                  # peak injection bandwidth, bytes/second
    cores_per_node: int
    torus: TorusTopology | int
    b_eff: float | None = None    # effective benchmarked bandwidth, bytes/second

    def __post_init__(self):
        for field_name in ("alpha", "beta", "gamma", "b_max"):
            if getattr(self, field_name) <= 0:
                raise MachineConfigError(f"{field_name} must be positive")
        if self.cores_per_node < 1:
            raise MachineConfigError("cores_per_node must be >= 1")
        if self.b_eff is not None and self.b_eff <= 0:
            raise MachineConfigError("b_eff must be positive")
        if self.effective_bandwidth > self.b_max * (1 + 1e-12):
            raise MachineConfigError(
                f"effective bandwidth {self.effective_bandwidth:g} exceeds "
                f"peak injection bandwidth {self.b_max:g}")

    @property
    def effective_bandwidth(self) -> float:
        return self.b_eff if self.b_eff is not None else 1.0 / self.beta

    @property
    def beta_penalty_factor(self) -> float:
        """Ratio of peak to effective bandwidth, >= 1 for sane parameters."""
        return self.b_max / self.effective_bandwidth

    def torus_for(self, node_grid: tuple[int, int, int]) -> TorusTopology:
        """Concrete torus for a job: the preset's own dims, or shaped to the
        job's node grid when only a dimensionality is given."""
        if isinstance(self.torus, TorusTopology):
            return self.torus
        return TorusTopology.for_job(node_grid, self.torus)

    def with_overrides(self, **kwargs) -> "MachineParams":
        return replace(self, **kwargs)


PRESETS = {
    "shaheen": MachineParams(
        name="shaheen", alpha=4.12e-6, beta=2.14e-9, gamma=29.9e-9,
        b_max=5.1e9, cores_per_node=4, torus=3),
    "mira": MachineParams(
        name="mira", alpha=5.33e-6, beta=1.32e-9, gamma=134e-9,
        b_max=20e9, cores_per_node=16, torus=5),
    "titan": MachineParams(
        name="titan", alpha=1.67e-6, beta=1.62e-9, gamma=284e-9,
        b_max=20e9, cores_per_node=16, torus=3),
}

_REQUIRED_FIELDS = (
    "alpha_s", "beta_s_per_byte", "gamma_s_per_hop",
    "b_max_bytes_per_s", "cores_per_node", "torus_dims",
)


def _parse_torus_field(value) -> TorusTopology | int:
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        return TorusTopology.from_text(value)
    if isinstance(value, (list, tuple)):
        return TorusTopology(tuple(int(v) for v in value))
    raise MachineConfigError(f"cannot interpret torus_dims value {value!r}")


def load_machine(source: str | Path) -> MachineParams:
    """Resolve a preset name, or read a flat JSON parameter file.

    File fields: alpha_s, beta_s_per_byte, gamma_s_per_hop,
    b_max_bytes_per_s, cores_per_node, torus_dims (int dimensionality,
    "DxDxD" string, or list), optional b_eff_bytes_per_s and name.
    """
    key = str(source)
    if key in PRESETS:
        return PRESETS[key]
    path = Path(source)
    if not path.is_file():
        raise MachineConfigError(
            f"'{source}' is neither a preset ({', '.join(sorted(PRESETS))}) "
            f"nor a readable file")
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MachineConfigError(f"cannot read machine file '{source}': {exc}") from exc
    if not isinstance(raw, dict):
        raise MachineConfigError(f"machine file '{source}' must hold a JSON object")
    missing = [f for f in _REQUIRED_FIELDS if f not in raw]
    if missing:
        raise MachineConfigError(
            f"machine file '{source}' is missing field(s): {', '.join(missing)}")
    return MachineParams(
        name=str(raw.get("name", path.stem)),
        alpha=float(raw["alpha_s"]),
        beta=float(raw["beta_s_per_byte"]),
        gamma=float(raw["gamma_s_per_hop"]),
        b_max=float(raw["b_max_bytes_per_s"]),
        cores_per_node=int(raw["cores_per_node"]),
        torus=_parse_torus_field(raw["torus_dims"]),
        b_eff=float(raw["b_eff_bytes_per_s"]) if "b_eff_bytes_per_s" in raw else None,
    )
