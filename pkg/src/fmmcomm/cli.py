"""Command-line front end.

Subcommands: ``stats`` (per-level traffic table), ``predict`` (cost-model
times), ``compare`` (predictions vs measured timings), ``loadbalance``
(per-rank measured totals), ``topology`` (torus inspection), ``pattern``
(rank-pair traffic matrix). Data goes to stdout or ``--out`` as CSV
(default) or JSON; ``--plot FILE`` additionally renders the matching figure.
Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import model as _model
from . import phases as _phases
from . import validation as _validation
from .errors import MachineConfigError
from .machines import MachineParams, load_machine
from .model import Aggregation, ModelVariant
from .phases import Phase
from .topology import RankMapping, TorusTopology, map_rank_to_node, hop_distance, pattern_matrix
from .tree import TreeConfig, process_grid


def _fmt_seconds(x: float) -> str:
    return f"{x:.6g}"


def _json_seconds(x: float) -> float:
    return float(f"{x:.6g}")


def _render_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _parse_variants(text: str) -> tuple[ModelVariant, ...]:
    if text.strip().lower() == "all":
        return _model.ALL_VARIANTS
    return tuple(ModelVariant.from_text(part) for part in text.split(","))


_PHASE_SETS = {
    "m2l": (Phase.GLOBAL_M2L, Phase.LOCAL_M2L),
    "m2m": (Phase.GLOBAL_M2M,),
    "p2p": (Phase.LOCAL_P2P,),
    "all": (Phase.GLOBAL_M2L, Phase.GLOBAL_M2M, Phase.LOCAL_M2L, Phase.LOCAL_P2P),
}


def _tree_config(args) -> TreeConfig:
    kwargs = {}
    if getattr(args, "local_depth", None) is not None:
        kwargs["local_depth_override"] = args.local_depth
    if getattr(args, "max_per_leaf", None) is not None:
        kwargs["max_particles_per_leaf"] = args.max_per_leaf
    if getattr(args, "coeffs", None) is not None:
        kwargs["coeffs_per_cell"] = args.coeffs
    if getattr(args, "precision", None) is not None:
        kwargs["precision_bytes"] = args.precision
    if getattr(args, "values_per_particle", None) is not None:
        kwargs["values_per_particle"] = args.values_per_particle
    return TreeConfig.from_problem(args.procs, args.particles_per_proc, **kwargs)


def _machine(args) -> MachineParams:
    machine = load_machine(args.machine)
    if getattr(args, "b_eff", None) is not None:
        machine = machine.with_overrides(b_eff=args.b_eff)
    return machine


def _layout(args, cfg: TreeConfig, machine: MachineParams | None):
    dims = TorusTopology.from_text(args.dims) if getattr(args, "dims", None) else None
    ranks_per_node = getattr(args, "ranks_per_node", None)
    if machine is not None:
        return _model.job_layout(cfg, machine, ranks_per_node=ranks_per_node, dims=dims)
    mapping = RankMapping.create(cfg.process_grid, ranks_per_node=ranks_per_node or 1)
    if dims is None:
        dims = TorusTopology.for_job(mapping.node_grid, 3)
    return mapping, dims


# --- stats ---------------------------------------------------------------

def _cmd_stats(args) -> str:
    cfg = _tree_config(args)
    rows = _phases.comm_stats(cfg)
    if args.format == "json":
        return _render_json({
            "procs": cfg.num_processes,
            "particles_per_process": cfg.particles_per_process,
            "global_depth": cfg.global_depth,
            "local_depth": cfg.local_depth,
            "rows": [{"level": r.level, "cells": r.cells,
                      "sends": r.sends, "bytes": r.bytes} for r in rows],
        })
    lines = ["level,cells,sends,bytes"]
    lines += [f"{r.level},{r.cells},{r.sends},{r.bytes}" for r in rows]
    return "\n".join(lines) + "\n"


# --- predict -------------------------------------------------------------

def _prediction(args):
    cfg = _tree_config(args)
    machine = _machine(args)
    mapping, topo = _layout(args, cfg, machine)
    report = _model.predict(
        cfg, machine, mapping, topo,
        variants=_parse_variants(args.models),
        phases=_PHASE_SETS[args.phases],
        aggregation=Aggregation(args.aggregation))
    return report


def _predict_rows_json(report) -> list[dict]:
    return [{
        "level": row.level,
        "phase": row.phase.value,
        "sends": row.sends,
        "bytes": row.payload_bytes,
        "mean_hops": _json_seconds(row.mean_hops),
        "extra_hops": row.extra_hops,
        "times_s": {v.key: _json_seconds(row.times[v]) for v in report.variants},
    } for row in report.rows]


def _cmd_predict(args) -> str:
    report = _prediction(args)
    if args.plot:
        from .plotting import plot_predictions
        plot_predictions(report, args.plot)
    if args.format == "json":
        return _render_json({
            "machine": report.machine.name,
            "procs": report.num_processes,
            "particles_per_process": report.particles_per_process,
            "aggregation": report.aggregation.value,
            "rows": _predict_rows_json(report),
        })
    keys = [v.key for v in report.variants]
    lines = ["level,phase,sends,bytes,mean_hops,extra_hops," + ",".join(keys)]
    for row in report.rows:
        times = ",".join(_fmt_seconds(row.times[v]) for v in report.variants)
        lines.append(f"{row.level},{row.phase.value},{row.sends},{row.payload_bytes},"
                     f"{_fmt_seconds(row.mean_hops)},{row.extra_hops},{times}")
    return "\n".join(lines) + "\n"


# --- compare -------------------------------------------------------------

def _read_measurements(path: str):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise MachineConfigError(f"cannot read measurements '{path}': {exc}") from exc
    return _validation.parse_measurements(text)


def _cmd_compare(args) -> str:
    report = _prediction(args)
    ms = _read_measurements(args.measurements)
    stats = _validation.level_statistics(ms)
    stats_by_key = {(s.level, s.phase): s for s in stats}
    comparison = _validation.compare(report, stats)
    if args.plot:
        from .plotting import plot_predictions
        plot_predictions(report, args.plot, stats=stats)
    if args.format == "json":
        return _render_json({
            "machine": report.machine.name,
            "procs": report.num_processes,
            "rows": [{
                "level": r.level, "phase": r.phase.value, "variant": r.variant.key,
                "predicted_s": _json_seconds(r.predicted),
                "measured_mean_s": _json_seconds(r.measured_mean),
                "measured_stddev_s": _json_seconds(r.measured_stddev),
                "ratio": _json_seconds(r.ratio) if r.ratio != float("inf") else "inf",
                "within_band": r.within_band,
            } for r in comparison.rows],
            "prediction_only": [{"level": lvl, "phase": ph.value}
                                for lvl, ph in comparison.prediction_only],
            "measurement_only": [{"level": lvl, "phase": ph.value}
                                 for lvl, ph in comparison.measurement_only],
        })
    lines = ["level,phase,variant,predicted_s,measured_mean_s,measured_stddev_s,"
             "ratio,within_band"]
    for r in comparison.rows:
        ratio = _fmt_seconds(r.ratio) if r.ratio != float("inf") else "inf"
        lines.append(f"{r.level},{r.phase.value},{r.variant.key},"
                     f"{_fmt_seconds(r.predicted)},{_fmt_seconds(r.measured_mean)},"
                     f"{_fmt_seconds(r.measured_stddev)},{ratio},"
                     f"{str(r.within_band).lower()}")
    # one-sided keys keep their known fields, the rest stay blank
    for lvl, ph in comparison.prediction_only:
        lines.append(f"{lvl},{ph.value},,,,,,")
    for lvl, ph in comparison.measurement_only:
        s = stats_by_key[(lvl, ph)]
        lines.append(f"{lvl},{ph.value},,,{_fmt_seconds(s.mean)},"
                     f"{_fmt_seconds(s.stddev)},,")
    return "\n".join(lines) + "\n"


# --- loadbalance ---------------------------------------------------------

def _cmd_loadbalance(args) -> str:
    ms = _read_measurements(args.measurements)
    report = _validation.load_balance_report(ms)
    if args.plot:
        from .plotting import plot_load_balance
        plot_load_balance(report, args.plot)
    keys = sorted(report.series, key=lambda k: (k[0], k[1].value))
    if args.format == "json":
        return _render_json({
            "ranks": list(report.ranks),
            "totals_s": [_json_seconds(t) for t in report.totals],
            "series": {f"{ph.value}_level{lvl}":
                       [_json_seconds(v) for v in report.series[(lvl, ph)]]
                       for lvl, ph in keys},
        })
    head = "rank,total_s," + ",".join(f"{ph.value}_level{lvl}" for lvl, ph in keys)
    lines = [head]
    for j, rank in enumerate(report.ranks):
        parts = [str(rank), _fmt_seconds(report.totals[j])]
        parts += [_fmt_seconds(report.series[key][j]) for key in keys]
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


# --- topology ------------------------------------------------------------

def _cmd_topology(args) -> str:
    topo = TorusTopology.from_text(args.dims)
    ranks_per_node = args.ranks_per_node or 1
    if args.procs is not None:
        grid = process_grid(args.procs)
    elif ranks_per_node == 1 and len(topo.dims) == 3:
        grid = tuple(topo.dims)  # identity: one rank per node
    else:
        grid = process_grid(topo.num_nodes * ranks_per_node)
    mapping = RankMapping.create(grid, ranks_per_node=ranks_per_node)

    action = args.action or ["info"]
    kind = action[0]
    if kind == "distance":
        if len(action) != 3:
            raise MachineConfigError("usage: topology ... distance RANK_A RANK_B")
        a = map_rank_to_node(mapping, topo, int(action[1]))
        b = map_rank_to_node(mapping, topo, int(action[2]))
        d = hop_distance(topo, a, b)
        if args.format == "json":
            return _render_json({"dims": topo.describe(), "distance": d})
        return f"{d}\n"
    if kind == "coords":
        if len(action) != 2:
            raise MachineConfigError("usage: topology ... coords RANK")
        coord = map_rank_to_node(mapping, topo, int(action[1]))
        if args.format == "json":
            return _render_json({"dims": topo.describe(), "node": list(coord)})
        return ",".join(str(c) for c in coord) + "\n"
    if kind == "info":
        info = {
            "dims": topo.describe(),
            "nodes": topo.num_nodes,
            "ranks": mapping.num_ranks,
            "ranks_per_node": mapping.ranks_per_node,
            "fold": "x".join(str(f) for f in mapping.fold_factors),
            "node_grid": "x".join(str(g) for g in mapping.node_grid),
        }
        if args.format == "json":
            return _render_json(info)
        return "\n".join(f"{k},{v}" for k, v in info.items()) + "\n"
    raise MachineConfigError(f"unknown topology action '{kind}'")


# --- pattern -------------------------------------------------------------

def _cmd_pattern(args) -> str:
    cfg = _tree_config(args)
    machine = _machine(args) if args.machine else None
    mapping, topo = _layout(args, cfg, machine)
    level = cfg.level(args.level)
    if args.phase == "auto":
        phase = Phase.GLOBAL_M2L if level.index < cfg.global_depth else Phase.LOCAL_M2L
    else:
        phase = Phase.from_text(args.phase)
    matrix = pattern_matrix(cfg, level, phase, mapping, topo)
    if args.plot:
        from .plotting import plot_pattern
        plot_pattern(matrix, args.plot)
    if args.format == "json":
        return _render_json({
            "procs": matrix.num_ranks,
            "level": matrix.level,
            "phase": matrix.phase.value,
            "entries": [[int(s), int(d), round(float(b))]
                        for s, d, b in zip(matrix.src, matrix.dst,
                                           matrix.payload_bytes)],
        })
    lines = ["src,dst,bytes"]
    lines += [f"{int(s)},{int(d)},{round(float(b))}"
              for s, d, b in zip(matrix.src, matrix.dst, matrix.payload_bytes)]
    return "\n".join(lines) + "\n"


# --- parser --------------------------------------------------------------

def _add_tree_args(p, required=True):
    p.add_argument("--procs", type=int, required=required, help="process count P")
    p.add_argument("--particles-per-proc", type=int, required=required,
                   dest="particles_per_proc", help="particles per process N/P")
    p.add_argument("--local-depth", type=int, default=None,
                   help="override the derived local tree depth")
    p.add_argument("--max-per-leaf", type=int, default=None,
                   help="leaf capacity used to derive the local depth (default 16)")
    p.add_argument("--coeffs", type=int, default=None,
                   help="expansion coefficients per cell (default 56)")
    p.add_argument("--precision", type=int, default=None,
                   help="bytes per value (default 4)")
    p.add_argument("--values-per-particle", type=int, default=None,
                   dest="values_per_particle",
                   help="values sent per particle in the particle phase (default 4)")


def _add_layout_args(p):
    p.add_argument("--dims", type=str, default=None,
                   help="explicit torus dims, e.g. 8x4x4 or 8x4x4x2x2")
    p.add_argument("--ranks-per-node", type=int, default=None, dest="ranks_per_node",
                   help="ranks folded onto one node (default: machine cores)")


def _add_model_args(p):
    p.add_argument("--machine", type=str, required=True,
                   help="preset name (shaheen, mira, titan) or JSON parameter file")
    p.add_argument("--models", type=str, default="all",
                   help="'all' or comma list: baseline,distance,bandwidth,alpha,gamma,full")
    p.add_argument("--phases", type=str, default="m2l",
                   choices=sorted(_PHASE_SETS), help="which exchange phases to model")
    p.add_argument("--aggregation", type=str, default="sum", choices=("sum", "max"),
                   help="combine the per-partner sends by sum or max")
    p.add_argument("--b-eff", type=float, default=None, dest="b_eff",
                   help="override effective bandwidth (bytes/s)")


def _add_output_args(p, plot=False):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=str, default=None, help="write to file instead of stdout")
    if plot:
        p.add_argument("--plot", type=str, default=None,
                       help="also render the matching figure to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmmcomm",
        description="Communication cost modeling for distributed fast multipole methods")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="per-level far-field traffic table")
    _add_tree_args(p)
    _add_output_args(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("predict", help="per-level cost-model predictions")
    _add_tree_args(p)
    _add_model_args(p)
    _add_layout_args(p)
    _add_output_args(p, plot=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("compare", help="predictions vs measured timings")
    _add_tree_args(p)
    _add_model_args(p)
    _add_layout_args(p)
    p.add_argument("--measurements", type=str, required=True,
                   help="measurement CSV (rank,level,phase,seconds)")
    _add_output_args(p, plot=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("loadbalance", help="per-rank measured totals, sorted")
    p.add_argument("--measurements", type=str, required=True)
    _add_output_args(p, plot=True)
    p.set_defaults(func=_cmd_loadbalance)

    p = sub.add_parser("topology", help="torus inspection (info, distance, coords)")
    p.add_argument("--dims", type=str, required=True)
    p.add_argument("--ranks-per-node", type=int, default=None, dest="ranks_per_node")
    p.add_argument("--procs", type=int, default=None,
                   help="rank count (default: one rank per node)")
    p.add_argument("action", nargs="*",
                   help="info | distance RANK_A RANK_B | coords RANK")
    _add_output_args(p)
    p.set_defaults(func=_cmd_topology)

    p = sub.add_parser("pattern", help="rank-pair traffic matrix for one level")
    _add_tree_args(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--phase", type=str, default="auto",
                   choices=("auto",) + tuple(ph.value for ph in Phase))
    p.add_argument("--machine", type=str, default=None,
                   help="optional preset/file for node folding and torus shape")
    _add_layout_args(p)
    _add_output_args(p, plot=True)
    p.set_defaults(func=_cmd_pattern)

    return parser


USAGE_ERRORS = (MachineConfigError,)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        payload = args.func(args)
    except USAGE_ERRORS as exc:
        print(f"fmmcomm: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"fmmcomm: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
