from fmmcomm.machines import PRESETS
from fmmcomm.model import ModelVariant, job_layout, predict
from fmmcomm.phases import Phase
from fmmcomm.plotting import plot_load_balance, plot_pattern, plot_predictions
from fmmcomm.topology import RankMapping, TorusTopology, pattern_matrix
from fmmcomm.tree import TreeConfig
from fmmcomm.validation import (
    MeasurementRecord,
    MeasurementSet,
    level_statistics,
    load_balance_report,
)


def test_prediction_figure(tmp_path):
    cfg = TreeConfig.from_problem(128, 62500)
    machine = PRESETS["shaheen"]
    mapping, topo = job_layout(cfg, machine)
    report = predict(cfg, machine, mapping, topo)
    out = plot_predictions(report, tmp_path / "pred.png")
    assert out.stat().st_size > 0


def test_prediction_figure_with_measurements(tmp_path):
    cfg = TreeConfig.from_problem(128, 62500)
    machine = PRESETS["titan"]
    mapping, topo = job_layout(cfg, machine)
    report = predict(cfg, machine, mapping, topo)
    ms = MeasurementSet.from_records([
        MeasurementRecord(rank, row.level, row.phase,
                          row.times[ModelVariant.DISTANCE])
        for row in report.rows for rank in range(4)])
    out = plot_predictions(report, tmp_path / "pred.pdf",
                           stats=level_statistics(ms))
    assert out.stat().st_size > 0


def test_load_balance_figure(tmp_path):
    ms = MeasurementSet.from_records([
        MeasurementRecord(rank, lvl, Phase.LOCAL_M2L, 1e-4 * (rank % 3 + lvl))
        for rank in range(16) for lvl in (4, 5, 6, 7)])
    out = plot_load_balance(load_balance_report(ms), tmp_path / "lb.png")
    assert out.stat().st_size > 0


def test_pattern_figure(tmp_path):
    cfg = TreeConfig.from_problem(128, 62500)
    mapping = RankMapping.create(cfg.process_grid)
    topo = TorusTopology(cfg.process_grid)
    matrix = pattern_matrix(cfg, cfg.level(4), Phase.LOCAL_M2L, mapping, topo)
    out = plot_pattern(matrix, tmp_path / "pattern.png")
    assert out.stat().st_size > 0
