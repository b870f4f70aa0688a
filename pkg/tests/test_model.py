import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fmmcomm.errors import MachineConfigError
from fmmcomm.machines import PRESETS, MachineParams, load_machine
from fmmcomm.model import (
    ALL_VARIANTS,
    Aggregation,
    ModelVariant,
    job_layout,
    level_time,
    message_time,
    predict,
)
from fmmcomm.phases import Phase, global_m2l_plan, local_m2l_plan
from fmmcomm.topology import RankMapping, TorusTopology, annotate_hops
from fmmcomm.tree import TreeConfig

ORDER_CHAINS = (
    (ModelVariant.BASELINE, ModelVariant.DISTANCE, ModelVariant.BANDWIDTH_PENALTY,
     ModelVariant.ALPHA_PENALTY, ModelVariant.FULL_PENALTY),
    (ModelVariant.BANDWIDTH_PENALTY, ModelVariant.GAMMA_PENALTY,
     ModelVariant.FULL_PENALTY),
)


def random_machine(rng):
    alpha = rng.uniform(1e-7, 1e-5)
    beta = rng.uniform(1e-10, 1e-8)
    b_max = rng.uniform(1e9, 5e10)
    b_eff = b_max / rng.uniform(1.0, 50.0)
    return MachineParams(name="random", alpha=alpha, beta=beta,
                         gamma=rng.uniform(1e-9, 1e-6), b_max=b_max,
                         cores_per_node=int(rng.integers(1, 65)), torus=3,
                         b_eff=b_eff)


class TestPresets:
    def test_shaheen(self):
        m = load_machine("shaheen")
        assert m.alpha == 4.12e-6
        assert m.beta == 2.14e-9
        assert m.gamma == 29.9e-9
        assert m.b_max == 5.1e9
        assert m.cores_per_node == 4
        assert m.torus == 3

    def test_mira(self):
        m = load_machine("mira")
        assert (m.alpha, m.beta, m.gamma) == (5.33e-6, 1.32e-9, 134e-9)
        assert m.b_max == 20e9
        assert m.cores_per_node == 16
        assert m.torus == 5

    def test_titan(self):
        m = load_machine("titan")
        assert m.gamma == 284e-9
        assert m.cores_per_node == 16
        assert m.torus == 3

    def test_default_effective_bandwidth_is_benchmark_rate(self):
        m = PRESETS["shaheen"]
        assert m.effective_bandwidth == 1.0 / m.beta
        assert m.beta_penalty_factor == pytest.approx(5.1e9 * 2.14e-9)

    def test_penalty_factor_at_least_one_for_all_presets(self):
        for m in PRESETS.values():
            assert m.beta_penalty_factor >= 1.0


class TestMachineFile:
    def make_file(self, tmp_path, **overrides):
        body = {
            "name": "custom",
            "alpha_s": 2.0e-6,
            "beta_s_per_byte": 1.0e-9,
            "gamma_s_per_hop": 50e-9,
            "b_max_bytes_per_s": 5.1e9,
            "cores_per_node": 8,
            "torus_dims": 3,
        }
        body.update(overrides)
        path = tmp_path / "machine.json"
        path.write_text(json.dumps(body))
        return path

    def test_full_file(self, tmp_path):
        m = load_machine(self.make_file(tmp_path, b_eff_bytes_per_s=4.0e9))
        assert m.name == "custom"
        assert m.beta_penalty_factor == pytest.approx(5.1 / 4.0)

    def test_missing_field_named(self, tmp_path):
        path = self.make_file(tmp_path)
        raw = json.loads(path.read_text())
        del raw["gamma_s_per_hop"]
        path.write_text(json.dumps(raw))
        with pytest.raises(MachineConfigError, match="gamma_s_per_hop"):
            load_machine(path)

    def test_explicit_dims_descriptor(self, tmp_path):
        m = load_machine(self.make_file(tmp_path, torus_dims="8x4x4"))
        assert isinstance(m.torus, TorusTopology)
        assert m.torus.dims == (8, 4, 4)
        m2 = load_machine(self.make_file(tmp_path, torus_dims=[2, 2, 2, 2, 4]))
        assert m2.torus.dims == (2, 2, 2, 2, 4)

    def test_unknown_preset(self):
        with pytest.raises(MachineConfigError):
            load_machine("crayon")

    def test_effective_bandwidth_above_peak_rejected(self, tmp_path):
        with pytest.raises(MachineConfigError):
            load_machine(self.make_file(tmp_path, b_eff_bytes_per_s=6.0e9))


class TestMessageTime:
    def test_baseline_hand_arithmetic(self):
        m = PRESETS["shaheen"]
        t = message_time(ModelVariant.BASELINE, m, 46592, 8, 1)
        assert t == pytest.approx(4.12e-6 + 46592 * 2.14e-9, rel=1e-12)

    def test_zero_bytes_minimum_hops_gives_latency(self):
        m = MachineParams(name="unit", alpha=3e-6, beta=1e-9, gamma=1e-8,
                          b_max=1e9, cores_per_node=1, torus=3, b_eff=1e9)
        for v in ALL_VARIANTS:
            assert message_time(v, m, 0, 5, 5) == 3e-6

    def test_distance_penalty_hand_arithmetic(self):
        m = PRESETS["titan"]
        t = message_time(ModelVariant.DISTANCE, m, 0, 11, 1)
        assert t == pytest.approx(1.67e-6 + 10 * 284e-9, rel=1e-12)

    def test_invalid_hops(self):
        m = PRESETS["shaheen"]
        with pytest.raises(ValueError):
            message_time(ModelVariant.DISTANCE, m, 100, 1, 2)
        with pytest.raises(ValueError):
            message_time(ModelVariant.BASELINE, m, -1, 1, 1)

    def test_collapse_with_unit_penalties(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            m = random_machine(rng)
            m = m.with_overrides(cores_per_node=1, b_eff=m.b_max)
            n = rng.uniform(0, 1e7)
            h = int(rng.integers(0, 30))
            times = {v: message_time(v, m, n, h, h) for v in ALL_VARIANTS}
            assert len(set(times.values())) == 1

    def test_partial_collapse_variants_three_to_six(self):
        # unit multicore and bandwidth factors leave only the distance term
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = random_machine(rng).with_overrides(cores_per_node=1)
            m = m.with_overrides(b_eff=m.b_max)
            n = rng.uniform(0, 1e7)
            h, h_m = int(rng.integers(5, 30)), int(rng.integers(0, 5))
            reference = message_time(ModelVariant.DISTANCE, m, n, h, h_m)
            for v in (ModelVariant.BANDWIDTH_PENALTY, ModelVariant.ALPHA_PENALTY,
                      ModelVariant.GAMMA_PENALTY, ModelVariant.FULL_PENALTY):
                assert message_time(v, m, n, h, h_m) == reference

    @given(n=st.floats(0, 1e8), h_m=st.integers(0, 5), extra=st.integers(0, 40),
           cores=st.integers(1, 64), ratio=st.floats(1.0, 100.0))
    def test_penalty_partial_order(self, n, h_m, extra, cores, ratio):
        m = MachineParams(name="rand", alpha=4.12e-6, beta=2.14e-9, gamma=29.9e-9,
                          b_max=5.1e9, cores_per_node=cores, torus=3,
                          b_eff=5.1e9 / ratio)
        h = h_m + extra
        for chain in ORDER_CHAINS:
            times = [message_time(v, m, n, h, h_m) for v in chain]
            assert times == sorted(times)

    def test_linearity_in_message_size(self):
        m = PRESETS["mira"]
        for v in ALL_VARIANTS:
            t0 = message_time(v, m, 1000.0, 9, 1)
            t1 = message_time(v, m, 2000.0, 9, 1)
            t2 = message_time(v, m, 3000.0, 9, 1)
            assert t2 - t1 == pytest.approx(t1 - t0, rel=1e-9)


class TestLevelTime:
    def setup_method(self):
        self.cfg = TreeConfig.from_problem(128, 62500)
        self.mapping = RankMapping.create(self.cfg.process_grid)
        self.topo = TorusTopology(self.cfg.process_grid)
        self.machine = PRESETS["shaheen"]

    def test_empty_level_is_free(self):
        plan = global_m2l_plan(self.cfg, self.cfg.level(0))
        ann = annotate_hops(self.cfg, plan, self.mapping, self.topo, 0)
        for v in ALL_VARIANTS:
            assert level_time(v, self.machine, ann) == 0.0
            assert level_time(v, self.machine, ann, Aggregation.MAX) == 0.0

    def test_sum_of_uniform_messages(self):
        plan = global_m2l_plan(self.cfg, self.cfg.level(3))
        ann = annotate_hops(self.cfg, plan, self.mapping, self.topo, 0)
        single = message_time(ModelVariant.BASELINE, self.machine, 1792, 1, 1)
        total = level_time(ModelVariant.BASELINE, self.machine, ann)
        assert total == pytest.approx(26 * single, rel=1e-12)

    def test_max_of_identical_messages_is_single(self):
        plan = global_m2l_plan(self.cfg, self.cfg.level(2))
        ann = annotate_hops(self.cfg, plan, self.mapping, self.topo, 0)
        # baseline ignores hops, so all 26 sends cost the same
        single = message_time(ModelVariant.BASELINE, self.machine, 1792, 1, 1)
        assert level_time(ModelVariant.BASELINE, self.machine, ann,
                          Aggregation.MAX) == single


class TestPredict:
    def test_shape_and_per_level_order(self):
        cfg = TreeConfig.from_problem(128, 62500)
        mapping, topo = job_layout(cfg, PRESETS["shaheen"])
        report = predict(cfg, PRESETS["shaheen"], mapping, topo)
        assert len(report.rows) == 8
        assert [row.level for row in report.rows] == list(range(8))
        for row in report.rows:
            for chain in ORDER_CHAINS:
                times = [row.times[v] for v in chain]
                assert times == sorted(times)

    def test_local_levels_have_no_distance_term(self):
        cfg = TreeConfig.from_problem(128, 62500)
        mapping = RankMapping.create(cfg.process_grid)
        topo = TorusTopology(cfg.process_grid)
        report = predict(cfg, PRESETS["shaheen"], mapping, topo)
        for row in report.rows:
            if row.phase is Phase.LOCAL_M2L:
                assert row.extra_hops == 0
                assert row.times[ModelVariant.DISTANCE] == row.times[ModelVariant.BASELINE]

    def test_full_penalty_grows_toward_the_root(self):
        cfg = TreeConfig.from_problem(8192, 62500)
        mapping = RankMapping.create(cfg.process_grid)
        topo = TorusTopology(cfg.process_grid)
        report = predict(cfg, PRESETS["shaheen"], mapping, topo)
        by_level = {row.level: row.times[ModelVariant.FULL_PENALTY]
                    for row in report.rows}
        assert by_level[2] > by_level[3] > by_level[4] > by_level[5]

    def test_every_stats_level_appears_once(self):
        from fmmcomm.phases import comm_stats
        cfg = TreeConfig.from_problem(1024, 62500)
        mapping, topo = job_layout(cfg, PRESETS["mira"])
        report = predict(cfg, PRESETS["mira"], mapping, topo)
        assert [row.level for row in report.rows] == \
            [r.level for r in comm_stats(cfg)]

    def test_phase_selection(self):
        cfg = TreeConfig.from_problem(128, 62500)
        mapping, topo = job_layout(cfg, PRESETS["titan"])
        report = predict(cfg, PRESETS["titan"], mapping, topo,
                         phases=(Phase.GLOBAL_M2M, Phase.LOCAL_P2P))
        kinds = [(row.level, row.phase) for row in report.rows]
        # root keeps a zero row, like the empty top levels of the far-field table
        assert kinds == [(0, Phase.GLOBAL_M2M), (1, Phase.GLOBAL_M2M),
                         (2, Phase.GLOBAL_M2M), (3, Phase.GLOBAL_M2M),
                         (7, Phase.LOCAL_P2P)]
        assert report.rows[0].sends == 0
        assert all(t == 0.0 for t in report.rows[0].times.values())
        assert report.rows[1].sends == 7

    def test_variant_parsing(self):
        assert ModelVariant.from_text("baseline") is ModelVariant.BASELINE
        assert ModelVariant.from_text("bandwidth") is ModelVariant.BANDWIDTH_PENALTY
        assert ModelVariant.from_text("full_penalty") is ModelVariant.FULL_PENALTY
        with pytest.raises(ValueError):
            ModelVariant.from_text("quantum")

    def test_mira_five_dim_layout(self):
        cfg = TreeConfig.from_problem(1024, 62500)
        mapping, topo = job_layout(cfg, PRESETS["mira"])
        assert mapping.ranks_per_node == 16
        assert len(topo.dims) == 5
        assert topo.num_nodes == 64
        report = predict(cfg, PRESETS["mira"], mapping, topo)
        assert len(report.rows) == 9

    def test_deterministic(self):
        cfg = TreeConfig.from_problem(512, 30000)
        mapping, topo = job_layout(cfg, PRESETS["titan"])
        a = predict(cfg, PRESETS["titan"], mapping, topo)
        b = predict(cfg, PRESETS["titan"], mapping, topo)
        assert a == b

    @pytest.mark.parametrize("procs", (64, 512, 4096, 32768))
    def test_global_time_linear_in_active_levels(self, procs):
        # with hop-independent costs, total upper-tree time is exactly
        # (active levels) x (single-level time)
        cfg = TreeConfig.from_problem(procs, 62500)
        mapping = RankMapping.create(cfg.process_grid)
        topo = TorusTopology(cfg.process_grid)
        machine = PRESETS["shaheen"]
        report = predict(cfg, machine, mapping, topo,
                         phases=(Phase.GLOBAL_M2L,))
        times = [row.times[ModelVariant.BASELINE] for row in report.rows]
        active = [t for t in times if t > 0]
        assert len(active) == cfg.global_depth - 2
        total = math.fsum(times)
        assert total == pytest.approx(len(active) * active[0], rel=1e-12)
