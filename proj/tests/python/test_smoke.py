"""End-to-end smoke tests for the python bindings."""

import math

import pytest

import wavetune as wt


@pytest.fixture
def registry():
    r = wt.ConfigRegistry()
    r.family = "dense_gemm"
    r.macros = [
        wt.MacroConfig(0, wt.GemmTiles(64, 64, 64)),
        wt.MacroConfig(1, wt.GemmTiles(128, 128, 64)),
    ]
    r.micros = [wt.MicroConfig(0, 2, 4), wt.MicroConfig(1, 3, 4)]
    for ma in (0, 1):
        for mi in (0, 1):
            r.add_feasible(ma, mi)
    r.validate()
    return r


@pytest.fixture
def ground(registry):
    g = wt.SyntheticKernelGround()
    g.set_entry(0, 0, wt.GroundEntry(20.0, 2.0))
    g.set_entry(0, 1, wt.GroundEntry(22.0, 1.8))
    g.set_entry(1, 0, wt.GroundEntry(70.0, 5.0))
    g.set_entry(1, 1, wt.GroundEntry(77.0, 4.5))
    return g


def test_mapping_and_waves():
    hw = wt.HardwareSpec(132)
    macro = wt.MacroConfig(0, wt.GemmTiles(128, 256, 64))
    g, l = wt.map_workload(wt.DenseGemm(4096, 4096, 4096), macro)
    assert (g, l) == (32 * 16, 64)
    assert wt.wave_count(g, hw) == math.ceil(512 / 132)

    x = wt.parse_workload("dense_gemm,4096,4096,4096")
    assert wt.map_workload(x, macro) == (512, 64)
    assert wt.workload_to_string(x) == "dense_gemm,4096,4096,4096"


def test_simulate_step_law():
    hw = wt.HardwareSpec(132)
    assert wt.simulate(hw, 132, 1, 50.0) == 50.0
    assert wt.simulate(hw, 133, 1, 50.0) == 100.0
    noisy = wt.simulate(hw, 264, 1, 50.0, sigma=10.0, seed=3)
    assert noisy == wt.simulate(hw, 264, 1, 50.0, sigma=10.0, seed=3)


def test_full_pipeline(registry, ground, tmp_path):
    hw = wt.HardwareSpec(132)
    plan = wt.build_plan(hw, "dense_gemm", W=4, I=4, tau=1.5,
                         loop_anchors=[8, 16, 32])
    assert 0 < len(plan.grid_points) <= 16

    records = wt.run_profile_sim(plan, registry, ground, sigma=0.0, seed=9)
    assert len(records) == len(plan.grid_points) * 3 * 4

    tables = wt.build_tables(records, registry, hw, W=4)
    assert len(tables.tables) == 2

    path = str(tmp_path / "tables.json")
    wt.save_tables(tables, path)
    loaded = wt.load_tables(path)
    assert [t.macro_id for t in loaded.tables] == [0, 1]

    decision = wt.tune(wt.DenseGemm(2000, 2000, 2048), loaded, registry, hw)
    assert decision.macro_id in (0, 1)
    assert decision.stats.model_evals == 2
    again = wt.tune(wt.DenseGemm(2000, 2000, 2048), loaded, registry, hw)
    assert (again.macro_id, again.micro_id) == (decision.macro_id,
                                                decision.micro_id)

    latency, regime = wt.predict_latency(loaded.tables[0], 200, 16, hw)
    assert latency > 0
    assert not regime.extrapolated


def test_records_csv_roundtrip(registry, ground, tmp_path):
    hw = wt.HardwareSpec(132)
    plan = wt.build_plan(hw, "dense_gemm", W=2, I=2, tau=1.5,
                         loop_anchors=[8])
    records = wt.run_profile_sim(plan, registry, ground, sigma=2.0, seed=1)
    path = str(tmp_path / "records.csv")
    wt.write_records(records, path)
    back = wt.read_records(path)
    assert [r.latency_us for r in back] == [r.latency_us for r in records]
