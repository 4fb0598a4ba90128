import math

import pytest
from hypothesis import given, settings, strategies as st

from tilegemm.dse import (
    CPU,
    FPGA,
    DseRecord,
    FeasibilityError,
    SearchSpace,
    aggregate_ppw,
    assign_devices,
    best_global,
    best_per_layer,
    enumerate_configs,
    evaluate_config,
    explore,
)
from tilegemm.gemm_core import GemmShape, TileConfig
from tilegemm.perf_model import DeviceProfile, ResourceEstimate
from tilegemm.workload import ConvLayerSpec, training_workload

TABLE_FPGA = [0.59, 0.29, 0.078, 0.076, 0.073]
TABLE_CPU = [0.35, 0.24, 0.089, 0.13, 0.11]


def test_enumerate_examples(fp32_device):
    space = SearchSpace((16, 36), (16, 36), (64, 72))
    configs = enumerate_configs(space, fp32_device)
    assert len(configs) == 8
    assert configs == sorted(configs)
    wide = SearchSpace((16, 36, 48), (16, 36, 48), (64,))
    assert TileConfig(48, 48, 64) not in enumerate_configs(wide, fp32_device)
    capped = enumerate_configs(SearchSpace((16, 36), (16, 36), (64,), 0.5), fp32_device)
    assert TileConfig(36, 36, 64) not in capped and TileConfig(16, 16, 64) in capped
    assert enumerate_configs(SearchSpace((100,), (100,), (8,)), fp32_device) == []


def test_space_validation():
    with pytest.raises(ValueError):
        SearchSpace((), (1,), (1,))
    with pytest.raises(ValueError):
        SearchSpace((1,), (1,), (1,), 0.0)


def _toy_workload():
    net = [ConvLayerSpec("a", 2, 3, 1, 1, 1, 0, 2, 2, True),
           ConvLayerSpec("b", 3, 2, 3, 3, 1, 1, 3, 3)]
    return training_workload(net, 2)


def _brute_force_layer_ppw(cfg, workload, dev):
    """Every formula term recomputed from raw integers, with no package helpers."""
    totals = {}
    for g in workload:
        r, p, c = g.shape.r, g.shape.p, g.shape.c
        nr, nc, npp = -(-r // cfg.tr), -(-c // cfg.tc), -(-p // cfg.tp)
        pp = npp * cfg.tp
        bits = dev.wl * nr * nc * (cfg.tr * pp + cfg.tc * pp + cfg.tr * cfg.tc)
        cycles = nr * nc * (npp * (cfg.tp + cfg.tc + cfg.tr - 2) + (dev.q + 1) ** 2)
        pcie = dev.wl * (r * p + c * p + r * c)
        t = cycles / dev.f_clk + bits / dev.b_mem + pcie / dev.b_pcie
        lat, ops = totals.get(g.layer, (0.0, 0))
        totals[g.layer] = (lat + t * g.invocations_per_iteration,
                           ops + 2 * r * p * c * g.invocations_per_iteration)
    return {k: ops / lat / dev.fpga_power / 1e9 for k, (lat, ops) in totals.items()}


def test_evaluate_against_brute_force(fp32_device):
    cfg = TileConfig(2, 2, 2)
    wl = _toy_workload()
    rec = evaluate_config(cfg, wl, fp32_device)
    expected = _brute_force_layer_ppw(cfg, wl, fp32_device)
    assert rec.layer_ppw.keys() == expected.keys()
    for k in expected:
        assert math.isclose(rec.layer_ppw[k], expected[k], rel_tol=1e-9)
    assert math.isclose(rec.avg_ppw, sum(expected.values()) / 2, rel_tol=1e-9)


def test_average_modes(fp32_device):
    layer = ConvLayerSpec("only", 4, 4, 3, 3, 1, 1, 6, 6)
    single = evaluate_config(TileConfig(4, 4, 8), training_workload([layer], 1), fp32_device)
    assert single.avg_ppw == single.layer_ppw["only"]
    twin = ConvLayerSpec("twin", 4, 4, 3, 3, 1, 1, 6, 6)
    double = evaluate_config(TileConfig(4, 4, 8), training_workload([layer, twin], 1), fp32_device)
    assert double.avg_ppw == pytest.approx(single.avg_ppw, rel=1e-12)
    wl = _toy_workload()
    w = evaluate_config(TileConfig(2, 2, 2), wl, fp32_device, weighted=True)
    ops = {k: v.useful_ops for k, v in w.per_layer.items()}
    expected = sum(w.layer_ppw[k] * ops[k] for k in ops) / sum(ops.values())
    assert w.avg_ppw == pytest.approx(expected, rel=1e-12)


def test_infeasible_config_rejected(fp32_device):
    with pytest.raises(FeasibilityError):
        evaluate_config(TileConfig(40, 40, 64), _toy_workload(), fp32_device)
    rec = evaluate_config(TileConfig(40, 40, 64), _toy_workload(), fp32_device, require_feasible=False)
    assert not rec.feasible


def _rec(cfg, avg, layers=None):
    return DseRecord(TileConfig(*cfg), {}, ResourceEstimate(1, 1), avg, True, layers or {})


def test_best_selection():
    one = _rec((4, 4, 4), 1.0)
    assert best_global([one]) is one
    tied = [_rec((8, 8, 8), 2.0), _rec((4, 8, 8), 2.0), _rec((16, 4, 4), 1.0)]
    assert best_global(tied).cfg == TileConfig(4, 8, 8)
    ranked = [_rec((1, 1, 1), 0.5, {"x": 3.0, "y": 0.1}),
              _rec((2, 2, 2), 0.9, {"x": 1.0, "y": 0.8}),
              _rec((3, 3, 3), 0.7, {"x": 3.0, "y": 0.4})]
    assert best_global(ranked).cfg == TileConfig(2, 2, 2)
    assert best_per_layer(ranked) == {"x": TileConfig(1, 1, 1), "y": TileConfig(2, 2, 2)}
    assert best_global([]) is None
    assert best_per_layer([]) == {}


def test_assign_table_values():
    names = [f"conv{i}" for i in range(1, 6)]
    fpga, cpu = dict(zip(names, TABLE_FPGA)), dict(zip(names, TABLE_CPU))
    ops = {n: 1.0 for n in names}
    a = assign_devices(fpga, cpu, ops)
    assert [a.devices[n] for n in names] == [FPGA, FPGA, CPU, CPU, CPU]
    assert a.overall_ppw > aggregate_ppw(cpu, ops)
    assert a.overall_ppw > aggregate_ppw(fpga, ops)


def test_assign_edge_cases():
    same = {"a": 0.5, "b": 0.5}
    a = assign_devices(same, dict(same), {"a": 1, "b": 3})
    assert set(a.devices.values()) == {FPGA}
    assert a.overall_ppw == pytest.approx(0.5)
    all_f = assign_devices({"a": 2.0, "b": 3.0}, {"a": 1.0, "b": 1.0}, {"a": 1, "b": 1})
    assert set(all_f.devices.values()) == {FPGA}
    with pytest.raises(ValueError):
        assign_devices({"a": 1.0}, {"b": 1.0}, {"a": 1})


ppws = st.floats(0.01, 10.0, allow_nan=False)


@given(st.dictionaries(st.sampled_from("abcdefgh"), st.tuples(ppws, ppws, st.floats(1.0, 1e9)), min_size=1))
def test_assignment_dominates(table):
    fpga = {k: v[0] for k, v in table.items()}
    cpu = {k: v[1] for k, v in table.items()}
    ops = {k: v[2] for k, v in table.items()}
    overall = assign_devices(fpga, cpu, ops).overall_ppw
    assert overall >= aggregate_ppw(cpu, ops) * (1 - 1e-12)
    assert overall >= aggregate_ppw(fpga, ops) * (1 - 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 64), min_size=1, max_size=4),
       st.lists(st.integers(1, 64), min_size=1, max_size=4),
       st.lists(st.integers(1, 256), min_size=1, max_size=4),
       st.floats(0.05, 1.0))
def test_feasibility_filter_matches_equations(tr, tc, tp, cap):
    dev = DeviceProfile()
    space = SearchSpace(tuple(tr), tuple(tc), tuple(tp), cap)
    got = set(enumerate_configs(space, dev))
    for cfg in space:
        dsp = cfg.tr * cfg.tc * dev.v
        bram = dev.wl * (cfg.tr * cfg.tp + cfg.tp * cfg.tc + cfg.tr * cfg.tc * (dev.q + 1))
        fits = dsp <= cap * dev.dsp_budget and bram <= cap * dev.bram_budget
        assert (cfg in got) == fits


def test_explore_parallel_matches_serial(fp32_device):
    wl = _toy_workload()
    space = SearchSpace((1, 2, 4), (2, 4), (2, 8))
    serial = explore(space, wl, fp32_device)
    parallel = explore(space, wl, fp32_device, jobs=3)
    assert [(r.cfg, r.avg_ppw, r.layer_ppw) for r in serial] == \
           [(r.cfg, r.avg_ppw, r.layer_ppw) for r in parallel]


def test_zero_op_degradation_small_layer(fp32_device):
    wl = training_workload([ConvLayerSpec("s", 16, 16, 3, 3, 1, 1, 8, 8)], 10)
    ppw = [evaluate_config(TileConfig(t, t, 4 * t), wl, fp32_device, require_feasible=False).avg_ppw
           for t in (16, 64, 256, 1024)]
    assert ppw == sorted(ppw, reverse=True)
    padded = evaluate_config(TileConfig(1024, 1024, 4096), wl, fp32_device, require_feasible=False)
    est = padded.per_layer["s"]
    assert est.useful_ops / est.padded_ops < 0.01
