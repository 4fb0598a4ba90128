import json
import subprocess
import sys

import pytest

from tilegemm.cli import main
from tilegemm.gemm_core import GemmShape, TileConfig
from tilegemm.perf_model import overall_latency
from tilegemm.config import load_device


@pytest.fixture
def paths(data_dir):
    return {
        "fp32": str(data_dir / "devices" / "vu9p_fp32.yaml"),
        "toy": str(data_dir / "networks" / "toy3.yaml"),
        "resnet": str(data_dir / "networks" / "resnet20_cifar10.yaml"),
        "table": str(data_dir / "tables" / "alexnet_table1.yaml"),
    }


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


def test_workload_rows(capsys, paths):
    code, rep = run_json(capsys, "workload", "--network", paths["toy"])
    assert code == 0
    shapes = [(r["layer"], r["pass"], r["r"], r["p"], r["c"]) for r in rep["rows"]]
    assert shapes == [
        ("c1", "forward", 8, 27, 64), ("c1", "backward_weights", 8, 64, 27),
        ("c2", "forward", 16, 72, 16), ("c2", "backward_weights", 16, 16, 72),
        ("c2", "backward_inputs", 72, 16, 16),
        ("c3", "forward", 16, 16, 16), ("c3", "backward_weights", 16, 16, 16),
        ("c3", "backward_inputs", 16, 16, 16),
    ]
    assert rep["tables"]["layer_ops"][-1] == {"layer": "total", "ops": 380_928}
    assert set(rep) >= {"tool_version", "command", "inputs_digest", "rows"}


def test_model_rows_rederivable(capsys, paths, tmp_path):
    net = tmp_path / "one.yaml"
    net.write_text("batch: 1\nlayers:\n"
                   "  - {name: x, in_ch: 64, out_ch: 16, kh: 1, kw: 1, stride: 1, pad: 0, in_h: 4, in_w: 4}\n")
    code, rep = run_json(capsys, "model", "--device", paths["fp32"], "--network", str(net),
                         "--cfg", "16,16,64")
    assert code == 0
    fwd = rep["rows"][0]
    assert (fwd["r"], fwd["p"], fwd["c"]) == (16, 64, 16)
    assert fwd["cycles_compute"] == 215 and fwd["data_mem"] == 73_728
    dev = load_device(paths["fp32"])
    est = overall_latency(GemmShape(16, 64, 16), TileConfig(16, 16, 64), dev)
    assert fwd["overall_latency"] == est.overall_latency
    layer = rep["tables"]["layers"][0]
    assert layer["tiling_pct"] == 0
    assert layer["kernel_pct"] + layer["transfer_pct"] == pytest.approx(100)
    res = rep["tables"]["resources"][0]
    assert res["dsp"] == 1280 and res["feasible"] is True


def test_model_reports_infeasible_without_failing(capsys, paths):
    code, rep = run_json(capsys, "model", "--device", paths["fp32"], "--network", paths["toy"],
                         "--cfg", "64,64,64")
    assert code == 0
    assert rep["tables"]["resources"][0]["feasible"] is False


def test_simulate_examples(capsys, paths):
    code, rep = run_json(capsys, "simulate", "--device", paths["fp32"],
                         "--shape", "1,1,1", "--cfg", "1,1,1", "--q", "0")
    assert code == 0 and rep["rows"][0]["cycles"] == 2
    code, rep = run_json(capsys, "simulate", "--device", paths["fp32"],
                         "--shape", "16,64,16", "--shape", "32,128,16", "--cfg", "16,16,64")
    assert [r["cycles"] for r in rep["rows"]] == [215, 618]
    for row in rep["rows"]:
        assert row["cycles_match"] and row["output_matches_oracle"]
        assert row["checksum"] == row["oracle_checksum"]


def test_dse_one_config(capsys, paths):
    code, rep = run_json(capsys, "dse", "--device", paths["fp32"], "--network", paths["toy"],
                         "--tr", "16", "--tc", "16", "--tp", "64")
    assert code == 0 and len(rep["rows"]) == 1


def test_dse_sorted_and_empty(capsys, paths):
    code, rep = run_json(capsys, "dse", "--device", paths["fp32"], "--network", paths["toy"],
                         "--tr", "4,8,16", "--tc", "8,16", "--tp", "16,64")
    values = [r["avg_ppw"] for r in rep["rows"]]
    assert values == sorted(values, reverse=True)
    code, rep = run_json(capsys, "dse", "--device", paths["fp32"], "--network", paths["toy"],
                         "--tr", "64", "--tc", "64", "--tp", "64")
    assert code == 2 and rep["rows"] == []


def test_assign_table(capsys, paths):
    code, rep = run_json(capsys, "assign", "--ppw-table", paths["table"])
    assert code == 0
    assert [r["device"] for r in rep["rows"]] == ["FPGA", "FPGA", "CPU", "CPU", "CPU"]


def test_input_errors_exit_1(capsys, paths, tmp_path):
    assert main(["model", "--device", str(tmp_path / "nope.yaml"), "--network", paths["toy"]]) == 1
    assert "nope.yaml" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["dse", "--device", paths["fp32"], "--network", paths["toy"],
              "--tr", "x", "--tc", "1", "--tp", "1"])
    assert exc.value.code == 1


def test_csv_and_out(paths, tmp_path, capsys):
    out = tmp_path / "rep.csv"
    assert main(["workload", "--network", paths["toy"], "--csv", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == "layer,pass,r,p,c,invocations_per_iteration,ops"
    assert "# layer_ops" in text
    assert capsys.readouterr().out == ""


def test_text_output_is_deterministic(capsys, paths):
    main(["model", "--device", paths["fp32"], "--network", paths["resnet"]])
    first = capsys.readouterr().out
    main(["model", "--device", paths["fp32"], "--network", paths["resnet"]])
    assert capsys.readouterr().out == first


def test_module_entry_point(paths):
    proc = subprocess.run([sys.executable, "-m", "tilegemm", "workload", "--network", paths["toy"]],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "backward_inputs" in proc.stdout
