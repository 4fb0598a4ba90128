"""Command-line front end.

    tilegemm model    --device D --network N [--cfg 16,16,64]
    tilegemm simulate --device D --shape R,P,C --cfg tr,tc,tp [--seed S]
    tilegemm workload --network N
    tilegemm dse      --device D --network N --tr .. --tc .. --tp ..
    tilegemm assign   --ppw-table T [--device D]

Exit status: 0 on success, 1 on input errors, 2 when a search comes back empty.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import InputError, load_device, load_network, load_ppw_table
from .dse import (
    CPU,
    FPGA,
    SearchSpace,
    aggregate_ppw,
    assign_devices,
    best_per_layer,
    explore,
)
from .gemm_core import GemmShape, TileConfig, gemm_reference
from .perf_model import cycles_compute, overall_latency, ppw, resources
from .systolic_sim import simulate_gemm
from .units import parse_quantity
from .workload import ops_by_layer, training_workload

EXIT_OK, EXIT_INPUT, EXIT_EMPTY = 0, 1, 2


class EmptyResult(Exception):
    def __init__(self, report, message):
        super().__init__(message)
        self.report = report


@dataclass
class Report:
    command: str
    inputs_digest: str
    rows: list[dict]
    tables: dict[str, list[dict]] = field(default_factory=dict)
    tool_version: str = __version__

    def as_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "rows": self.rows,
            **({"tables": self.tables} if self.tables else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        for i, (name, rows) in enumerate([("rows", self.rows), *self.tables.items()]):
            if i:
                buf.write(f"\n# {name}\n")
            _write_csv(buf, rows)
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"# {self.command}  (tilegemm {self.tool_version}, inputs {self.inputs_digest[:12]})"]
        for name, rows in [("rows", self.rows), *self.tables.items()]:
            if name != "rows":
                lines += ["", f"## {name}"]
            lines += _aligned(rows)
        return "\n".join(lines) + "\n"


def _write_csv(buf, rows):
    if not rows:
        return
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _aligned(rows) -> list[str]:
    if not rows:
        return ["(no rows)"]
    keys = list(rows[0])
    cells = [[_fmt(r.get(k, "")) for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    out = ["  ".join(k.rjust(w) for k, w in zip(keys, widths))]
    out += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return out


def digest(*paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        if p is None:
            continue
        data = Path(p).read_bytes()
        h.update(len(data).to_bytes(8, "little"))
        h.update(data)
    return h.hexdigest()


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _cfg(text: str) -> TileConfig:
    try:
        return TileConfig.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _shape(text: str) -> GemmShape:
    try:
        r, p, c = (int(v) for v in text.split(","))
        return GemmShape(r, p, c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected R,P,C positive integers, got {text!r}")


def _estimate_row(est) -> dict:
    d = est.as_dict()
    return {k: d[k] for k in (
        "data_mem", "latency_mem", "cycles_compute", "latency_total", "data_pcie",
        "latency_pcie", "latency_tiling", "overall_latency", "useful_ops", "padded_ops")}


def cmd_model(device_file, network_file, cfg: TileConfig, b_mem=None,
              literal_datamem=False, kernel_only_ppw=False) -> Report:
    dev = load_device(device_file)
    if b_mem is not None:
        dev = dev.replace(b_mem=parse_quantity(b_mem, "rate"))
    layers, batch = load_network(network_file)
    workload = training_workload(layers, batch)

    rows, per_layer = [], {}
    for g in workload:
        est = overall_latency(g.shape, cfg, dev, literal_datamem)
        rows.append({"layer": g.layer, "pass": str(g.pass_), "r": g.shape.r, "p": g.shape.p,
                     "c": g.shape.c, "invocations_per_iteration": g.invocations_per_iteration,
                     **_estimate_row(est)})
        total = est.scaled(g.invocations_per_iteration)
        per_layer[g.layer] = per_layer[g.layer] + total if g.layer in per_layer else total

    layer_rows = []
    for name, est in per_layer.items():
        shares = est.breakdown()
        layer_rows.append({
            "layer": name,
            "overall_latency": est.overall_latency,
            "useful_ops": est.useful_ops,
            "kernel_pct": 100 * shares["kernel"],
            "transfer_pct": 100 * shares["transfer"],
            "tiling_pct": 100 * shares["tiling"],
            "ppw": ppw(est, dev.fpga_power, kernel_only_ppw),
        })
    res = resources(cfg, dev)
    util = res.utilization(dev)
    res_row = {"tr": cfg.tr, "tc": cfg.tc, "tp": cfg.tp, "dsp": res.dsp, "bram_bits": res.bram_bits,
               "dsp_pct": 100 * util["dsp"], "bram_pct": 100 * util["bram"],
               "feasible": res.fits(dev)}
    return Report("model", digest(device_file, network_file), rows,
                  {"layers": layer_rows, "resources": [res_row]})


def cmd_simulate(device_file, shapes, cfgs, seed=0, q=None) -> Report:
    dev = load_device(device_file)
    q = dev.q if q is None else q
    if len(cfgs) == 1:
        cfgs = cfgs * len(shapes)
    if len(cfgs) != len(shapes):
        raise InputError("give one --cfg, or one per --shape")
    rng = np.random.default_rng(seed)
    rows = []
    for shape, cfg in zip(shapes, cfgs):
        a = rng.integers(-8, 9, size=(shape.r, shape.p), dtype=np.int32)
        b = rng.integers(-8, 9, size=(shape.p, shape.c), dtype=np.int32)
        sim = simulate_gemm(a, b, cfg, q)
        oracle = gemm_reference(a, b)
        formula = cycles_compute(shape, cfg, q)
        rows.append({
            "r": shape.r, "p": shape.p, "c": shape.c, "tr": cfg.tr, "tc": cfg.tc, "tp": cfg.tp,
            "q": q, "cycles": sim.cycles, "formula_cycles": formula,
            "cycles_match": sim.cycles == formula, "tiles_processed": sim.tiles_processed,
            "output_matches_oracle": bool(np.array_equal(sim.output, oracle)),
            "checksum": int(sim.output.sum(dtype=np.int64)),
            "oracle_checksum": int(oracle.sum(dtype=np.int64)),
        })
    return Report("simulate", digest(device_file), rows)


def cmd_workload(network_file) -> Report:
    layers, batch = load_network(network_file)
    workload = training_workload(layers, batch)
    rows = [{"layer": g.layer, "pass": str(g.pass_), "r": g.shape.r, "p": g.shape.p,
             "c": g.shape.c, "invocations_per_iteration": g.invocations_per_iteration,
             "ops": g.ops} for g in workload]
    totals = [{"layer": name, "ops": ops} for name, ops in ops_by_layer(workload).items()]
    totals.append({"layer": "total", "ops": sum(r["ops"] for r in rows)})
    return Report("workload", digest(network_file), rows, {"layer_ops": totals})


def cmd_dse(device_file, network_file, space: SearchSpace, weighted_avg=False,
            literal_datamem=False, kernel_only_ppw=False, jobs=1) -> Report:
    dev = load_device(device_file)
    layers, batch = load_network(network_file)
    workload = training_workload(layers, batch)
    records = explore(space, workload, dev, jobs=jobs, weighted=weighted_avg,
                      kernel_only=kernel_only_ppw, literal_datamem=literal_datamem)
    records.sort(key=lambda r: (-r.avg_ppw, (r.cfg.tr, r.cfg.tc, r.cfg.tp)))
    rows = [{"tr": r.cfg.tr, "tc": r.cfg.tc, "tp": r.cfg.tp, "dsp": r.resources.dsp,
             "bram_bits": r.resources.bram_bits, "avg_ppw": r.avg_ppw, "feasible": r.feasible}
            for r in records]
    by_cfg = {r.cfg: r for r in records}
    best_rows = [{"layer": layer, "tr": cfg.tr, "tc": cfg.tc, "tp": cfg.tp,
                  "ppw": by_cfg[cfg].layer_ppw[layer]}
                 for layer, cfg in best_per_layer(records).items()]
    report = Report("dse", digest(device_file, network_file), rows, {"best_per_layer": best_rows})
    if not records:
        raise EmptyResult(report, "no configuration fits the device budgets")
    return report


def cmd_assign(ppw_table_file, device_file=None) -> Report:
    if device_file is not None:
        load_device(device_file)  # validated only; PPW values already fold in power
    fpga, cpu, ops = load_ppw_table(ppw_table_file)
    assignment = assign_devices(fpga, cpu, ops)
    rows = [{"layer": k, "fpga_ppw": fpga[k], "cpu_ppw": cpu[k], "ops": ops[k],
             "device": assignment.devices[k]} for k in fpga]
    summary = [
        {"strategy": "per-layer", "overall_ppw": assignment.overall_ppw},
        {"strategy": f"all-{FPGA}", "overall_ppw": aggregate_ppw(fpga, ops)},
        {"strategy": f"all-{CPU}", "overall_ppw": aggregate_ppw(cpu, ops)},
    ]
    return Report("assign", digest(ppw_table_file, device_file), rows, {"summary": summary})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tilegemm", description="Tiled GEMM accelerator model and simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit JSON")
    fmt.add_argument("--csv", action="store_true", help="emit CSV")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", parents=[common], help="per-GEMM latency model for a network")
    p.add_argument("--device", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--cfg", type=_cfg, default=TileConfig(16, 16, 64))
    p.add_argument("--b-mem", help="override off-chip bandwidth, e.g. 3Gbps")
    p.add_argument("--literal-datamem", action="store_true")
    p.add_argument("--kernel-only-ppw", action="store_true")

    p = sub.add_parser("simulate", parents=[common], help="run the PE-mesh simulator")
    p.add_argument("--device", required=True)
    p.add_argument("--shape", type=_shape, action="append", required=True, help="R,P,C")
    p.add_argument("--cfg", type=_cfg, action="append", required=True, help="tr,tc,tp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", type=int, help="override multiplier latency")

    p = sub.add_parser("workload", parents=[common], help="lower a network to GEMMs")
    p.add_argument("--network", required=True)

    p = sub.add_parser("dse", parents=[common], help="grid search over tile sizes")
    p.add_argument("--device", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--tr", type=_int_list, required=True)
    p.add_argument("--tc", type=_int_list, required=True)
    p.add_argument("--tp", type=_int_list, required=True)
    p.add_argument("--cap", type=float, default=1.0, help="utilization cap in (0,1]")
    p.add_argument("--weighted-avg", action="store_true", help="ops-weighted mean over layers")
    p.add_argument("--literal-datamem", action="store_true")
    p.add_argument("--kernel-only-ppw", action="store_true")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("assign", parents=[common], help="per-layer FPGA/CPU assignment")
    p.add_argument("--ppw-table", required=True)
    p.add_argument("--device")
    return parser


def run(args) -> Report:
    if args.command == "model":
        return cmd_model(args.device, args.network, args.cfg, args.b_mem,
                         args.literal_datamem, args.kernel_only_ppw)
    if args.command == "simulate":
        return cmd_simulate(args.device, args.shape, args.cfg, args.seed, args.q)
    if args.command == "workload":
        return cmd_workload(args.network)
    if args.command == "dse":
        space = SearchSpace(tuple(args.tr), tuple(args.tc), tuple(args.tp), args.cap)
        return cmd_dse(args.device, args.network, space, args.weighted_avg,
                       args.literal_datamem, args.kernel_only_ppw, args.jobs)
    if args.command == "assign":
        return cmd_assign(args.ppw_table, args.device)
    raise AssertionError(args.command)


def render(report: Report, args) -> str:
    if args.json:
        return report.to_json()
    if args.csv:
        return report.to_csv()
    return report.to_text()


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = run(args)
    except EmptyResult as exc:
        _emit(render(exc.report, args), args.out)
        print(f"tilegemm: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (InputError, ValueError) as exc:
        print(f"tilegemm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(render(report, args), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
