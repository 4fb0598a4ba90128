"""Layer-wise kernel tuning for the AlexNet stack and FPGA/CPU assignment.

Searches tile sizes under the FP32 budget, reports the best kernel for every
layer, and compares a single global kernel against per-layer tuning. With
--cpu-table the per-layer FPGA/CPU assignment is also computed, using the
modeled FPGA PPW of the per-layer winners.
"""

import argparse
from pathlib import Path

from tilegemm.config import load_device, load_network, load_ppw_table
from tilegemm.dse import SearchSpace, aggregate_ppw, assign_devices, best_global, best_per_layer, explore
from tilegemm.workload import ops_by_layer, training_workload

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cpu-table", default=DATA / "tables" / "alexnet_table1.yaml")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    dev = load_device(DATA / "devices" / "vu9p_fp32.yaml")
    layers, batch = load_network(DATA / "networks" / "alexnet_cifar10.yaml")
    workload = training_workload(layers, batch)
    ops = ops_by_layer(workload)

    dims = (8, 16, 24, 32, 36)
    space = SearchSpace(dims, dims, (32, 64, 72, 74, 128, 256))
    records = explore(space, workload, dev, jobs=args.jobs)
    by_cfg = {r.cfg: r for r in records}
    glob = best_global(records)
    per_layer = best_per_layer(records)

    print(f"global best {glob.cfg}  avg PPW {glob.avg_ppw:.4f}")
    tuned = {}
    for name, cfg in per_layer.items():
        tuned[name] = by_cfg[cfg].layer_ppw[name]
        print(f"  {name:>6}  {str(cfg):>12}  {tuned[name]:.4f}  (global kernel {glob.layer_ppw[name]:.4f})")
    print(f"aggregate PPW  single kernel {aggregate_ppw(glob.layer_ppw, ops):.4f}"
          f"  per-layer {aggregate_ppw(tuned, ops):.4f}")

    _, cpu, _ = load_ppw_table(args.cpu_table)
    if set(cpu) == set(tuned):
        a = assign_devices(tuned, cpu, ops)
        print("assignment  " + "  ".join(f"{k}:{v}" for k, v in a.devices.items()))
        print(f"mixed {a.overall_ppw:.4f}  all-CPU {aggregate_ppw(cpu, ops):.4f}")


if __name__ == "__main__":
    main()
