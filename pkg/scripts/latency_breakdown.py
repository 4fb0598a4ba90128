"""Per-layer share of modeled latency spent in the kernel, host transfer and tiling.

Runs the ResNet20 stack at full and at 10% off-chip bandwidth side by side.
Pass --tiling-bw to include host tiling time (bytes/s, e.g. 2GBps).
"""

import argparse
from pathlib import Path

from tilegemm.config import load_device, load_network
from tilegemm.dse import layer_estimates
from tilegemm.gemm_core import TileConfig
from tilegemm.units import parse_quantity
from tilegemm.workload import training_workload

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cfg", default="16,16,64")
    parser.add_argument("--tiling-bw", default=None)
    args = parser.parse_args()

    dev = load_device(DATA / "devices" / "vu9p_fp32.yaml")
    if args.tiling_bw:
        dev = dev.replace(cpu_tiling_bw=parse_quantity(args.tiling_bw, "rate") / 8)
    layers, batch = load_network(DATA / "networks" / "resnet20_cifar10.yaml")
    workload = training_workload(layers, batch)
    cfg = TileConfig.parse(args.cfg)

    runs = {"30Gbps": dev, "3Gbps": dev.replace(b_mem=dev.b_mem / 10)}
    est = {k: layer_estimates(cfg, workload, d) for k, d in runs.items()}
    print(f"{'layer':>8}" + "".join(f"{k + ' ' + part:>18}" for k in runs for part in ("kern%", "xfer%", "tile%")))
    for name in est["30Gbps"]:
        cells = []
        for k in runs:
            shares = est[k][name].breakdown()
            cells += [100 * shares["kernel"], 100 * shares["transfer"], 100 * shares["tiling"]]
        print(f"{name:>8}" + "".join(f"{v:18.1f}" for v in cells))


if __name__ == "__main__":
    main()
