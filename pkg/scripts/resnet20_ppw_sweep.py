"""Average PPW across the ResNet20 CONV layers for a ladder of square-ish kernels.

Evaluates FP32 and INT8 profiles with feasibility ignored, so the oversized
kernels show where zero-padding starts to eat the gains.

    python scripts/resnet20_ppw_sweep.py [--b-mem 30Gbps]
"""

import argparse
from pathlib import Path

from tilegemm.config import load_device, load_network
from tilegemm.dse import evaluate_config
from tilegemm.gemm_core import TileConfig
from tilegemm.units import parse_quantity
from tilegemm.workload import training_workload

DATA = Path(__file__).resolve().parent.parent / "data"
LADDER = [(4, 4, 16), (8, 8, 32), (16, 16, 64), (32, 32, 128), (36, 36, 72),
          (64, 64, 256), (128, 128, 512), (256, 256, 1024)]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--network", default=DATA / "networks" / "resnet20_cifar10.yaml")
    parser.add_argument("--b-mem", default=None)
    args = parser.parse_args()

    layers, batch = load_network(args.network)
    workload = training_workload(layers, batch)
    devices = [load_device(DATA / "devices" / f) for f in ("vu9p_fp32.yaml", "vu9p_int8.yaml")]
    if args.b_mem:
        devices = [d.replace(b_mem=parse_quantity(args.b_mem, "rate")) for d in devices]

    print(f"{'kernel':>16}" + "".join(f"{d.name:>14}" for d in devices) + f"{'fits fp32':>11}")
    for dims in LADDER:
        cfg = TileConfig(*dims)
        recs = [evaluate_config(cfg, workload, d, require_feasible=False) for d in devices]
        print(f"{str(cfg):>16}" + "".join(f"{r.avg_ppw:14.4f}" for r in recs) + f"{str(recs[0].feasible):>11}")


if __name__ == "__main__":
    main()
