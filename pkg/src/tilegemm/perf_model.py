"""Closed-form latency, resource and performance-per-watt model of the GEMM kernel."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .gemm_core import GemmShape, TileConfig, pad_dim, tile_counts


@dataclass(frozen=True)
class DeviceProfile:
    """Platform constants, all rates in SI base units (bits/s, Hz, W).

    ``cpu_tiling_bw`` is in bytes/s; 0 leaves host tiling time out of the model.
    """

    wl: int = 32
    q: int = 10
    v: int = 5
    f_clk: float = 250e6
    b_mem: float = 30e9
    b_pcie: float = 64e9
    dsp_budget: int = 6840
    bram_budget: float = 75.9e6
    fpga_power: float = 8.0
    cpu_tiling_bw: float = 0.0
    name: str = "device"

    def __post_init__(self):
        for attr in ("wl", "f_clk", "b_mem", "b_pcie", "dsp_budget", "bram_budget", "fpga_power"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"{attr} must be > 0, got {getattr(self, attr)!r}")
        if self.q < 0:
            raise ValueError(f"q must be >= 0, got {self.q}")
        if self.v < 1:
            raise ValueError(f"v must be >= 1, got {self.v}")
        if self.cpu_tiling_bw < 0:
            raise ValueError(f"cpu_tiling_bw must be >= 0, got {self.cpu_tiling_bw}")

    def replace(self, **changes) -> "DeviceProfile":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class PerfEstimate:
    data_mem: float
    latency_mem: float
    cycles_compute: int
    latency_total: float
    data_pcie: float
    latency_pcie: float
    latency_tiling: float
    overall_latency: float
    useful_ops: int
    padded_ops: int

    def scaled(self, n: int) -> "PerfEstimate":
        """The estimate for ``n`` back-to-back invocations."""
        return PerfEstimate(*(getattr(self, f.name) * n for f in dataclasses.fields(self)))

    def __add__(self, other: "PerfEstimate") -> "PerfEstimate":
        return PerfEstimate(*(getattr(self, f.name) + getattr(other, f.name)
                              for f in dataclasses.fields(self)))

    @classmethod
    def zero(cls) -> "PerfEstimate":
        return cls(0, 0.0, 0, 0.0, 0, 0.0, 0.0, 0.0, 0, 0)

    def breakdown(self) -> dict[str, float]:
        """Shares of overall latency spent in the kernel, host transfer and tiling."""
        total = self.overall_latency
        if total <= 0:
            return {"kernel": 0.0, "transfer": 0.0, "tiling": 0.0}
        return {
            "kernel": self.latency_total / total,
            "transfer": self.latency_pcie / total,
            "tiling": self.latency_tiling / total,
        }

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ResourceEstimate:
    dsp: int
    bram_bits: int

    def fits(self, dev: DeviceProfile, cap: float = 1.0) -> bool:
        return self.dsp <= cap * dev.dsp_budget and self.bram_bits <= cap * dev.bram_budget

    def utilization(self, dev: DeviceProfile) -> dict[str, float]:
        return {"dsp": self.dsp / dev.dsp_budget, "bram": self.bram_bits / dev.bram_budget}


def data_mem(s: GemmShape, cfg: TileConfig, wl: int, literal: bool = False) -> int:
    """Bits moved between off-chip memory and the kernel for one GEMM.

    Every output tile reads its A row-strip and B column-strip over the padded
    reduction depth and writes one tr x tc tile back. ``literal`` uses the
    unpadded depth instead.
    """
    row_tiles, col_tiles, _ = tile_counts(s, cfg)
    depth = s.p if literal else pad_dim(s.p, cfg.tp)
    per_tile = (cfg.tr * depth + cfg.tc * depth) + cfg.tc * cfg.tr
    return wl * row_tiles * col_tiles * per_tile


def latency_mem(data_mem_bits: float, b_mem: float) -> float:
    return data_mem_bits / b_mem


def cycles_compute(s: GemmShape, cfg: TileConfig, q: int) -> int:
    row_tiles, col_tiles, depth_tiles = tile_counts(s, cfg)
    return row_tiles * col_tiles * (depth_tiles * (cfg.tp + cfg.tc + cfg.tr - 2) + (q + 1) ** 2)


def latency_total(s: GemmShape, cfg: TileConfig, dev: DeviceProfile,
                  literal_datamem: bool = False) -> float:
    """Kernel latency with operands already resident in off-chip memory."""
    mem = latency_mem(data_mem(s, cfg, dev.wl, literal_datamem), dev.b_mem)
    return cycles_compute(s, cfg, dev.q) / dev.f_clk + mem


def data_pcie(s: GemmShape, wl: int) -> int:
    return wl * (s.r * s.p + s.c * s.p + s.r * s.c)


def latency_pcie(data_bits: float, b_pcie: float) -> float:
    return data_bits / b_pcie


def padded_shape(s: GemmShape, cfg: TileConfig) -> GemmShape:
    return GemmShape(pad_dim(s.r, cfg.tr), pad_dim(s.p, cfg.tp), pad_dim(s.c, cfg.tc))


def tiling_bytes(s: GemmShape, cfg: TileConfig, wl: int) -> float:
    """Bytes the host touches laying out A and B in tiles and untiling C."""
    ps = padded_shape(s, cfg)
    return wl / 8 * (ps.r * ps.p + ps.p * ps.c + ps.r * ps.c)


def overall_latency(s: GemmShape, cfg: TileConfig, dev: DeviceProfile,
                    literal_datamem: bool = False) -> PerfEstimate:
    dmem = data_mem(s, cfg, dev.wl, literal_datamem)
    lmem = latency_mem(dmem, dev.b_mem)
    cycles = cycles_compute(s, cfg, dev.q)
    ltotal = cycles / dev.f_clk + lmem
    dpcie = data_pcie(s, dev.wl)
    lpcie = latency_pcie(dpcie, dev.b_pcie)
    ltiling = tiling_bytes(s, cfg, dev.wl) / dev.cpu_tiling_bw if dev.cpu_tiling_bw > 0 else 0.0
    return PerfEstimate(
        data_mem=dmem,
        latency_mem=lmem,
        cycles_compute=cycles,
        latency_total=ltotal,
        data_pcie=dpcie,
        latency_pcie=lpcie,
        latency_tiling=ltiling,
        overall_latency=lpcie + ltotal + ltiling,
        useful_ops=s.ops,
        padded_ops=padded_shape(s, cfg).ops,
    )


def resources(cfg: TileConfig, dev: DeviceProfile) -> ResourceEstimate:
    # buffer C holds q+1 interleaved partials per PE
    bram = dev.wl * (cfg.tr * cfg.tp + cfg.tp * cfg.tc + cfg.tr * cfg.tc * (dev.q + 1))
    return ResourceEstimate(dsp=cfg.pe_count * dev.v, bram_bits=bram)


def ppw(estimate: PerfEstimate, power: float, kernel_only: bool = False) -> float:
    """GOp/s/W of useful work; ``kernel_only`` drops PCIe and tiling time."""
    latency = estimate.latency_total if kernel_only else estimate.overall_latency
    if power <= 0 or latency <= 0:
        raise ValueError("power and latency must be positive")
    return estimate.useful_ops / latency / power / 1e9
