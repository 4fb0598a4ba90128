"""Grid search over tile geometries and per-layer FPGA/CPU assignment."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .gemm_core import TileConfig
from .perf_model import (
    DeviceProfile,
    PerfEstimate,
    ResourceEstimate,
    overall_latency,
    ppw,
    resources,
)
from .workload import WorkloadGemm

FPGA = "FPGA"
CPU = "CPU"


class FeasibilityError(ValueError):
    """The tile geometry does not fit the device budgets."""


@dataclass(frozen=True)
class SearchSpace:
    tr_values: tuple[int, ...]
    tc_values: tuple[int, ...]
    tp_values: tuple[int, ...]
    utilization_cap: float = 1.0

    def __post_init__(self):
        for attr in ("tr_values", "tc_values", "tp_values"):
            values = tuple(sorted(set(int(v) for v in getattr(self, attr))))
            if not values:
                raise ValueError(f"{attr} must be non-empty")
            object.__setattr__(self, attr, values)
        if not 0 < self.utilization_cap <= 1:
            raise ValueError(f"utilization_cap must be in (0, 1], got {self.utilization_cap}")

    def __iter__(self):
        for tr, tc, tp in itertools.product(self.tr_values, self.tc_values, self.tp_values):
            yield TileConfig(tr, tc, tp)


@dataclass
class DseRecord:
    cfg: TileConfig
    per_layer: dict[str, PerfEstimate]
    resources: ResourceEstimate
    avg_ppw: float
    feasible: bool
    layer_ppw: dict[str, float] = field(default_factory=dict)


@dataclass
class Assignment:
    devices: dict[str, str]
    overall_ppw: float


def is_feasible(cfg: TileConfig, dev: DeviceProfile, cap: float = 1.0) -> bool:
    return resources(cfg, dev).fits(dev, cap)


def enumerate_configs(space: SearchSpace, dev: DeviceProfile) -> list[TileConfig]:
    """Feasible configurations in lexicographic (tr, tc, tp) order; may be empty."""
    return [cfg for cfg in space if is_feasible(cfg, dev, space.utilization_cap)]


def layer_estimates(cfg: TileConfig, workload: Iterable[WorkloadGemm], dev: DeviceProfile,
                    literal_datamem: bool = False) -> dict[str, PerfEstimate]:
    """Per-layer totals of every GEMM times its invocation count, in workload order."""
    out: dict[str, PerfEstimate] = {}
    for g in workload:
        est = overall_latency(g.shape, cfg, dev, literal_datamem).scaled(g.invocations_per_iteration)
        out[g.layer] = out[g.layer] + est if g.layer in out else est
    return out


def evaluate_config(cfg: TileConfig, workload: Sequence[WorkloadGemm], dev: DeviceProfile,
                    cap: float = 1.0, weighted: bool = False, kernel_only: bool = False,
                    literal_datamem: bool = False, require_feasible: bool = True) -> DseRecord:
    res = resources(cfg, dev)
    feasible = res.fits(dev, cap)
    if require_feasible and not feasible:
        raise FeasibilityError(
            f"{cfg} needs {res.dsp} DSPs / {res.bram_bits} BRAM bits; budget is "
            f"{cap:g} x ({dev.dsp_budget} DSPs, {dev.bram_budget:g} bits)")
    per_layer = layer_estimates(cfg, workload, dev, literal_datamem)
    layer_ppw = {name: ppw(est, dev.fpga_power, kernel_only) for name, est in per_layer.items()}
    return DseRecord(cfg, per_layer, res, average_ppw(per_layer, layer_ppw, weighted),
                     feasible, layer_ppw)


def average_ppw(per_layer: Mapping[str, PerfEstimate], layer_ppw: Mapping[str, float],
                weighted: bool = False) -> float:
    if not layer_ppw:
        return 0.0
    if weighted:
        total = sum(per_layer[k].useful_ops for k in layer_ppw)
        return sum(layer_ppw[k] * per_layer[k].useful_ops for k in layer_ppw) / total
    return sum(layer_ppw.values()) / len(layer_ppw)


def _evaluate(args):
    cfg, workload, dev, kwargs = args
    return evaluate_config(cfg, workload, dev, **kwargs)


def explore(space: SearchSpace, workload: Sequence[WorkloadGemm], dev: DeviceProfile,
            jobs: int = 1, **kwargs) -> list[DseRecord]:
    """Evaluate every feasible config; output order is that of enumerate_configs."""
    configs = enumerate_configs(space, dev)
    kwargs = {"cap": space.utilization_cap, **kwargs}
    tasks = [(cfg, list(workload), dev, kwargs) for cfg in configs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate, tasks))
    return [_evaluate(t) for t in tasks]


def _best_key(score: float, cfg: TileConfig):
    # higher score first, then lexicographically smallest cfg
    return (-score, (cfg.tr, cfg.tc, cfg.tp))


def best_global(records: Iterable[DseRecord]) -> DseRecord | None:
    candidates = [r for r in records if r.feasible]
    if not candidates:
        return None
    return min(candidates, key=lambda r: _best_key(r.avg_ppw, r.cfg))


def best_per_layer(records: Iterable[DseRecord]) -> dict[str, TileConfig]:
    best: dict[str, tuple] = {}
    for r in records:
        if not r.feasible:
            continue
        for layer, score in r.layer_ppw.items():
            key = _best_key(score, r.cfg)
            if layer not in best or key < best[layer][0]:
                best[layer] = (key, r.cfg)
    return {layer: cfg for layer, (_, cfg) in best.items()}


def aggregate_ppw(ppw_by_layer: Mapping[str, float], layer_ops: Mapping[str, float]) -> float:
    """Total ops over total energy, i.e. the ops-weighted harmonic mean of per-layer PPW."""
    total_ops = sum(layer_ops[k] for k in ppw_by_layer)
    energy = sum(layer_ops[k] / ppw_by_layer[k] for k in ppw_by_layer)
    return total_ops / energy if energy else 0.0


def assign_devices(fpga_ppw: Mapping[str, float], cpu_ppw: Mapping[str, float],
                   layer_ops: Mapping[str, float]) -> Assignment:
    if not (set(fpga_ppw) == set(cpu_ppw) == set(layer_ops)):
        raise ValueError(
            "layer keys differ between FPGA PPW, CPU PPW and op counts: "
            f"{sorted(set(fpga_ppw) ^ set(cpu_ppw) | set(fpga_ppw) ^ set(layer_ops))}")
    devices: dict[str, str] = {}
    chosen: dict[str, float] = {}
    for layer in fpga_ppw:
        if fpga_ppw[layer] >= cpu_ppw[layer]:
            devices[layer], chosen[layer] = FPGA, fpga_ppw[layer]
        else:
            devices[layer], chosen[layer] = CPU, cpu_ppw[layer]
    return Assignment(devices, aggregate_ppw(chosen, layer_ops))
