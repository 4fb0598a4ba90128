"""Model, simulate and explore a tiled systolic-array GEMM accelerator for CNN training."""

__version__ = "0.1.0"

from .gemm_core import GemmShape, TileConfig, blocked_gemm, gemm_reference, tile_matrix, untile_matrix
from .perf_model import DeviceProfile, PerfEstimate, ResourceEstimate, overall_latency, resources, ppw
from .systolic_sim import SimResult, simulate_gemm
from .workload import ConvLayerSpec, WorkloadGemm, training_workload
from .dse import SearchSpace, DseRecord, Assignment, assign_devices, evaluate_config, explore

__all__ = [
    "GemmShape", "TileConfig", "blocked_gemm", "gemm_reference", "tile_matrix", "untile_matrix",
    "DeviceProfile", "PerfEstimate", "ResourceEstimate", "overall_latency", "resources", "ppw",
    "SimResult", "simulate_gemm",
    "ConvLayerSpec", "WorkloadGemm", "training_workload",
    "SearchSpace", "DseRecord", "Assignment", "assign_devices", "evaluate_config", "explore",
]
