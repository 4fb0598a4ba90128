"""Lowering CONV layers to the GEMMs issued during one training iteration."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .gemm_core import GemmShape


class GeometryError(ValueError):
    """A layer's geometry yields an empty output."""


class Pass(str, Enum):
    FORWARD = "forward"
    BACKWARD_WEIGHTS = "backward_weights"
    BACKWARD_INPUTS = "backward_inputs"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ConvLayerSpec:
    name: str
    in_ch: int
    out_ch: int
    kh: int
    kw: int
    stride: int
    pad: int
    in_h: int
    in_w: int
    first_layer: bool = False

    def __post_init__(self):
        for attr in ("in_ch", "out_ch", "kh", "kw", "stride", "in_h", "in_w"):
            if getattr(self, attr) < 1:
                raise GeometryError(f"layer {self.name!r}: {attr} must be >= 1")
        if self.pad < 0:
            raise GeometryError(f"layer {self.name!r}: pad must be >= 0")

    @property
    def patch(self) -> int:
        """im2col patch length: in_ch * kh * kw."""
        return self.in_ch * self.kh * self.kw


@dataclass(frozen=True)
class WorkloadGemm:
    layer: str
    pass_: Pass
    shape: GemmShape
    invocations_per_iteration: int

    @property
    def ops(self) -> int:
        return self.shape.ops * self.invocations_per_iteration


def conv_output_dims(layer: ConvLayerSpec) -> tuple[int, int]:
    out_h = (layer.in_h + 2 * layer.pad - layer.kh) // layer.stride + 1
    out_w = (layer.in_w + 2 * layer.pad - layer.kw) // layer.stride + 1
    if out_h < 1 or out_w < 1:
        raise GeometryError(f"layer {layer.name!r}: output {out_h}x{out_w} is empty")
    return out_h, out_w


def _out_pixels(layer: ConvLayerSpec) -> int:
    out_h, out_w = conv_output_dims(layer)
    return out_h * out_w


def forward_gemm(layer: ConvLayerSpec, batch: int) -> WorkloadGemm:
    """W (out_ch x patch) times im2col(X) (patch x pixels)."""
    shape = GemmShape(layer.out_ch, layer.patch, _out_pixels(layer))
    return WorkloadGemm(layer.name, Pass.FORWARD, shape, batch)


def backward_weight_gemm(layer: ConvLayerSpec, batch: int) -> WorkloadGemm:
    """dY (out_ch x pixels) times im2col(X)^T (pixels x patch)."""
    shape = GemmShape(layer.out_ch, _out_pixels(layer), layer.patch)
    return WorkloadGemm(layer.name, Pass.BACKWARD_WEIGHTS, shape, batch)


def backward_input_gemm(layer: ConvLayerSpec, batch: int) -> WorkloadGemm:
    """W^T (patch x out_ch) times dY (out_ch x pixels)."""
    shape = GemmShape(layer.patch, layer.out_ch, _out_pixels(layer))
    return WorkloadGemm(layer.name, Pass.BACKWARD_INPUTS, shape, batch)


def layer_gemms(layer: ConvLayerSpec, batch: int) -> list[WorkloadGemm]:
    gemms = [forward_gemm(layer, batch), backward_weight_gemm(layer, batch)]
    if not layer.first_layer:
        gemms.append(backward_input_gemm(layer, batch))
    return gemms


def training_workload(network: Iterable[ConvLayerSpec], batch: int) -> list[WorkloadGemm]:
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    out = []
    for layer in network:
        try:
            out.extend(layer_gemms(layer, batch))
        except GeometryError:
            raise
        except ValueError as exc:
            raise GeometryError(f"layer {layer.name!r}: {exc}") from exc
    return out


def total_ops(workload: Iterable[WorkloadGemm]) -> int:
    return sum(g.ops for g in workload)


def ops_by_layer(workload: Iterable[WorkloadGemm]) -> dict[str, int]:
    out: dict[str, int] = {}
    for g in workload:
        out[g.layer] = out.get(g.layer, 0) + g.ops
    return out
