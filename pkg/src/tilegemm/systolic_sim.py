"""Functional and cycle-counting model of the Tr x Tc PE mesh.

Numbers are computed exactly, with each PE keeping q+1 interleaved partial
sums so a q-cycle multiplier can accept a new operand pair every cycle.
Cycles are accounted per tile-pair pass (pipeline fill/drain plus streaming)
and per output tile (final reduction of the interleaved partials).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gemm_core import (
    DEFAULT_ALIGNMENT,
    GemmShape,
    TileConfig,
    tile_matrix,
    untile_matrix,
)


@dataclass
class PeState:
    """One processing element: q+1 interleaved partials plus the final result."""

    q: int
    cache: list = field(default_factory=list)
    result: object = 0

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if not self.cache:
            self.cache = [0] * (self.q + 1)

    def mac(self, step: int, product) -> None:
        self.cache[step % (self.q + 1)] += product

    def reduce(self):
        total = self.cache[0]
        for partial in self.cache[1:]:
            total = total + partial
        self.result = total
        return total


def interleaved_accumulate(products: Sequence, q: int):
    """Sum ``products`` round-robin over q+1 partials, then reduce the partials."""
    pe = PeState(q)
    for step, x in enumerate(products):
        pe.mac(step, x)
    return pe.reduce()


@dataclass
class SimResult:
    output: np.ndarray
    cycles: int
    tiles_processed: int
    pass_cycles: list[int] = field(default_factory=list, repr=False)


def pass_cycles(cfg: TileConfig) -> int:
    """Cycles for one tile-pair pass: tp streaming steps plus mesh fill/drain."""
    return cfg.tp + cfg.tc + cfg.tr - 2


def reduction_cycles(q: int) -> int:
    """Cycles to fold the q+1 interleaved partials of an output tile."""
    return (q + 1) ** 2


class SystolicArray:
    """A tr x tc mesh with buffers A (tr x tp), B (tp x tc) and C (tr x tc x (q+1))."""

    def __init__(self, cfg: TileConfig, q: int, dtype=np.float32):
        if q < 0:
            raise ValueError("q must be >= 0")
        self.cfg = cfg
        self.q = q
        self.dtype = np.dtype(dtype)
        self.buffer_c = np.zeros((q + 1, cfg.tr, cfg.tc), dtype=self.dtype)
        self.cycles = 0
        self._step = 0

    def start_tile(self) -> None:
        self.buffer_c[...] = 0
        self._step = 0

    def stream_pass(self, buffer_a: np.ndarray, buffer_b: np.ndarray) -> int:
        """Stream one A/B tile pair through the mesh; returns cycles spent."""
        tp = self.cfg.tp
        lanes = self.q + 1
        # reduction step s of this output tile lands in partial s mod (q+1)
        first = self._step % lanes
        slots = (np.arange(tp) + first) % lanes
        products = buffer_a[:, :, None] * buffer_b[None, :, :]  # (tr, tp, tc)
        for lane in np.unique(slots):
            self.buffer_c[lane] += products[:, slots == lane, :].sum(axis=1, dtype=self.dtype)
        self._step += tp
        spent = pass_cycles(self.cfg)
        self.cycles += spent
        return spent

    def finish_tile(self) -> np.ndarray:
        out = self.buffer_c[0].copy()
        for lane in range(1, self.q + 1):
            out += self.buffer_c[lane]
        self.cycles += reduction_cycles(self.q)
        return out


def simulate_gemm(a: np.ndarray, b: np.ndarray, cfg: TileConfig, q: int,
                  alignment: int = DEFAULT_ALIGNMENT) -> SimResult:
    a, b = np.asarray(a), np.asarray(b)
    shape = GemmShape.of(a, b)
    dtype = np.result_type(a.dtype, b.dtype)
    ta = tile_matrix(a.astype(dtype, copy=False), cfg.tr, cfg.tp, alignment)
    tb = tile_matrix(b.astype(dtype, copy=False), cfg.tp, cfg.tc, alignment)
    tout = tile_matrix(np.zeros((shape.r, shape.c), dtype=dtype), cfg.tr, cfg.tc, alignment)

    mesh = SystolicArray(cfg, q, dtype)
    passes = []
    row_tiles, col_tiles = tout.grid
    for i in range(row_tiles):
        for j in range(col_tiles):
            mesh.start_tile()
            for k in range(ta.grid[1]):
                passes.append(mesh.stream_pass(ta.tile(i, k), tb.tile(k, j)))
            tout.tile(i, j)[...] = mesh.finish_tile()
    return SimResult(untile_matrix(tout), mesh.cycles, row_tiles * col_tiles, passes)
