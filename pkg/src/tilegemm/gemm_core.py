"""Matrix tiling layout and the reference/blocked GEMM executors.

Matrices are plain 2-D numpy arrays. The tiled layout stores each tile as a
row-major run; tiles follow each other row-major over the tile grid, and each
run starts on an alignment-granule boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_ALIGNMENT = 64  # bytes


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class LayoutError(ValueError):
    """A tiled buffer does not match its declared geometry."""


@dataclass(frozen=True, order=True)
class GemmShape:
    """C = A @ B with A of r x p and B of p x c."""

    r: int
    p: int
    c: int

    def __post_init__(self):
        if min(self.r, self.p, self.c) < 1:
            raise ValueError(f"GEMM dims must be >= 1, got {self}")

    @classmethod
    def of(cls, a: np.ndarray, b: np.ndarray) -> "GemmShape":
        check_operands(a, b)
        return cls(a.shape[0], a.shape[1], b.shape[1])

    @property
    def ops(self) -> int:
        return 2 * self.r * self.p * self.c


@dataclass(frozen=True, order=True)
class TileConfig:
    """Accelerator geometry: a tr x tc PE mesh fed tp-deep reduction tiles."""

    tr: int
    tc: int
    tp: int

    def __post_init__(self):
        if min(self.tr, self.tc, self.tp) < 1:
            raise ValueError(f"tile dims must be >= 1, got {self}")

    @property
    def pe_count(self) -> int:
        return self.tr * self.tc

    def __str__(self) -> str:
        return f"<{self.tr},{self.tc},{self.tp}>"

    @classmethod
    def parse(cls, text: str) -> "TileConfig":
        parts = [p for p in text.strip().strip("<>()").split(",") if p.strip()]
        if len(parts) != 3:
            raise ValueError(f"expected tr,tc,tp but got {text!r}")
        return cls(*(int(p) for p in parts))


def pad_dim(n: int, t: int) -> int:
    """Smallest multiple of ``t`` that is >= ``n``."""
    return -(-n // t) * t


def _aligned_empty(n: int, dtype, alignment: int) -> np.ndarray:
    dtype = np.dtype(dtype)
    raw = np.zeros(n * dtype.itemsize + alignment, dtype=np.uint8)
    shift = (-raw.ctypes.data) % alignment
    return raw[shift:shift + n * dtype.itemsize].view(dtype)


@dataclass(frozen=True, eq=False)
class TiledMatrix:
    orig_rows: int
    orig_cols: int
    tile_rows: int
    tile_cols: int
    data: np.ndarray
    alignment: int = DEFAULT_ALIGNMENT

    @property
    def padded_rows(self) -> int:
        return pad_dim(self.orig_rows, self.tile_rows)

    @property
    def padded_cols(self) -> int:
        return pad_dim(self.orig_cols, self.tile_cols)

    @property
    def grid(self) -> tuple[int, int]:
        return self.padded_rows // self.tile_rows, self.padded_cols // self.tile_cols

    @property
    def tile_elems(self) -> int:
        return self.tile_rows * self.tile_cols

    @property
    def tile_stride(self) -> int:
        return tile_stride(self.tile_elems, self.data.dtype, self.alignment)

    def tile_offset(self, i: int, j: int) -> int:
        """Element offset of tile (i, j) within ``data``."""
        return (i * self.grid[1] + j) * self.tile_stride

    def tile(self, i: int, j: int) -> np.ndarray:
        """View of tile (i, j) as a tile_rows x tile_cols array."""
        off = self.tile_offset(i, j)
        return self.data[off:off + self.tile_elems].reshape(self.tile_rows, self.tile_cols)

    def validate(self) -> None:
        rows, cols = self.grid
        expected = rows * cols * self.tile_stride
        if self.data.ndim != 1 or self.data.size != expected:
            raise LayoutError(
                f"tiled buffer holds {self.data.size} elements, expected {expected} "
                f"for {self.orig_rows}x{self.orig_cols} in {self.tile_rows}x{self.tile_cols} tiles"
            )


def tile_stride(tile_elems: int, dtype, alignment: int = DEFAULT_ALIGNMENT) -> int:
    """Elements reserved per tile so every tile run starts on an aligned byte offset.

    Equals ``tile_elems`` whenever a tile already spans a whole number of granules.
    """
    itemsize = np.dtype(dtype).itemsize
    if alignment <= 1:
        return tile_elems
    if alignment % itemsize:
        raise ValueError(f"alignment {alignment} is not a multiple of itemsize {itemsize}")
    granule = alignment // itemsize
    return pad_dim(tile_elems, granule)


def tile_matrix(m: np.ndarray, tile_rows: int, tile_cols: int,
                alignment: int = DEFAULT_ALIGNMENT) -> TiledMatrix:
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    rows, cols = m.shape
    pr, pc = pad_dim(rows, tile_rows), pad_dim(cols, tile_cols)
    gr, gc = pr // tile_rows, pc // tile_cols
    stride = tile_stride(tile_rows * tile_cols, m.dtype, alignment)

    padded = np.zeros((pr, pc), dtype=m.dtype)
    padded[:rows, :cols] = m
    # (gr, tr, gc, tc) -> (gr, gc, tr, tc): each tile becomes contiguous
    tiles = padded.reshape(gr, tile_rows, gc, tile_cols).swapaxes(1, 2).reshape(gr * gc, -1)

    data = _aligned_empty(gr * gc * stride, m.dtype, max(alignment, 1))
    data[:] = 0
    data.reshape(gr * gc, stride)[:, :tile_rows * tile_cols] = tiles
    return TiledMatrix(rows, cols, tile_rows, tile_cols, data, alignment)


def untile_matrix(t: TiledMatrix) -> np.ndarray:
    t.validate()
    gr, gc = t.grid
    tiles = t.data.reshape(gr * gc, t.tile_stride)[:, :t.tile_elems]
    padded = tiles.reshape(gr, gc, t.tile_rows, t.tile_cols).swapaxes(1, 2)
    padded = padded.reshape(t.padded_rows, t.padded_cols)
    return padded[:t.orig_rows, :t.orig_cols].copy()


def check_operands(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"operands must be 2-D, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")


def _result_dtype(a: np.ndarray, b: np.ndarray):
    return np.result_type(a.dtype, b.dtype)


def gemm_reference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Ground-truth product: the textbook i/j/k loop, k hoisted outermost.

    Deliberately avoids BLAS so it shares no code path with the tiled executors.
    """
    a, b = np.asarray(a), np.asarray(b)
    check_operands(a, b)
    dtype = _result_dtype(a, b)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=dtype)
    for k in range(a.shape[1]):
        out += np.multiply.outer(a[:, k].astype(dtype), b[k, :].astype(dtype))
    return out


def blocked_gemm(a: np.ndarray, b: np.ndarray, cfg: TileConfig,
                 alignment: int = DEFAULT_ALIGNMENT) -> np.ndarray:
    """Tile-by-tile product with a local accumulator per output tile.

    Operands go through the aligned tiled layout; the result is written back
    tiled and untiled on the way out. Accumulation stays in the input dtype.
    """
    a, b = np.asarray(a), np.asarray(b)
    check_operands(a, b)
    dtype = _result_dtype(a, b)
    shape = GemmShape.of(a, b)
    ta = tile_matrix(a.astype(dtype, copy=False), cfg.tr, cfg.tp, alignment)
    tb = tile_matrix(b.astype(dtype, copy=False), cfg.tp, cfg.tc, alignment)
    tout = tile_matrix(np.zeros((shape.r, shape.c), dtype=dtype), cfg.tr, cfg.tc, alignment)

    row_tiles, col_tiles = tout.grid
    depth_tiles = ta.grid[1]
    for i in range(row_tiles):
        for j in range(col_tiles):
            acc = np.zeros((cfg.tr, cfg.tc), dtype=dtype)
            for k in range(depth_tiles):
                acc += ta.tile(i, k) @ tb.tile(k, j)
            tout.tile(i, j)[...] = acc
    return untile_matrix(tout)


def tile_counts(shape: GemmShape, cfg: TileConfig) -> tuple[int, int, int]:
    """Number of tiles along R, C and P."""
    return (math.ceil(shape.r / cfg.tr), math.ceil(shape.c / cfg.tc),
            math.ceil(shape.p / cfg.tp))
