"""Dense float32 tensor kernels: 3x3 convolution, ReLU, 2x2 max pooling.

Only the three layer types the VGG-style backbone needs are implemented.
All operations are pure functions over (channels, height, width) float32
arrays and use a fixed, input-order-deterministic accumulation so repeated
runs produce bit-identical outputs.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .exceptions import DimensionError, TensorFormatError, UnsupportedShapeError
from .validation import as_chw

TENSOR_MAGIC = b"DWTEN1"


# Column-buffer budget for the strip-wise convolution.  Strips keep the
# patch matrix and the output slab cache-resident, which roughly triples
# GEMM throughput on the large early layers.
_COL_BUFFER_BYTES = 8 << 20


def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 convolution, stride 1, zero padding 1 (spatial size preserved).

    Parameters
    ----------
    x : (C, H, W) float32
    kernels : (O, C, 3, 3) float32
    bias : (O,) float32

    Returns
    -------
    (O, H, W) float32

    Out-of-range input positions are treated as zero.  Computed as one
    (O, 9C) x (9C, rows*W) float32 GEMM per row strip, in a fixed strip
    and tap order, which matches the naive triple-loop definition to
    within float32 rounding and is bit-reproducible across runs.
    """
    x = as_chw(x, "conv2d input")
    kernels = np.asarray(kernels, dtype=np.float32)
    bias = np.asarray(bias, dtype=np.float32).ravel()
    if kernels.ndim != 4:
        raise UnsupportedShapeError(f"kernels must be rank-4, got shape {kernels.shape}")
    out_ch, in_ch, kh, kw = kernels.shape
    if (kh, kw) != (3, 3):
        raise UnsupportedShapeError(f"only 3x3 kernels are supported, got {kh}x{kw}")
    if in_ch != x.shape[0]:
        raise DimensionError(
            f"kernel expects {in_ch} input channels, tensor has {x.shape[0]}"
        )
    if bias.shape != (out_ch,):
        raise DimensionError(f"bias must have shape ({out_ch},), got {bias.shape}")

    c, h, w = x.shape
    padded = np.zeros((c, h + 2, w + 2), dtype=np.float32)
    padded[:, 1 : h + 1, 1 : w + 1] = x

    # Kernel matrix columns follow the (channel, dy, dx) order of the
    # reshaped kernels, so the column buffer must use the same layout.
    kmat = np.ascontiguousarray(kernels.reshape(out_ch, c * 9))
    strip = max(1, min(h, _COL_BUFFER_BYTES // (4 * 9 * c * w)))

    out = np.empty((out_ch, h * w), dtype=np.float32)
    out2d = out  # (O, H*W) view of the flat output
    colbuf = np.empty((c, 3, 3, strip * w), dtype=np.float32)
    for y0 in range(0, h, strip):
        rows = min(strip, h - y0)
        if rows == strip:
            col = colbuf
        else:
            col = np.empty((c, 3, 3, rows * w), dtype=np.float32)
        for dy in range(3):
            for dx in range(3):
                col[:, dy, dx, :] = padded[
                    :, y0 + dy : y0 + dy + rows, dx : dx + w
                ].reshape(c, rows * w)
        slab = kmat @ col.reshape(c * 9, rows * w)
        slab += bias[:, None]
        out2d[:, y0 * w : (y0 + rows) * w] = slab
    return out.reshape(out_ch, h, w)


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x); shape preserved."""
    return np.maximum(as_chw(x, "relu input"), np.float32(0.0))


def maxpool2(x: np.ndarray) -> np.ndarray:
    """2x2 max pooling with stride 2; spatial dimensions halve.

    Raises DimensionError when height or width is odd.
    """
    x = as_chw(x, "maxpool2 input")
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def write_tensor(path, array: np.ndarray) -> None:
    """Write ``array`` to ``path`` in the DWTEN1 raw tensor format.

    Layout: magic ``DWTEN1``, u8 ndim, ndim little-endian u32 dims,
    row-major little-endian float32 data.
    """
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim < 1 or arr.ndim > 255:
        raise DimensionError(f"cannot serialize rank-{arr.ndim} tensor")
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<B", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a DWTEN1 tensor file back into a float32 array."""
    data = Path(path).read_bytes()
    if len(data) < len(TENSOR_MAGIC) + 1 or not data.startswith(TENSOR_MAGIC):
        raise TensorFormatError(f"{path}: not a DWTEN1 tensor file")
    pos = len(TENSOR_MAGIC)
    ndim = data[pos]
    pos += 1
    if len(data) < pos + 4 * ndim:
        raise TensorFormatError(f"{path}: truncated dimension header")
    dims = struct.unpack_from(f"<{ndim}I", data, pos)
    pos += 4 * ndim
    count = int(np.prod(dims)) if ndim else 0
    if len(data) != pos + 4 * count:
        raise TensorFormatError(
            f"{path}: payload size {len(data) - pos} does not match dims {dims}"
        )
    arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos)
    return arr.reshape(dims).astype(np.float32)
