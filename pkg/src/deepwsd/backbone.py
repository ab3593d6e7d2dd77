"""VGG16-shaped five-stage feature extractor and its weight archive format.

The extractor runs the 13-convolution VGG16 trunk and taps the activation
after the last ReLU of each block (relu1_2, relu2_2, relu3_3, relu4_3,
relu5_3), with 2x2 max pooling between blocks.  Weights come from a
portable binary archive; deterministic pseudo-random archives can be
generated for testing without any pretrained model.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import (
    ArchiveCorruptionError,
    ArchiveFormatError,
    ArchiveSchemaError,
    DimensionError,
)
from .tensor_ops import conv2d, maxpool2, relu
from .validation import as_chw

ARCHIVE_MAGIC = b"DWSDW1\x00"

# Per-channel statistics the pretrained backbone was trained with.  The
# pixel-domain stage of the metric is computed on the 0..1 image *before*
# this normalization; only the convolutional trunk sees normalized input.
CHANNEL_MEANS = (0.485, 0.456, 0.406)
CHANNEL_STDS = (0.229, 0.224, 0.225)

# (layer name, in_channels, out_channels) per block.
VGG16_BLOCKS = (
    (("conv1_1", 3, 64), ("conv1_2", 64, 64)),
    (("conv2_1", 64, 128), ("conv2_2", 128, 128)),
    (("conv3_1", 128, 256), ("conv3_2", 256, 256), ("conv3_3", 256, 256)),
    (("conv4_1", 256, 512), ("conv4_2", 512, 512), ("conv4_3", 512, 512)),
    (("conv5_1", 512, 512), ("conv5_2", 512, 512), ("conv5_3", 512, 512)),
)

STAGE_NAMES = ("pixels", "relu1_2", "relu2_2", "relu3_3", "relu4_3", "relu5_3")
STAGE_CHANNELS = (3, 64, 128, 256, 512, 512)

MIN_INPUT_SIDE = 32
CROP_MULTIPLE = 16


def canonical_shapes() -> dict[str, tuple[int, ...]]:
    """The 26 expected tensor names and shapes (13 kernels + 13 biases)."""
    shapes: dict[str, tuple[int, ...]] = {}
    for block in VGG16_BLOCKS:
        for name, in_ch, out_ch in block:
            shapes[f"{name}.weight"] = (out_ch, in_ch, 3, 3)
            shapes[f"{name}.bias"] = (out_ch,)
    return shapes


@dataclass
class WeightArchive:
    """Ordered collection of named float32 tensors for the backbone."""

    tensors: dict[str, np.ndarray]

    def __post_init__(self):
        self.validate_schema()

    def validate_schema(self) -> None:
        for name, shape in canonical_shapes().items():
            tensor = self.tensors.get(name)
            if tensor is None:
                raise ArchiveSchemaError(f"archive is missing tensor {name!r}")
            if tuple(tensor.shape) != shape:
                raise ArchiveSchemaError(
                    f"tensor {name!r} has shape {tuple(tensor.shape)}, expected {shape}"
                )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def save(self, path) -> None:
        payload = bytearray()
        payload += struct.pack("<I", len(self.tensors))
        for name, tensor in self.tensors.items():
            encoded = name.encode("utf-8")
            arr = np.ascontiguousarray(tensor, dtype="<f4")
            payload += struct.pack("<H", len(encoded))
            payload += encoded
            payload += struct.pack("<B", arr.ndim)
            payload += struct.pack(f"<{arr.ndim}I", *arr.shape)
            payload += arr.tobytes()
        crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
        with open(path, "wb") as fh:
            fh.write(ARCHIVE_MAGIC)
            fh.write(payload)
            fh.write(struct.pack("<I", crc))


def load_weights(path) -> WeightArchive:
    """Load and validate a DWSDW1 weight archive.

    Raises ArchiveFormatError on bad magic or truncation,
    ArchiveCorruptionError on CRC mismatch, and ArchiveSchemaError when
    the 26 canonical tensors are not all present with canonical shapes.
    """
    data = Path(path).read_bytes()
    if len(data) < len(ARCHIVE_MAGIC) + 8 or not data.startswith(ARCHIVE_MAGIC):
        raise ArchiveFormatError(f"{path}: not a DWSDW1 weight archive")
    payload = data[len(ARCHIVE_MAGIC) : -4]
    (stored_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise ArchiveCorruptionError(f"{path}: CRC-32 mismatch, archive is corrupted")

    tensors: dict[str, np.ndarray] = {}
    pos = 0

    def take(count: int) -> bytes:
        nonlocal pos
        if pos + count > len(payload):
            raise ArchiveFormatError(f"{path}: truncated archive payload")
        chunk = payload[pos : pos + count]
        pos += count
        return chunk

    (n_entries,) = struct.unpack("<I", take(4))
    for _ in range(n_entries):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim))
        count = int(np.prod(dims)) if ndim else 0
        arr = np.frombuffer(take(4 * count), dtype="<f4").reshape(dims)
        if name in tensors:
            raise ArchiveFormatError(f"{path}: duplicate tensor name {name!r}")
        tensors[name] = arr.astype(np.float32)
    if pos != len(payload):
        raise ArchiveFormatError(f"{path}: {len(payload) - pos} trailing payload bytes")
    return WeightArchive(tensors)


def gen_test_weights(seed: int, path=None) -> WeightArchive:
    """Generate a deterministic pseudo-random archive with canonical shapes.

    Values are drawn from a seeded PRNG and scaled per layer by
    1/sqrt(fan_in) so activations stay in a numerically sane range through
    all five stages.  The same seed always produces a byte-identical file.
    """
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for block in VGG16_BLOCKS:
        for name, in_ch, out_ch in block:
            scale = np.float32(1.0 / np.sqrt(in_ch * 9))
            kernel = rng.standard_normal((out_ch, in_ch, 3, 3), dtype=np.float32)
            bias = rng.standard_normal(out_ch, dtype=np.float32)
            tensors[f"{name}.weight"] = kernel * scale
            tensors[f"{name}.bias"] = bias * scale
    archive = WeightArchive(tensors)
    if path is not None:
        archive.save(path)
    return archive


@dataclass
class FeatureStack:
    """The six per-stage tensors for one image.

    ``stages[0]`` is the center-cropped input image on the 0..1 scale
    (before channel normalization); ``stages[1..5]`` are the five
    post-activation block features.
    """

    stages: tuple[np.ndarray, ...]
    stage_names: tuple[str, ...] = STAGE_NAMES

    def __post_init__(self):
        if len(self.stages) != 6:
            raise DimensionError(f"expected 6 stages, got {len(self.stages)}")


def center_crop_multiple(image: np.ndarray, multiple: int = CROP_MULTIPLE) -> np.ndarray:
    """Center-crop height and width down to the nearest multiple."""
    _, h, w = image.shape
    ch, cw = (h // multiple) * multiple, (w // multiple) * multiple
    if ch < 1 or cw < 1:
        raise DimensionError(f"image {h}x{w} too small to crop to multiple of {multiple}")
    top, left = (h - ch) // 2, (w - cw) // 2
    return image[:, top : top + ch, left : left + cw]


def normalize_image(image: np.ndarray) -> np.ndarray:
    """Apply per-channel mean/std normalization to a 0..1 image."""
    mean = np.asarray(CHANNEL_MEANS, dtype=np.float32)[:, None, None]
    std = np.asarray(CHANNEL_STDS, dtype=np.float32)[:, None, None]
    return (image - mean) / std


def extract_features(image: np.ndarray, weights: WeightArchive) -> FeatureStack:
    """Run the five-stage forward pass over a 3xHxW image with values in 0..1.

    The image is center-cropped to a multiple of 16 per side; the cropped
    result must be at least 32x32.  Stage 0 of the returned stack is the
    cropped 0..1 image itself; stages 1..5 are computed from the
    normalized image.
    """
    image = as_chw(image, "input image")
    if image.shape[0] != 3:
        raise DimensionError(f"expected a 3-channel image, got {image.shape[0]} channels")
    cropped = np.ascontiguousarray(center_crop_multiple(image))
    _, h, w = cropped.shape
    if h < MIN_INPUT_SIDE or w < MIN_INPUT_SIDE:
        raise DimensionError(
            f"image is {h}x{w} after cropping; needs at least "
            f"{MIN_INPUT_SIDE}x{MIN_INPUT_SIDE}"
        )

    stages = [cropped]
    x = normalize_image(cropped)
    for block_index, block in enumerate(VGG16_BLOCKS):
        if block_index > 0:
            x = maxpool2(x)
        for name, _, _ in block:
            x = relu(conv2d(x, weights[f"{name}.weight"], weights[f"{name}.bias"]))
        stages.append(x)
    return FeatureStack(stages=tuple(stages))


class VGG16Features(BaseEstimator, TransformerMixin):
    """Transformer wrapping :func:`extract_features`.

    Parameters
    ----------
    weights_path : str or None
        Path to a DWSDW1 archive.  May be omitted when ``archive`` is
        passed directly.
    archive : WeightArchive or None
        Pre-loaded archive; takes precedence over ``weights_path``.
    """

    def __init__(self, weights_path=None, archive=None):
        self.weights_path = weights_path
        self.archive = archive

    def fit(self, X=None, y=None):
        if self.archive is not None:
            self.archive_ = self.archive
        elif self.weights_path is not None:
            self.archive_ = load_weights(self.weights_path)
        else:
            raise ArchiveSchemaError("VGG16Features needs weights_path or archive")
        return self

    def transform(self, X):
        """Extract a FeatureStack per image.

        ``X`` may be a single (3, H, W) array or a sequence of them; the
        return type matches (one stack or a list of stacks).
        """
        if not hasattr(self, "archive_"):
            self.fit()
        if isinstance(X, np.ndarray) and X.ndim == 3:
            return extract_features(X, self.archive_)
        return [extract_features(img, self.archive_) for img in X]
