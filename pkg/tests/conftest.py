import numpy as np
import pytest
from scipy import ndimage

from deepwsd import gen_test_weights


def make_natural_image(seed: int, size: int = 64) -> np.ndarray:
    """Synthesize a natural-content RGB test image in 0..1.

    Smooth low-frequency structure plus mild texture, so patch
    distributions are neither constant nor pure noise.
    """
    rng = np.random.default_rng(seed)
    blobs = ndimage.gaussian_filter(rng.random((3, size, size)), sigma=(0, size / 10, size / 10))
    texture = ndimage.gaussian_filter(rng.random((3, size, size)), sigma=(0, 1.0, 1.0))

    def stretch(x):
        lo, hi = x.min(), x.max()
        return (x - lo) / (hi - lo) if hi > lo else np.zeros_like(x)

    img = 0.7 * stretch(blobs) + 0.3 * stretch(texture)
    return np.clip(0.05 + 0.9 * img, 0.0, 1.0).astype(np.float32)


def add_gaussian_noise(img: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    noisy = img + rng.normal(0.0, sigma, img.shape).astype(np.float32)
    return np.clip(noisy, 0.0, 1.0).astype(np.float32)


@pytest.fixture(scope="session")
def seed7_archive():
    return gen_test_weights(7)


@pytest.fixture(scope="session")
def seed7_archive_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("weights") / "seed7.dwsdw"
    gen_test_weights(7, path)
    return path


@pytest.fixture(scope="session")
def natural_images():
    return [make_natural_image(seed) for seed in (11, 23, 37, 51, 68)]
