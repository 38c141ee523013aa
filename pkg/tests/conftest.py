import numpy as np
import pytest

from segbench.harness import (
    COLORED_DISK_SPEC,
    DEFAULT_SYNTHETIC,
    generate_synthetic_dataset,
    load_dataset,
)
from segbench.raster import BinaryMask, Raster


def disk_mask(size: int, cx: int, cy: int, r: int) -> BinaryMask:
    yy, xx = np.mgrid[0:size, 0:size]
    return BinaryMask(((xx - cx) ** 2 + (yy - cy) ** 2 <= r * r).astype(np.uint8))


def disk_image(size=64, cx=32, cy=32, r=18, fg=200, bg=30, sigma=0.0, seed=0):
    """Bimodal gray disk fixture with known ground truth."""
    gt = disk_mask(size, cx, cy, r)
    img = np.where(gt.labels.astype(bool), float(fg), float(bg))
    if sigma > 0:
        img = img + np.random.default_rng(seed).normal(0, sigma, img.shape)
    return Raster(np.clip(np.rint(img), 0, 255).astype(np.uint8)), gt


@pytest.fixture(scope="session")
def noisy_disk_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds_noisy")
    generate_synthetic_dataset(DEFAULT_SYNTHETIC, out)
    return load_dataset(out)


@pytest.fixture(scope="session")
def noiseless_disk_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds_clean")
    spec = {**DEFAULT_SYNTHETIC, "noise_sigma": 0.0}
    generate_synthetic_dataset(spec, out)
    return load_dataset(out)


@pytest.fixture(scope="session")
def colored_disk_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds_color")
    generate_synthetic_dataset(COLORED_DISK_SPEC, out)
    return load_dataset(out)
