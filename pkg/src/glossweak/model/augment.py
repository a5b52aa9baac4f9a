"""Training-time augmentation: flip, crop, shift, rotate, scale, Gaussian and Poisson noise.

Geometric ops are folded into one affine resample applied identically to the
image (bilinear) and the mask (nearest). Noise touches the image only.
"""
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
from scipy.ndimage import affine_transform


@dataclass
class AugmentConfig:
    hflip: float = 0.0            # probability of a horizontal flip
    crop: Optional[int] = None    # square crop side in pixels, resized back to full size
    shift: float = 0.0            # max translation in pixels
    rotate: float = 0.0           # max rotation in degrees
    scale: float = 0.0            # max relative zoom, factor drawn from [1 - scale, 1 + scale]
    gauss_sigma: float = 0.0
    poisson_scale: float = 0.0    # photon count at value 1.0; 0 disables
    seed: int = 0

    def __post_init__(self):
        for name in ("hflip", "shift", "rotate", "scale", "gauss_sigma", "poisson_scale"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or value < 0:
                raise ValueError(f"augment.{name} must be a number >= 0, got {value!r}")
        if self.hflip > 1:
            raise ValueError(f"augment.hflip is a probability, got {self.hflip}")

    @property
    def geometric(self):
        return self.crop is not None or self.shift > 0 or self.rotate > 0 or self.scale > 0

    @classmethod
    def default_training(cls, seed=0):
        return cls(hflip=0.5, crop=56, shift=3.0, rotate=15.0, scale=0.1, gauss_sigma=0.01,
                   poisson_scale=2000.0, seed=seed)

    def to_dict(self):
        return asdict(self)


def hflip(image, mask):
    return image[:, ::-1].copy(), mask[:, ::-1].copy()


def _affine(image, mask, matrix, offset):
    out = np.empty_like(image)
    for ch in range(image.shape[2]):
        out[..., ch] = affine_transform(image[..., ch], matrix, offset, order=1, mode="nearest")
    m = affine_transform(mask.astype(np.uint8), matrix, offset, order=0, mode="nearest").astype(bool)
    return out, m


def augment(image, mask, cfg: AugmentConfig, rng=None):
    """Return an augmented (image, mask) pair; an all-disabled config is the identity."""
    image = np.asarray(image)
    mask = np.asarray(mask, dtype=bool)
    h, w = image.shape[:2]
    if mask.shape != (h, w):
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape[:2]}")
    if cfg.crop is not None and not 1 <= cfg.crop <= min(h, w):
        raise ValueError(f"crop {cfg.crop} does not fit a {w}x{h} image")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    # draw every variate up front so the stream does not depend on which ops are enabled
    u = rng.random(8)

    if u[0] < cfg.hflip:
        image, mask = hflip(image, mask)

    if cfg.geometric:
        angle = np.radians(cfg.rotate * (2.0 * u[1] - 1.0))
        zoom = 1.0 + cfg.scale * (2.0 * u[2] - 1.0)
        shift = cfg.shift * (2.0 * u[3:5] - 1.0)
        centre = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
        side = np.array([h, w], dtype=float)
        if cfg.crop is not None:
            side = np.array([cfg.crop, cfg.crop], dtype=float)
            slack = np.array([h, w]) - cfg.crop
            window = np.floor(u[5:7] * (slack + 1)) + (cfg.crop - 1) / 2.0
        else:
            window = centre
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        matrix = rot @ np.diag(side / np.array([h, w]) / zoom)
        offset = window + shift - matrix @ centre
        image, mask = _affine(image, mask, matrix, offset)

    if cfg.gauss_sigma > 0 or cfg.poisson_scale > 0:
        image = image.astype(np.float64, copy=True)
        if cfg.poisson_scale > 0:
            image = rng.poisson(np.clip(image, 0.0, None) * cfg.poisson_scale) / cfg.poisson_scale
        if cfg.gauss_sigma > 0:
            image = image + rng.normal(0.0, cfg.gauss_sigma, image.shape)
        image = np.clip(image, 0.0, 1.0)
    return image, mask
