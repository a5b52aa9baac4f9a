"""Procedural lat-long environment maps and their frequency content.

Convention: row i covers polar angle theta (from +y, up) in ((i)pi/H, (i+1)pi/H);
column j covers azimuth phi in (2 pi j/W, 2 pi (j+1)/W). Direction
(sin t cos p, cos t, sin t sin p).
"""
from functools import lru_cache

import numpy as np

from .specs import IlluminationSpec

# (lobe concentration kappa, lobe count) per frequency level
_LEVELS = {1: (2.0, 3), 2: (8.0, 6), 3: (30.0, 10), 4: (120.0, 16), 5: (500.0, 24)}
AMBIENT = 0.15
LOBE_ENERGY = 4.0 * np.pi * 0.6


def pixel_directions(width, height):
    theta = (np.arange(height) + 0.5) * np.pi / height
    phi = (np.arange(width) + 0.5) * 2.0 * np.pi / width
    t, p = np.meshgrid(theta, phi, indexing="ij")
    return np.stack([np.sin(t) * np.cos(p), np.cos(t), np.sin(t) * np.sin(p)], axis=-1)


def direction_to_pixel(d, width, height):
    theta = np.arccos(np.clip(d[..., 1], -1.0, 1.0))
    phi = np.mod(np.arctan2(d[..., 2], d[..., 0]), 2.0 * np.pi)
    row = np.minimum((theta / np.pi * height).astype(np.int64), height - 1)
    col = np.minimum((phi / (2.0 * np.pi) * width).astype(np.int64), width - 1)
    return row, col


def _procedural(level, seed, width, height):
    kappa, count = _LEVELS[level]
    rng = np.random.default_rng([seed, level, 104729])
    y = rng.uniform(-0.2, 1.0, count)
    phi = rng.uniform(0.0, 2.0 * np.pi, count)
    r = np.sqrt(1.0 - y * y)
    centres = np.stack([r * np.cos(phi), y, r * np.sin(phi)], axis=-1)
    weights = rng.dirichlet(np.ones(count))
    tints = 1.0 + 0.25 * rng.uniform(-1.0, 1.0, (count, 3))
    # exp(kappa (cos - 1)) integrates to 2 pi (1 - exp(-2 kappa)) / kappa over the sphere
    norm = kappa / (2.0 * np.pi * (1.0 - np.exp(-2.0 * kappa)))
    dirs = pixel_directions(width, height)
    env = np.full((height, width, 3), AMBIENT)
    env += 0.1 * np.maximum(dirs[..., 1:2], 0.0)
    cosang = dirs @ centres.T
    lobes = np.exp(kappa * (cosang - 1.0)) * (weights * norm * LOBE_ENERGY)
    env += lobes @ tints
    return env


def gaussian_kernel(size):
    """Normalized 1-D Gaussian, sigma = size / 6, sampled at integer offsets within +-size/2."""
    radius = size // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / (size / 6.0)) ** 2)
    return k / k.sum()


def blur_latlong(env, size):
    """Separable Gaussian blur; longitude wraps, latitude reflects across the poles."""
    h, w = env.shape[:2]
    k = gaussian_kernel(size)
    r = len(k) // 2
    if size > min(w, h):
        raise ValueError(f"kernel of size {size} is larger than the {w}x{h} map")
    cols = (np.arange(-r, w + r)) % w
    padded = env[:, cols]
    out = sum(k[i] * padded[:, i:i + w] for i in range(len(k)))
    # across a pole, row -1-i is row i seen from the opposite azimuth
    half = np.roll(out, w // 2, axis=1)
    top = half[:r][::-1]
    bottom = half[h - r:][::-1]
    padded = np.concatenate([top, out, bottom], axis=0)
    return sum(k[i] * padded[i:i + h] for i in range(len(k)))


@lru_cache(maxsize=64)
def _generate(spec: IlluminationSpec):
    w, h = spec.resolution
    if spec.kind == "Procedural":
        env = _procedural(spec.freq_level, spec.seed, w, h)
    else:
        env = blur_latlong(_generate(spec.source), spec.kernel_size)
    env.setflags(write=False)
    return env


def generate_environment(spec: IlluminationSpec):
    """Lat-long radiance map (H, W, 3); pure function of its IlluminationSpec."""
    return _generate(spec).copy()


def luminance(rgb):
    return rgb @ np.array([0.2126, 0.7152, 0.0722])


def high_freq_content(env, cutoff=0.1):
    """Fraction of non-DC spectral energy above a radial frequency cutoff (cycles/pixel).

    The spectrum is taken of the luminance map extended by its latitude mirror
    image, which is periodic in both axes.
    """
    env = np.asarray(env, dtype=np.float64)
    if env.size == 0:
        raise ValueError("empty map")
    lum = luminance(env) if env.ndim == 3 else env
    # mirror in latitude so the poles do not wrap into each other
    lum = np.concatenate([lum, lum[::-1]], axis=0)
    power = np.abs(np.fft.fft2(lum)) ** 2
    fy = np.fft.fftfreq(lum.shape[0])[:, None]
    fx = np.fft.fftfreq(lum.shape[1])[None, :]
    radial = np.sqrt(fx ** 2 + fy ** 2)
    dc = power[0, 0]
    power[0, 0] = 0.0
    total = power.sum()
    if total <= 1e-20 * max(dc, 1e-300):
        return 0.0
    return float(power[radial > cutoff].sum() / total)


class EnvironmentSampler:
    """Piecewise-constant importance sampling of a lat-long map by luminance * sin(theta)."""

    def __init__(self, env):
        self.env = env
        h, w = env.shape[:2]
        self.h, self.w = h, w
        theta = (np.arange(h) + 0.5) * np.pi / h
        weight = (luminance(env) + 1e-3 * luminance(env).mean()) * np.sin(theta)[:, None]
        self.pmf = (weight / weight.sum()).ravel()
        self.cdf = np.cumsum(self.pmf)
        self.cdf[-1] = 1.0
        self.pixel_area = (np.pi / h) * (2.0 * np.pi / w)

    def radiance(self, d):
        row, col = direction_to_pixel(d, self.w, self.h)
        return self.env[row, col]

    def pdf(self, d):
        row, col = direction_to_pixel(d, self.w, self.h)
        sin_t = np.sqrt(np.maximum(1.0 - d[..., 1] ** 2, 1e-12))
        return self.pmf[row * self.w + col] / (self.pixel_area * sin_t)

    def sample(self, u):
        idx = np.minimum(np.searchsorted(self.cdf, u[..., 0], side="right"), self.cdf.size - 1)
        row, col = np.divmod(idx, self.w)
        theta = (row + u[..., 1]) * np.pi / self.h
        phi = (col + u[..., 2]) * 2.0 * np.pi / self.w
        d = np.stack([np.sin(theta) * np.cos(phi), np.cos(theta), np.sin(theta) * np.sin(phi)], axis=-1)
        return d, self.pmf[idx] / (self.pixel_area * np.maximum(np.sin(theta), 1e-6))
