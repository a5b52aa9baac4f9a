"""Synthetic perceived-gloss ground truth and simulated raters.

Human ratings are replaced by a fixed smooth function of the material's lobe
sharpness and specular strength, nudged by illumination frequency and surface
bumpiness, plus seeded per-rater noise and 7-point quantization. Disney and
Ward-Duer materials are put on a common footing through (alpha, F0):
Disney alpha = r**2, F0 = 0.08 s; Ward alpha = lobe width, F0 = specular albedo.

The default constants put the mean ground truth over the Disney roughness/specular
grid level with the mean BSDF weak label on that grid (3.5 on the 7-point scale), so
the weak label is a noisy but not systematically shifted reading of the stand-in
observer.
"""
from dataclasses import dataclass, asdict

import numpy as np

from .stimulus.brdf import MIN_ALPHA
from .stimulus.specs import BUMP_LEVELS, DisneyPrincipled, SceneSpec, WardDuer


@dataclass
class GroundTruthConfig:
    sharpness_alpha: float = 0.05
    strength_f0: float = 0.1
    strength_power: float = 1.0
    floor: float = 0.0
    freq_gain: float = 0.05
    bump_gain: float = 0.02
    rater_noise: float = 0.6
    n_raters: int = 5

    def to_dict(self):
        return asdict(self)


def lobe_descriptors(material):
    """(alpha, F0) of the specular lobe."""
    if isinstance(material, DisneyPrincipled):
        return max(material.roughness ** 2, MIN_ALPHA), 0.08 * material.specular
    if isinstance(material, WardDuer):
        return material.lobe_width, material.specular_albedo
    raise TypeError(f"no gloss descriptors for {type(material).__name__}")


def bump_level(bumpiness):
    """Nearest discrete bump level (0..5) for a displacement amplitude."""
    levels = sorted(BUMP_LEVELS.items(), key=lambda kv: abs(kv[1] - bumpiness))
    return levels[0][0]


def gloss_value(alpha, f0, freq_level, bump, cfg: GroundTruthConfig):
    sharp = np.exp(-alpha / cfg.sharpness_alpha)
    strength = 1.0 - np.exp(-f0 / cfg.strength_f0)
    u = cfg.floor + (1.0 - cfg.floor) * strength ** cfg.strength_power * (0.3 + 0.7 * sharp)
    u += cfg.freq_gain * (freq_level - 3) / 2.0 * sharp - cfg.bump_gain * bump / 5.0
    return float(1.0 + 6.0 * np.clip(u, 0.0, 1.0))


def ground_truth_gloss(scene: SceneSpec, cfg: GroundTruthConfig | None = None):
    cfg = cfg or GroundTruthConfig()
    alpha, f0 = lobe_descriptors(scene.material)
    return gloss_value(alpha, f0, scene.illumination.effective_level, bump_level(scene.geometry.bumpiness), cfg)


def simulate_ratings(gt, rng, n_raters, noise):
    """Integer ratings in [1, 7] from independent Gaussian rater noise."""
    raw = gt + rng.normal(0.0, noise, n_raters)
    return [int(v) for v in np.clip(np.rint(raw), 1, 7)]
