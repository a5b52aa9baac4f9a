import numpy as np


def tone_map(hdr, exposure=1.0, gamma=2.2):
    """Global gamma-exposure operator: clamp((e * c) ** (1 / gamma), 0, 1)."""
    if exposure <= 0 or gamma <= 0:
        raise ValueError("exposure and gamma must be > 0")
    pixels = getattr(hdr, "pixels", hdr)
    c = np.maximum(np.asarray(pixels, dtype=np.float64), 0.0)
    return np.clip((exposure * c) ** (1.0 / gamma), 0.0, 1.0)
