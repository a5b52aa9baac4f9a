"""Virtual glossmeter: mirror-direction radiance of a flat sample.

A directional source of unit irradiance (measured perpendicular to the beam)
illuminates a flat surface at ``incidence_deg`` from the normal; the reading
is the radiance leaving along the mirror direction, f(wi, wo) * cos(theta_i).
Only ratios of readings are used downstream, so the source power is arbitrary.
"""
import numpy as np

from .brdf import eval_local
from .environment import luminance


def radiance_meter(material, incidence_deg=20.0):
    if not 0.0 < incidence_deg < 90.0:
        raise ValueError(f"incidence must lie in (0, 90) degrees, got {incidence_deg}")
    t = np.radians(incidence_deg)
    wi = np.array([np.sin(t), 0.0, np.cos(t)])
    wo = np.array([-np.sin(t), 0.0, np.cos(t)])
    rgb = eval_local(material, wi[None], wo[None])[0] * np.cos(t)
    return float(luminance(rgb))
