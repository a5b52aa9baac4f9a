"""Sphere and bump-displaced sphere surfaces.

The bumpy surface is r(u) = 1 + b * d(R^T u) for unit directions u, where d is
a seeded sum of sinusoids and R the object rotation. With b = 0 the analytic
unit sphere is reproduced exactly.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .specs import GeometrySpec

N_WAVES = 24


@dataclass
class SurfaceField:
    directions: np.ndarray
    positions: np.ndarray
    normals: np.ndarray


def _waves(seed):
    rng = np.random.default_rng([seed, 7919])
    k = rng.standard_normal((N_WAVES, 3))
    k /= np.linalg.norm(k, axis=1, keepdims=True)
    freq = rng.uniform(4.0, 10.0, N_WAVES)
    phase = rng.uniform(0.0, 2 * np.pi, N_WAVES)
    amp = rng.uniform(0.5, 1.0, N_WAVES)
    # unit RMS displacement
    amp /= np.sqrt(0.5 * np.sum(amp ** 2))
    return k * freq[:, None], phase, amp


def rotation_matrix(spec: GeometrySpec):
    return Rotation.from_euler("xyz", spec.rotation, degrees=True).as_matrix()


def displacement(spec: GeometrySpec, u_obj):
    """Return (d, grad d) of the noise field at object-frame points."""
    omega, phase, amp = _waves(spec.seed)
    arg = u_obj @ omega.T + phase
    d = np.sin(arg) @ amp
    grad = (np.cos(arg) * amp) @ omega
    return d, grad


def surface_at(spec: GeometrySpec, directions):
    """Surface position and unit normal along world-space unit directions from the centre."""
    u = np.asarray(directions, dtype=np.float64)
    if spec.bumpiness == 0.0 or spec.base_shape == "Sphere":
        return SurfaceField(u, u.copy(), u.copy())
    rot = rotation_matrix(spec)
    u_obj = u @ rot
    d, grad = displacement(spec, u_obj)
    b = spec.bumpiness
    radius = 1.0 + b * d
    tangential = grad - np.sum(grad * u_obj, axis=-1, keepdims=True) * u_obj
    n_obj = radius[:, None] * u_obj - b * tangential
    n_obj /= np.linalg.norm(n_obj, axis=-1, keepdims=True)
    return SurfaceField(u, radius[:, None] * u, n_obj @ rot.T)


def fibonacci_directions(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5 ** 0.5) * i
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def generate_geometry(spec: GeometrySpec, n_points=4096):
    """Sample the surface at a fixed Fibonacci lattice of directions."""
    if spec.bumpiness < 0:
        raise ValueError("bumpiness must be >= 0")
    return surface_at(spec, fibonacci_directions(n_points))


def mean_normal_deviation_deg(field: SurfaceField):
    cosang = np.clip(np.sum(field.normals * field.directions, axis=-1), -1.0, 1.0)
    return float(np.degrees(np.arccos(cosang)).mean())
