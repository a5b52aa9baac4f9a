"""Direct-lighting ray tracer for a single (bumpy) sphere under an environment map.

Each camera sample is shaded with one environment-importance sample and one
BSDF sample, combined with the balance heuristic. There is no visibility test
and no interreflection.
"""
import numpy as np

from . import brdf
from .environment import EnvironmentSampler, generate_environment
from .geometry import surface_at
from .specs import ImageBuffer, SceneSpec

MIN_VIEW_COS = 0.05


def camera_rays(scene: SceneSpec, jitter):
    """Ray origin and unit directions for pixel-space offsets ``jitter`` (..., H, W, 2)."""
    cam, rs = scene.camera, scene.render
    h, w = rs.height, rs.width
    tan_half = np.tan(np.radians(cam.fov) / 2.0)
    aspect = w / h
    col = np.arange(w)[None, :] + jitter[..., 0]
    row = np.arange(h)[:, None] + jitter[..., 1]
    x = (2.0 * col / w - 1.0) * tan_half * aspect
    y = (1.0 - 2.0 * row / h) * tan_half
    d = np.stack([x, y, -np.ones_like(x)], axis=-1)
    yaw = np.radians(cam.yaw)
    c, s = np.cos(yaw), np.sin(yaw)
    d = np.stack([c * d[..., 0] + s * d[..., 2], d[..., 1], -s * d[..., 0] + c * d[..., 2]], axis=-1)
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    origin = np.array([0.0, 0.0, cam.distance])
    return origin, d


def intersect_unit_sphere(origin, d):
    """Return (hit mask, distance) for rays against the unit sphere at the origin."""
    b = d @ origin
    c = origin @ origin - 1.0
    disc = b * b - c
    hit = disc >= 0.0
    t = -b - np.sqrt(np.maximum(disc, 0.0))
    hit &= t > 0.0
    return hit, t


def shade(material, normals, wo, env_sampler, u_light, u_bsdf):
    """Outgoing radiance (M, 3) from MIS direct lighting at surface points."""
    cos_v = np.sum(normals * wo, axis=-1, keepdims=True)
    # keep shading normals in the visible hemisphere near bumpy silhouettes
    bend = np.maximum(MIN_VIEW_COS - cos_v, 0.0)
    n = normals + bend * wo
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    t, b = brdf.frame_from_normal(n)
    wo_l = brdf.to_local(wo, t, b, n)
    out = np.zeros(wo.shape)

    wl, pdf_l = env_sampler.sample(u_light)
    wl_l = brdf.to_local(wl, t, b, n)
    f = brdf.eval_local(material, wl_l, wo_l)
    pdf_b = brdf.pdf_local(material, wl_l, wo_l)
    ok = (wl_l[:, 2] > 0) & (pdf_l > 0)
    w_l = pdf_l[ok] / (pdf_l[ok] + pdf_b[ok])
    out[ok] += f[ok] * env_sampler.radiance(wl[ok]) * (wl_l[ok, 2] * w_l / pdf_l[ok])[:, None]

    wb_l, pdf_b = brdf.sample_local(material, wo_l, u_bsdf)
    ok = (wb_l[:, 2] > 0) & (pdf_b > 0)
    wb = brdf.to_world(wb_l[ok], t[ok], b[ok], n[ok])
    f = brdf.eval_local(material, wb_l[ok], wo_l[ok])
    pdf_l = env_sampler.pdf(wb)
    w_b = pdf_b[ok] / (pdf_b[ok] + pdf_l)
    out[ok] += f * env_sampler.radiance(wb) * (wb_l[ok, 2] * w_b / pdf_b[ok])[:, None]
    return out


def render(scene: SceneSpec, env=None) -> ImageBuffer:
    """Render linear HDR radiance plus the pixel-centre foreground mask."""
    rs = scene.render
    if rs.samples_per_pixel < 1:
        raise ValueError("samples_per_pixel must be >= 1")
    if env is None:
        env = generate_environment(scene.illumination)
    sampler = EnvironmentSampler(env)
    rng = np.random.default_rng([rs.seed, 0x5EED])
    h, w, spp = rs.height, rs.width, rs.samples_per_pixel

    origin, centre_dirs = camera_rays(scene, np.full((h, w, 2), 0.5))
    mask, _ = intersect_unit_sphere(origin, centre_dirs)

    jitter = rng.random((spp, h, w, 2))
    u_light = rng.random((spp, h, w, 3))
    u_bsdf = rng.random((spp, h, w, 3))
    origin, dirs = camera_rays(scene, jitter)
    hit, dist = intersect_unit_sphere(origin, dirs)

    radiance = np.zeros((spp, h, w, 3))
    radiance[~hit] = sampler.radiance(dirs[~hit])
    if np.any(hit):
        points = origin + dist[hit][:, None] * dirs[hit]
        points /= np.linalg.norm(points, axis=-1, keepdims=True)
        field = surface_at(scene.geometry, points)
        radiance[hit] = shade(scene.material, field.normals, -dirs[hit], sampler, u_light[hit], u_bsdf[hit])
    return ImageBuffer(pixels=radiance.mean(axis=0), mask=mask)
