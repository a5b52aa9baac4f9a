"""Analytic BRDFs: Disney Principled subset, Ward-Duer, and GGX black glass.

All kernels work on arrays of directions in a local shading frame where the
normal is +z. ``eval_brdf`` is the world-space entry point. Every variant also
provides importance sampling and the matching pdf so the renderer can combine
BSDF and light sampling.
"""
import numpy as np

from .specs import DisneyPrincipled, GgxBlackGlass, WardDuer

MIN_ALPHA = 1e-3
GRAZING_EPS = 1e-8


def dielectric_fresnel(cos_theta, eta):
    """Unpolarized Fresnel reflectance of a dielectric interface (eta >= 1)."""
    c = np.clip(np.abs(cos_theta), 0.0, 1.0)
    g2 = eta * eta - 1.0 + c * c
    g = np.sqrt(np.maximum(g2, 0.0))
    a = (g - c) / np.maximum(g + c, 1e-300)
    b = (c * (g + c) - 1.0) / np.maximum(c * (g - c) + 1.0, 1e-300)
    return 0.5 * a * a * (1.0 + b * b)


def eta_from_f0(f0):
    """Index of refraction whose normal-incidence reflectance is f0."""
    root = np.sqrt(np.clip(f0, 0.0, 0.999))
    return (1.0 + root) / (1.0 - root)


def ggx_d(cos_h, alpha):
    a2 = alpha * alpha
    c2 = cos_h * cos_h
    denom = c2 * (a2 - 1.0) + 1.0
    return a2 / (np.pi * denom * denom)


def smith_g1(cos_v, alpha):
    a2 = alpha * alpha
    c = np.maximum(cos_v, 0.0)
    return 2.0 * c / np.maximum(c + np.sqrt(a2 + (1.0 - a2) * c * c), 1e-300)


def _half(wi, wo):
    h = wi + wo
    return h / np.linalg.norm(h, axis=-1, keepdims=True)


def _disney_alpha(m):
    return max(m.roughness ** 2, MIN_ALPHA)


def _disney_eta(m):
    return eta_from_f0(0.08 * m.specular)


def _eval_disney(m, wi, wo):
    ci, co = wi[..., 2], wo[..., 2]
    alpha = _disney_alpha(m)
    eta = _disney_eta(m)
    base = np.asarray(m.base_color)
    if eta == 1.0:
        return np.broadcast_to(base / np.pi, ci.shape + (3,)).copy()
    h = _half(wi, wo)
    fh = dielectric_fresnel(np.sum(wi * h, axis=-1), eta)
    spec = ggx_d(h[..., 2], alpha) * smith_g1(ci, alpha) * smith_g1(co, alpha) * fh / (4.0 * ci * co)
    diffuse_scale = (1.0 - dielectric_fresnel(ci, eta)) * (1.0 - dielectric_fresnel(co, eta))
    return diffuse_scale[..., None] * base / np.pi + spec[..., None]


def _eval_ggx_glass(m, wi, wo):
    ci, co = wi[..., 2], wo[..., 2]
    alpha = m.micro_roughness
    h = _half(wi, wo)
    fh = dielectric_fresnel(np.sum(wi * h, axis=-1), m.ior)
    spec = ggx_d(h[..., 2], alpha) * smith_g1(ci, alpha) * smith_g1(co, alpha) * fh / (4.0 * ci * co)
    return np.repeat(spec[..., None], 3, axis=-1)


def _eval_ward(m, wi, wo):
    ci, co = wi[..., 2], wo[..., 2]
    h = _half(wi, wo)
    ch = h[..., 2]
    tan2 = (1.0 - ch * ch) / (ch * ch)
    a2 = m.lobe_width ** 2
    spec = m.specular_albedo * np.exp(-tan2 / a2) / (4.0 * np.pi * a2 * ci * co)
    return np.asarray(m.diffuse_albedo) / np.pi + spec[..., None]


_EVAL = {DisneyPrincipled: _eval_disney, WardDuer: _eval_ward, GgxBlackGlass: _eval_ggx_glass}


def eval_local(material, wi, wo):
    """BRDF value (..., 3) for local-frame directions; zero outside the upper hemisphere."""
    wi = np.asarray(wi, dtype=np.float64)
    wo = np.asarray(wo, dtype=np.float64)
    valid = (wi[..., 2] > GRAZING_EPS) & (wo[..., 2] > GRAZING_EPS)
    out = np.zeros(wi.shape[:-1] + (3,))
    if np.any(valid):
        out[valid] = _EVAL[type(material)](material, wi[valid], wo[valid])
    return out


def frame_from_normal(n):
    """Orthonormal tangent frame (t, b) for unit normals n, shape (..., 3)."""
    n = np.asarray(n, dtype=np.float64)
    sign = np.where(n[..., 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + n[..., 2])
    b = n[..., 0] * n[..., 1] * a
    t = np.stack([1.0 + sign * n[..., 0] ** 2 * a, sign * b, -sign * n[..., 0]], axis=-1)
    bt = np.stack([b, sign + n[..., 1] ** 2 * a, -n[..., 1]], axis=-1)
    return t, bt


def to_local(v, t, b, n):
    return np.stack([np.sum(v * t, -1), np.sum(v * b, -1), np.sum(v * n, -1)], axis=-1)


def to_world(v, t, b, n):
    return v[..., 0:1] * t + v[..., 1:2] * b + v[..., 2:3] * n


def eval_brdf(material, wi, wo, n):
    """World-space BRDF value in 1/sr; returns zeros for grazing or below-horizon directions."""
    wi, wo, n = (np.asarray(v, dtype=np.float64) for v in (wi, wo, n))
    wi, wo, n = np.broadcast_arrays(wi, wo, n)
    t, b = frame_from_normal(n)
    out = eval_local(material, to_local(wi, t, b, n), to_local(wo, t, b, n))
    return out


# --- importance sampling -------------------------------------------------------------

def _cosine_sample(u1, u2):
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    return np.stack([r * np.cos(phi), r * np.sin(phi), np.sqrt(np.maximum(1.0 - u1, 0.0))], axis=-1)


def _reflect(wo, h):
    return 2.0 * np.sum(wo * h, axis=-1, keepdims=True) * h - wo


def _ggx_sample_h(alpha, u1, u2):
    phi = 2.0 * np.pi * u2
    cos2 = (1.0 - u1) / (1.0 + (alpha * alpha - 1.0) * u1)
    ct = np.sqrt(cos2)
    st = np.sqrt(np.maximum(1.0 - cos2, 0.0))
    return np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)


def _ward_sample_h(alpha, u1, u2):
    phi = 2.0 * np.pi * u2
    tan_t = alpha * np.sqrt(-np.log(np.maximum(1.0 - u1, 1e-300)))
    ct = 1.0 / np.sqrt(1.0 + tan_t * tan_t)
    st = tan_t * ct
    return np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)


def _lobe_params(material, wo):
    """Specular-lobe selection probability, half-vector sampler and half-vector pdf."""
    if isinstance(material, DisneyPrincipled):
        alpha = _disney_alpha(material)
        eta = _disney_eta(material)
        if eta == 1.0:
            p_spec = np.zeros(wo.shape[:-1])
        else:
            f = dielectric_fresnel(wo[..., 2], eta)
            diff = (1.0 - f) * float(np.mean(material.base_color))
            p_spec = np.clip(f / np.maximum(f + diff, 1e-12), 0.1, 0.9)
        return p_spec, (lambda u1, u2: _ggx_sample_h(alpha, u1, u2)), (lambda ch: ggx_d(ch, alpha) * ch)
    if isinstance(material, WardDuer):
        alpha = material.lobe_width
        ps = material.specular_albedo
        pd = float(np.mean(material.diffuse_albedo))
        p = 0.0 if ps == 0 else float(np.clip(ps / max(ps + pd, 1e-12), 0.1, 0.9))

        def pdf_h(ch):
            tan2 = (1.0 - ch * ch) / (ch * ch)
            return np.exp(-tan2 / alpha ** 2) / (np.pi * alpha ** 2 * ch ** 3)
        return np.full(wo.shape[:-1], p), (lambda u1, u2: _ward_sample_h(alpha, u1, u2)), pdf_h
    alpha = material.micro_roughness
    return np.ones(wo.shape[:-1]), (lambda u1, u2: _ggx_sample_h(alpha, u1, u2)), (lambda ch: ggx_d(ch, alpha) * ch)


def sample_local(material, wo, u):
    """Draw wi from the lobe mixture; u has shape (..., 3). Returns (wi, pdf)."""
    p_spec, sample_h, _ = _lobe_params(material, wo)
    choose_spec = u[..., 0] < p_spec
    wi_d = _cosine_sample(u[..., 1], u[..., 2])
    h = sample_h(u[..., 1], u[..., 2])
    wi_s = _reflect(wo, h)
    wi = np.where(choose_spec[..., None], wi_s, wi_d)
    return wi, pdf_local(material, wi, wo)


def pdf_local(material, wi, wo):
    p_spec, _, pdf_h = _lobe_params(material, wo)
    ci = wi[..., 2]
    pdf_d = np.maximum(ci, 0.0) / np.pi
    h = wi + wo
    norm = np.linalg.norm(h, axis=-1, keepdims=True)
    h = h / np.maximum(norm, 1e-300)
    ch = h[..., 2]
    ok = (ch > 0) & (ci > GRAZING_EPS)
    pdf_s = np.zeros_like(ci)
    pdf_s[ok] = pdf_h(ch[ok]) / (4.0 * np.abs(np.sum(wo[ok] * h[ok], axis=-1)))
    return np.where(ci > GRAZING_EPS, p_spec * pdf_s + (1.0 - p_spec) * pdf_d, 0.0)


def directional_albedo(material, theta_o_deg, n_samples=100_000, seed=0):
    """Monte-Carlo directional-hemispherical reflectance (RGB) for outgoing angle theta_o."""
    rng = np.random.default_rng(seed)
    t = np.radians(theta_o_deg)
    wo = np.broadcast_to(np.array([np.sin(t), 0.0, np.cos(t)]), (n_samples, 3))
    wi, pdf = sample_local(material, wo, rng.random((n_samples, 3)))
    f = eval_local(material, wi, wo)
    ok = pdf > 0
    contrib = np.zeros((n_samples, 3))
    contrib[ok] = f[ok] * wi[ok, 2:3] / pdf[ok, None]
    return contrib.mean(axis=0)
