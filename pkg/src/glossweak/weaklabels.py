"""Automatic weak gloss labels.

Three cheap proxies for perceived gloss, each mapped onto the 7-point scale:

* ``bsdf``       floor(ls * s + beta * (alpha - lr * r**2)) from the Disney roughness/specular pair
* ``imagestats`` skewness of the masked luminance histogram under one fixed reference
                 environment, shared by every illumination of a (geometry, material) pair
* ``industry``   log(Rd + 1) / log(Rg + 1), glossmeter reading against a black-glass reference
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .labels import WEAK, WEAK_KINDS, LabelRecord
from .stimulus.environment import luminance
from .stimulus.meter import radiance_meter
from .stimulus.render import render
from .stimulus.specs import DisneyPrincipled, GgxBlackGlass, IlluminationSpec, SceneSpec, material_from_dict
from .training.manifest import DatasetManifest

log = logging.getLogger(__name__)

ROUGHNESS_RANGE = (0.0, 0.5)
SPECULAR_RANGE = (0.1, 5.0)
GRID_ROUGHNESS = tuple(round(0.05 * i, 2) for i in range(11))
GRID_SPECULAR = tuple(round(0.1 + 0.5 * i, 2) for i in range(10)) + (5.0,)
MIN_FOREGROUND = 100


class DegenerateInputError(ValueError):
    """Input has no spread (or no reflectance) to measure."""


@dataclass
class WeakLabelConstants:
    lambda_s: float = 0.95
    lambda_r: float = 1.2
    beta: float = 4.0
    alpha: float = 0.5
    industry_incidence: float = 20.0
    glass_ior: float = 1.567
    glass_roughness: float = 0.001
    skew_on_linear_hdr: bool = True
    # reference lighting for skewness: the broadest level whose lobes are compact enough to
    # produce highlights; levels 1-2 light the sphere like a soft sky and skew falls with gloss
    low_freq_level: int = 3
    low_freq_seed: int = 0

    @property
    def black_glass(self):
        return GgxBlackGlass(self.glass_ior, self.glass_roughness)


def _in_range(value, bounds, tol=1e-9):
    return bounds[0] - tol <= value <= bounds[1] + tol


def bsdf_raw(r, s, c: WeakLabelConstants):
    return c.lambda_s * s + c.beta * (c.alpha - c.lambda_r * r * r)


def weak_label_bsdf(r, s, constants: WeakLabelConstants | None = None) -> LabelRecord:
    c = constants or WeakLabelConstants()
    if not (_in_range(r, ROUGHNESS_RANGE) and _in_range(s, SPECULAR_RANGE)):
        raise ValueError(f"(r={r}, s={s}) lies outside the labelling grid r in {ROUGHNESS_RANGE}, s in {SPECULAR_RANGE}")
    value = min(max(math.floor(bsdf_raw(r, s, c)), 1), 7)
    prov = f"bsdf r={r:g} s={s:g} ls={c.lambda_s:g} lr={c.lambda_r:g} beta={c.beta:g} alpha={c.alpha:g}"
    return LabelRecord(float(value), WEAK, "bsdf", prov)


def skewness(samples):
    """Population skewness m3 / m2**1.5 (both moments with divisor N)."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 3:
        raise ValueError(f"skewness needs at least 3 samples, got {x.size}")
    if np.all(x == x[0]):
        raise DegenerateInputError("constant input has zero standard deviation")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 <= 0.0:
        raise DegenerateInputError("zero standard deviation")
    return float(np.mean(d * d * d) / m2 ** 1.5)


@dataclass
class SkewCalibration:
    """Monotone piecewise-linear map from raw skewness to [1, 7].

    ``knots`` are the skewness values sent to 1, 1 + 6/7, ..., 7; when fitted they
    are the octile-spaced quantiles of a reference distribution, so the reference
    spreads evenly over the scale. Values beyond the end knots clamp.
    """
    knots: list = field(default_factory=lambda: [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5])

    @classmethod
    def fit(cls, raw_values):
        raw = np.asarray(raw_values, dtype=np.float64)
        if raw.size < 2:
            raise ValueError("need at least two skewness values to calibrate")
        q = np.quantile(raw, np.linspace(0.0, 1.0, 8))
        for i in range(1, len(q)):
            q[i] = max(q[i], q[i - 1] + 1e-9)
        return cls([float(v) for v in q])

    def __call__(self, raw):
        return float(np.interp(raw, self.knots, np.linspace(1.0, 7.0, len(self.knots))))


@dataclass
class IndustryCalibration:
    """Min-max map of the raw log-ratio onto [1, 7], rounded to one decimal."""
    lo: float = 0.0
    hi: float = 1.0

    @classmethod
    def fit(cls, raw_values):
        raw = np.asarray(raw_values, dtype=np.float64)
        if raw.size < 2 or raw.max() <= raw.min():
            raise DegenerateInputError("industry calibration needs a non-constant set of ratios")
        return cls(float(raw.min()), float(raw.max()))

    @classmethod
    def fit_grid(cls, constants: WeakLabelConstants | None = None):
        c = constants or WeakLabelConstants()
        rg = radiance_meter(c.black_glass, c.industry_incidence)
        raw = [industry_raw_ratio(radiance_meter(DisneyPrincipled((0.5, 0.5, 0.5), r, s), c.industry_incidence), rg)
               for r in GRID_ROUGHNESS for s in GRID_SPECULAR]
        return cls.fit(raw)

    def __call__(self, raw):
        t = (raw - self.lo) / (self.hi - self.lo)
        return round(1.0 + 6.0 * min(max(t, 0.0), 1.0), 1)


@dataclass
class Calibration:
    """Fitted label maps; None means 'not fitted yet'."""
    skew: SkewCalibration | None = None
    industry: IndustryCalibration | None = None

    def to_dict(self):
        return {"skew": None if self.skew is None else asdict(self.skew),
                "industry": None if self.industry is None else asdict(self.industry)}

    @classmethod
    def from_dict(cls, d):
        return cls(None if d.get("skew") is None else SkewCalibration(**d["skew"]),
                   None if d.get("industry") is None else IndustryCalibration(**d["industry"]))


def image_skewness(image, mask):
    """Raw skewness of Rec.709 luminance over foreground pixels."""
    pixels = np.asarray(getattr(image, "pixels", image), dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    n = int(mask.sum())
    if n < MIN_FOREGROUND:
        raise ValueError(f"only {n} foreground pixels; need at least {MIN_FOREGROUND}")
    return skewness(luminance(pixels[mask]))


def weak_label_imagestats(image, mask, calibration: SkewCalibration | None = None) -> LabelRecord:
    calibration = calibration or SkewCalibration()
    raw = image_skewness(image, mask)
    return LabelRecord(calibration(raw), WEAK, "imagestats", f"imagestats skew={raw:.6f}")


def industry_raw_ratio(rd, rg):
    if rg <= 0:
        raise DegenerateInputError("reference radiance Rg must be positive")
    if rd < 0:
        raise ValueError("radiance must be non-negative")
    return math.log1p(rd) / math.log1p(rg)


def weak_label_industry(material, calibration: IndustryCalibration | None = None,
                        constants: WeakLabelConstants | None = None) -> LabelRecord:
    c = constants or WeakLabelConstants()
    if not isinstance(material, DisneyPrincipled):
        raise TypeError("industry labels are defined for DisneyPrincipled materials")
    calibration = calibration or IndustryCalibration.fit_grid(c)
    rd = radiance_meter(material, c.industry_incidence)
    rg = radiance_meter(c.black_glass, c.industry_incidence)
    raw = industry_raw_ratio(rd, rg)
    return LabelRecord(calibration(raw), WEAK, "industry", f"industry ratio={raw:.6f} Rd={rd:.6g} Rg={rg:.6g}")


def low_frequency_scene(scene: SceneSpec, constants: WeakLabelConstants):
    """The (geometry, material) pair re-lit by the fixed skewness reference environment."""
    illum = IlluminationSpec.procedural(constants.low_freq_level, seed=constants.low_freq_seed,
                                        resolution=scene.illumination.resolution)
    rs = scene.render
    render_spec = type(rs)(rs.width, rs.height, rs.samples_per_pixel, rs.exposure, rs.gamma, seed=0)
    return SceneSpec(scene.geometry, scene.material, illum, scene.camera, render_spec)


def _skew_key(scene_dict):
    return repr((scene_dict["geometry"], scene_dict["material"], scene_dict["camera"]))


def label_all(manifest: DatasetManifest, kind: str, constants: WeakLabelConstants | None = None,
              calibration: Calibration | None = None):
    """Attach a weak label of ``kind`` to every row that has no strong label.

    Returns (manifest, calibration, failures). The calibration is fitted on this
    manifest (skewness) or on the roughness/specular grid (industry) when not given.
    Per-row failures are collected as (index, message) and leave the row unlabeled.
    """
    if kind not in WEAK_KINDS:
        raise ValueError(f"unknown weak label kind {kind!r}; choose from {WEAK_KINDS}")
    c = constants or WeakLabelConstants()
    calibration = Calibration() if calibration is None else calibration
    failures = []
    targets = [i for i, row in enumerate(manifest.rows) if row.label is None or not row.label.is_strong]
    new_rows = list(manifest.rows)

    def fail(i, exc):
        failures.append((i, f"{type(exc).__name__}: {exc}"))
        new_rows[i] = manifest.rows[i].with_label(None)
        log.warning("row %d (%s): %s", i, manifest.rows[i].image_ref, exc)

    if kind == "bsdf":
        for i in targets:
            m = manifest.rows[i].scene["material"]
            try:
                if m["type"] != "DisneyPrincipled":
                    raise TypeError(f"bsdf labels need a DisneyPrincipled material, got {m['type']}")
                new_rows[i] = manifest.rows[i].with_label(weak_label_bsdf(m["roughness"], m["specular"], c))
            except (ValueError, TypeError) as exc:
                fail(i, exc)
    elif kind == "industry":
        if calibration.industry is None:
            calibration.industry = IndustryCalibration.fit_grid(c)
        for i in targets:
            try:
                material = material_from_dict(manifest.rows[i].scene["material"])
                new_rows[i] = manifest.rows[i].with_label(weak_label_industry(material, calibration.industry, c))
            except (ValueError, TypeError) as exc:
                fail(i, exc)
    else:
        raw = {}
        cache = {}
        for i in targets:
            scene_dict = manifest.rows[i].scene
            key = _skew_key(scene_dict)
            try:
                if key not in cache:
                    buf = render(low_frequency_scene(SceneSpec.from_dict(scene_dict), c))
                    img = buf.pixels if c.skew_on_linear_hdr else _display(buf, scene_dict)
                    cache[key] = image_skewness(img, buf.mask)
                raw[i] = cache[key]
            except ValueError as exc:
                fail(i, exc)
        if calibration.skew is None:
            calibration.skew = SkewCalibration.fit(list(cache.values())) if len(cache) >= 2 else SkewCalibration()
        for i, value in raw.items():
            new_rows[i] = manifest.rows[i].with_label(
                LabelRecord(calibration.skew(value), WEAK, "imagestats", f"imagestats skew={value:.6f}"))
    return manifest.derive(new_rows), calibration, failures


def _display(buf, scene_dict):
    from .stimulus.tonemap import tone_map
    rs = scene_dict["render"]
    return tone_map(buf.pixels, rs["exposure"], rs["gamma"])
