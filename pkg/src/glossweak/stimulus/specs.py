"""Scene description types. Everything here round-trips through plain dicts."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Union

import numpy as np

BUMP_LEVELS = {0: 0.0, 1: 0.01, 2: 0.02, 3: 0.035, 4: 0.05, 5: 0.07}
FREQ_LEVELS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class DisneyPrincipled:
    base_color: tuple = (0.5, 0.5, 0.5)
    roughness: float = 0.25
    specular: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "base_color", tuple(float(c) for c in self.base_color))
        if not 0.0 <= self.roughness <= 1.0:
            raise ValueError(f"roughness must lie in [0, 1], got {self.roughness}")
        if self.specular < 0:
            raise ValueError(f"specular must be >= 0, got {self.specular}")


@dataclass(frozen=True)
class WardDuer:
    diffuse_albedo: tuple = (0.3, 0.3, 0.3)
    specular_albedo: float = 0.05
    lobe_width: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "diffuse_albedo", tuple(float(c) for c in self.diffuse_albedo))
        if self.specular_albedo < 0:
            raise ValueError("specular_albedo must be >= 0")
        if self.lobe_width <= 0:
            raise ValueError("lobe_width must be > 0")


@dataclass(frozen=True)
class GgxBlackGlass:
    ior: float = 1.567
    micro_roughness: float = 0.001

    def __post_init__(self):
        if self.micro_roughness <= 0:
            raise ValueError("micro_roughness must be > 0")


MaterialSpec = Union[DisneyPrincipled, WardDuer, GgxBlackGlass]
_MATERIAL_TYPES = {cls.__name__: cls for cls in (DisneyPrincipled, WardDuer, GgxBlackGlass)}


def material_to_dict(m: MaterialSpec) -> dict:
    d = asdict(m)
    for key, value in d.items():
        if isinstance(value, tuple):
            d[key] = list(value)
    return {"type": type(m).__name__, **d}


def material_from_dict(d: dict) -> MaterialSpec:
    d = dict(d)
    cls = _MATERIAL_TYPES[d.pop("type")]
    return cls(**d)


@dataclass(frozen=True)
class GeometrySpec:
    base_shape: str = "Sphere"
    bumpiness: float = 0.0
    rotation: tuple = (0.0, 0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rotation", tuple(float(a) for a in self.rotation))
        if self.base_shape not in ("Sphere", "BumpySphere"):
            raise ValueError(f"unknown base_shape {self.base_shape!r}")
        if self.bumpiness < 0:
            raise ValueError(f"bumpiness must be >= 0, got {self.bumpiness}")
        if self.base_shape == "Sphere" and self.bumpiness != 0:
            raise ValueError("a plain Sphere has no bumps; use BumpySphere")


@dataclass(frozen=True)
class IlluminationSpec:
    """Either a procedural lobe environment or a Gaussian-blurred copy of another spec."""
    kind: str = "Procedural"
    freq_level: int = 1
    seed: int = 0
    source: "IlluminationSpec | None" = None
    kernel_size: int = 0
    resolution: tuple = (128, 64)

    def __post_init__(self):
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))
        if self.kind == "Procedural":
            if self.freq_level not in FREQ_LEVELS:
                raise ValueError(f"freq_level must be one of {FREQ_LEVELS}")
        elif self.kind == "Blurred":
            if self.source is None or self.kernel_size < 1:
                raise ValueError("Blurred illumination needs a source and kernel_size >= 1")
        else:
            raise ValueError(f"unknown illumination kind {self.kind!r}")
        w, h = self.resolution
        if w < 16 or h < 8:
            raise ValueError(f"resolution must be at least 16x8, got {w}x{h}")

    @classmethod
    def procedural(cls, freq_level, seed=0, resolution=(128, 64)):
        return cls("Procedural", freq_level=freq_level, seed=seed, resolution=resolution)

    @classmethod
    def blurred(cls, source, kernel_size=20):
        return cls("Blurred", source=source, kernel_size=kernel_size, resolution=source.resolution,
                   freq_level=source.freq_level, seed=source.seed)

    @property
    def effective_level(self):
        """Frequency rank used for labels; blurring sits below level 1."""
        return self.freq_level if self.kind == "Procedural" else 0

    def to_dict(self):
        d = {"kind": self.kind, "freq_level": self.freq_level, "seed": self.seed,
             "resolution": list(self.resolution)}
        if self.kind == "Blurred":
            d["source"] = self.source.to_dict()
            d["kernel_size"] = self.kernel_size
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("source") is not None:
            d["source"] = cls.from_dict(d["source"])
        d["resolution"] = tuple(d["resolution"])
        return cls(**d)


@dataclass(frozen=True)
class CameraSpec:
    """Pinhole camera on +z looking at the origin; yaw turns the view about +y."""
    distance: float = 4.0
    fov: float = 39.3
    yaw: float = 0.0


@dataclass(frozen=True)
class RenderSpec:
    width: int = 64
    height: int = 64
    samples_per_pixel: int = 8
    exposure: float = 1.0
    gamma: float = 2.2
    seed: int = 0

    def __post_init__(self):
        if self.samples_per_pixel < 1:
            raise ValueError("samples_per_pixel must be >= 1")
        if self.exposure <= 0 or self.gamma <= 0:
            raise ValueError("exposure and gamma must be > 0")


@dataclass(frozen=True)
class SceneSpec:
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    material: MaterialSpec = field(default_factory=DisneyPrincipled)
    illumination: IlluminationSpec = field(default_factory=IlluminationSpec)
    camera: CameraSpec = field(default_factory=CameraSpec)
    render: RenderSpec = field(default_factory=RenderSpec)

    def to_dict(self):
        geo = asdict(self.geometry)
        geo["rotation"] = list(geo["rotation"])
        return {
            "geometry": geo,
            "material": material_to_dict(self.material),
            "illumination": self.illumination.to_dict(),
            "camera": asdict(self.camera),
            "render": asdict(self.render),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            geometry=GeometrySpec(**d["geometry"]),
            material=material_from_dict(d["material"]),
            illumination=IlluminationSpec.from_dict(d["illumination"]),
            camera=CameraSpec(**d["camera"]),
            render=RenderSpec(**d["render"]),
        )


@dataclass
class ImageBuffer:
    """Linear HDR RGB raster (H, W, 3) plus boolean foreground mask (H, W)."""
    pixels: np.ndarray
    mask: np.ndarray

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]
