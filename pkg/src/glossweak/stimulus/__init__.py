from .brdf import directional_albedo, eval_brdf
from .environment import generate_environment, high_freq_content
from .geometry import generate_geometry
from .meter import radiance_meter
from .render import render
from .specs import (
    BUMP_LEVELS, CameraSpec, DisneyPrincipled, GeometrySpec, GgxBlackGlass, IlluminationSpec,
    ImageBuffer, RenderSpec, SceneSpec, WardDuer,
)
from .tonemap import tone_map

__all__ = [
    "BUMP_LEVELS", "CameraSpec", "DisneyPrincipled", "GeometrySpec", "GgxBlackGlass", "IlluminationSpec",
    "ImageBuffer", "RenderSpec", "SceneSpec", "WardDuer", "directional_albedo", "eval_brdf",
    "generate_environment", "generate_geometry", "high_freq_content", "radiance_meter", "render", "tone_map",
]
