"""Scene grids for the three corpora and their rendering into a run directory.

* strong: Ward-Duer materials with random lobe parameters; one simulated rating each
* weak:   Disney Principled roughness/specular grid; left unlabeled for the weak-label step
* grid:   optional explicit geometry x material x illumination product
* test:   controlled variations (rotation, bumpiness, illumination, specularity) of
          baseline scenes, each image rated by several simulated raters
"""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .evaluation import AnnotationSet, median_gt
from .labels import LabelRecord
from .stimulus.imageio import save_mask, save_pfm, save_png
from .stimulus.render import render
from .stimulus.specs import (
    BUMP_LEVELS, CameraSpec, DisneyPrincipled, GeometrySpec, IlluminationSpec, RenderSpec, SceneSpec, WardDuer,
    material_from_dict,
)
from .stimulus.tonemap import tone_map
from .synthetic import GroundTruthConfig, ground_truth_gloss, simulate_ratings
from .training.manifest import DatasetManifest, ManifestRow
from .weaklabels import GRID_ROUGHNESS, GRID_SPECULAR

log = logging.getLogger(__name__)

TEST_MATERIALS = {
    "pink_plastic": WardDuer((0.60, 0.25, 0.30), 0.06, 0.12),
    "fruitwood": WardDuer((0.35, 0.20, 0.10), 0.05, 0.30),
    "violet_acrylic": WardDuer((0.30, 0.15, 0.45), 0.08, 0.04),
    "yellow_phenolic": WardDuer((0.50, 0.40, 0.05), 0.12, 0.02),
    "aluminium": WardDuer((0.05, 0.05, 0.05), 0.25, 0.08),
}
TEST_ROTATIONS = [(0, 0, 0), (30, 45, 0), (60, 90, 10), (90, 135, 20), (120, 180, 30)]
TEST_SPEC_OFFSETS = [-0.05, -0.025, 0.0, 0.025, 0.05]


@dataclass
class GenerationConfig:
    seed: int = 0
    image_size: int = 64
    samples_per_pixel: int = 16
    exposure: float = 1.0
    gamma: float = 2.2
    env_resolution: list = field(default_factory=lambda: [128, 64])
    train_env_seeds: list = field(default_factory=lambda: [0, 1, 2, 3])
    test_env_seed: int = 100
    strong_count: int = 800
    strong_specular_albedo: list = field(default_factory=lambda: [0.005, 0.35])
    strong_lobe_width: list = field(default_factory=lambda: [0.01, 0.4])
    weak_roughness: list = field(default_factory=lambda: list(GRID_ROUGHNESS))
    weak_specular: list = field(default_factory=lambda: list(GRID_SPECULAR))
    weak_repeats: int = 7
    test_mode: bool = True
    test_materials: list = field(default_factory=lambda: list(TEST_MATERIALS))
    test_bump_levels: list = field(default_factory=lambda: [1, 4])
    test_illum_levels: list = field(default_factory=lambda: [3, 4])
    blur_kernel: int = 20
    save_hdr: bool = False
    grid: Optional[dict] = None   # {"geometries": [...], "materials": [...], "illuminations": [...]}
    ground_truth: dict = field(default_factory=lambda: GroundTruthConfig().to_dict())

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown generation config keys: {sorted(unknown)}")
        cfg = cls(**d)
        if cfg.grid is not None:
            grid_scenes(cfg)   # fail early on a malformed grid
        return cfg

    def to_dict(self):
        return asdict(self)

    @property
    def gt(self):
        return GroundTruthConfig(**self.ground_truth)

    def render_spec(self, seed):
        return RenderSpec(self.image_size, self.image_size, self.samples_per_pixel, self.exposure, self.gamma, seed)


def _random_geometry(rng, seed):
    level = int(rng.integers(0, 6))
    rotation = tuple(float(v) for v in rng.uniform(0.0, 360.0, 3))
    if level == 0:
        return GeometrySpec("Sphere", 0.0, rotation, seed)
    return GeometrySpec("BumpySphere", BUMP_LEVELS[level], rotation, seed)


def _random_illumination(rng, cfg):
    level = int(rng.integers(1, 6))
    seed = int(rng.choice(cfg.train_env_seeds))
    env = IlluminationSpec.procedural(level, seed, tuple(cfg.env_resolution))
    if rng.random() < 0.15:
        env = IlluminationSpec.blurred(env, cfg.blur_kernel)
    return env


def strong_scenes(cfg: GenerationConfig):
    rng = np.random.default_rng([cfg.seed, 1])
    lo_s, hi_s = cfg.strong_specular_albedo
    lo_a, hi_a = cfg.strong_lobe_width
    out = []
    for i in range(cfg.strong_count):
        ps = float(np.exp(rng.uniform(np.log(lo_s), np.log(hi_s))))
        alpha = float(np.exp(rng.uniform(np.log(lo_a), np.log(hi_a))))
        rho_d = tuple(float(v) for v in rng.uniform(0.03, 0.7, 3))
        geometry = _random_geometry(rng, 1000 + i)
        illum = _random_illumination(rng, cfg)
        out.append(SceneSpec(geometry, WardDuer(rho_d, ps, alpha), illum, CameraSpec(),
                             cfg.render_spec(int(rng.integers(2 ** 31)))))
    return out


def weak_scenes(cfg: GenerationConfig):
    rng = np.random.default_rng([cfg.seed, 2])
    out = []
    for rep, r, s in itertools.product(range(cfg.weak_repeats), cfg.weak_roughness, cfg.weak_specular):
        base = tuple(float(v) for v in rng.uniform(0.03, 0.8, 3))
        geometry = _random_geometry(rng, 5000 + len(out))
        illum = _random_illumination(rng, cfg)
        out.append(SceneSpec(geometry, DisneyPrincipled(base, float(r), float(s)), illum, CameraSpec(),
                             cfg.render_spec(int(rng.integers(2 ** 31)))))
    return out


def grid_scenes(cfg: GenerationConfig):
    """Cartesian product of the explicit grid, in geometry-major order."""
    grid = cfg.grid or {}
    keys = ("geometries", "materials", "illuminations")
    unknown = set(grid) - set(keys)
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    try:
        geos = [GeometrySpec(**{**g, "rotation": tuple(g.get("rotation", (0, 0, 0)))}) for g in grid.get(keys[0], [])]
        mats = [material_from_dict(m) for m in grid.get(keys[1], [])]
        envs = [IlluminationSpec.from_dict({"resolution": cfg.env_resolution, **e}) for e in grid.get(keys[2], [])]
    except (TypeError, KeyError) as exc:
        raise ValueError(f"invalid grid entry: {exc}") from exc
    if cfg.grid is not None and not (geos and mats and envs):
        raise ValueError("grid needs at least one geometry, material and illumination")
    rng = np.random.default_rng([cfg.seed, 5])
    return [SceneSpec(g, m, e, CameraSpec(), cfg.render_spec(int(rng.integers(2 ** 31))))
            for g, m, e in itertools.product(geos, mats, envs)]


def test_scenes(cfg: GenerationConfig):
    """List of (scene, variation_group, baseline name) for the controlled test set."""
    res = tuple(cfg.env_resolution)
    rng = np.random.default_rng([cfg.seed, 3])
    out = []
    baseline = 0
    for mat_name in cfg.test_materials:
        material = TEST_MATERIALS[mat_name]
        for gi, bump in enumerate(cfg.test_bump_levels):
            geo = GeometrySpec("BumpySphere", BUMP_LEVELS[bump], (0.0, 0.0, 0.0), 9000 + gi)
            for level in cfg.test_illum_levels:
                env = IlluminationSpec.procedural(level, cfg.test_env_seed, res)
                tag = f"b{baseline:02d}"
                name = f"{mat_name}/bump{bump}/env{level}"

                def add(scene_geo, scene_mat, scene_env, vtype):
                    out.append((SceneSpec(scene_geo, scene_mat, scene_env, CameraSpec(),
                                          cfg.render_spec(int(rng.integers(2 ** 31)))), f"{vtype}:{tag}", name))

                for rot in TEST_ROTATIONS:
                    add(GeometrySpec("BumpySphere", geo.bumpiness, rot, geo.seed), material, env, "rotation")
                for lvl in range(1, 6):
                    add(GeometrySpec("BumpySphere", BUMP_LEVELS[lvl], (0.0, 0.0, 0.0), geo.seed), material, env,
                        "bumpiness")
                source = IlluminationSpec.procedural(4, cfg.test_env_seed, res)
                for variant in [IlluminationSpec.blurred(source, cfg.blur_kernel)] + [
                        IlluminationSpec.procedural(lv, cfg.test_env_seed, res) for lv in (2, 3, 4, 5)]:
                    add(geo, material, variant, "illumination")
                for off in TEST_SPEC_OFFSETS:
                    m = WardDuer(material.diffuse_albedo, max(material.specular_albedo + off, 0.0),
                                 material.lobe_width)
                    add(geo, m, env, "specularity")
                baseline += 1
    return out


def _render_row(scene, root: Path, name, save_hdr):
    buf = render(scene)
    display = tone_map(buf.pixels, scene.render.exposure, scene.render.gamma)
    image_ref, mask_ref = f"images/{name}.png", f"masks/{name}.png"
    save_png(root / image_ref, display)
    save_mask(root / mask_ref, buf.mask)
    if save_hdr:
        save_pfm(root / f"hdr/{name}.pfm", buf.pixels)
    return image_ref, mask_ref


def generate_dataset(cfg: GenerationConfig, root, progress=None):
    """Render all corpora into ``root``; returns dict of manifests plus the test annotations."""
    root = Path(root)
    for sub in ("images", "masks") + (("hdr",) if cfg.save_hdr else ()):
        (root / sub).mkdir(parents=True, exist_ok=True)
    gt_cfg = cfg.gt
    rater_rng = np.random.default_rng([cfg.seed, 4])
    manifests = {}

    rows = []
    for i, scene in enumerate(strong_scenes(cfg)):
        image_ref, mask_ref = _render_row(scene, root, f"strong_{i:05d}", cfg.save_hdr)
        gt = ground_truth_gloss(scene, gt_cfg)
        rating = simulate_ratings(gt, rater_rng, 1, gt_cfg.rater_noise)[0]
        label = LabelRecord(float(rating), "strong", None, "rater sim0")
        rows.append(ManifestRow(image_ref, scene.to_dict(), label, mask_ref, None, {"gt": gt}))
        if progress:
            progress("strong", i)
    manifests["strong"] = DatasetManifest(rows, root)

    rows = []
    for i, scene in enumerate(weak_scenes(cfg)):
        image_ref, mask_ref = _render_row(scene, root, f"weak_{i:05d}", cfg.save_hdr)
        rows.append(ManifestRow(image_ref, scene.to_dict(), None, mask_ref, None,
                                {"gt": ground_truth_gloss(scene, gt_cfg)}))
        if progress:
            progress("weak", i)
    manifests["weak"] = DatasetManifest(rows, root)

    if cfg.grid is not None:
        rows = []
        for i, scene in enumerate(grid_scenes(cfg)):
            image_ref, mask_ref = _render_row(scene, root, f"grid_{i:05d}", cfg.save_hdr)
            gt = ground_truth_gloss(scene, gt_cfg)
            rating = simulate_ratings(gt, rater_rng, 1, gt_cfg.rater_noise)[0]
            rows.append(ManifestRow(image_ref, scene.to_dict(), LabelRecord(float(rating), "strong", None, "rater sim0"),
                                    mask_ref, None, {"gt": gt}))
        manifests["grid"] = DatasetManifest(rows, root)

    annotations = None
    if cfg.test_mode:
        rows, ratings, refs = [], [], []
        for i, (scene, group, name) in enumerate(test_scenes(cfg)):
            image_ref, mask_ref = _render_row(scene, root, f"test_{i:05d}", cfg.save_hdr)
            gt = ground_truth_gloss(scene, gt_cfg)
            r = simulate_ratings(gt, rater_rng, gt_cfg.n_raters, gt_cfg.rater_noise)
            label = LabelRecord(median_gt(r), "strong", None, f"median of {len(r)} simulated raters")
            rows.append(ManifestRow(image_ref, scene.to_dict(), label, mask_ref, group, {"gt": gt, "baseline": name}))
            ratings.append(r)
            refs.append(image_ref)
            if progress:
                progress("test", i)
        manifests["test"] = DatasetManifest(rows, root)
        annotations = AnnotationSet(refs, [f"sim{j}" for j in range(gt_cfg.n_raters)], ratings)
    return manifests, annotations


def save_annotations(path, annotations: AnnotationSet):
    Path(path).write_text(json.dumps(annotations.to_dict(), sort_keys=True) + "\n", encoding="utf-8")


def load_annotations(path):
    return AnnotationSet.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
