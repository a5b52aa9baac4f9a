"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The training criteria (8 to 11) share one rendered corpus of about 2,000 images at 64x64.
Set GLOSSWEAK_ACCEPTANCE_DATA to a directory written by ``glossweak generate`` with the
default configuration to reuse an existing corpus instead of rendering a fresh one.
"""
import itertools
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.ndimage import binary_erosion

from glossweak.cli import main
from glossweak.datasets import GenerationConfig, generate_dataset, save_annotations
from glossweak.evaluation import DegenerateInputError, krippendorff_alpha, pearson, spearman
from glossweak.experiment import ExperimentConfig, run_experiment
from glossweak.model import GlossNet, NetworkConfig, mae_loss, weighted_mae_loss
from glossweak.model.losses import mae_loss_grad
from glossweak.stimulus import (
    CameraSpec, DisneyPrincipled, GeometrySpec, GgxBlackGlass, IlluminationSpec, RenderSpec, SceneSpec, WardDuer,
    directional_albedo, render,
)
from glossweak.stimulus.brdf import eval_local
from glossweak.weaklabels import GRID_ROUGHNESS, GRID_SPECULAR, industry_raw_ratio, skewness, weak_label_bsdf
from oracles import finite_difference_check, krippendorff_ref, pearson_ref, spearman_ref

SEEDS = [0, 1, 2, 3]


# ---------------------------------------------------------------- formula and physics criteria

def test_c01_weak_label_formula(acceptance_log):
    start = time.perf_counter()
    mismatches, values = 0, []
    for r, s in itertools.product(GRID_ROUGHNESS, GRID_SPECULAR):
        expected = min(max(math.floor(0.95 * s + 4.0 * (0.5 - 1.2 * r * r)), 1), 7)
        got = weak_label_bsdf(r, s).value
        values.append(got)
        mismatches += got != expected
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and all(1 <= v <= 7 for v in values) and elapsed < 1.0
    acceptance_log(1, "weak-label formula oracle", ok,
                   f"{len(values)} grid points, {mismatches} mismatches, {elapsed:.3f}s")
    assert ok


def _two_pass_skew(x):
    mean = math.fsum(x) / len(x)
    m2 = math.fsum((v - mean) ** 2 for v in x) / len(x)
    m3 = math.fsum((v - mean) ** 3 for v in x) / len(x)
    return m3 / m2 ** 1.5


def test_c02_skewness_oracle_and_invariance(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    x = rng.gamma(1.5, size=10_000)
    oracle_err = abs(skewness(x) - _two_pass_skew(x.tolist()))
    affine_err = max(abs(skewness(a * x + b) - skewness(x)) for a, b in [(0.5, 3.0), (7.0, -2.0), (1e-2, 1e3)])
    bern = (rng.random(1_000_000) < 0.25).astype(np.float64)
    closed = (1 - 2 * 0.25) / math.sqrt(0.25 * 0.75)
    bern_err = abs(skewness(bern) - closed)
    elapsed = time.perf_counter() - start
    ok = oracle_err < 1e-9 and affine_err < 1e-6 and bern_err < 0.02 and elapsed < 5.0
    acceptance_log(2, "skewness oracle and invariance", ok,
                   f"oracle err {oracle_err:.1e}, affine err {affine_err:.1e}, Bernoulli err {bern_err:.4f} "
                   f"(closed form {closed:.4f}), {elapsed:.2f}s")
    assert ok


def test_c03_industry_identities(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    identity_err = max(abs(industry_raw_ratio(v, v) - 1.0) for v in rng.uniform(1e-3, 50.0, 100))
    zero_exact = all(industry_raw_ratio(0.0, rg) == 0.0 for rg in rng.uniform(1e-3, 50.0, 100))
    monotone = 0
    for _ in range(100):
        a, b = np.sort(rng.uniform(0.0, 20.0, 2))
        rg = rng.uniform(0.1, 20.0)
        monotone += industry_raw_ratio(a, rg) < industry_raw_ratio(b, rg)
    elapsed = time.perf_counter() - start
    ok = identity_err < 1e-9 and zero_exact and monotone == 100 and elapsed < 1.0
    acceptance_log(3, "industry-label identities", ok,
                   f"Rd=Rg err {identity_err:.1e}, Rd=0 exact {zero_exact}, {monotone}/100 monotone pairs, "
                   f"{elapsed:.3f}s")
    assert ok


def _hemisphere(rng, n):
    v = rng.normal(size=(n, 3))
    v[:, 2] = np.abs(v[:, 2]) + 1e-3
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_c04_brdf_physics(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    variants = [DisneyPrincipled((0.5,) * 3, r, s) for r, s in [(0.0, 0.1), (0.05, 5.0), (0.25, 2.6), (0.5, 1.1)]]
    variants += [WardDuer((0.3, 0.2, 0.1), 0.005, 0.01), WardDuer((0.1,) * 3, 0.35, 0.4), GgxBlackGlass()]
    recip = 0.0
    for m in variants:
        wi, wo = _hemisphere(rng, 1000), _hemisphere(rng, 1000)
        a, b = eval_local(m, wi, wo), eval_local(m, wo, wi)
        recip = max(recip, float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300))))
    grid = [DisneyPrincipled((1.0, 1.0, 1.0), float(r), float(s))
            for r, s in itertools.product(GRID_ROUGHNESS, GRID_SPECULAR)]
    grid += [WardDuer((0.7,) * 3, ps, alpha) for ps, alpha in itertools.product((0.005, 0.35), (0.01, 0.4))]
    worst = max(float(directional_albedo(m, theta, 8000).max()) for m in grid for theta in (0.0, 45.0, 80.0))
    albedo = 0.6
    scene = SceneSpec(GeometrySpec(), DisneyPrincipled((albedo,) * 3, 0.3, 0.0),
                      IlluminationSpec("Procedural", 1, 0, resolution=(64, 32)), CameraSpec(), RenderSpec(64, 64, 16, seed=4))
    buf = render(scene, env=np.ones((32, 64, 3)))
    interior = binary_erosion(buf.mask, iterations=1)
    furnace = float(buf.pixels[interior].mean())
    furnace_err = abs(furnace - albedo) / albedo
    elapsed = time.perf_counter() - start
    ok = recip < 1e-12 and worst <= 1.05 and furnace_err < 0.02 and elapsed < 120
    acceptance_log(4, "BRDF physics", ok,
                   f"reciprocity rel err {recip:.1e} over {len(variants)} variants, max albedo {worst:.4f}, "
                   f"furnace {furnace:.4f} vs {albedo} ({100 * furnace_err:.2f}%), {elapsed:.1f}s")
    assert ok


def test_c05_gradient_finite_differences(acceptance_log):
    start = time.perf_counter()
    cfg = NetworkConfig(input_size=8, conv_blocks=[(4, 3, 2), (6, 3, 1)], fc_hidden=8, dtype="float64")
    net = GlossNet(cfg, seed=5)
    x = np.random.default_rng(5).random((3, 8, 8, 3))
    targets = np.array([0.0, 1.0, 0.0])   # prediction never sits on the |.| kink
    errors = finite_difference_check(net, x, lambda y: mae_loss_grad(y, targets))
    worst = max(errors.values())
    elapsed = time.perf_counter() - start
    ok = worst < 1e-3 and elapsed < 60 and len(errors) == len(net.named_params())
    acceptance_log(5, "gradient correctness", ok,
                   f"{len(errors)} parameter tensors, max relative error {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_c06_unit_weight_identity(acceptance_log):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 65))
        p, t = rng.random(n), rng.random(n)
        worst = max(worst, abs(weighted_mae_loss(p, t, np.ones(n)) - mae_loss(p, t)))
    ok = worst <= 1e-12
    acceptance_log(6, "loss identity", ok, f"100 batches, max |weighted - plain| {worst:.1e}")
    assert ok


def _alpha_tables():
    values = (1, 2, 3)
    for n_items, n_raters in [(2, 2), (3, 2), (2, 3)]:
        for flat in itertools.product(values, repeat=n_items * n_raters):
            yield [list(flat[i * n_raters:(i + 1) * n_raters]) for i in range(n_items)]
    for flat in itertools.product(values, repeat=5):   # 2 items x 3 raters, one rating missing
        yield [[flat[0], flat[1], None], [flat[2], flat[3], flat[4]]]


def test_c07_metric_oracles(acceptance_log):
    corr_err, corr_cases = 0.0, 0
    for n in range(2, 7):
        vectors = [v for v in itertools.product((1, 2, 3), repeat=n) if len(set(v)) > 1]
        partners = vectors if n <= 3 else [tuple(reversed(v)) for v in vectors] + [v[1:] + v[:1] for v in vectors]
        pairs = itertools.product(vectors, vectors) if n <= 3 else zip(vectors * 2, partners)
        for a, b in pairs:
            if len(set(b)) < 2:
                continue
            corr_err = max(corr_err, abs(pearson(a, b) - pearson_ref(a, b)), abs(spearman(a, b) - spearman_ref(a, b)))
            corr_cases += 1
    alpha_err, alpha_cases = 0.0, 0
    for table in _alpha_tables():
        for level in ("interval", "ordinal"):
            try:
                got = krippendorff_alpha(table, level)
            except DegenerateInputError:
                continue
            alpha_err = max(alpha_err, abs(got - krippendorff_ref(table, level)))
            alpha_cases += 1
    perfect = [krippendorff_alpha([[v] * 3 for v in (1, 4, 7, 2)], level) for level in ("interval", "ordinal")]
    ok = corr_err < 1e-9 and alpha_err < 1e-9 and all(p == 1.0 for p in perfect)
    acceptance_log(7, "metric oracles", ok,
                   f"{corr_cases} correlation cases (max err {corr_err:.1e}), {alpha_cases} alpha cases "
                   f"(max err {alpha_err:.1e}), perfect agreement alpha {perfect}")
    assert ok


# ---------------------------------------------------------------- trained-model criteria

@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    reuse = os.environ.get("GLOSSWEAK_ACCEPTANCE_DATA")
    if reuse:
        root = Path(reuse)
        if all((root / f"{s}.jsonl").exists() for s in ("strong", "weak", "test")):
            return root
    root = tmp_path_factory.mktemp("corpus")
    manifests, annotations = generate_dataset(GenerationConfig(), root)
    for name, manifest in manifests.items():
        manifest.save(root / f"{name}.jsonl")
    save_annotations(root / "annotations.json", annotations)
    return root


@pytest.fixture(scope="session")
def mixing_runs(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("mixing")
    cfg = ExperimentConfig(seeds=SEEDS, budget_fractions=[0.0, 0.2, 1.0])
    start = time.perf_counter()
    results = {}
    for arm in ("strong-only", "strong+bsdf"):
        results.update(run_experiment(arm, cfg, corpus, out))
    elapsed = time.perf_counter() - start
    return out, results, elapsed


@pytest.fixture(scope="session")
def budget_runs(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("budget")
    cfg = ExperimentConfig(seeds=SEEDS, budget_fractions=[0.0, 0.2, 1.0], save_checkpoints=False)
    return run_experiment("budget-sweep", cfg, corpus, out)["budget-sweep"]


def test_c08_weak_supervision_direction(acceptance_log, corpus, mixing_runs):
    _, results, elapsed = mixing_runs
    a = [results["strong-only"][(0.2, s)].overall["mae"] for s in SEEDS]
    b = [results["strong+bsdf"][(0.2, s)].overall["mae"] for s in SEEDS]
    wins = sum(mb <= ma for ma, mb in zip(a, b))
    n_images = sum(1 for split in ("strong", "weak", "test")
                   for _ in (corpus / f"{split}.jsonl").read_text().splitlines())
    ok = wins >= 3
    acceptance_log(8, "weak supervision helps (S.20% vs S.20%+BSDF)", ok,
                   f"MAE a={[round(v, 4) for v in a]} b={[round(v, 4) for v in b]}, b<=a in {wins}/4 seeds, "
                   f"corpus {n_images} images, training {elapsed / 60:.1f} min")
    assert ok


def test_c09_fixed_budget_curve(acceptance_log, budget_runs):
    rows = []
    for s in SEEDS:
        m0, m20, m100 = (budget_runs[(f, s)].overall["mae"] for f in (0.0, 0.2, 1.0))
        rows.append((m0, m20, m100, m20 <= 1.25 * m100 and m0 >= m20))
    passing = sum(r[3] for r in rows)
    ok = passing >= 3
    detail = "; ".join(f"seed{s}: {m0:.4f}/{m20:.4f}/{m100:.4f}" for s, (m0, m20, m100, _) in zip(SEEDS, rows))
    acceptance_log(9, "fixed-budget curve (MAE at 0/0.2/1.0 strong)", ok, f"{detail}; holds in {passing}/4 seeds")
    assert ok


def test_c10_consistency_protocol(acceptance_log, corpus, mixing_runs, tmp_path):
    out, _, _ = mixing_runs
    ckpt = out / "strong+bsdf" / "strong020" / "seed0" / "checkpoint.npz"
    outputs = []
    for run in ("first", "second"):
        code = main(["--out", str(tmp_path / run), "consistency", "--checkpoint", str(ckpt),
                     "--manifest", str(corpus / "test.jsonl")])
        assert code == 0
        outputs.append(tuple((tmp_path / run / name).read_bytes()
                             for name in ("consistency.json", "consistency.txt", "report.json")))
    payload = json.loads(outputs[0][0])
    types = list(payload["per_type"])
    rows_full = all(all(payload["per_type"][t][k] is not None for k in ("mae", "spearman", "pearson", "prediction_std"))
                    for t in types)
    rotation_groups = [g for g in payload["group_std"] if g.startswith("rotation:")]
    identical = outputs[0] == outputs[1]
    ok = set(types) == {"rotation", "bumpiness", "illumination", "specularity"} and rows_full and \
        len(rotation_groups) > 0 and identical
    rot_std = payload["per_type"]["rotation"]["prediction_std"] if "rotation" in payload["per_type"] else None
    acceptance_log(10, "consistency protocol", ok,
                   f"types {types}, {len(rotation_groups)} rotation groups (mean std {rot_std}), "
                   f"metric rows complete {rows_full}, reruns byte-identical {identical}")
    assert ok


def test_c11_end_to_end_determinism(acceptance_log, corpus, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"save_checkpoints": True}))
    blobs = []
    for run in ("first", "second"):
        code = main(["--out", str(tmp_path / run), "--config", str(cfg), "--seed", "0", "experiment",
                     "--arm", "strong-only", "--data", str(corpus)])
        assert code == 0
        base = tmp_path / run
        files = sorted(p.relative_to(base).as_posix() for p in (base / "strong-only").rglob("*") if p.is_file())
        blobs.append({f: (base / f).read_bytes() for f in files} | {
            "comparison.json": (base / "comparison.json").read_bytes()})
    identical = blobs[0] == blobs[1]
    ok = identical and any(f.endswith("report.json") for f in blobs[0])
    acceptance_log(11, "end-to-end determinism", ok,
                   f"{len(blobs[0])} artifacts compared (reports, histories, checkpoints), byte-identical {identical}")
    assert ok
