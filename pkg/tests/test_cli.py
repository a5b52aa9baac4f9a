import json

import pytest

from glossweak.cli import main
from glossweak.experiment import ARMS
from glossweak.training.manifest import DatasetManifest

TINY_GEN = {
    "image_size": 16, "samples_per_pixel": 2, "env_resolution": [32, 16], "strong_count": 24,
    "weak_roughness": [0.0, 0.25, 0.5], "weak_specular": [0.1, 2.6, 5.0], "weak_repeats": 2,
    "test_materials": ["pink_plastic"], "test_bump_levels": [1], "test_illum_levels": [3], "blur_kernel": 4,
}
TINY_MODEL = {"input_size": 16, "conv_blocks": [[4, 3, 2], [8, 3, 2]], "fc_hidden": 8}
TINY_TRAIN = {"epochs": 2, "augment": {"hflip": 0.5, "crop": 14, "shift": 1.0, "rotate": 5.0, "scale": 0.05,
                                      "gauss_sigma": 0.01, "poisson_scale": 0.0, "seed": 0}}


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = _write(root / "gen.json", TINY_GEN)
    assert main(["--out", str(root / "data"), "--config", cfg, "--seed", "1", "generate"]) == 0
    return root


def test_generate_writes_splits_and_resolved_config(data):
    d = data / "data"
    for name in ("strong", "weak", "test"):
        assert (d / f"{name}.jsonl").exists()
    resolved = json.loads((d / "config" / "generate.json").read_text())
    assert resolved["seed"] == 1 and resolved["weak_repeats"] == 2 and "ground_truth" in resolved
    assert resolved["train_env_seeds"] == [0, 1, 2, 3]
    run = json.loads((d / "run.json").read_text())
    assert run["command"] == "generate" and run["run_id"].endswith("seed1")
    assert len(DatasetManifest.load(d / "weak.jsonl")) == 18


def test_test_mode_groups_share_all_but_one_factor(data):
    test = DatasetManifest.load(data / "data" / "test.jsonl")
    groups = {}
    for row in test.rows:
        groups.setdefault(row.variation_group, []).append(row)
    assert {g.split(":")[0] for g in groups} == {"rotation", "bumpiness", "illumination", "specularity"}
    assert all(len(rows) == 5 for rows in groups.values())
    rot = groups["rotation:b00"]
    assert len({json.dumps(r.scene["geometry"]["rotation"]) for r in rot}) == 5
    for r in rot:
        assert r.scene["material"] == rot[0].scene["material"]
        assert r.scene["illumination"] == rot[0].scene["illumination"]


def test_grid_generation_and_byte_identical_rerun(tmp_path):
    grid = {"geometries": [{"base_shape": "Sphere"}, {"base_shape": "BumpySphere", "bumpiness": 0.5}],
            "materials": [{"type": "DisneyPrincipled", "roughness": 0.1, "specular": 2.0},
                          {"type": "WardDuer", "specular_albedo": 0.05, "lobe_width": 0.2}],
            "illuminations": [{"kind": "Procedural", "freq_level": 3, "seed": 0}]}
    cfg = _write(tmp_path / "g.json", {"image_size": 12, "samples_per_pixel": 1, "env_resolution": [16, 8],
                                       "strong_count": 0, "weak_repeats": 0, "test_mode": False, "grid": grid})
    for run in ("a", "b"):
        assert main(["--out", str(tmp_path / run), "--config", cfg, "generate"]) == 0
    manifest = DatasetManifest.load(tmp_path / "a" / "grid.jsonl")
    assert len(manifest) == 4
    assert (tmp_path / "a" / "grid.jsonl").read_bytes() == (tmp_path / "b" / "grid.jsonl").read_bytes()
    assert (tmp_path / "a" / "images" / "grid_00003.png").read_bytes() == \
        (tmp_path / "b" / "images" / "grid_00003.png").read_bytes()


def test_invalid_grid_and_config_exit_1(tmp_path, capsys):
    bad = _write(tmp_path / "bad.json", {"grid": {"geometries": [], "materials": [], "illuminations": []}})
    assert main(["--out", str(tmp_path / "x"), "--config", bad, "generate"]) == 1
    typo = _write(tmp_path / "typo.json", {"image_sise": 16})
    assert main(["--out", str(tmp_path / "x"), "--config", typo, "generate"]) == 1
    assert "image_sise" in capsys.readouterr().err
    assert main(["--out", str(tmp_path / "x"), "--config", str(tmp_path / "nope.json"), "generate"]) == 1


def test_unknown_arm_lists_valid_arms(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "experiment", "--arm", "strong+magic", "--data", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert all(arm in err for arm in ARMS)


def test_missing_artifacts_name_the_step(tmp_path, capsys):
    assert main(["--out", str(tmp_path / "o"), "experiment", "--arm", "strong-only", "--data", str(tmp_path)]) == 1
    assert "generate" in capsys.readouterr().err
    assert main(["--out", str(tmp_path / "o"), "eval", "--checkpoint", str(tmp_path / "c.npz"),
                 "--manifest", str(tmp_path / "m.jsonl")]) == 1
    assert "train" in capsys.readouterr().err


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["weak-label", "--data", "x", "--kind", "vibes"])
    assert exc.value.code == 1


def test_weak_label_train_eval_consistency_latent_flow(data, capsys):
    d = data / "data"
    out = data / "flow"
    assert main(["--out", str(out), "weak-label", "--data", str(d), "--kind", "bsdf"]) == 0
    weak = DatasetManifest.load(out / "weak_bsdf.jsonl")
    assert len(weak) == 18 and all(r.label.kind == "bsdf" for r in weak.rows)

    cfg = _write(data / "train.json", {"model": TINY_MODEL, "train": TINY_TRAIN})
    assert main(["--out", str(out), "--config", cfg, "--seed", "2", "train", "--strong", str(d / "strong.jsonl"),
                 "--weak", str(out / "weak_bsdf.jsonl")]) == 0
    resolved = json.loads((out / "config" / "train.json").read_text())
    assert resolved["train"]["seed"] == 2 and resolved["train"]["batch_size"] == 4
    assert resolved["model"]["latent_dim"] == 20
    history = json.loads((out / "history.json").read_text())
    assert len(history["train_loss"]) == 2

    ckpt = str(out / "checkpoint.npz")
    assert main(["--out", str(out), "eval", "--checkpoint", ckpt, "--manifest", str(d / "test.jsonl")]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n_images"] == 20 and set(report["per_type"]) == {"rotation", "bumpiness", "illumination",
                                                                    "specularity"}
    assert main(["--out", str(out), "consistency", "--checkpoint", ckpt, "--manifest", str(d / "test.jsonl")]) == 0
    assert "rotation:b00" in (out / "consistency.txt").read_text()
    assert json.loads((out / "report.json").read_text())["group_std"]
    assert main(["--out", str(out), "latent", "--checkpoint", ckpt, "--manifest", str(d / "test.jsonl")]) == 0
    lines = (out / "latent.csv").read_text().splitlines()
    assert len(lines) == 21 and lines[0].count(",") == 24
    assert set(json.loads((out / "pca.json").read_text())) == {"explained_variance_ratio", "degenerate",
                                                               "reconstruction_error"}
    capsys.readouterr()


def test_train_rejects_unknown_section(data):
    cfg = _write(data / "bad_train.json", {"optim": {}})
    assert main(["--out", str(data / "x"), "--config", cfg, "train", "--strong",
                 str(data / "data" / "strong.jsonl")]) == 1


def test_experiment_budget_sweep_structure(data):
    cfg = _write(data / "exp.json", {"seeds": [0], "model": TINY_MODEL, "train": TINY_TRAIN, "budget_total": 16,
                                     "save_checkpoints": False})
    out = data / "exp"
    assert main(["--out", str(out), "--config", cfg, "experiment", "--arm", "budget-sweep",
                 "--data", str(data / "data")]) == 0
    curve = (out / "budget_curve.csv").read_text().splitlines()
    assert len(curve) == 5 and curve[0].startswith("strong_fraction")
    reports = sorted(p.relative_to(out).as_posix() for p in (out / "budget-sweep").rglob("report.json"))
    assert len(reports) == 4
    resolved = json.loads((out / "config" / "experiment.json").read_text())
    assert resolved["train"]["epochs"] == 2 and resolved["train"]["batch_size"] == 4


def test_experiment_arms_feed_comparison_table(data):
    cfg = _write(data / "exp2.json", {"seeds": [0], "model": TINY_MODEL, "train": TINY_TRAIN,
                                      "table_fractions": [1.0], "save_checkpoints": False})
    out = data / "exp2"
    for arm in ("strong-only", "strong+bsdf"):
        assert main(["--out", str(out), "--config", cfg, "experiment", "--arm", arm,
                     "--data", str(data / "data")]) == 0
    table = (out / "comparison.txt").read_text()
    assert "S. only" in table and "BSDF" in table
