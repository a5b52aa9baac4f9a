import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glossweak.evaluation import (
    AnnotationSet, DegenerateInputError, consistency, evaluate_predictions, export_latent, krippendorff_alpha,
    mae, median_gt, pca, pearson, spearman,
)
from glossweak.labels import LabelRecord
from glossweak.model import GlossNet, NetworkConfig
from glossweak.stimulus.imageio import save_png
from glossweak.training.manifest import DatasetManifest, ManifestRow
from oracles import krippendorff_ref, pearson_ref, spearman_ref

# a small fixed enumeration of short vectors over a few values, ties included
SHORT_VECTORS = [v for n in range(2, 7) for v in itertools.product((1, 2, 4), repeat=n)][::7]


def test_median_examples():
    assert median_gt([1, 2, 3, 4, 5]) == 3
    assert median_gt([7, 7, 7, 1, 1]) == 7
    assert median_gt([2, 4]) == 3
    with pytest.raises(ValueError):
        median_gt([])


def test_mae_examples():
    assert mae([0.3, 0.7], [0.3, 0.7]) == 0
    assert mae([0, 0], [1, 1]) == 1
    assert mae([0.2, 0.4], [0.5, 0.5]) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        mae([0.1], [0.1, 0.2])
    with pytest.raises(ValueError):
        mae([], [])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.floats(-1, 1))
def test_mae_detects_translation(x, c):
    x = np.array(x)
    assert mae(x, x + c) == pytest.approx(abs(c), abs=1e-12)


def test_correlation_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [1, 4, 9]) == pytest.approx(0.9897, abs=5e-5)
    assert spearman([1, 2, 3], [1, 4, 9]) == pytest.approx(1.0)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert spearman([1, 2, 2, 3], [1, 3, 2, 4]) == pytest.approx(spearman_ref([1, 2, 2, 3], [1, 3, 2, 4]), abs=1e-12)
    for fn in (pearson, spearman):
        with pytest.raises(DegenerateInputError):
            fn([2, 2, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            fn([1], [1])


def test_correlations_match_oracles_on_enumeration():
    checked = 0
    for a in SHORT_VECTORS:
        b = tuple(reversed(a))[1:] + a[:1]
        if len(set(a)) < 2 or len(set(b)) < 2:
            continue
        assert pearson(a, b) == pytest.approx(pearson_ref(a, b), abs=1e-9)
        assert spearman(a, b) == pytest.approx(spearman_ref(a, b), abs=1e-9)
        checked += 1
    assert checked > 50


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=3, max_size=12),
       st.floats(0.1, 10), st.floats(-5, 5))
@settings(max_examples=80)
def test_correlation_symmetry_and_invariance(pairs, a, b):
    # a coarse grid keeps distinct values distinct under the monotone transform
    x, y = (np.round(np.array(v), 3) for v in zip(*pairs))
    if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
        return
    assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-12)
    assert pearson(a * x + b, y) == pytest.approx(pearson(x, y), abs=1e-6)
    assert spearman(np.exp(x / 10), y) == pytest.approx(spearman(x, y), abs=1e-12)
    assert -1 <= spearman(x, y) <= 1


def _tables():
    rng = np.random.default_rng(0)
    for n_items, n_raters in [(4, 2), (3, 3), (5, 2), (2, 4), (6, 3)]:
        for _ in range(6):
            table = rng.integers(1, 5, size=(n_items, n_raters)).astype(object)
            table[rng.random(table.shape) < 0.15] = None
            yield table.tolist()


@pytest.mark.parametrize("level", ["interval", "ordinal"])
def test_alpha_matches_pairwise_oracle(level):
    checked = 0
    for table in _tables():
        try:
            got = krippendorff_alpha(table, level)
        except DegenerateInputError:
            continue
        assert got == pytest.approx(krippendorff_ref(table, level), abs=1e-9)
        checked += 1
    assert checked >= 20


def test_alpha_hand_table():
    # two raters, four items; the interval oracle works by explicit pair enumeration
    table = [[1, 1], [2, 3], [3, 3], [4, 2]]
    assert krippendorff_alpha(table) == pytest.approx(krippendorff_ref(table), abs=1e-12)


def test_alpha_perfect_agreement_and_errors():
    assert krippendorff_alpha([[3, 3, 3], [5, 5, None], [1, 1, 1]]) == 1.0
    assert krippendorff_alpha(AnnotationSet(["a", "b"], ["r1", "r2"], [[2, 2], [6, 6]])) == 1.0
    with pytest.raises(DegenerateInputError):
        krippendorff_alpha([[3, None], [None, 4]])
    with pytest.raises(ValueError):
        krippendorff_alpha([[1, 2]], level="nominal")


def test_alpha_near_zero_for_random_assignment():
    rng = np.random.default_rng(11)
    multiset = np.repeat(np.arange(1, 8), 1000 * 5 // 7 + 1)[:5000]
    table = rng.permutation(multiset).reshape(1000, 5).tolist()
    assert abs(krippendorff_alpha(table)) < 0.1
    assert abs(krippendorff_alpha(table, "ordinal")) < 0.1


def test_annotation_set_validation():
    with pytest.raises(ValueError):
        AnnotationSet(["a"], ["r1"], [[8]])
    with pytest.raises(ValueError):
        AnnotationSet(["a"], ["r1", "r2"], [[None, None]])
    ann = AnnotationSet(["a", "b"], ["r1", "r2"], [[2, 4], [7, None]])
    assert ann.medians() == [3.0, 7.0]
    assert AnnotationSet.from_dict(ann.to_dict()) == ann


def test_consistency_examples(caplog):
    group_std, per_type = consistency([("rotation:b00", 3.0, 3.0), ("rotation:b00", 5.0, 3.0),
                                       ("rotation:b01", 4.0, 6.0), ("rotation:b01", 4.0, 6.0),
                                       ("bumpiness:b00", 2.0, 2.0), ("bumpiness:b00", 6.0, 7.0),
                                       ("illumination:b00", 2.0, 2.0)])
    assert group_std["rotation:b00"] == 1.0 and group_std["rotation:b01"] == 0.0
    assert "illumination:b00" not in group_std
    assert list(per_type) == ["rotation", "bumpiness", "illumination"]
    assert per_type["rotation"]["prediction_std"] == 0.5 and per_type["illumination"]["prediction_std"] is None
    assert per_type["rotation"]["n_images"] == 4 and per_type["illumination"]["pearson"] is None


def test_consistency_warns_on_singleton(caplog):
    with caplog.at_level(logging.WARNING):
        group_std, _ = consistency([("rotation:b00", 3.0, 3.0)])
    assert group_std == {} and "single member" in caplog.text


@given(st.lists(st.floats(1, 7), min_size=2, max_size=8), st.randoms())
def test_consistency_std_invariant_to_order(preds, rnd):
    recs = [("rotation:b00", p, 4.0) for p in preds]
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    assert consistency(recs)[0]["rotation:b00"] == pytest.approx(consistency(shuffled)[0]["rotation:b00"], abs=1e-12)


def test_report_formats():
    groups = ["rotation:b00"] * 2 + ["specularity:b00"] * 2
    report = evaluate_predictions([2.0, 3.0, 4.0, 6.0], [2.0, 3.5, 4.0, 7.0], groups, {"arm": "x"})
    d = report.to_dict()
    assert d["n_images"] == 4 and set(d["overall"]) == {"mae", "pearson", "spearman"}
    assert 0 <= d["overall"]["mae"] and -1 <= d["overall"]["spearman"] <= 1
    assert report.to_json() == evaluate_predictions([2.0, 3.0, 4.0, 6.0], [2.0, 3.5, 4.0, 7.0], groups,
                                                    {"arm": "x"}).to_json()
    text = report.summary()
    assert "rotation" in text and "specularity" in text and "overall" in text


def _eig_reconstruction_error(z, k):
    mean, std = z.mean(0), z.std(0)
    zs = (z - mean) / np.where(std > 0, std, 1)
    cov = zs.T @ zs
    w, v = np.linalg.eigh(cov)
    top = v[:, np.argsort(w)[::-1][:k]]
    return float(np.mean((zs - zs @ top @ top.T) ** 2)), np.sort(w)[::-1][:k] / np.trace(cov)


def test_pca_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(4)
    z = rng.normal(size=(50, 20)) @ rng.normal(size=(20, 20))
    res = pca(z, 2)
    err, ratio = _eig_reconstruction_error(z, 2)
    assert res.reconstruction_error(z) == pytest.approx(err, rel=1e-9)
    assert np.allclose(res.explained_variance_ratio, ratio, atol=1e-12)
    assert not res.degenerate and res.projection.shape == (50, 2)


def test_pca_constant_input_is_flagged():
    res = pca(np.ones((10, 20)), 2)
    assert res.degenerate and np.all(res.explained_variance_ratio == 0)
    with pytest.raises(ValueError):
        pca(np.ones((1, 20)))


def test_export_latent(tmp_path):
    cfg = NetworkConfig(input_size=16, conv_blocks=[(4, 3, 2), (8, 3, 2)], fc_hidden=8)
    net = GlossNet(cfg, seed=0)
    save_png(tmp_path / "a.png", np.full((16, 16, 3), 0.4))
    rows = [ManifestRow("a.png", {}, LabelRecord(3.0, "strong")), ManifestRow("a.png", {})]
    res = export_latent(net, DatasetManifest(rows, tmp_path))
    assert np.array_equal(res.z[0], res.z[1]) and res.z.shape == (2, 20)
    assert res.pca.degenerate
    lines = res.to_csv().splitlines()
    assert len(lines) == 3 and lines[0].startswith("image_ref,z0") and lines[2].split(",")[22] == ""
    with pytest.raises(ValueError):
        export_latent(net, DatasetManifest(rows[:1], tmp_path))
