"""Evaluation statistics: MAE, Pearson, Spearman, Krippendorff's alpha, consistency, latent export."""
from __future__ import annotations

import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .training.loop import load_arrays, predict
from .training.manifest import VARIATION_TYPES
from .training.mixing import denormalize_label

log = logging.getLogger(__name__)


class DegenerateInputError(ValueError):
    pass


def median_gt(ratings):
    r = np.asarray(ratings, dtype=np.float64)
    if r.size == 0:
        raise ValueError("no ratings")
    return float(np.median(r))


def _pair(a, b, min_len=1):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < min_len:
        raise ValueError(f"need at least {min_len} values, got {a.size}")
    return a, b


def mae(preds, gts):
    a, b = _pair(preds, gts)
    return float(np.mean(np.abs(a - b)))


def pearson(a, b):
    a, b = _pair(a, b, min_len=2)
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(np.sum(da * da)), np.sqrt(np.sum(db * db))
    if sa == 0 or sb == 0 or np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInputError("correlation undefined for a constant vector")
    return float(np.clip(np.sum(da * db) / (sa * sb), -1.0, 1.0))


def spearman(a, b):
    a, b = _pair(a, b, min_len=2)
    return pearson(rankdata(a, method="average"), rankdata(b, method="average"))


@dataclass
class AnnotationSet:
    """ratings[i][j] is rater j's score for image i, or None when missing."""
    image_refs: list
    rater_ids: list
    ratings: list

    def __post_init__(self):
        for row in self.ratings:
            if len(row) != len(self.rater_ids):
                raise ValueError("every rating row needs one slot per rater")
            if all(v is None for v in row):
                raise ValueError("every image needs at least one rating")
            for v in row:
                if v is not None and not 1 <= v <= 7:
                    raise ValueError(f"rating {v} outside [1, 7]")

    def medians(self):
        return [median_gt([v for v in row if v is not None]) for row in self.ratings]

    def to_dict(self):
        return {"image_refs": self.image_refs, "rater_ids": self.rater_ids, "ratings": self.ratings}

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["image_refs"]), list(d["rater_ids"]), [list(r) for r in d["ratings"]])


def coincidence_matrix(ratings):
    """Value list and coincidence matrix o[c, k] over units with >= 2 ratings."""
    units = [[v for v in row if v is not None and not (isinstance(v, float) and math.isnan(v))] for row in ratings]
    units = [u for u in units if len(u) >= 2]
    if not units:
        raise DegenerateInputError("no unit has two or more ratings")
    values = sorted({v for u in units for v in u})
    index = {v: i for i, v in enumerate(values)}
    o = np.zeros((len(values), len(values)))
    for u in units:
        counts = np.zeros(len(values))
        for v in u:
            counts[index[v]] += 1
        o += (np.outer(counts, counts) - np.diag(counts)) / (len(u) - 1)
    return np.array(values, dtype=np.float64), o


def krippendorff_alpha(ratings, level="interval"):
    """Krippendorff's alpha for a units x raters table (None marks a missing rating)."""
    if isinstance(ratings, AnnotationSet):
        ratings = ratings.ratings
    values, o = coincidence_matrix(ratings)
    n_c = o.sum(axis=1)
    n = n_c.sum()
    if level == "interval":
        delta2 = (values[:, None] - values[None, :]) ** 2
    elif level == "ordinal":
        cum = np.cumsum(n_c)
        idx = np.arange(len(values))
        lo, hi = np.minimum.outer(idx, idx), np.maximum.outer(idx, idx)
        between = cum[hi] - cum[lo] + n_c[lo]
        delta2 = (between - (n_c[:, None] + n_c[None, :]) / 2.0) ** 2
    else:
        raise ValueError(f"unknown level {level!r}; use 'interval' or 'ordinal'")
    d_obs = np.sum(o * delta2)
    if d_obs == 0:
        return 1.0
    d_exp = np.sum(np.outer(n_c, n_c) * delta2) / (n - 1)
    return float(1.0 - d_obs / d_exp)


def _safe(fn, a, b):
    if np.size(a) < 2:
        return None
    try:
        return fn(a, b)
    except DegenerateInputError:
        return None


def metric_trio(preds01, gts01):
    return OrderedDict(mae=mae(preds01, gts01), pearson=_safe(pearson, preds01, gts01),
                       spearman=_safe(spearman, preds01, gts01))


def population_std(values):
    return float(np.std(np.asarray(values, dtype=np.float64)))


def consistency(records):
    """Per-group prediction std (7-point scale) and per-variation-type metric trio.

    ``records`` is an iterable of (variation_group, pred7, gt7). Metrics per type
    are computed on the [0, 1] scale over every member of that type's groups.
    """
    groups = OrderedDict()
    for group, pred, gt in records:
        if group is None:
            continue
        groups.setdefault(group, []).append((pred, gt))
    group_std = OrderedDict()
    by_type = OrderedDict()
    for group in sorted(groups):
        members = groups[group]
        vtype = group.split(":", 1)[0]
        by_type.setdefault(vtype, []).extend(members)
        if len(members) < 2:
            log.warning("variation group %s has a single member; skipped", group)
            continue
        group_std[group] = population_std([p for p, _ in members])
    per_type = OrderedDict()
    for vtype in sorted(by_type, key=lambda t: (VARIATION_TYPES.index(t) if t in VARIATION_TYPES else 99, t)):
        members = by_type[vtype]
        p = (np.array([m[0] for m in members]) - 1.0) / 6.0
        g = (np.array([m[1] for m in members]) - 1.0) / 6.0
        trio = metric_trio(p, g)
        stds = [s for grp, s in group_std.items() if grp.split(":", 1)[0] == vtype]
        trio["prediction_std"] = float(np.mean(stds)) if stds else None
        trio["n_images"] = len(members)
        per_type[vtype] = trio
    return group_std, per_type


@dataclass
class EvalReport:
    overall: dict
    per_type: dict = field(default_factory=dict)
    group_std: dict = field(default_factory=dict)
    n_images: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"overall": dict(self.overall), "per_type": {k: dict(v) for k, v in self.per_type.items()},
                "group_std": dict(self.group_std), "n_images": self.n_images, "extra": dict(self.extra)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def summary(self):
        def fmt(v):
            return "   n/a" if v is None else f"{v:.4f}"
        lines = [f"images: {self.n_images}", f"{'subset':<14}{'MAE':>9}{'Spearman':>11}{'Pearson':>10}{'pred std':>10}"]
        o = self.overall
        lines.append(f"{'overall':<14}{fmt(o['mae']):>9}{fmt(o['spearman']):>11}{fmt(o['pearson']):>10}{'':>10}")
        for vtype, t in self.per_type.items():
            lines.append(f"{vtype:<14}{fmt(t['mae']):>9}{fmt(t['spearman']):>11}{fmt(t['pearson']):>10}"
                         f"{fmt(t.get('prediction_std')):>10}")
        return "\n".join(lines) + "\n"


def evaluate_predictions(pred7, gt7, groups=None, extra=None):
    """Build an EvalReport from 7-point predictions and ground truth."""
    pred7 = np.asarray(pred7, dtype=np.float64)
    gt7 = np.asarray(gt7, dtype=np.float64)
    overall = metric_trio((pred7 - 1.0) / 6.0, (gt7 - 1.0) / 6.0)
    group_std, per_type = ({}, {})
    if groups is not None:
        group_std, per_type = consistency(zip(groups, pred7.tolist(), gt7.tolist()))
    return EvalReport(overall, per_type, group_std, int(pred7.size), dict(extra or {}))


@dataclass
class PCAResult:
    components: np.ndarray
    projection: np.ndarray
    explained_variance_ratio: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    degenerate: bool

    def reconstruction_error(self, z):
        """Mean squared error of standardized z after projecting to k dims and back."""
        zs = (np.asarray(z) - self.mean) / self.scale
        back = self.projection @ self.components
        return float(np.mean((zs - back) ** 2))


def pca(z, n_components=2):
    """PCA of column-standardized data via SVD."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] < 2:
        raise ValueError("PCA needs at least two rows")
    mean = z.mean(axis=0)
    std = z.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    zs = (z - mean) / scale
    total = np.sum(zs ** 2)
    if total == 0:
        k = z.shape[1]
        return PCAResult(np.zeros((n_components, k)), np.zeros((z.shape[0], n_components)),
                         np.zeros(n_components), mean, scale, True)
    _, s, vt = np.linalg.svd(zs, full_matrices=False)
    # fix signs so the largest loading of each component is positive
    signs = np.sign(vt[np.arange(vt.shape[0]), np.argmax(np.abs(vt), axis=1)])
    vt = vt * signs[:, None]
    comps = vt[:n_components]
    ratio = (s ** 2 / total)[:n_components]
    return PCAResult(comps, zs @ comps.T, ratio, mean, scale, False)


def latent_table_csv(refs, z, y_hat7, gt7, projection):
    header = ["image_ref"] + [f"z{i}" for i in range(z.shape[1])] + ["pred", "gt", "pc1", "pc2"]
    lines = [",".join(header)]
    for i, ref in enumerate(refs):
        gt = "" if gt7[i] is None else repr(float(gt7[i]))
        vals = [ref] + [repr(float(v)) for v in z[i]] + [repr(float(y_hat7[i])), gt] + \
               [repr(float(v)) for v in projection[i]]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


@dataclass
class LatentExport:
    refs: list
    z: np.ndarray
    pred7: np.ndarray
    gt7: list
    pca: PCAResult

    def to_csv(self):
        return latent_table_csv(self.refs, self.z, self.pred7, self.gt7, self.pca.projection)

    def pca_summary(self):
        return {"explained_variance_ratio": self.pca.explained_variance_ratio.tolist(),
                "degenerate": self.pca.degenerate,
                "reconstruction_error": self.pca.reconstruction_error(self.z)}


def export_latent(net, manifest, mask_background=False):
    """Latent codes, 7-point predictions and a 2-D PCA projection for every manifest row."""
    if len(manifest) < 2:
        raise ValueError("latent export needs at least two images")
    x, _ = load_arrays(manifest, mask_background)
    z, y = predict(net, x)
    gt = [None if r.label is None else r.label.value for r in manifest.rows]
    return LatentExport([r.image_ref for r in manifest.rows], z, denormalize_label(y), gt, pca(z, 2))
