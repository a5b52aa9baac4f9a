"""Label normalization and strong/weak row selection."""
import math

import numpy as np

from .manifest import DatasetManifest


def normalize_label(value):
    """Map a 7-point gloss value to [0, 1]."""
    v = float(value)
    if not 1.0 <= v <= 7.0:
        raise ValueError(f"label {value} outside [1, 7]")
    return (v - 1.0) / 6.0


def denormalize_label(x):
    return 1.0 + 6.0 * np.asarray(x, dtype=np.float64)


def _check_fraction(fraction):
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction {fraction} outside [0, 1]")


def _pick(rows, k, rng):
    """k rows chosen uniformly without replacement, kept in their original order."""
    idx = np.sort(rng.choice(len(rows), size=k, replace=False))
    return [rows[i] for i in idx]


def subsample_strong(manifest: DatasetManifest, fraction, seed):
    """Keep floor(fraction * N) of the N strong rows; all other rows pass through."""
    _check_fraction(fraction)
    strong_idx = [i for i, r in enumerate(manifest.rows) if r.label is not None and r.label.is_strong]
    k = math.floor(fraction * len(strong_idx))
    rng = np.random.default_rng([seed, 0x57])
    keep = set(_pick(strong_idx, k, rng)) if k else set()
    strong = set(strong_idx)
    return manifest.derive(r for i, r in enumerate(manifest.rows) if i not in strong or i in keep)


def budgeted_mix(strong: DatasetManifest, weak: DatasetManifest, total_n, strong_fraction, seed):
    """Exactly total_n rows: floor(strong_fraction * total_n) strong, the rest weak."""
    _check_fraction(strong_fraction)
    if total_n < 0:
        raise ValueError("total_n must be non-negative")
    n_strong = math.floor(strong_fraction * total_n)
    n_weak = total_n - n_strong
    s_rows, w_rows = strong.strong_rows(), weak.weak_rows()
    if n_strong > len(s_rows) or n_weak > len(w_rows):
        raise ValueError(f"budget needs {n_strong} strong + {n_weak} weak rows; "
                         f"have {len(s_rows)} strong + {len(w_rows)} weak")
    rng = np.random.default_rng([seed, 0xB0])
    rows = _pick(s_rows, n_strong, rng) + _pick(w_rows, n_weak, rng)
    return DatasetManifest(rows, strong.root)


def stratified_split(manifest: DatasetManifest, fraction, seed, strong_only=False):
    """Split labeled rows into (train, val) with about ``fraction`` of each rounded label value in val.

    With ``strong_only`` the validation rows are drawn from the strong rows alone and
    every weak row stays in training.
    """
    rng = np.random.default_rng([seed, 0x5A])
    strata = {}
    for i, row in enumerate(manifest.rows):
        if row.label is None:
            raise ValueError(f"row {i} ({row.image_ref}) has no label")
        if strong_only and not row.label.is_strong:
            continue
        strata.setdefault(int(round(row.label.value)), []).append(i)
    val = set()
    for key in sorted(strata):
        members = strata[key]
        k = int(round(fraction * len(members)))
        val.update(int(j) for j in rng.permutation(members)[:k])
    train_rows = [r for i, r in enumerate(manifest.rows) if i not in val]
    val_rows = [r for i, r in enumerate(manifest.rows) if i in val]
    return manifest.derive(train_rows), manifest.derive(val_rows)
