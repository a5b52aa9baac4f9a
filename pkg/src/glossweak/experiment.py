"""Experimental arms: label, mix, train and evaluate on the controlled test split.

A data directory produced by ``generate`` holds strong.jsonl, weak.jsonl and
test.jsonl. Weak labels of each kind are computed once and cached next to them
as weak_<kind>.jsonl plus calibration_<kind>.json.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path

import numpy as np

from .evaluation import EvalReport, evaluate_predictions
from .model.checkpoint import ModelState, save_checkpoint
from .model.network import NetworkConfig
from .training.loop import TrainConfig, load_arrays, predict, train
from .training.manifest import DatasetManifest
from .training.mixing import budgeted_mix, denormalize_label, subsample_strong
from .weaklabels import Calibration, WeakLabelConstants, label_all

log = logging.getLogger(__name__)

WEAK_ARMS = {"strong+bsdf": "bsdf", "strong+imagestats": "imagestats", "strong+industry": "industry"}
ARMS = ("strong-only",) + tuple(WEAK_ARMS) + ("budget-sweep", "comparison")
TABLE_ROWS = (("strong-only", "S. only"), ("strong+bsdf", "S.+BSDF"),
              ("strong+imagestats", "S.+Image stats."), ("strong+industry", "S.+Industry"))


class MissingArtifact(FileNotFoundError):
    pass


@dataclass
class ExperimentConfig:
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3])
    strong_fraction: float = 0.2
    table_fractions: list = field(default_factory=lambda: [1.0, 0.2, 0.0])
    budget_total: int = 800
    budget_fractions: list = field(default_factory=lambda: [0.0, 0.2, 0.5, 1.0])
    budget_weak_kind: str = "bsdf"
    model: dict = field(default_factory=lambda: NetworkConfig().to_dict())
    # desk-scale runs use a larger step than the per-step training default
    train: dict = field(default_factory=lambda: TrainConfig(lr=1e-3).to_dict())
    weak_constants: dict = field(default_factory=lambda: asdict(WeakLabelConstants()))
    save_checkpoints: bool = True

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown experiment config keys: {sorted(unknown)}")
        cfg = cls(**d)
        # expand partial nested sections over their defaults; this also validates them before any work
        base = cls()
        cfg.model = NetworkConfig.from_dict({**base.model, **cfg.model}).to_dict()
        cfg.train = TrainConfig.from_dict({**base.train, **cfg.train}).to_dict()
        cfg.weak_constants = asdict(WeakLabelConstants(**{**base.weak_constants, **cfg.weak_constants}))
        return cfg

    def to_dict(self):
        return asdict(self)


def _require(path: Path, step):
    if not path.exists():
        raise MissingArtifact(f"{path} not found; run the '{step}' step first")
    return path


def load_split(data_dir, name):
    return DatasetManifest.load(_require(Path(data_dir) / f"{name}.jsonl", "generate"))


def weak_manifest(data_dir, kind, constants: WeakLabelConstants):
    """Weak pool labeled with ``kind``; computed once and cached in the data directory."""
    data_dir = Path(data_dir)
    cached = data_dir / f"weak_{kind}.jsonl"
    calib_path = data_dir / f"calibration_{kind}.json"
    if cached.exists():
        return DatasetManifest.load(cached)
    labeled, calibration, failures = label_all(load_split(data_dir, "weak"), kind, constants)
    if failures:
        log.warning("%d weak rows left unlabeled for kind %s", len(failures), kind)
    labeled = labeled.derive(r for r in labeled.rows if r.label is not None)
    labeled.save(cached)
    calib_path.write_text(json.dumps(calibration.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    return DatasetManifest.load(cached)


def evaluate_state(state: ModelState, test: DatasetManifest, mask_background=False, extra=None) -> EvalReport:
    net = state.build()
    x, _ = load_arrays(test, mask_background)
    _, y = predict(net, x)
    pred7 = denormalize_label(y)
    gt7 = [row.label.value for row in test.rows]
    groups = [row.variation_group for row in test.rows]
    return evaluate_predictions(pred7, gt7, groups, extra)


def _fmt_frac(f):
    return f"{int(round(f * 100)):03d}"


def run_single(name, train_manifest, test, cfg: ExperimentConfig, seed, out_dir, extra):
    """Train one model and write report.json / report.txt / history.json (and checkpoint.npz)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tcfg = TrainConfig.from_dict({**cfg.train, "seed": seed})
    mcfg = NetworkConfig.from_dict(dict(cfg.model))
    state, history = train(mcfg, tcfg, train_manifest)
    n_strong = len(train_manifest.strong_rows())
    info = {"arm": name, "seed": seed, "n_train_rows": len(train_manifest), "n_strong": n_strong,
            "n_weak": len(train_manifest) - n_strong, "best_epoch": history.best_epoch, **extra}
    report = evaluate_state(state, test, tcfg.mask_background, info)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out_dir / "report.txt").write_text(report.summary(), encoding="utf-8")
    hist = {"train_loss": history.train_loss, "val_mae": history.val_mae, "best_epoch": history.best_epoch}
    (out_dir / "history.json").write_text(json.dumps(hist, indent=2) + "\n", encoding="utf-8")
    if cfg.save_checkpoints:
        save_checkpoint(out_dir / "checkpoint.npz", state)
    return report


def _arm_manifest(arm, fraction, seed, data_dir, constants):
    strong = subsample_strong(load_split(data_dir, "strong"), fraction, seed)
    if arm == "strong-only":
        return strong
    weak = weak_manifest(data_dir, WEAK_ARMS[arm], constants)
    return strong.derive(strong.rows + weak.rows)


def run_mixing_arm(arm, cfg: ExperimentConfig, data_dir, out_dir, fractions=None):
    """Reports keyed by (fraction, seed) for a strong-only or strong+weak arm."""
    constants = WeakLabelConstants(**cfg.weak_constants)
    test = load_split(data_dir, "test")
    fractions = [cfg.strong_fraction] if fractions is None else fractions
    reports = {}
    for fraction in fractions:
        for seed in cfg.seeds:
            manifest = _arm_manifest(arm, fraction, seed, data_dir, constants)
            if len(manifest) == 0:
                log.warning("arm %s at strong fraction %s has no training rows; skipped", arm, fraction)
                continue
            sub = Path(out_dir) / arm / f"strong{_fmt_frac(fraction)}" / f"seed{seed}"
            reports[(fraction, seed)] = run_single(arm, manifest, test, cfg, seed, sub,
                                                   {"strong_fraction": fraction})
    return reports


def run_budget_sweep(cfg: ExperimentConfig, data_dir, out_dir):
    constants = WeakLabelConstants(**cfg.weak_constants)
    test = load_split(data_dir, "test")
    strong = load_split(data_dir, "strong")
    weak = weak_manifest(data_dir, cfg.budget_weak_kind, constants)
    reports = {}
    for fraction in cfg.budget_fractions:
        for seed in cfg.seeds:
            manifest = budgeted_mix(strong, weak, cfg.budget_total, fraction, seed)
            sub = Path(out_dir) / "budget-sweep" / f"strong{_fmt_frac(fraction)}" / f"seed{seed}"
            reports[(fraction, seed)] = run_single("budget-sweep", manifest, test, cfg, seed, sub,
                                                   {"strong_fraction": fraction, "budget": cfg.budget_total,
                                                    "weak_kind": cfg.budget_weak_kind})
    curve = budget_curve_csv(reports, cfg.seeds)
    (Path(out_dir) / "budget_curve.csv").write_text(curve, encoding="utf-8")
    return reports


def budget_curve_csv(reports, seeds):
    fractions = sorted({f for f, _ in reports})
    lines = ["strong_fraction," + ",".join(f"mae_seed{s}" for s in seeds) + ",mae_mean,spearman_mean"]
    for f in fractions:
        maes = [reports[(f, s)].overall["mae"] for s in seeds]
        sps = [reports[(f, s)].overall["spearman"] for s in seeds]
        sps = [v for v in sps if v is not None]
        sp = repr(float(np.mean(sps))) if sps else ""
        lines.append(",".join([repr(float(f))] + [repr(float(m)) for m in maes] + [repr(float(np.mean(maes))), sp]))
    return "\n".join(lines) + "\n"


def comparison_table(results, fractions):
    """Comparison table text: one row per arm, MAE / Spearman / Pearson per strong fraction (mean over seeds)."""
    def cell(reps, key):
        vals = [r.overall[key] for r in reps if r.overall[key] is not None]
        return f"{np.mean(vals):.4f}" if vals else "-"

    head = f"{'':<18}" + "".join(f"{'S. ' + str(int(round(f * 100))) + '%':^27}" for f in fractions)
    sub = f"{'arm':<18}" + "".join(f"{'MAE':>9}{'Spear.':>9}{'Pear.':>9}" for _ in fractions)
    lines = [head, sub]
    for arm, label in TABLE_ROWS:
        if arm not in results:
            continue
        row = f"{label:<18}"
        for f in fractions:
            reps = [r for (fr, _), r in results[arm].items() if fr == f]
            row += "".join(f"{(cell(reps, k) if reps else '-'):>9}" for k in ("mae", "spearman", "pearson"))
        lines.append(row)
    return "\n".join(lines) + "\n"


def comparison_json(results):
    out = {}
    for arm, reports in results.items():
        out[arm] = {f"{f}:{s}": r.overall for (f, s), r in sorted(reports.items())}
    return json.dumps(out, sort_keys=True, indent=2) + "\n"


def run_experiment(arm, cfg: ExperimentConfig, data_dir, out_dir):
    """Run a named arm and write its reports plus the cross-arm comparison; returns {arm: reports}."""
    if arm not in ARMS:
        raise ValueError(f"unknown arm {arm!r}; valid arms: {', '.join(ARMS)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for split in ("strong", "weak", "test"):
        _require(Path(data_dir) / f"{split}.jsonl", "generate")
    results = {}
    if arm == "budget-sweep":
        results[arm] = run_budget_sweep(cfg, data_dir, out_dir)
        return results
    if arm == "comparison":
        for name, _ in TABLE_ROWS:
            results[name] = run_mixing_arm(name, cfg, data_dir, out_dir, cfg.table_fractions)
        fractions = cfg.table_fractions
    else:
        results[arm] = run_mixing_arm(arm, cfg, data_dir, out_dir)
        fractions = [cfg.strong_fraction]
    # merge with arms already present in this output directory so separate invocations compare
    merged = _collect_existing(out_dir, cfg.seeds)
    merged.update(results)
    (out_dir / "comparison.txt").write_text(comparison_table(merged, sorted(
        {f for reps in merged.values() for f, _ in reps} | set(fractions), reverse=True)), encoding="utf-8")
    (out_dir / "comparison.json").write_text(comparison_json(merged), encoding="utf-8")
    return results


def _collect_existing(out_dir, seeds):
    found = {}
    for arm, _ in TABLE_ROWS:
        base = Path(out_dir) / arm
        if not base.is_dir():
            continue
        for frac_dir in sorted(base.glob("strong*")):
            fraction = int(frac_dir.name[6:]) / 100.0
            for seed in seeds:
                path = frac_dir / f"seed{seed}" / "report.json"
                if path.exists():
                    d = json.loads(path.read_text(encoding="utf-8"))
                    found.setdefault(arm, {})[(fraction, seed)] = EvalReport(
                        d["overall"], d["per_type"], d["group_std"], d["n_images"], d["extra"])
    return found
