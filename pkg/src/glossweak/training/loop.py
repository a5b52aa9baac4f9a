"""Epoch loop: seeded shuffle, augmentation, weighted MAE, backprop, optimizer step."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, asdict, fields
from typing import Optional

import numpy as np

from ..model.augment import AugmentConfig, augment
from ..model.checkpoint import ModelState
from ..model.network import GlossNet, NetworkConfig
from ..model.optim import make_optimizer
from ..stimulus.imageio import load_mask, load_png
from .manifest import DatasetManifest
from .mixing import normalize_label, stratified_split

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch, batch, loss):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch, self.batch, self.loss = epoch, batch, loss


MIN_STRONG_VAL = 10


@dataclass
class TrainConfig:
    epochs: int = 35
    batch_size: int = 4
    lr: float = 1e-5
    optimizer: str = "adam"
    strong_fraction: float = 1.0
    weak_kind: Optional[str] = None
    weight_strong: float = 1.0
    weight_weak: float = 1.0
    fixed_budget: Optional[int] = None
    val_fraction: float = 0.1
    # "strong": hold validation rows out of the strong rows only (when there are at least
    # MIN_STRONG_VAL of them), so checkpoint selection tracks rated labels; "all": any row
    val_source: str = "all"
    mask_background: bool = False
    augment: Optional[dict] = field(default_factory=lambda: AugmentConfig.default_training().to_dict())
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.strong_fraction <= 1.0:
            raise ValueError(f"strong_fraction {self.strong_fraction} outside [0, 1]")
        if self.weight_strong < 0 or self.weight_weak < 0:
            raise ValueError("loss weights must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")
        if self.val_source not in ("strong", "all"):
            raise ValueError(f"val_source must be 'strong' or 'all', got {self.val_source!r}")
        if self.augment is not None:
            unknown = set(self.augment) - {f.name for f in fields(AugmentConfig)}
            if unknown:
                raise ValueError(f"unknown augment keys: {sorted(unknown)}")
            self.augment_config()

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    def augment_config(self):
        return None if self.augment is None else AugmentConfig(**self.augment)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_mae: list = field(default_factory=list)
    wall_time: list = field(default_factory=list, compare=False)
    best_epoch: int = -1

    def to_dict(self):
        return asdict(self)


def load_arrays(manifest: DatasetManifest, mask_background=False):
    """Stack a manifest's images (float32 NHWC) and masks; rows without a mask get all-true."""
    images, masks = [], []
    for row in manifest.rows:
        img = load_png(manifest.resolve(row.image_ref))
        m = load_mask(manifest.resolve(row.mask_ref)) if row.mask_ref else np.ones(img.shape[:2], bool)
        if mask_background:
            img = img * m[..., None]
        images.append(img.astype(np.float32))
        masks.append(m)
    if not images:
        return np.zeros((0, 0, 0, 3), np.float32), np.zeros((0, 0, 0), bool)
    return np.stack(images), np.stack(masks)


def targets_and_weights(manifest: DatasetManifest, cfg: TrainConfig):
    y, w = [], []
    for i, row in enumerate(manifest.rows):
        if row.label is None:
            raise ValueError(f"row {i} ({row.image_ref}) has no label")
        y.append(normalize_label(row.label.value))
        w.append(cfg.weight_strong if row.label.is_strong else cfg.weight_weak)
    return np.array(y), np.array(w)


def predict(net: GlossNet, images, batch_size=64):
    """Return (z, y_hat in [0, 1]) for an NHWC stack."""
    zs, ys = [], []
    for start in range(0, len(images), batch_size):
        z, y = net.forward(images[start:start + batch_size])
        zs.append(z.astype(np.float64))
        ys.append(y.astype(np.float64))
    if not zs:
        return np.zeros((0, net.config.latent_dim)), np.zeros(0)
    return np.concatenate(zs), np.concatenate(ys)


def _fit_size(images, size):
    if images.shape[1] == size and images.shape[2] == size:
        return images
    raise ValueError(f"images are {images.shape[1]}x{images.shape[2]}; network expects {size}x{size}")


def train(model_cfg: NetworkConfig, train_cfg: TrainConfig, manifest: DatasetManifest,
          val_manifest: DatasetManifest | None = None, progress=None):
    """Train from scratch; returns (best ModelState, TrainHistory).

    Without ``val_manifest`` a stratified ``val_fraction`` split of ``manifest`` is
    held out, taken from the strong rows only when ``val_source`` is "strong". The state with the lowest validation MAE is kept; with no validation
    rows the lowest epoch training loss decides.
    """
    if len(manifest) == 0:
        raise ValueError("training manifest is empty")
    if val_manifest is None and train_cfg.val_fraction > 0:
        strong_only = train_cfg.val_source == "strong" and len(manifest.strong_rows()) >= MIN_STRONG_VAL
        manifest, val_manifest = stratified_split(manifest, train_cfg.val_fraction, train_cfg.seed, strong_only)
    x, masks = load_arrays(manifest, train_cfg.mask_background)
    x = _fit_size(x, model_cfg.input_size)
    y, w = targets_and_weights(manifest, train_cfg)
    unweighted = bool(np.all(w == 1.0))
    if val_manifest is not None and len(val_manifest):
        xv, _ = load_arrays(val_manifest, train_cfg.mask_background)
        yv, _ = targets_and_weights(val_manifest, train_cfg)
    else:
        xv = yv = None

    net = GlossNet(model_cfg, seed=train_cfg.seed)
    opt = make_optimizer(train_cfg.optimizer, train_cfg.lr)
    aug_cfg = train_cfg.augment_config()
    shuffle_rng = np.random.default_rng([train_cfg.seed, 0x5F])
    aug_rng = np.random.default_rng([train_cfg.seed, 0xA6])
    history = TrainHistory()
    best_score, best_state = np.inf, None
    n = len(x)
    for epoch in range(train_cfg.epochs):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, train_cfg.batch_size)):
            idx = order[start:start + train_cfg.batch_size]
            batch = x[idx]
            if aug_cfg is not None:
                batch = np.stack([augment(batch[k], masks[i], aug_cfg, aug_rng)[0] for k, i in enumerate(idx)])
            loss, grads = net.loss_and_grads(batch, y[idx], None if unweighted else w[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, b, loss)
            opt.step(net.named_params(), grads)
            total += loss * len(idx)
        history.train_loss.append(total / n)
        if xv is not None:
            history.val_mae.append(float(np.mean(np.abs(predict(net, xv)[1] - yv))))
            score = history.val_mae[-1]
        else:
            score = history.train_loss[-1]
        history.wall_time.append(time.perf_counter() - t0)
        if score < best_score:
            best_score, best_state = score, ModelState.from_net(net, opt)
            history.best_epoch = epoch
        if progress:
            progress(epoch, history)
        log.info("epoch %d loss %.5f val %s", epoch, history.train_loss[-1],
                 history.val_mae[-1] if history.val_mae else "n/a")
    return best_state, history
