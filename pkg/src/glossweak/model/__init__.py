from .augment import AugmentConfig, augment
from .checkpoint import ModelState, load_checkpoint, save_checkpoint
from .losses import mae_loss, weighted_mae_loss
from .network import LATENT_DIM, GlossNet, NetworkConfig
from .optim import SGD, Adam, make_optimizer

__all__ = [
    "LATENT_DIM", "SGD", "Adam", "AugmentConfig", "GlossNet", "ModelState", "NetworkConfig", "augment",
    "load_checkpoint", "mae_loss", "make_optimizer", "save_checkpoint", "weighted_mae_loss",
]
