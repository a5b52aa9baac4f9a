"""Checkpoints: a single .npz holding parameters, optimizer moments and a JSON header."""
import io
import json
import zipfile
from dataclasses import dataclass, field

import numpy as np

from .network import GlossNet, NetworkConfig
from .optim import Adam, SGD


@dataclass
class ModelState:
    params: dict
    config: NetworkConfig
    rng_seed: int = 0
    optimizer: dict = field(default_factory=dict)

    @classmethod
    def from_net(cls, net: GlossNet, optimizer=None):
        params = {k: v.copy() for k, v in net.named_params().items()}
        return cls(params, net.config, net.seed, _optimizer_state(optimizer))

    def build(self) -> GlossNet:
        net = GlossNet(self.config, seed=self.rng_seed)
        net.load_params(self.params)
        return net


def _optimizer_state(opt):
    if opt is None:
        return {}
    state = {"header": opt.state_dict()}
    if isinstance(opt, Adam):
        state["m"] = {k: v.copy() for k, v in opt.m.items()}
        state["v"] = {k: v.copy() for k, v in opt.v.items()}
    return state


def restore_optimizer(state):
    header = state["header"]
    if header["kind"] == "Adam":
        opt = Adam(header["lr"], header["beta1"], header["beta2"], header["eps"])
        opt.m = {k: v.copy() for k, v in state.get("m", {}).items()}
        opt.v = {k: v.copy() for k, v in state.get("v", {}).items()}
    else:
        opt = SGD(header["lr"])
    opt.t = header["t"]
    return opt


def save_checkpoint(path, state: ModelState):
    arrays = {f"param/{k}": v for k, v in state.params.items()}
    header = {"config": state.config.to_dict(), "rng_seed": state.rng_seed}
    if state.optimizer:
        header["optimizer"] = state.optimizer["header"]
        for moment in ("m", "v"):
            for k, v in state.optimizer.get(moment, {}).items():
                arrays[f"opt_{moment}/{k}"] = v
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    # fixed zip timestamps keep identical states byte-identical on disk
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0)), buf.getvalue())


def load_checkpoint(path) -> ModelState:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        params, opt = {}, {}
        for key in data.files:
            if key.startswith("param/"):
                params[key[6:]] = data[key].copy()
            elif key.startswith("opt_"):
                moment, name = key[4:].split("/", 1)
                opt.setdefault(moment, {})[name] = data[key].copy()
    optimizer = {}
    if "optimizer" in header:
        optimizer = {"header": header["optimizer"], **opt}
    return ModelState(params, NetworkConfig.from_dict(header["config"]), header["rng_seed"], optimizer)
