"""PNG (8-bit display + mask) and PFM (linear HDR) file helpers."""
import numpy as np
from PIL import Image


def save_png(path, display):
    arr = np.clip(np.round(np.asarray(display) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, optimize=False)


def load_png(path):
    """Return float64 HWC image in [0, 1]."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def save_mask(path, mask):
    Image.fromarray(np.asarray(mask, dtype=np.uint8) * 255).save(path, optimize=False)


def load_mask(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 127


def save_pfm(path, rgb):
    rgb = np.asarray(rgb, dtype="<f4")
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"PF\n{w} {h}\n-1.0\n".encode("ascii"))
        # PFM stores rows bottom-to-top
        fh.write(np.ascontiguousarray(rgb[::-1]).tobytes())


def load_pfm(path):
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header != b"PF":
            raise ValueError(f"{path}: only colour PFM ('PF') is supported")
        w, h = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(), dtype=dtype).reshape(h, w, 3)
    return data[::-1].astype(np.float64)
