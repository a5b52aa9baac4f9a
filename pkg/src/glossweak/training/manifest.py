"""Dataset manifest: one JSON object per line.

Line schema (keys written sorted, no extra whitespace beyond json defaults):

    image_ref        str   path of the 8-bit PNG, relative to the manifest's directory
    mask_ref         str   path of the single-channel mask PNG, or null
    label_value      float gloss on the 7-point scale in [1, 7], or null when unlabeled
    label_class      "strong" | "weak" | null
    label_kind       "bsdf" | "imagestats" | "industry" | null (always null for strong)
    label_provenance str   free text: formula constants, rater ids, raw metric value
    scene            obj   full SceneSpec as produced by SceneSpec.to_dict()
    variation_group  str   "<type>:<group id>" with type in rotation|bumpiness|illumination|specularity, or null
    meta             obj   free-form extras (e.g. synthetic ground truth)
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from ..labels import LabelRecord

VARIATION_TYPES = ("rotation", "bumpiness", "illumination", "specularity")


@dataclass(frozen=True)
class ManifestRow:
    image_ref: str
    scene: dict
    label: Optional[LabelRecord] = None
    mask_ref: Optional[str] = None
    variation_group: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def variation_type(self):
        return None if self.variation_group is None else self.variation_group.split(":", 1)[0]

    def with_label(self, label):
        return replace(self, label=label)

    def to_json(self):
        lab = self.label
        return json.dumps({
            "image_ref": self.image_ref,
            "mask_ref": self.mask_ref,
            "label_value": None if lab is None else lab.value,
            "label_class": None if lab is None else lab.label_class,
            "label_kind": None if lab is None else lab.kind,
            "label_provenance": None if lab is None else lab.provenance,
            "scene": self.scene,
            "variation_group": self.variation_group,
            "meta": self.meta,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, line):
        d = json.loads(line)
        label = None
        if d.get("label_value") is not None:
            label = LabelRecord(d["label_value"], d["label_class"], d.get("label_kind"),
                                d.get("label_provenance") or "")
        return cls(image_ref=d["image_ref"], scene=d["scene"], label=label, mask_ref=d.get("mask_ref"),
                   variation_group=d.get("variation_group"), meta=d.get("meta") or {})


@dataclass
class DatasetManifest:
    rows: list = field(default_factory=list)
    root: Optional[Path] = None

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __eq__(self, other):
        return isinstance(other, DatasetManifest) and self.rows == other.rows

    def resolve(self, ref):
        if ref is None:
            return None
        p = Path(ref)
        return p if p.is_absolute() or self.root is None else self.root / p

    def derive(self, rows):
        return DatasetManifest(list(rows), self.root)

    def strong_rows(self):
        return [r for r in self.rows if r.label is not None and r.label.is_strong]

    def weak_rows(self):
        return [r for r in self.rows if r.label is not None and not r.label.is_strong]

    def dumps(self):
        return "".join(row.to_json() + "\n" for row in self.rows)

    def save(self, path):
        path = Path(path)
        path.write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        path = Path(path)
        rows = [ManifestRow.from_json(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        return cls(rows, path.parent)
