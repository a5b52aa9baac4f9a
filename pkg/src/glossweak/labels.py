"""Gloss label record shared by the strong and weak labelling paths."""
from dataclasses import dataclass
from typing import Optional

STRONG = "strong"
WEAK = "weak"
WEAK_KINDS = ("bsdf", "imagestats", "industry")


@dataclass(frozen=True)
class LabelRecord:
    value: float
    label_class: str = STRONG
    kind: Optional[str] = None
    provenance: str = ""

    def __post_init__(self):
        if not 1.0 <= self.value <= 7.0:
            raise ValueError(f"gloss label {self.value} outside [1, 7]")
        if self.label_class == STRONG and self.kind is not None:
            raise ValueError("strong labels carry no weak kind")
        if self.label_class == WEAK and self.kind not in WEAK_KINDS:
            raise ValueError(f"weak label kind must be one of {WEAK_KINDS}, got {self.kind!r}")
        if self.label_class not in (STRONG, WEAK):
            raise ValueError(f"unknown label class {self.label_class!r}")

    @property
    def is_strong(self):
        return self.label_class == STRONG
