"""Axis-aligned boxes with inclusive integer corners, and their overlap."""

from dataclasses import dataclass

FEATURE = "feature"
IMAGE = "image"


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive-corner box: a box with x_min == x_max is one cell wide.

    ``space`` tags whether the coordinates are feature-map cells or image
    pixels; boxes from different spaces must never be compared.
    """

    x_min: int
    y_min: int
    x_max: int
    y_max: int
    space: str = IMAGE

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"{name} must be integral, got {v!r}")
            object.__setattr__(self, name, int(v))
        if min(self.x_min, self.y_min) < 0:
            raise ValueError(f"negative box coordinate in {self.as_list()}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted box {self.as_list()}")
        if self.space not in (FEATURE, IMAGE):
            raise ValueError(f"unknown coordinate space {self.space!r}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_list(self) -> list:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    def contains(self, other: "BoundingBox") -> bool:
        return (self.x_min <= other.x_min and self.y_min <= other.y_min
                and self.x_max >= other.x_max and self.y_max >= other.y_max)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes in the same space; 0 when disjoint."""
    if a.space != b.space:
        raise ValueError(f"cannot compare a {a.space} box with a {b.space} box")
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min) + 1
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min) + 1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)
