"""Core pixel containers, PNG I/O, gray conversion and scribble rasterization.

Conventions used throughout the package:

- image arrays are uint8, shape (h, w) for gray or (h, w, 3) for RGB
- binary masks are uint8 arrays of {0, 1}, shape (h, w)
- label rasters are uint8 arrays of {UNKNOWN, FG_SEED, BG_SEED}
- stroke points are (x, y) integer pixel coordinates, x along width
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import DimensionMismatchError, OutOfBoundsError, UnsupportedFormatError

UNKNOWN = 0
FG_SEED = 1
BG_SEED = 2

# ITU-R 601 luma weights
_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Raster:
    """8-bit image, 1 (gray) or 3 (RGB) channels."""

    data: np.ndarray  # (h, w) or (h, w, 3) uint8

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.uint8)
        if a.ndim == 3 and a.shape[2] == 1:
            a = a[:, :, 0]
        if a.ndim not in (2, 3) or (a.ndim == 3 and a.shape[2] != 3):
            raise ValueError(f"bad raster shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("empty raster")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel {0, 1} labeling, 1 = foreground."""

    labels: np.ndarray  # (h, w) uint8 in {0, 1}

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.labels, dtype=np.uint8))
        if a.ndim != 2:
            raise ValueError(f"bad mask shape {a.shape}")
        if a.max(initial=0) > 1:
            raise ValueError("mask values must be 0 or 1")
        a.setflags(write=False)
        object.__setattr__(self, "labels", a)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def area(self) -> int:
        return int(self.labels.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True)
class Stroke:
    label: str  # "fg" or "bg"
    points: tuple  # ((x, y), ...)
    radius: int = 1

    def __post_init__(self):
        if self.label not in ("fg", "bg"):
            raise ValueError(f"stroke label must be fg or bg, got {self.label!r}")
        if self.radius < 1:
            raise ValueError("stroke radius must be >= 1")
        pts = tuple((int(x), int(y)) for x, y in self.points)
        if not pts:
            raise ValueError("stroke needs at least one point")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class Annotation:
    """Ordered list of labeled brush strokes; later strokes win conflicts."""

    strokes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "strokes", tuple(self.strokes))

    def with_stroke(self, stroke: Stroke) -> "Annotation":
        return Annotation(self.strokes + (stroke,))

    def has_label(self, label: str) -> bool:
        return any(s.label == label for s in self.strokes)

    def to_dict(self) -> dict:
        return {
            "strokes": [
                {"label": s.label, "radius": s.radius, "points": [list(p) for p in s.points]}
                for s in self.strokes
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        return cls(
            tuple(
                Stroke(s["label"], tuple(tuple(p) for p in s["points"]), int(s["radius"]))
                for s in d["strokes"]
            )
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Annotation":
        return cls.from_dict(json.loads(text))


def load_image(path) -> Raster:
    """Load an 8-bit gray or RGB PNG. Alpha is dropped, 16-bit rejected."""
    try:
        img = Image.open(path)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise UnsupportedFormatError(f"{path}: cannot open ({e})") from e
    with img:
        if img.format != "PNG":
            raise UnsupportedFormatError(f"{path}: not a PNG (format={img.format})")
        if img.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
            raise UnsupportedFormatError(f"{path}: 16-bit/float PNG not supported")
        if img.mode in ("L",):
            return Raster(np.asarray(img))
        if img.mode in ("RGB",):
            return Raster(np.asarray(img))
        if img.mode in ("LA",):
            return Raster(np.asarray(img.convert("L")))
        if img.mode in ("RGBA", "P", "PA", "1"):
            # palette expands through RGBA so palette transparency also drops
            return Raster(np.asarray(img.convert("RGBA"))[:, :, :3])
        raise UnsupportedFormatError(f"{path}: unsupported PNG mode {img.mode}")


def save_image(img: Raster, path) -> None:
    Image.fromarray(img.data).save(path, format="PNG")


def to_gray(img: Raster) -> Raster:
    """ITU-R 601 gray conversion; identity on gray input."""
    if img.channels == 1:
        return img
    g = np.rint(img.data.astype(np.float64) @ _GRAY_WEIGHTS)
    return Raster(np.clip(g, 0, 255).astype(np.uint8))


def load_mask(path, expect_shape: tuple[int, int] | None = None) -> BinaryMask:
    """Load a gray PNG as a binary mask; >= 128 maps to foreground."""
    r = load_image(path)
    gray = to_gray(r)
    mask = BinaryMask((gray.data >= 128).astype(np.uint8))
    if expect_shape is not None and mask.shape != tuple(expect_shape):
        raise DimensionMismatchError(f"{path}: mask {mask.shape} != expected {tuple(expect_shape)}")
    return mask


def save_mask(mask: BinaryMask, path) -> None:
    Image.fromarray((mask.labels * 255).astype(np.uint8), mode="L").save(path, format="PNG")


def mask_to_png_bytes(mask: BinaryMask) -> bytes:
    import io

    buf = io.BytesIO()
    Image.fromarray((mask.labels * 255).astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def _disk_offsets(radius: int) -> np.ndarray:
    r = int(radius)
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    keep = dx * dx + dy * dy <= r * r
    return np.stack([dx[keep], dy[keep]], axis=1)  # (m, 2) of (dx, dy)


def _line_points(p0, p1):
    """Integer points along the segment, sampled at <= 1 px spacing."""
    x0, y0 = p0
    x1, y1 = p1
    n = max(abs(x1 - x0), abs(y1 - y0))
    if n == 0:
        return [(x0, y0)]
    ts = np.arange(n + 1) / n
    xs = np.rint(x0 + ts * (x1 - x0)).astype(int)
    ys = np.rint(y0 + ts * (y1 - y0)).astype(int)
    return list(zip(xs.tolist(), ys.tolist()))


def stroke_pixels(stroke: Stroke, width: int, height: int) -> np.ndarray:
    """Boolean (h, w) coverage of a stroke: disks at each point plus segments."""
    cover = np.zeros((height, width), dtype=bool)
    offs = _disk_offsets(stroke.radius)
    centers = []
    pts = stroke.points
    for i, p in enumerate(pts):
        centers.append(p)
        if i + 1 < len(pts):
            centers.extend(_line_points(p, pts[i + 1])[1:-1])
    c = np.array(centers)  # (k, 2) of (x, y)
    xs = (c[:, None, 0] + offs[None, :, 0]).ravel()
    ys = (c[:, None, 1] + offs[None, :, 1]).ravel()
    keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    cover[ys[keep], xs[keep]] = True
    return cover


def rasterize(ann: Annotation, width: int, height: int) -> np.ndarray:
    """Paint strokes into a label raster; later strokes overwrite earlier ones.

    Raises OutOfBoundsError if any stroke point lies outside the image.
    """
    out = np.full((height, width), UNKNOWN, dtype=np.uint8)
    for s in ann.strokes:
        for x, y in s.points:
            if not (0 <= x < width and 0 <= y < height):
                raise OutOfBoundsError(f"stroke point ({x}, {y}) outside {width}x{height}")
        out[stroke_pixels(s, width, height)] = FG_SEED if s.label == "fg" else BG_SEED
    return out
