"""Six-view orthographic rendering of point clouds.

Each view looks at the cloud from one end of a coordinate axis. All views
share one world-to-pixel scale derived from the cloud's bounding box, so the
rendering is invariant to translation and uniform scaling of the input.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCloud
from .pointcloud_io import PointCloud, bounding_box

AXES = ("+X", "-X", "+Y", "-Y", "+Z", "-Z")
AXIS_CODES = {label: i for i, label in enumerate(AXES)}

# (right, up, toward-viewer) unit vectors per view. A point's depth is its
# distance along -toward; smaller depth means nearer the viewer.
_CAMERAS = {
    "+X": ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
    "-X": ((0, 0, 1), (0, 1, 0), (-1, 0, 0)),
    "+Y": ((1, 0, 0), (0, 0, -1), (0, 1, 0)),
    "-Y": ((1, 0, 0), (0, 0, 1), (0, -1, 0)),
    "+Z": ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    "-Z": ((-1, 0, 0), (0, 1, 0), (0, 0, -1)),
}

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class RenderParams:
    resolution: int = 512
    splat_radius: int = 1
    background: int = 255
    padding_fraction: float = 0.02

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 64:
            raise ValueError(f"resolution must be an integer >= 64, got {self.resolution}")
        if self.resolution > 65535:
            raise ValueError("resolution must fit in 16 bits")
        if int(self.splat_radius) != self.splat_radius or not 0 <= self.splat_radius <= 65535:
            raise ValueError(f"splat_radius must be a nonnegative integer, got {self.splat_radius}")
        if int(self.background) != self.background or not 0 <= self.background <= 255:
            raise ValueError(f"background must be a gray level in [0, 255], got {self.background}")
        if not 0.0 <= self.padding_fraction < 0.5:
            raise ValueError(f"padding_fraction must lie in [0, 0.5), got {self.padding_fraction}")

    def check_scale(self, scale: int):
        if scale < 1 or self.resolution % scale:
            raise ValueError(f"resolution {self.resolution} is not a multiple of scale {scale}")

    def as_dict(self) -> dict:
        return {
            "resolution": int(self.resolution),
            "splat_radius": int(self.splat_radius),
            "background": int(self.background),
            "padding_fraction": float(self.padding_fraction),
        }


@dataclass(frozen=True)
class ProjectionView:
    axis_label: str
    rgb: np.ndarray  # (H, W, 3) uint8
    mask: np.ndarray  # (H, W) bool

    @property
    def resolution(self) -> tuple[int, int]:
        return self.mask.shape

    def grayscale(self) -> np.ndarray:
        return to_grayscale(self)


@dataclass(frozen=True)
class ProjectionSet:
    views: tuple
    params: RenderParams

    def __post_init__(self):
        labels = [v.axis_label for v in self.views]
        if sorted(labels) != sorted(AXES):
            raise ValueError(f"a projection set needs exactly one view per axis, got {labels}")

    def __getitem__(self, label: str) -> ProjectionView:
        for v in self.views:
            if v.axis_label == label:
                return v
        raise KeyError(label)

    def __iter__(self):
        return iter(self.views)

    def __len__(self):
        return len(self.views)


def splat_offsets(radius: int) -> np.ndarray:
    """Pixel offsets (drow, dcol) of a filled disc; radius 1 gives the full 3x3 block."""
    r = int(radius)
    d = np.arange(-r, r + 1)
    dr, dc = np.meshgrid(d, d, indexing="ij")
    keep = dr ** 2 + dc ** 2 <= (r + 0.5) ** 2
    return np.column_stack([dr[keep], dc[keep]])


def _render_one(label, xyz, rgb, center, scale, params: RenderParams) -> ProjectionView:
    res = params.resolution
    right, up, toward = (np.asarray(v, dtype=np.float64) for v in _CAMERAS[label])
    rel = xyz - center
    col = np.floor(rel @ right * scale + res / 2.0).astype(np.int64)
    row = np.floor(res / 2.0 - rel @ up * scale).astype(np.int64)
    np.clip(col, 0, res - 1, out=col)
    np.clip(row, 0, res - 1, out=row)
    depth = -(rel @ toward)

    # nearest first, lower index first on equal depth
    order = np.lexsort((np.arange(len(depth)), depth))
    offs = splat_offsets(params.splat_radius)
    rr = row[order, None] + offs[None, :, 0]
    cc = col[order, None] + offs[None, :, 1]
    owner = np.broadcast_to(order[:, None], rr.shape)
    inside = (rr >= 0) & (rr < res) & (cc >= 0) & (cc < res)
    flat = (rr * res + cc)[inside]
    owner = owner[inside]
    # np.unique reports the first occurrence, i.e. the winning point per pixel
    pix, first = np.unique(flat, return_index=True)
    winners = owner[first]

    img = np.full((res * res, 3), params.background, dtype=np.uint8)
    mask = np.zeros(res * res, dtype=bool)
    img[pix] = rgb[winners]
    mask[pix] = True
    img = img.reshape(res, res, 3)
    mask = mask.reshape(res, res)
    img.setflags(write=False)
    mask.setflags(write=False)
    return ProjectionView(label, img, mask)


def render_views(pc: PointCloud, params: RenderParams | None = None, threads: int = 1) -> ProjectionSet:
    """Render ``pc`` into the six axis-aligned orthographic views."""
    params = params or RenderParams()
    box = bounding_box(pc)
    if box.diagonal == 0.0:
        raise DegenerateCloud("cannot render a cloud whose bounding box has zero diagonal")
    span = float(box.extent.max())
    scale = params.resolution * (1.0 - 2.0 * params.padding_fraction) / span
    args = (pc.xyz, pc.rgb, box.center, scale, params)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(AXES))) as pool:
            views = list(pool.map(lambda lb: _render_one(lb, *args), AXES))
    else:
        views = [_render_one(lb, *args) for lb in AXES]
    return ProjectionSet(tuple(views), params)


def to_grayscale(view: ProjectionView) -> np.ndarray:
    """BT.601 luma of the view, scaled to [0, 1]."""
    return (view.rgb.astype(np.float64) @ LUMA) / 255.0
