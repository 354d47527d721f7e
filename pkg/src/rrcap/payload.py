"""Reference-side payload: what the sender transmits instead of the cloud.

Byte layout (little-endian throughout)::

    b"RRCP"                      magic
    u16 version                  = 1
    u16 resolution, u16 splat_radius, u8 background, f64 padding_fraction
    u16 scale
    6 x { u8 axis code, u16 rows, u16 cols, f64[rows*cols] saliency (row-major), f64 sobel_std }
    u32 CRC32 of every preceding byte

The size depends only on (resolution, scale), never on the point count.
"""

from __future__ import annotations

import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, ChecksumMismatch, PayloadError, Truncated, UnsupportedVersion
from .pointcloud_io import PointCloud
from .projection import AXES, RenderParams, render_views, to_grayscale
from .quality import sobel_spatial_std
from .saliency import DEFAULT_SCALE, SaliencyMap, extract_view_saliency

MAGIC = b"RRCP"
VERSION = 1

_HEAD = struct.Struct("<4sHHHBdH")
_VIEW_HEAD = struct.Struct("<BHH")
_F64 = struct.Struct("<d")
_CRC = struct.Struct("<I")


@dataclass(frozen=True)
class ViewRecord:
    axis_label: str
    saliency: SaliencyMap
    sobel_std: float

    def __eq__(self, other):
        if not isinstance(other, ViewRecord):
            return NotImplemented
        return (
            self.axis_label == other.axis_label
            and self.saliency == other.saliency
            and _F64.pack(self.sobel_std) == _F64.pack(other.sobel_std)
        )

    __hash__ = None


@dataclass(frozen=True)
class ReferencePayload:
    render_params: RenderParams
    scale: int
    views: tuple
    version: int = VERSION

    def __post_init__(self):
        labels = [v.axis_label for v in self.views]
        if len(labels) != 6 or set(labels) != set(AXES):
            raise ValueError(f"payload needs one record per axis, got {labels}")
        if self.scale < 1:
            raise ValueError(f"scale must be positive, got {self.scale}")
        side = self.render_params.resolution // self.scale
        for v in self.views:
            if v.saliency.shape != (side, side):
                raise ValueError(f"view {v.axis_label}: map shape {v.saliency.shape}, expected {(side, side)}")
            if not (np.isfinite(v.sobel_std) and v.sobel_std >= 0):
                raise ValueError(f"view {v.axis_label}: sobel_std must be finite and >= 0")

    def view(self, label: str) -> ViewRecord:
        for v in self.views:
            if v.axis_label == label:
                return v
        raise KeyError(label)


def extract_reference(
    pc: PointCloud,
    render_params: RenderParams | None = None,
    s: int = DEFAULT_SCALE,
    blur_sigma: float = 0.0,
    threads: int = 1,
) -> ReferencePayload:
    render_params = render_params or RenderParams()
    render_params.check_scale(s)
    views = render_views(pc, render_params, threads=threads)

    def one(view):
        return ViewRecord(view.axis_label, extract_view_saliency(view, s, blur_sigma), sobel_spatial_std(to_grayscale(view)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, 6)) as pool:
            records = tuple(pool.map(one, views))
    else:
        records = tuple(one(v) for v in views)
    return ReferencePayload(render_params, int(s), records)


def encode(p: ReferencePayload) -> bytes:
    rp = p.render_params
    parts = [_HEAD.pack(MAGIC, p.version, rp.resolution, rp.splat_radius, rp.background, rp.padding_fraction, p.scale)]
    for label in AXES:
        rec = p.view(label)
        data = np.ascontiguousarray(rec.saliency.data, dtype="<f8")
        rows, cols = data.shape
        parts.append(_VIEW_HEAD.pack(AXES.index(label), rows, cols))
        parts.append(data.tobytes())
        parts.append(_F64.pack(rec.sobel_std))
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def decode(buf: bytes) -> ReferencePayload:
    buf = bytes(buf)
    if len(buf) < _HEAD.size + _CRC.size:
        raise Truncated(f"payload of {len(buf)} bytes is shorter than the fixed header")
    if buf[:4] != MAGIC:
        raise BadMagic(f"bad magic {buf[:4]!r}")
    body, (crc,) = buf[:-_CRC.size], _CRC.unpack(buf[-_CRC.size:])
    if zlib.crc32(body) != crc:
        raise ChecksumMismatch("payload CRC32 does not match")
    _, version, res, splat, bg, pad, scale = _HEAD.unpack_from(body, 0)
    if version != VERSION:
        raise UnsupportedVersion(f"payload version {version} (supported: {VERSION})")
    off = _HEAD.size
    records = []
    for _ in range(6):
        if off + _VIEW_HEAD.size > len(body):
            raise Truncated("payload ends inside a view record header")
        code, rows, cols = _VIEW_HEAD.unpack_from(body, off)
        off += _VIEW_HEAD.size
        if code >= len(AXES):
            raise PayloadError(f"unknown axis code {code}")
        n = rows * cols
        if off + 8 * n + _F64.size > len(body):
            raise Truncated("payload ends inside a saliency map")
        data = np.frombuffer(body, "<f8", n, off).astype(np.float64).reshape(rows, cols)
        off += 8 * n
        (sobel,) = _F64.unpack_from(body, off)
        off += _F64.size
        records.append(ViewRecord(AXES[code], SaliencyMap(data, scale), sobel))
    if off != len(body):
        raise PayloadError(f"{len(body) - off} unexpected trailing bytes in payload")
    try:
        params = RenderParams(res, splat, bg, pad)
        return ReferencePayload(params, scale, tuple(records), version)
    except ValueError as exc:
        raise PayloadError(f"inconsistent payload: {exc}") from None


def payload_size(resolution: int, scale: int) -> int:
    side = resolution // scale
    return _HEAD.size + 6 * (_VIEW_HEAD.size + 8 * side * side + _F64.size) + _CRC.size


def save(path, p: ReferencePayload):
    with open(path, "wb") as fh:
        fh.write(encode(p))


def load(path) -> ReferencePayload:
    with open(path, "rb") as fh:
        return decode(fh.read())
