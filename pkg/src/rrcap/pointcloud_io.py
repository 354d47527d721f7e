"""Colored point clouds and their PLY codec.

Only ``vertex`` elements are consumed; any other element (faces, edges, ...)
is parsed just far enough to be skipped.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyCloud,
    MalformedHeader,
    NonFiniteCoordinate,
    TruncatedData,
    UnsupportedFormat,
)

PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

COLOR_ALIASES = (
    ("red", "green", "blue"),
    ("r", "g", "b"),
    ("diffuse_red", "diffuse_green", "diffuse_blue"),
)

NEUTRAL_GRAY = 128


@dataclass(frozen=True)
class PointCloud:
    """Immutable colored point set.

    ``xyz`` is an (n, 3) float64 array, ``rgb`` an (n, 3) uint8 array. Both
    are made read-only at construction.
    """

    xyz: np.ndarray
    rgb: np.ndarray
    colorless: bool = False

    def __post_init__(self):
        xyz = np.array(self.xyz, dtype=np.float64, copy=True)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise ValueError(f"xyz must have shape (n, 3), got {xyz.shape}")
        if not np.all(np.isfinite(xyz)):
            raise NonFiniteCoordinate("point coordinates must be finite")
        rgb_in = np.asarray(self.rgb)
        if rgb_in.shape != xyz.shape:
            raise ValueError(f"rgb shape {rgb_in.shape} does not match xyz shape {xyz.shape}")
        if rgb_in.size and (rgb_in.min() < 0 or rgb_in.max() > 255):
            raise ValueError("color channels must lie in [0, 255]")
        rgb = np.array(rgb_in, dtype=np.uint8, copy=True)
        xyz.setflags(write=False)
        rgb.setflags(write=False)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "rgb", rgb)

    @property
    def count(self) -> int:
        return int(self.xyz.shape[0])

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
            self.colorless == other.colorless
            and np.array_equal(self.xyz, other.xyz)
            and np.array_equal(self.rgb, other.rgb)
        )

    __hash__ = None


@dataclass(frozen=True)
class BoundingBox:
    min_corner: np.ndarray
    max_corner: np.ndarray
    diagonal: float = field(init=False)

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=np.float64)
        hi = np.asarray(self.max_corner, dtype=np.float64)
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)
        object.__setattr__(self, "diagonal", float(np.linalg.norm(hi - lo)))

    @property
    def extent(self) -> np.ndarray:
        return self.max_corner - self.min_corner

    @property
    def center(self) -> np.ndarray:
        return (self.min_corner + self.max_corner) / 2.0


def bounding_box(pc: PointCloud) -> BoundingBox:
    if pc.count < 1:
        raise EmptyCloud("bounding box of an empty cloud is undefined")
    return BoundingBox(pc.xyz.min(axis=0), pc.xyz.max(axis=0))


# -- header parsing -----------------------------------------------------------

@dataclass
class _Property:
    name: str
    dtype: str
    count_dtype: str | None = None  # set for list properties


@dataclass
class _Element:
    name: str
    count: int
    properties: list = field(default_factory=list)

    @property
    def has_list(self) -> bool:
        return any(p.count_dtype for p in self.properties)


def _parse_header(raw: bytes):
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply"):
        raise MalformedHeader("missing 'ply' magic line")
    if end < 0:
        raise MalformedHeader("missing end_header")
    nl = raw.find(b"\n", end)
    if nl < 0:
        # end_header with no newline: no body at all
        body_start = len(raw)
    else:
        body_start = nl + 1
    try:
        text = raw[:end].decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedHeader("header is not ASCII") from exc

    lines = [ln.strip() for ln in text.replace("\r", "").split("\n")]
    if lines[0] != "ply":
        raise MalformedHeader("first header line must be 'ply'")

    fmt = None
    elements: list[_Element] = []
    for ln in lines[1:]:
        if not ln or ln.startswith("comment") or ln.startswith("obj_info"):
            continue
        tok = ln.split()
        key = tok[0]
        if key == "format":
            if len(tok) != 3:
                raise MalformedHeader(f"bad format line: {ln!r}")
            fmt = tok[1]
            if tok[2] != "1.0":
                raise MalformedHeader(f"unsupported PLY version {tok[2]!r}")
        elif key == "element":
            if len(tok) != 3:
                raise MalformedHeader(f"bad element line: {ln!r}")
            try:
                n = int(tok[2])
            except ValueError:
                raise MalformedHeader(f"bad element count: {ln!r}") from None
            if n < 0:
                raise MalformedHeader(f"negative element count: {ln!r}")
            elements.append(_Element(tok[1], n))
        elif key == "property":
            if not elements:
                raise MalformedHeader("property declared before any element")
            if len(tok) >= 2 and tok[1] == "list":
                if len(tok) != 5:
                    raise MalformedHeader(f"bad list property: {ln!r}")
                if tok[2] not in PLY_TYPES or tok[3] not in PLY_TYPES:
                    raise MalformedHeader(f"unknown property type in {ln!r}")
                elements[-1].properties.append(_Property(tok[4], PLY_TYPES[tok[3]], PLY_TYPES[tok[2]]))
            else:
                if len(tok) != 3:
                    raise MalformedHeader(f"bad property line: {ln!r}")
                if tok[1] not in PLY_TYPES:
                    raise MalformedHeader(f"unknown property type {tok[1]!r}")
                elements[-1].properties.append(_Property(tok[2], PLY_TYPES[tok[1]]))
        else:
            raise MalformedHeader(f"unrecognized header line: {ln!r}")

    if fmt is None:
        raise MalformedHeader("missing format line")
    if fmt == "binary_big_endian":
        raise UnsupportedFormat("binary_big_endian PLY is not supported")
    if fmt not in ("ascii", "binary_little_endian"):
        raise MalformedHeader(f"unknown format {fmt!r}")

    names = [e.name for e in elements]
    if "vertex" not in names:
        raise MalformedHeader("no vertex element declared")
    vertex = elements[names.index("vertex")]
    if vertex.has_list:
        raise UnsupportedFormat("list properties on the vertex element are not supported")
    props = [p.name for p in vertex.properties]
    if len(set(props)) != len(props):
        raise MalformedHeader("duplicate vertex property names")
    for axis in "xyz":
        if axis not in props:
            raise MalformedHeader(f"vertex element lacks '{axis}' property")
    return fmt, elements, body_start


def _color_names(vertex: _Element):
    props = {p.name: p for p in vertex.properties}
    for alias in COLOR_ALIASES:
        if all(a in props for a in alias):
            for a in alias:
                if props[a].dtype != "u1":
                    raise UnsupportedFormat(f"color property {a!r} must be uchar")
            return alias
    return None


# -- body parsing -------------------------------------------------------------

def _skip_binary_element(body: bytes, offset: int, elem: _Element) -> int:
    if not elem.has_list:
        size = sum(np.dtype(p.dtype).itemsize for p in elem.properties) * elem.count
        if offset + size > len(body):
            raise TruncatedData(f"element {elem.name!r} runs past end of file")
        return offset + size
    for _ in range(elem.count):
        for p in elem.properties:
            if p.count_dtype:
                cdt = np.dtype("<" + p.count_dtype)
                if offset + cdt.itemsize > len(body):
                    raise TruncatedData(f"element {elem.name!r} runs past end of file")
                n = int(np.frombuffer(body, cdt, 1, offset)[0])
                offset += cdt.itemsize + n * np.dtype(p.dtype).itemsize
            else:
                offset += np.dtype(p.dtype).itemsize
            if offset > len(body):
                raise TruncatedData(f"element {elem.name!r} runs past end of file")
    return offset


def _read_binary(body: bytes, elements, vertex: _Element):
    offset = 0
    for elem in elements:
        if elem is vertex:
            break
        offset = _skip_binary_element(body, offset, elem)
    dt = np.dtype([(p.name, "<" + p.dtype) for p in vertex.properties])
    need = dt.itemsize * vertex.count
    if offset + need > len(body):
        have = max(0, (len(body) - offset) // dt.itemsize)
        raise TruncatedData(f"header declares {vertex.count} vertices, file holds {have}")
    return np.frombuffer(body, dt, vertex.count, offset)


def _read_ascii(body: bytes, elements, vertex: _Element):
    try:
        text = body.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedHeader("ascii PLY body contains non-ASCII bytes") from exc
    lines = text.splitlines()
    pos = 0
    for elem in elements:
        if elem is vertex:
            break
        pos += elem.count
    rows = [ln for ln in lines[pos:pos + vertex.count]]
    # blank lines inside the vertex block count as missing records
    rows = [ln for ln in rows if ln.strip()]
    if len(rows) < vertex.count:
        raise TruncatedData(f"header declares {vertex.count} vertices, file holds {len(rows)}")
    nprop = len(vertex.properties)
    dt = np.dtype([(p.name, p.dtype) for p in vertex.properties])
    out = np.empty(vertex.count, dtype=dt)
    for i, ln in enumerate(rows):
        tok = ln.split()
        if len(tok) < nprop:
            raise TruncatedData(f"vertex record {i} has {len(tok)} of {nprop} values")
        for p, t in zip(vertex.properties, tok):
            try:
                if p.dtype.startswith("f"):
                    out[p.name][i] = float(t)
                else:
                    v = int(t)
                    info = np.iinfo(p.dtype)
                    if not info.min <= v <= info.max:
                        raise MalformedHeader(f"value {v} out of range for property {p.name!r}")
                    out[p.name][i] = v
            except ValueError:
                raise MalformedHeader(f"unparseable value {t!r} in vertex record {i}") from None
    return out


def load_ply(path) -> PointCloud:
    """Load a colored point cloud from an ascii or binary_little_endian PLY.

    Missing color properties give every channel the neutral gray 128 and set
    ``colorless=True`` on the result.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    return parse_ply(raw)


def parse_ply(raw: bytes) -> PointCloud:
    fmt, elements, body_start = _parse_header(raw)
    vertex = next(e for e in elements if e.name == "vertex")
    body = raw[body_start:]
    if fmt == "ascii":
        data = _read_ascii(body, elements, vertex)
    else:
        data = _read_binary(body, elements, vertex)

    xyz = np.column_stack([data[a].astype(np.float64) for a in "xyz"]) if vertex.count else np.zeros((0, 3))
    if not np.all(np.isfinite(xyz)):
        bad = int(np.flatnonzero(~np.isfinite(xyz).all(axis=1))[0])
        raise NonFiniteCoordinate(f"vertex {bad} has a non-finite coordinate")
    names = _color_names(vertex)
    if names is None:
        rgb = np.full((vertex.count, 3), NEUTRAL_GRAY, dtype=np.uint8)
        colorless = True
    else:
        rgb = np.column_stack([data[n] for n in names]) if vertex.count else np.zeros((0, 3), np.uint8)
        colorless = False
    return PointCloud(xyz, rgb, colorless=colorless)


def write_ply(path, pc: PointCloud):
    """Write ``pc`` as binary_little_endian PLY with float32 xyz and uchar rgb."""
    n = pc.count
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {n}\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n"
    )
    dt = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("red", "u1"), ("green", "u1"), ("blue", "u1")])
    v = np.empty(n, dtype=dt)
    for i, a in enumerate("xyz"):
        v[a] = pc.xyz[:, i]
    for i, c in enumerate(("red", "green", "blue")):
        v[c] = pc.rgb[:, i]
    with open(os.fspath(path), "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(v.tobytes())
