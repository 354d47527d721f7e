"""Seeded synthetic test clouds and distortions.

These stand in for subjective databases in tests and demos: each generator
returns a textured, colored surface so that the projected views carry
structure for the saliency and Sobel stages to respond to.
"""

from __future__ import annotations

import numpy as np

from .pointcloud_io import PointCloud, bounding_box


def _stripes(u, v, freq=4.0):
    """Smooth two-tone texture in [0, 1]."""
    return 0.5 + 0.5 * np.sin(2 * np.pi * freq * u) * np.cos(2 * np.pi * freq * v)


def _palette(t, base=(200, 60, 40), alt=(30, 90, 210)):
    base, alt = np.array(base, float), np.array(alt, float)
    return np.rint(base[None] * t[:, None] + alt[None] * (1 - t[:, None])).astype(np.uint8)


def cube(n=20000, seed=0) -> PointCloud:
    rng = np.random.default_rng(seed)
    face = rng.integers(0, 6, n)
    uv = rng.random((n, 2))
    xyz = np.empty((n, 3))
    axis = face // 2
    side = (face % 2).astype(float)
    for a in range(3):
        sel = axis == a
        others = [k for k in range(3) if k != a]
        xyz[sel, a] = side[sel]
        xyz[sel, others[0]] = uv[sel, 0]
        xyz[sel, others[1]] = uv[sel, 1]
    t = _stripes(uv[:, 0], uv[:, 1], 3.0)
    return PointCloud(xyz, _palette(t))


def sphere(n=20000, seed=1) -> PointCloud:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    lat = np.arcsin(v[:, 2]) / np.pi + 0.5
    lon = np.arctan2(v[:, 1], v[:, 0]) / (2 * np.pi) + 0.5
    t = _stripes(lat, lon, 4.0)
    return PointCloud(v, _palette(t, (240, 200, 40), (40, 120, 60)))


def plane(n=20000, seed=2) -> PointCloud:
    rng = np.random.default_rng(seed)
    uv = rng.random((n, 2))
    z = 0.05 * np.sin(2 * np.pi * uv[:, 0]) * np.sin(2 * np.pi * uv[:, 1])
    xyz = np.column_stack([uv, z])
    t = _stripes(uv[:, 0], uv[:, 1], 5.0)
    return PointCloud(xyz, _palette(t, (20, 20, 20), (230, 180, 120)))


def blob(n=20000, seed=3) -> PointCloud:
    rng = np.random.default_rng(seed)
    xyz = rng.normal(size=(n, 3)) * np.array([1.0, 0.7, 0.5])
    t = 1 / (1 + np.exp(-3 * xyz[:, 0]))
    return PointCloud(xyz, _palette(t, (180, 30, 160), (250, 240, 90)))


def torus(n=20000, seed=4, major=1.0, minor=0.35) -> PointCloud:
    rng = np.random.default_rng(seed)
    a = rng.random(n) * 2 * np.pi
    b = rng.random(n) * 2 * np.pi
    xyz = np.column_stack([
        (major + minor * np.cos(b)) * np.cos(a),
        (major + minor * np.cos(b)) * np.sin(a),
        minor * np.sin(b),
    ])
    rgb = np.column_stack([
        127.5 + 127.5 * np.cos(a),
        127.5 + 127.5 * np.cos(a + 2 * np.pi / 3),
        127.5 + 127.5 * np.cos(b),
    ])
    return PointCloud(xyz, np.rint(rgb).astype(np.uint8))


GENERATORS = {"cube": cube, "sphere": sphere, "plane": plane, "blob": blob, "torus": torus}


def geometry_noise(pc: PointCloud, sigma_fraction: float, seed=0) -> PointCloud:
    """Add isotropic Gaussian jitter with std ``sigma_fraction`` times the bbox diagonal."""
    if sigma_fraction == 0:
        return pc
    rng = np.random.default_rng(seed)
    sigma = sigma_fraction * bounding_box(pc).diagonal
    return PointCloud(pc.xyz + rng.normal(scale=sigma, size=pc.xyz.shape), pc.rgb)


def color_noise(pc: PointCloud, sigma: float, seed=0) -> PointCloud:
    """Add per-channel Gaussian noise of ``sigma`` gray levels, rounded and clipped."""
    if sigma == 0:
        return pc
    rng = np.random.default_rng(seed)
    rgb = pc.rgb.astype(float) + rng.normal(scale=sigma, size=pc.rgb.shape)
    return PointCloud(pc.xyz, np.clip(np.rint(rgb), 0, 255).astype(np.uint8))
