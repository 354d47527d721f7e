import struct

import numpy as np
import pytest

from rrcap import synthetic
from rrcap.errors import BadMagic, ChecksumMismatch, PayloadError, ScaleTooLarge, Truncated, UnsupportedVersion
from rrcap.payload import decode, encode, extract_reference, load, payload_size, save
from rrcap.projection import RenderParams

P64 = RenderParams(resolution=64, splat_radius=0)


@pytest.fixture(scope="module")
def corner_payload():
    xyz = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    from rrcap.pointcloud_io import PointCloud

    return extract_reference(PointCloud(xyz, np.full((8, 3), 90)), P64, 16)


@pytest.fixture(scope="module")
def cube_payload():
    return extract_reference(synthetic.cube(3000, seed=2), RenderParams(resolution=128), 8)


def test_corner_cloud_dimensions(corner_payload):
    assert corner_payload.scale == 16
    assert len(corner_payload.views) == 6
    for v in corner_payload.views:
        assert v.saliency.shape == (4, 4)
        assert np.isfinite(v.sobel_std) and v.sobel_std >= 0


def test_extract_deterministic_bytes(small_cube):
    p = RenderParams(resolution=128)
    assert encode(extract_reference(small_cube, p, 16)) == encode(extract_reference(small_cube, p, 16))
    assert encode(extract_reference(small_cube, p, 16, threads=4)) == encode(extract_reference(small_cube, p, 16))


def test_size_formula():
    # magic 4 + version 2 + params (2 + 2 + 1 + 8) + scale 2 + 6 * (5 + 8*32*32 + 8) + crc 4
    expected = 4 + 2 + 13 + 2 + 6 * (5 + 8 * 32 * 32 + 8) + 4
    assert payload_size(512, 16) == expected
    assert expected < 64 * 1024


def test_round_trip(cube_payload):
    blob = encode(cube_payload)
    assert len(blob) == payload_size(128, 8)
    back = decode(blob)
    assert back == cube_payload
    assert encode(back) == blob


def test_file_round_trip(tmp_path, cube_payload):
    save(tmp_path / "r.rrcap", cube_payload)
    assert load(tmp_path / "r.rrcap") == cube_payload


def test_body_flip_is_checksum_mismatch(cube_payload):
    blob = bytearray(encode(cube_payload))
    blob[200] ^= 0x01
    with pytest.raises(ChecksumMismatch):
        decode(bytes(blob))


def test_empty_is_truncated():
    with pytest.raises(Truncated):
        decode(b"")


def test_bad_magic(cube_payload):
    blob = b"XXXX" + encode(cube_payload)[4:]
    with pytest.raises(BadMagic):
        decode(blob)


def test_unsupported_version(cube_payload):
    import zlib

    body = bytearray(encode(cube_payload)[:-4])
    struct.pack_into("<H", body, 4, 2)
    with pytest.raises(UnsupportedVersion):
        decode(bytes(body) + struct.pack("<I", zlib.crc32(bytes(body))))


def test_truncated_tail(cube_payload):
    with pytest.raises(PayloadError):
        decode(encode(cube_payload)[:-100])


def test_scale_mismatch_rejected(small_cube):
    with pytest.raises(ValueError):
        extract_reference(small_cube, RenderParams(resolution=100), 16)


def test_scale_too_large_propagates(small_cube):
    # 64 is a multiple of 64 but leaves a 1x1 map, which is still legal;
    # scale larger than the resolution is not
    with pytest.raises((ScaleTooLarge, ValueError)):
        extract_reference(small_cube, P64, 128)
