"""Image-signature saliency on block-downsampled views.

Pipeline per view: grayscale -> box-filter downsample by ``s`` -> sign of the
orthonormal 2D DCT -> inverse DCT -> elementwise square.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ScaleTooLarge
from .projection import ProjectionView, to_grayscale

DEFAULT_SCALE = 16


@dataclass(frozen=True)
class DownsampledImage:
    data: np.ndarray
    scale: int


@dataclass(frozen=True)
class SignatureMatrix:
    data: np.ndarray


@dataclass(frozen=True)
class SaliencyMap:
    data: np.ndarray
    scale: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, SaliencyMap):
            return NotImplemented
        return self.scale == other.scale and np.array_equal(self.data, other.data)

    __hash__ = None


def downsample(img: np.ndarray, s: int) -> DownsampledImage:
    """Mean of each s-by-s block; rows/columns past the last full block are dropped."""
    img = np.asarray(img, dtype=np.float64)
    s = int(s)
    if s < 1:
        raise ValueError(f"scale must be a positive integer, got {s}")
    h, w = img.shape
    if h < s or w < s:
        raise ScaleTooLarge(f"scale {s} exceeds image size {h}x{w}")
    hb, wb = h // s, w // s
    blocks = img[: hb * s, : wb * s].reshape(hb, s, wb, s)
    return DownsampledImage(blocks.mean(axis=(1, 3)), s)


@lru_cache(maxsize=64)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis: row k holds c_k cos(pi (2i + 1) k / 2n)."""
    i = np.arange(n)
    k = i[:, None]
    m = np.cos(np.pi * (2 * i[None, :] + 1) * k / (2 * n))
    m *= np.sqrt(2.0 / n)
    m[0] /= np.sqrt(2.0)
    m.setflags(write=False)
    return m


def dct2(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    m, n = x.shape
    return dct_matrix(m) @ x @ dct_matrix(n).T


def idct2(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    m, n = coeffs.shape
    return dct_matrix(m).T @ coeffs @ dct_matrix(n)


# coefficients below this multiple of eps * max(M, N) * ||x||_F are rounding
# residue of an exact zero (e.g. every AC term of a constant image)
SIGN_ZERO_TOL = 4.0


def signature(d: DownsampledImage) -> SignatureMatrix:
    """Elementwise sign of the DCT, with rounding-level coefficients mapped to 0."""
    coeffs = dct2(d.data)
    tol = SIGN_ZERO_TOL * np.finfo(np.float64).eps * max(coeffs.shape) * np.linalg.norm(d.data)
    sig = np.sign(coeffs)
    sig[np.abs(coeffs) <= tol] = 0.0
    return SignatureMatrix(sig)


def saliency_map(d: DownsampledImage, blur_sigma: float = 0.0) -> SaliencyMap:
    """Squared inverse transform of the image signature.

    ``blur_sigma`` (in map pixels) optionally Gaussian-smooths the result, as
    the original image-signature detector does. It is off by default.
    """
    recon = idct2(signature(d).data)
    sal = recon * recon
    if blur_sigma > 0:
        sal = gaussian_filter(sal, blur_sigma, mode="reflect")
    return SaliencyMap(sal, d.scale)


def extract_view_saliency(view: ProjectionView, s: int = DEFAULT_SCALE, blur_sigma: float = 0.0) -> SaliencyMap:
    return saliency_map(downsample(to_grayscale(view), s), blur_sigma)
