"""Image-based full-reference baselines on the projected views."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParamMismatch
from .projection import ProjectionSet, to_grayscale
from .quality import SsimParams, ssim_scalar

PSNR_CAP_DB = 100.0


@dataclass(frozen=True)
class BaselineScore:
    psnr_db: float
    ssim: float

    def as_dict(self) -> dict:
        return {"psnr_db": self.psnr_db, "ssim": self.ssim}


def _paired(ref: ProjectionSet, dist: ProjectionSet):
    if ref.params != dist.params:
        raise ParamMismatch(f"projection sets rendered with different params: {ref.params} vs {dist.params}")
    for view in ref:
        other = dist[view.axis_label]
        if view.resolution != other.resolution:
            raise ParamMismatch(f"view {view.axis_label}: {view.resolution} vs {other.resolution}")
        yield to_grayscale(view), to_grayscale(other)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB for images in [0, 1]; identical images give the 100 dB cap."""
    mse = float(np.mean((np.asarray(a, np.float64) - np.asarray(b, np.float64)) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(1.0 / mse))


def projected_psnr(ref: ProjectionSet, dist: ProjectionSet) -> float:
    return float(np.mean([psnr(a, b) for a, b in _paired(ref, dist)]))


def projected_ssim(ref: ProjectionSet, dist: ProjectionSet, p: SsimParams | None = None) -> float:
    return float(np.mean([ssim_scalar(a, b, p) for a, b in _paired(ref, dist)]))


def baseline_scores(ref: ProjectionSet, dist: ProjectionSet) -> BaselineScore:
    return BaselineScore(projected_psnr(ref, dist), projected_ssim(ref, dist))
