"""RR-CAP scoring of a distorted cloud against a reference payload.

Per view the reference and distorted saliency maps are jointly normalized,
compared with SSIM (pooled to a scalar S) and with the Pearson correlation of
their histograms. Each S is raised to a content weight w, the absolute
difference of Sobel-magnitude standard deviations between the reference and
distorted projections. The final score is

    Q = mean_v(S_v ** w_v) * mean_v(hist_corr_v)
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, ImageTooSmall, LengthMismatch, MapSmallerThanWindow, ParamMismatch
from .pointcloud_io import PointCloud
from .projection import AXES, render_views, to_grayscale
from .saliency import extract_view_saliency

if TYPE_CHECKING:
    from .payload import ReferencePayload

CLAMP_EPS = 1e-6
DEFAULT_BINS = 64

FLAG_DEGENERATE_SALIENCY = "degenerate-saliency"
FLAG_DEGENERATE_HISTOGRAM = "degenerate-histogram"
FLAG_CLAMPED = "clamped-similarity"


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    window_sigma: float = 1.5
    C1: float = (0.01 * 1.0) ** 2
    C2: float = (0.03 * 1.0) ** 2

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"SSIM window must be odd and >= 3, got {self.window}")
        if self.window_sigma <= 0:
            raise ValueError("window_sigma must be positive")
        if self.C1 <= 0 or self.C2 <= 0:
            raise ValueError("SSIM stabilizing constants must be positive")

    def kernel(self) -> np.ndarray:
        half = self.window // 2
        x = np.arange(-half, half + 1, dtype=np.float64)
        g = np.exp(-(x ** 2) / (2.0 * self.window_sigma ** 2))
        return g / g.sum()


@dataclass(frozen=True)
class ViewScore:
    axis_label: str
    S: float
    w: float
    weighted: float
    hist_corr: float

    def as_dict(self) -> dict:
        return {"axis": self.axis_label, "S": self.S, "w": self.w, "weighted": self.weighted, "hist_corr": self.hist_corr}


@dataclass(frozen=True)
class QualityReport:
    Q: float
    S_w: float
    H_c: float
    views: tuple
    flags: frozenset = field(default_factory=frozenset)
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "Q": self.Q,
            "S_w": self.S_w,
            "H_c": self.H_c,
            "views": [v.as_dict() for v in self.views],
            "flags": sorted(self.flags),
            "params": self.params,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


# -- elementary measurements --------------------------------------------------

def joint_normalize(m_r, m_d, flags: set | None = None):
    """Divide both maps by their joint maximum.

    Accepts SaliencyMap objects or plain arrays. A zero joint maximum yields two
    all-zero grids and adds the degenerate-saliency flag to ``flags``.
    """
    a = np.asarray(getattr(m_r, "data", m_r), dtype=np.float64)
    b = np.asarray(getattr(m_d, "data", m_d), dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"saliency maps differ in shape: {a.shape} vs {b.shape}")
    peak = max(a.max(), b.max())
    if peak == 0:
        if flags is not None:
            flags.add(FLAG_DEGENERATE_SALIENCY)
        return np.zeros_like(a), np.zeros_like(b)
    return a / peak, b / peak


def _local_mean(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # scipy's "reflect" mode is the half-sample symmetric extension (d c b a | a b c d)
    out = ndimage.correlate1d(x, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(out, kernel, axis=1, mode="reflect")


def ssim_map(a: np.ndarray, b: np.ndarray, p: SsimParams | None = None) -> np.ndarray:
    p = p or SsimParams()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"SSIM inputs differ in shape: {a.shape} vs {b.shape}")
    if min(a.shape) < p.window:
        raise MapSmallerThanWindow(f"map {a.shape} is smaller than the {p.window}x{p.window} window")
    k = p.kernel()
    mu_a = _local_mean(a, k)
    mu_b = _local_mean(b, k)
    var_a = _local_mean(a * a, k) - mu_a * mu_a
    var_b = _local_mean(b * b, k) - mu_b * mu_b
    cov = _local_mean(a * b, k) - mu_a * mu_b
    num = (2 * mu_a * mu_b + p.C1) * (2 * cov + p.C2)
    den = (mu_a * mu_a + mu_b * mu_b + p.C1) * (var_a + var_b + p.C2)
    return num / den


def ssim_scalar(a: np.ndarray, b: np.ndarray, p: SsimParams | None = None) -> float:
    """Mean of the Gaussian-windowed SSIM map."""
    return float(ssim_map(a, b, p).mean())


SOBEL_DERIV = np.array([-1.0, 0.0, 1.0])
SOBEL_SMOOTH = np.array([1.0, 2.0, 1.0])


def sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2 or min(gray.shape) < 3:
        raise ImageTooSmall(f"Sobel filtering needs at least 3x3 pixels, got {gray.shape}")
    gx = ndimage.correlate1d(ndimage.correlate1d(gray, SOBEL_DERIV, axis=1, mode="reflect"), SOBEL_SMOOTH, axis=0, mode="reflect")
    gy = ndimage.correlate1d(ndimage.correlate1d(gray, SOBEL_DERIV, axis=0, mode="reflect"), SOBEL_SMOOTH, axis=1, mode="reflect")
    return np.hypot(gx, gy)


def sobel_spatial_std(gray: np.ndarray) -> float:
    """Population standard deviation of the Sobel gradient magnitude."""
    return float(sobel_magnitude(gray).std())


def content_weight(sobel_std_ref: float, gray_dist: np.ndarray) -> float:
    return abs(sobel_spatial_std(gray_dist) - float(sobel_std_ref))


def histogram(values: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Counts over ``bins`` uniform bins on [0, 1]; 1.0 falls in the last bin."""
    v = np.asarray(values, dtype=np.float64).ravel()
    idx = np.floor(v * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    return np.bincount(idx, minlength=bins)


def pearson(u, v, flags: set | None = None) -> float:
    """Sample Pearson correlation.

    Zero variance in either input gives 1.0 when the inputs are elementwise
    equal and 0.0 otherwise, and adds the degenerate-histogram flag.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise LengthMismatch(f"vectors differ in length: {u.size} vs {v.size}")
    if u.size < 2:
        raise LengthMismatch("correlation needs at least two samples")
    if np.ptp(u) == 0 or np.ptp(v) == 0:
        if flags is not None:
            flags.add(FLAG_DEGENERATE_HISTOGRAM)
        return 1.0 if np.array_equal(u, v) else 0.0
    du = u - u.mean()
    dv = v - v.mean()
    # one square root of the product: integer-valued sums (ranks) then give exact results
    r = float(np.dot(du, dv) / np.sqrt(np.dot(du, du) * np.dot(dv, dv)))
    return min(1.0, max(-1.0, r))


def weighted_similarity(S: float, w: float) -> tuple[float, bool]:
    """Return (clamp(S, eps, 1) ** w, whether the lower clamp fired)."""
    clamped = S < CLAMP_EPS
    return min(max(S, CLAMP_EPS), 1.0) ** float(w), clamped


# -- full metric --------------------------------------------------------------

def score(
    payload: "ReferencePayload",
    distorted: PointCloud,
    use_weighting: bool = True,
    use_histogram: bool = True,
    bins: int = DEFAULT_BINS,
    ssim_params: SsimParams | None = None,
    normalize_weights: bool = False,
    blur_sigma: float = 0.0,
    threads: int = 1,
) -> QualityReport:
    """Score ``distorted`` against the reference ``payload``.

    ``use_weighting=False`` pools the raw per-view S values instead of S**w;
    ``use_histogram=False`` fixes H_c to 1. ``normalize_weights`` rescales the
    six weights to mean one before exponentiation (off by default).
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    ssim_params = ssim_params or SsimParams()
    params = payload.render_params
    s = payload.scale
    try:
        params.check_scale(s)
    except ValueError as exc:
        raise ParamMismatch(str(exc)) from None
    views = render_views(distorted, params, threads=threads)
    flags: set = set()

    def measure(label):
        ref = payload.view(label)
        dview = views[label]
        m_d = extract_view_saliency(dview, s, blur_sigma)
        local_flags: set = set()
        if m_d.shape != ref.saliency.shape:
            raise ParamMismatch(f"view {label}: distorted map {m_d.shape} vs reference {ref.saliency.shape}")
        a, b = joint_normalize(ref.saliency, m_d, local_flags)
        S = ssim_scalar(a, b, ssim_params)
        w = content_weight(ref.sobel_std, to_grayscale(dview))
        hc = pearson(histogram(a, bins), histogram(b, bins), local_flags) if use_histogram else 1.0
        return S, w, hc, local_flags

    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(AXES))) as pool:
            raw = list(pool.map(measure, AXES))
    else:
        raw = [measure(lb) for lb in AXES]

    ws = np.array([r[1] for r in raw])
    if not use_weighting:
        ws = np.zeros_like(ws)
    elif normalize_weights:
        total = ws.sum()
        ws = ws * (len(ws) / total) if total > 0 else np.zeros_like(ws)

    scores = []
    for label, (S, _, hc, local_flags), w in zip(AXES, raw, ws):
        flags |= local_flags
        if use_weighting:
            weighted, clamped = weighted_similarity(S, w)
            if clamped:
                flags.add(f"{FLAG_CLAMPED}:{label}")
        else:
            weighted = S
        scores.append(ViewScore(label, S, float(w), float(weighted), float(hc)))

    S_w = float(np.mean([v.weighted for v in scores]))
    H_c = float(np.mean([v.hist_corr for v in scores])) if use_histogram else 1.0
    report_params = {
        **params.as_dict(),
        "scale": int(s),
        "bins": int(bins),
        "ssim_window": int(ssim_params.window),
        "ssim_sigma": float(ssim_params.window_sigma),
        "C1": float(ssim_params.C1),
        "C2": float(ssim_params.C2),
        "clamp_eps": CLAMP_EPS,
        "use_weighting": bool(use_weighting),
        "use_histogram": bool(use_histogram),
        "normalize_weights": bool(normalize_weights),
        "saliency_blur": float(blur_sigma),
    }
    return QualityReport(S_w * H_c, S_w, H_c, tuple(scores), frozenset(flags), report_params)
