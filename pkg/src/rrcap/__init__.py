"""Reduced-reference point cloud quality assessment via projected saliency maps."""

from .baselines import BaselineScore, baseline_scores, projected_psnr, projected_ssim
from .evalstats import CorrelationStats, EvalRecord, LogisticParams, evaluate, fit_logistic, krocc, srocc
from .payload import ReferencePayload, decode, encode, extract_reference
from .pointcloud_io import BoundingBox, PointCloud, bounding_box, load_ply, write_ply
from .projection import AXES, ProjectionSet, ProjectionView, RenderParams, render_views, to_grayscale
from .quality import QualityReport, SsimParams, ViewScore, score
from .saliency import SaliencyMap, dct2, downsample, extract_view_saliency, idct2, saliency_map, signature

__version__ = "0.1.0"
