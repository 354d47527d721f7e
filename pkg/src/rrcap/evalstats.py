"""Benchmark statistics: SROCC, KROCC, PLCC and RMSE against MOS.

PLCC and RMSE are taken after mapping predictions through a fitted
4-parameter monotonic logistic

    f(x) = b1 * (1/2 - 1 / (1 + exp(b2 * (x - b3)))) + b4

Rank statistics use the raw predictions.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ConstantInput, DegenerateInput, FitDiverged, LengthMismatch
from .quality import pearson

MAX_ITER = 5000
REL_TOL = 1e-10


@dataclass(frozen=True)
class EvalRecord:
    item_id: str
    predicted: float
    mos: float

    def __post_init__(self):
        if not (math.isfinite(self.predicted) and math.isfinite(self.mos)):
            raise ValueError(f"record {self.item_id!r}: predicted and mos must be finite")


@dataclass(frozen=True)
class LogisticParams:
    beta1: float
    beta2: float
    beta3: float
    beta4: float

    def __call__(self, x):
        return logistic(np.asarray(x, dtype=np.float64), self.as_array())

    def as_array(self) -> np.ndarray:
        return np.array([self.beta1, self.beta2, self.beta3, self.beta4])

    def as_dict(self) -> dict:
        return {"beta1": self.beta1, "beta2": self.beta2, "beta3": self.beta3, "beta4": self.beta4}


@dataclass(frozen=True)
class CorrelationStats:
    srocc: float
    krocc: float
    plcc: float
    rmse: float
    fit: LogisticParams
    n: int
    fitted: tuple = field(default=(), compare=False)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "srocc": self.srocc,
            "krocc": self.krocc,
            "plcc": self.plcc,
            "rmse": self.rmse,
            "fit": self.fit.as_dict(),
        }


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise LengthMismatch(f"vectors differ in length: {x.size} vs {y.size}")
    if x.size < 2:
        raise LengthMismatch("need at least two samples")
    return x, y


def srocc(x, y) -> float:
    """Spearman correlation; ties receive their average rank."""
    x, y = _pair(x, y)
    rx, ry = rankdata(x), rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise ConstantInput("Spearman correlation is undefined for a constant input")
    return pearson(rx, ry)


def krocc(x, y) -> float:
    """Kendall tau-b by full pair enumeration."""
    x, y = _pair(x, y)
    iu = np.triu_indices(x.size, k=1)
    dx = np.sign(x[:, None] - x[None, :])[iu]
    dy = np.sign(y[:, None] - y[None, :])[iu]
    n0 = dx.size
    ties_x = np.count_nonzero(dx == 0)
    ties_y = np.count_nonzero(dy == 0)
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0:
        raise ConstantInput("Kendall tau-b is undefined for a constant input")
    return float(np.sum(dx * dy) / denom)


def logistic(x: np.ndarray, beta: np.ndarray) -> np.ndarray:
    b1, b2, b3, b4 = beta
    # b1 * (1/2 - 1/(1 + exp(z))) == (b1/2) * tanh(z/2); the tanh form keeps
    # full precision when b2 is tiny and b1 huge (near-linear fits)
    return 0.5 * b1 * np.tanh(0.5 * b2 * (x - b3)) + b4


def _tanhc(u: np.ndarray) -> np.ndarray:
    """tanh(u) / u, continuous at 0."""
    out = np.ones_like(u)
    big = np.abs(u) > 1e-6
    out[big] = np.tanh(u[big]) / u[big]
    small = ~big
    out[small] = 1.0 - u[small] ** 2 / 3.0
    return out


def _logistic_slope_form(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # theta = (center slope b1*b2/4, b2, b3, b4); the linear limit b2 -> 0 is a finite point here
    a, b2, b3, b4 = theta
    t = x - b3
    return b4 + a * t * _tanhc(0.5 * b2 * t)


def nelder_mead(func, x0, steps, max_iter=MAX_ITER, rel_tol=REL_TOL):
    """Plain Nelder-Mead simplex minimizer.

    Stops when the relative spread of objective values across the simplex drops
    below ``rel_tol`` or after ``max_iter`` iterations. Returns (x, f, iterations).
    """
    n = len(x0)
    simplex = np.empty((n + 1, n))
    simplex[0] = x0
    for i in range(n):
        simplex[i + 1] = x0
        simplex[i + 1, i] += steps[i]
    fvals = np.array([func(p) for p in simplex])
    it = 0
    while it < max_iter:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        lo, hi = fvals[0], fvals[-1]
        if 2.0 * abs(hi - lo) <= rel_tol * (abs(hi) + abs(lo)) + 1e-300:
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + (centroid - simplex[-1])
        fr = func(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = func(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (simplex[-1] - centroid)
            fc = func(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                fvals[1:] = [func(p) for p in simplex[1:]]
    best = int(np.argmin(fvals))
    return simplex[best], float(fvals[best]), it


def _initial_steps(x0):
    return np.where(x0 != 0, 0.05 * x0, 0.00025)


def fit_logistic(pred, mos) -> LogisticParams:
    """Least-squares logistic fit mapping predictions onto the MOS scale."""
    pred, mos = _pair(pred, mos)
    if pred.size < 4:
        raise DegenerateInput(f"logistic fit needs at least 4 samples, got {pred.size}")
    if np.ptp(pred) == 0:
        raise DegenerateInput("predictions are constant")
    if np.ptp(mos) == 0:
        raise DegenerateInput("MOS values are constant")
    orient = 1.0 if pearson(pred, mos) >= 0 else -1.0
    b1, b2 = float(np.ptp(mos)), orient * 4.0 / float(np.ptp(pred))
    # the simplex runs on (b1*b2/4, b2, b3, b4), a smooth reparametrization of
    # the logistic that stays well conditioned as the fit approaches a line
    x0 = np.array([b1 * b2 / 4.0, b2, float(np.median(pred)), float(mos.min())])

    def sse(theta):
        r = _logistic_slope_form(pred, theta) - mos
        val = float(np.dot(r, r))
        return val if math.isfinite(val) else math.inf

    if not math.isfinite(sse(x0)):
        raise FitDiverged("objective is not finite at the initial point")
    x, f, used = nelder_mead(sse, x0, _initial_steps(x0))
    # the simplex can slide onto the saturated plateau (a flat curve); a second
    # start at the least-squares line (b2 = 0 is exactly linear here) guarantees
    # the fit is never worse than linear regression
    slope, intercept = np.polyfit(pred, mos, 1)
    x_lin = np.array([slope, 0.0, float(pred.mean()), float(slope * pred.mean() + intercept)])
    steps_lin = np.where(x_lin != 0, 0.05 * np.abs(x_lin), 0.05 * np.abs(x0))
    x2, f2, it = nelder_mead(sse, x_lin, steps_lin, max_iter=MAX_ITER - used)
    used += it
    if f2 < f:
        x, f = x2, f2
    # restart from the best vertex until a restart no longer improves the fit
    while used < MAX_ITER:
        x2, f2, it = nelder_mead(sse, x, _initial_steps(x), max_iter=MAX_ITER - used)
        used += max(it, 1)
        if not f2 < f:
            break
        x, f = x2, f2
    if not (math.isfinite(f) and np.all(np.isfinite(x))):
        raise FitDiverged("logistic fit produced a non-finite objective")
    a, b2, b3, b4 = (float(v) for v in x)
    if abs(b2) < 1e-150:
        b2 = math.copysign(1e-150, b2 if b2 != 0 else orient)
    b1 = 4.0 * a / b2
    if not math.isfinite(b1):
        raise FitDiverged("logistic fit degenerated to an unbounded amplitude")
    return LogisticParams(b1, b2, b3, b4)


def evaluate(records) -> CorrelationStats:
    records = list(records)
    if len(records) < 4:
        raise DegenerateInput(f"evaluation needs at least 4 records, got {len(records)}")
    pred = np.array([r.predicted for r in records], dtype=np.float64)
    mos = np.array([r.mos for r in records], dtype=np.float64)
    fit = fit_logistic(pred, mos)
    mapped = fit(pred)
    return CorrelationStats(
        srocc=srocc(pred, mos),
        krocc=krocc(pred, mos),
        plcc=pearson(mapped, mos),
        rmse=float(np.sqrt(np.mean((mapped - mos) ** 2))),
        fit=fit,
        n=len(records),
        fitted=tuple(float(v) for v in mapped),
    )


# -- manifest-driven batch runs ----------------------------------------------

MANIFEST_FIELDS = ("item_id", "payload_path", "distorted_path", "mos")


@dataclass(frozen=True)
class ManifestItem:
    item_id: str
    payload_path: str
    distorted_path: str
    mos: float


def read_manifest(path) -> list:
    """Parse a manifest CSV; relative paths resolve against the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    items = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != MANIFEST_FIELDS:
            raise ValueError(f"manifest header must be {','.join(MANIFEST_FIELDS)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                mos = float(row["mos"])
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{lineno}: bad mos value {row['mos']!r}") from None
            items.append(ManifestItem(
                row["item_id"].strip(),
                os.path.join(base, row["payload_path"].strip()),
                os.path.join(base, row["distorted_path"].strip()),
                mos,
            ))
    return items


def run_manifest(path, threads: int = 1, log=None, **score_opts):
    """Score every manifest item and return (records, reports) in manifest order."""
    from .payload import load as load_payload
    from .pointcloud_io import load_ply
    from .quality import score

    items = read_manifest(path)

    def one(item):
        report = score(load_payload(item.payload_path), load_ply(item.distorted_path), **score_opts)
        if log is not None:
            log(f"{item.item_id}: Q={report.Q:.6f}")
        return report

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, items))
    else:
        reports = [one(it) for it in items]
    records = [EvalRecord(it.item_id, r.Q, it.mos) for it, r in zip(items, reports)]
    return records, reports


def results_document(records, stats: CorrelationStats, params: dict | None = None) -> dict:
    doc = stats.as_dict()
    doc["items"] = [
        {"item_id": r.item_id, "predicted": r.predicted, "mos": r.mos, "fitted": f}
        for r, f in zip(records, stats.fitted)
    ]
    if params is not None:
        doc["params"] = params
    return doc


def write_item_csv(path, records, stats: CorrelationStats):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["item_id", "predicted", "mos", "fitted"])
        for r, f in zip(records, stats.fitted):
            w.writerow([r.item_id, repr(r.predicted), repr(r.mos), repr(f)])


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2)
