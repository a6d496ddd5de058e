"""FDR/FNR frontier: proxy lower-bound curve, BH curve, and calibration.

For each FDR level on an evenly spaced grid ``{b * epsilon / B : 0 <= b < B}``
we compute

* ``beta_lo``: the smallest FNR on a grid of the same spacing (kept below
  ``epsilon / 2``) that passes all four proxy inequalities, made
  non-increasing by a running minimum over the FDR levels (a procedure whose
  FDR is at most one level also has FDR at most every larger level);
* ``beta_bh``: the Monte-Carlo FNR of BH run at ``q`` equal to that level.

A single constant ``c_hat`` then scales the lower curve toward the BH curve
while keeping ``c_hat * beta_lo <= beta_bh`` at every point.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_consistent_length, check_is_fitted

from . import _rng
from ._validation import check_count, check_epsilon, check_statistics
from .exceptions import ParameterError
from .model import ModelSpec, apply_alternative, layout_for, sample_block
from .procedures import bh_counts_multi, descending_order, to_pvalues
from .proxies import (
    consistent,
    k_plus,
    minus_proxies,
    plus_proxies,
    sample_false_disc_curves,
)


@dataclass(frozen=True)
class GridSpec:
    B: int
    epsilon: float

    def __post_init__(self):
        check_count(self.B, "B", minimum=2)
        check_epsilon(self.epsilon)


def fdr_grid(grid):
    return np.arange(grid.B) * (grid.epsilon / grid.B)


def beta_grid(grid):
    """FNR candidates: same spacing as the FDR grid, strictly below ``epsilon / 2``."""
    levels = fdr_grid(grid)
    return levels[2.0 * levels < grid.epsilon]


@dataclass(frozen=True)
class LowerPoint:
    alpha: float
    beta_lo: float
    raw_beta_lo: float
    unbounded: bool
    in_regime: bool


def lower_curve(spec, layout, grid, replicates, seed, n_jobs=1):
    """Proxy lower-bound FNR at every FDR grid level.

    ``raw_beta_lo`` is the per-level value; ``beta_lo`` its running minimum.
    ``unbounded`` marks levels where no FNR candidate passed (``beta_lo`` is
    then the largest candidate). ``in_regime`` marks ``2 alpha < epsilon``,
    outside of which the proxy inequalities carry no guarantee.
    """
    eps = grid.epsilon
    alphas, betas = fdr_grid(grid), beta_grid(grid)
    m, n = spec.m, spec.n
    k_max = max(k_plus(a, eps, m, n) for a in alphas)
    curves = sample_false_disc_curves(spec, layout, k_max, replicates, seed, n_jobs)
    minus = [minus_proxies(curves, b, eps, m) for b in betas]
    cap = float(betas[-1])
    points = []
    best, best_unbounded = math.inf, True
    for a in alphas:
        _, _, fdp_p, fnp_p = plus_proxies(curves, a, eps, m, n)
        raw, unbounded = cap, True
        for b, (_, _, fdp_m, fnp_m, _) in zip(betas, minus):
            if consistent(a, b, fdp_m, fnp_m, fnp_p, fdp_p, eps):
                raw, unbounded = float(b), False
                break
        if raw < best or (raw == best and not unbounded):
            best, best_unbounded = raw, unbounded
        points.append(LowerPoint(
            alpha=float(a), beta_lo=best, raw_beta_lo=raw,
            unbounded=best_unbounded, in_regime=bool(2.0 * a < eps),
        ))
    return points


@dataclass(frozen=True)
class BHPoint:
    alpha: float
    beta_bh: float
    beta_bh_se: float
    fdr_bh: float
    fdr_bh_se: float


def _bh_block(spec, layout, seed, levels, start, stop):
    w = sample_block(spec, layout, seed, _rng.TRIAL_STREAM, start, stop)
    x = apply_alternative(spec, w, layout)
    mask = layout.signal_mask
    m = layout.m
    out = np.empty((stop - start, len(levels), 2))
    for i, row in enumerate(x):
        order = descending_order(row)
        counts = bh_counts_multi(to_pvalues(spec, row[order]), levels)
        true_disc = np.concatenate([[0], np.cumsum(mask[order])])[counts]
        out[i, :, 0] = (counts - true_disc) / np.maximum(counts, 1)
        out[i, :, 1] = (m - true_disc) / m
    return out


def bh_curve(spec, layout, grid, trials, seed, n_jobs=1):
    """BH's FNR (and realised FDR) at ``q`` equal to each FDR grid level.

    All levels share the same trials, so the FNR is non-increasing in the
    level trial by trial. ``q = 0`` rejects nothing.
    """
    trials = check_count(trials, "trials", minimum=2)
    levels = fdr_grid(grid)
    rows = _rng.map_blocks(
        partial(_bh_block, spec, layout, _rng.check_seed(seed), levels), trials, n_jobs=n_jobs
    )
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / math.sqrt(trials)
    return [
        BHPoint(alpha=float(a), beta_bh=float(mean[b, 1]), beta_bh_se=float(se[b, 1]),
                fdr_bh=float(mean[b, 0]), fdr_bh_se=float(se[b, 0]))
        for b, a in enumerate(levels)
    ]


@dataclass(frozen=True)
class Calibration:
    c_hat: float
    c_hat0: float
    skipped: bool = False


def calibrate(beta_lo, beta_bh):
    """Scale factor for the lower curve that never overshoots the BH curve.

    ``c_hat0 = sum(beta_bh) / sum(beta_lo)`` over points with ``beta_lo > 0``;
    ``c_hat`` clamps it to the smallest pointwise ratio ``beta_bh / beta_lo``.
    With no positive ``beta_lo`` the fit is skipped and ``c_hat = 1``.
    """
    lo = check_statistics(beta_lo, "beta_lo")
    bh = check_statistics(beta_bh, "beta_bh")
    check_consistent_length(lo, bh)
    keep = lo > 0
    if not keep.any():
        return Calibration(c_hat=1.0, c_hat0=1.0, skipped=True)
    lo, bh = lo[keep], bh[keep]
    c_hat0 = float(bh.sum() / lo.sum())
    c_hat = min(c_hat0, float(np.min(bh / lo)))
    # guard the constraint against the last-ulp rounding of ratio * lo
    while np.any(c_hat * lo > bh):
        c_hat = float(np.nextafter(c_hat, 0.0))
    return Calibration(c_hat=c_hat, c_hat0=c_hat0)


class FrontierCalibrator(RegressorMixin, BaseEstimator):
    """One-parameter calibration ``beta_bh ~ c * beta_lo`` with ``c * beta_lo <= beta_bh``.

    ``fit(beta_lo, beta_bh)`` accepts 1-d arrays or a single-column matrix
    for ``beta_lo``; ``predict`` returns the calibrated lower curve.
    """

    def fit(self, X, y):
        lo = np.asarray(X, dtype=np.float64)
        if lo.ndim == 2:
            if lo.shape[1] != 1:
                raise ParameterError("FrontierCalibrator takes a single feature")
            lo = lo[:, 0]
        cal = calibrate(lo, y)
        self.c_hat_, self.c_hat0_, self.skipped_ = cal.c_hat, cal.c_hat0, cal.skipped
        return self

    def predict(self, X):
        check_is_fitted(self, "c_hat_")
        lo = np.asarray(X, dtype=np.float64)
        return self.c_hat_ * (lo[:, 0] if lo.ndim == 2 else lo)


@dataclass(frozen=True)
class FrontierPoint:
    model: int
    alpha: float
    beta_lo: float
    beta_bh: float
    beta_bh_se: float
    fdr_bh: float
    unbounded: bool
    in_regime: bool


@dataclass(frozen=True)
class FrontierResult:
    models: tuple
    grid: GridSpec
    replicates: int
    trials: int
    seed: int
    points: tuple
    c_hat: float
    c_hat0: float
    calibration_skipped: bool = False
    format_version: int = field(default=1)

    def curve(self, model=0):
        return [p for p in self.points if p.model == model]


def run_frontier(specs, grid, replicates, trials, seed, n_jobs=1):
    """Lower and BH curves for every model and one pooled calibration constant.

    Model ``i`` draws from the child seed ``derive_seed(seed, i)``.
    """
    if isinstance(specs, ModelSpec):
        specs = [specs]
    specs = tuple(specs)
    if not specs:
        raise ParameterError("at least one model is required")
    seed = _rng.check_seed(seed)
    points = []
    for i, spec in enumerate(specs):
        layout = layout_for(spec)
        model_seed = _rng.derive_seed(seed, i)
        lower = lower_curve(spec, layout, grid, replicates, model_seed, n_jobs)
        bh = bh_curve(spec, layout, grid, trials, model_seed, n_jobs)
        for lo, b in zip(lower, bh):
            points.append(FrontierPoint(
                model=i, alpha=lo.alpha, beta_lo=lo.beta_lo, beta_bh=b.beta_bh,
                beta_bh_se=b.beta_bh_se, fdr_bh=b.fdr_bh, unbounded=lo.unbounded,
                in_regime=lo.in_regime,
            ))
    cal = calibrate([p.beta_lo for p in points], [p.beta_bh for p in points])
    return FrontierResult(
        models=specs, grid=grid, replicates=replicates, trials=trials, seed=seed,
        points=tuple(points), c_hat=cal.c_hat, c_hat0=cal.c_hat0,
        calibration_skipped=cal.skipped,
    )


CSV_COLUMNS = ["alpha", "beta_lo", "beta_lo_calibrated", "beta_bh", "beta_bh_se"]


def to_csv(result):
    """CSV text with 6-decimal fixed columns; a leading ``model`` column is
    added when the result holds more than one model."""
    multi = len(result.models) > 1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow((["model"] if multi else []) + CSV_COLUMNS)
    for p in result.points:
        row = [p.alpha, p.beta_lo, result.c_hat * p.beta_lo, p.beta_bh, p.beta_bh_se]
        writer.writerow(([str(p.model)] if multi else []) + [f"{v:.6f}" for v in row])
    return buf.getvalue()


def to_dict(result):
    return {
        "format_version": result.format_version,
        "models": [s.to_dict() for s in result.models],
        "epsilon": result.grid.epsilon,
        "grid_b": result.grid.B,
        "replicates": result.replicates,
        "trials": result.trials,
        "seed": result.seed,
        "c_hat": result.c_hat,
        "c_hat0": result.c_hat0,
        "calibration_skipped": result.calibration_skipped,
        "points": [asdict(p) for p in result.points],
    }


def to_json(result):
    return json.dumps(to_dict(result), indent=2, sort_keys=True) + "\n"


def from_json(text):
    d = json.loads(text)
    return FrontierResult(
        models=tuple(ModelSpec.from_dict(s) for s in d["models"]),
        grid=GridSpec(B=d["grid_b"], epsilon=d["epsilon"]),
        replicates=d["replicates"],
        trials=d["trials"],
        seed=d["seed"],
        points=tuple(FrontierPoint(**p) for p in d["points"]),
        c_hat=d["c_hat"],
        c_hat0=d["c_hat0"],
        calibration_skipped=d["calibration_skipped"],
        format_version=d["format_version"],
    )


def export(result, path, fmt="csv"):
    """Write ``result`` to ``path`` as ``csv`` or ``json``."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ParameterError(f"unknown format {fmt!r}; expected 'csv' or 'json'")
    with open(path, "w", newline="") as fh:
        fh.write(text)
