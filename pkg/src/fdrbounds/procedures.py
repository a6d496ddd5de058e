"""Top-K testing procedures, FDP/FNP, and Monte-Carlo FDR/FNR estimation.

Every procedure here rejects the ``K`` largest statistics for some
data-dependent ``K``. Ties in statistics or p-values are broken by index.
"""

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.stats import norm
from sklearn.base import BaseEstimator

from . import _rng
from ._validation import check_count, check_real, check_statistics
from .exceptions import DomainError, ParameterError, RangeError
from .model import Family, apply_alternative, sample_block
from .proxies import k_minus, k_plus


def to_pvalues(spec, x):
    """Map statistics to p-values; larger statistics give smaller p-values.

    Location families use ``1 - Phi(x)``, the scale family ``2 (1 - Phi(x))``
    on ``x >= 0`` and the Lehmann family ``1 - x``.
    """
    x = np.asarray(x, dtype=np.float64)
    if spec.family.is_location:
        return norm.sf(x)
    if spec.family is Family.IID_SCALE:
        if np.any(x < 0):
            raise DomainError("scale-model statistics must be non-negative")
        return np.minimum(2.0 * norm.sf(x), 1.0)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("Lehmann statistics must lie in [0, 1]")
    return 1.0 - x


@dataclass(frozen=True, eq=False)
class RejectionSet:
    indices: np.ndarray
    k_used: int

    def __eq__(self, other):
        if not isinstance(other, RejectionSet):
            return NotImplemented
        return self.k_used == other.k_used and np.array_equal(self.indices, other.indices)


def descending_order(x):
    """Indices of ``x`` from largest to smallest, ties by index."""
    return np.argsort(-np.asarray(x, dtype=np.float64), kind="stable")


def top_k_reject(x, k):
    """Reject the ``k`` largest statistics."""
    x = check_statistics(x)
    k = check_count(k, "k", minimum=0)
    if k > len(x):
        raise RangeError(f"k={k} out of range [0, {len(x)}]")
    return RejectionSet(indices=np.sort(descending_order(x)[:k]), k_used=k)


def _check_pvalues(pvalues):
    p = check_statistics(pvalues, "pvalues")
    if np.any(np.isnan(p)) or np.any((p < 0) | (p > 1)):
        raise ParameterError("p-values must lie in [0, 1]")
    return p


def _scaled(sorted_p):
    # p_(k) * n / k; one shared form keeps single- and multi-level counts identical
    n = len(sorted_p)
    return sorted_p * n / np.arange(1, n + 1)


def bh_count(sorted_p, q):
    """Step-up count ``max{k : p_(k) <= k q / n}`` for ascending ``sorted_p``."""
    passing = np.flatnonzero(_scaled(sorted_p) <= q)
    return int(passing[-1] + 1) if len(passing) else 0


def bh_procedure(pvalues, q):
    """Benjamini-Hochberg step-up rule at level ``q``."""
    p = _check_pvalues(pvalues)
    q = check_real(q, "q", 0.0, 1.0, low_open=True, high_open=True)
    order = np.argsort(p, kind="stable")
    k = bh_count(p[order], q)
    return RejectionSet(indices=np.sort(order[:k]), k_used=k)


def bh_counts_multi(sorted_p, levels):
    """BH rejection counts at every level in ``levels`` for one p-value vector.

    ``sorted_p`` must be non-decreasing. Levels ``<= 0`` reject nothing.
    """
    suffix_min = np.minimum.accumulate(_scaled(sorted_p)[::-1])[::-1]
    levels = np.asarray(levels, dtype=np.float64)
    counts = np.searchsorted(suffix_min, levels, side="right")
    counts[levels <= 0] = 0
    return counts


def fdp_fnp(rejection, layout):
    """False discovery and false non-discovery proportions of one rejection set."""
    idx = np.asarray(rejection.indices if isinstance(rejection, RejectionSet) else rejection,
                     dtype=np.intp)
    true_disc = int(layout.signal_mask[idx].sum()) if len(idx) else 0
    false_disc = len(idx) - true_disc
    return false_disc / max(len(idx), 1), (layout.m - true_disc) / layout.m


@dataclass(frozen=True)
class BHRule:
    """BH on the model's p-values at level ``q``, as a top-K rule."""

    q: float

    def count(self, x, spec):
        if self.q <= 0:
            return 0
        order = descending_order(x)
        return bh_count(to_pvalues(spec, x[order]), self.q)


@dataclass(frozen=True)
class FixedKRule:
    """Reject a fixed number of statistics regardless of the data."""

    k: int

    def count(self, x, spec):
        return min(self.k, len(x))


def _trial_block(spec, layout, seed, rule, start, stop):
    w = sample_block(spec, layout, seed, _rng.TRIAL_STREAM, start, stop)
    x = apply_alternative(spec, w, layout)
    mask = layout.signal_mask
    out = np.empty((stop - start, 3))
    for i, row in enumerate(x):
        k = rule.count(row, spec)
        true_disc = int(mask[descending_order(row)[:k]].sum())
        out[i] = ((k - true_disc) / max(k, 1), (layout.m - true_disc) / layout.m, k)
    return out


def simulate_trials(spec, layout, rule, trials, seed, n_jobs=1):
    """Per-trial ``(fdp, fnp, K)`` rows on the trial stream of ``seed``."""
    trials = check_count(trials, "trials", minimum=2)
    seed = _rng.check_seed(seed)
    return _rng.map_blocks(partial(_trial_block, spec, layout, seed, rule), trials, n_jobs=n_jobs)


@dataclass(frozen=True)
class ErrorRates:
    fdr: float
    fnr: float
    fdr_se: float
    fnr_se: float
    trials: int
    mean_k: float = float("nan")


def rates_from_trials(rows):
    trials = len(rows)
    se = rows[:, :2].std(axis=0, ddof=1) / math.sqrt(trials)
    mean = rows.mean(axis=0)
    return ErrorRates(
        fdr=float(mean[0]), fnr=float(mean[1]), fdr_se=float(se[0]), fnr_se=float(se[1]),
        trials=trials, mean_k=float(mean[2]),
    )


def estimate_fdr_fnr(spec, layout, rule, trials, seed, n_jobs=1):
    """Monte-Carlo FDR and FNR of a top-K rule with standard errors."""
    return rates_from_trials(simulate_trials(spec, layout, rule, trials, seed, n_jobs))


@dataclass(frozen=True)
class BandResult:
    """Empirical probability that ``K`` lands in ``[k_minus, k_plus]``.

    ``k_minus`` is 0 when ``beta >= epsilon`` and ``k_plus`` is ``n`` when
    ``alpha >= epsilon``; the corresponding side of the band is then vacuous.
    """

    probability: float
    stderr: float
    k_minus: int
    k_plus: int
    alpha: float
    beta: float
    trials: int


def band_probability(spec, layout, rule, epsilon, trials, seed, alpha=None, beta=None,
                     n_jobs=1):
    """Fraction of trials whose rejection count lies in the discovery band.

    ``alpha`` and ``beta`` default to the rule's FDR and FNR measured on the
    same trials.
    """
    rows = simulate_trials(spec, layout, rule, trials, seed, n_jobs)
    rates = rates_from_trials(rows)
    alpha = rates.fdr if alpha is None else alpha
    beta = rates.fnr if beta is None else beta
    lo = k_minus(beta, epsilon, spec.m) if beta < epsilon else 0
    hi = k_plus(alpha, epsilon, spec.m, spec.n) if alpha < epsilon else spec.n
    inside = (rows[:, 2] >= lo) & (rows[:, 2] <= hi)
    prob = float(inside.mean())
    return BandResult(
        probability=prob,
        stderr=math.sqrt(prob * (1.0 - prob) / len(rows)),
        k_minus=lo, k_plus=hi, alpha=float(alpha), beta=float(beta), trials=len(rows),
    )


class BenjaminiHochberg(BaseEstimator):
    """Benjamini-Hochberg step-up selection.

    Parameters
    ----------
    q : float
        Nominal FDR level in ``(0, 1)``.

    Attributes
    ----------
    n_rejections_ : int
    rejected_ : ndarray of bool
        Mask of rejected hypotheses in input order.
    threshold_ : float
        Largest rejected p-value, or 0 when nothing is rejected.
    """

    def __init__(self, q=0.1):
        self.q = q

    def fit(self, pvalues, y=None):
        p = _check_pvalues(pvalues)
        result = bh_procedure(p, self.q)
        self.n_rejections_ = result.k_used
        self.rejected_ = np.zeros(len(p), dtype=bool)
        self.rejected_[result.indices] = True
        self.threshold_ = float(p[result.indices].max()) if result.k_used else 0.0
        return self

    def fit_predict(self, pvalues, y=None):
        return self.fit(pvalues).rejected_
