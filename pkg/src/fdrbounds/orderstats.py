"""Order statistics: selection, Monte-Carlo expectations, closed-form asymptotics.

Ranks are descending throughout: rank 1 is the largest element of the
subset it indexes.
"""

import math
import warnings
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import _rng
from ._validation import check_count, check_real
from .exceptions import ParameterError, PreconditionError, RangeError, RegimeWarning
from .model import Family, ModelSpec


def kth_largest(values, k, subset=None):
    """The ``k``-th largest entry of ``values`` restricted to ``subset``.

    Uses partial selection; ties return the shared value.
    """
    values = np.asarray(values, dtype=np.float64)
    if subset is not None:
        values = values[np.asarray(subset, dtype=np.intp)]
    size = values.shape[-1]
    if size == 0:
        raise RangeError("cannot select from an empty subset")
    if not 1 <= k <= size:
        raise RangeError(f"rank k={k} out of range [1, {size}]")
    pos = size - k
    return np.partition(values, pos, axis=-1)[..., pos]


def top_sorted(values, k):
    """The ``k`` largest entries along the last axis, in descending order."""
    values = np.asarray(values, dtype=np.float64)
    size = values.shape[-1]
    k = min(k, size)
    if k == 0:
        return values[..., :0]
    if k < size:
        values = np.partition(values, size - k, axis=-1)[..., size - k:]
    return -np.sort(-values, axis=-1)[..., :k]


def _check_rank(k, n_sub):
    n_sub = check_count(n_sub, "n_sub", minimum=1)
    k = check_count(k, "k", minimum=1)
    if k > n_sub:
        raise RangeError(f"rank k={k} out of range [1, {n_sub}]")
    return n_sub, k


@dataclass(frozen=True)
class ChiEstimate:
    """Monte-Carlo estimate of an expected order statistic."""

    mean: float
    stderr: float
    replicates: int


_BASE_FAMILIES = {"normal": Family.IID_LOCATION, "halfnormal": Family.IID_SCALE}


def _base_family(family):
    if isinstance(family, ModelSpec):
        family = family.family
    if isinstance(family, str) and family in _BASE_FAMILIES:
        return _BASE_FAMILIES[family]
    family = Family(family)
    if family not in (Family.IID_LOCATION, Family.IID_SCALE):
        raise ParameterError(
            f"expected order statistics need a normal or half-normal base, got {family.value}"
        )
    return family


def _orderstat_block(family, k, n_sub, seed, start, stop):
    out = np.empty(stop - start)
    for i, r in enumerate(range(start, stop)):
        draws = _rng.substream(seed, _rng.ORDERSTAT_STREAM, r).standard_normal(n_sub)
        if family is Family.IID_SCALE:
            np.abs(draws, out=draws)
        out[i] = kth_largest(draws, k)
    return out


def expected_order_stat_mc(family, k, n_sub, replicates, seed, n_jobs=1):
    """Estimate the mean of the ``k``-th largest of ``n_sub`` iid base draws.

    ``family`` is ``"normal"``, ``"halfnormal"``, or an iid location/scale
    :class:`ModelSpec` (its base distribution is used).
    """
    family = _base_family(family)
    n_sub, k = _check_rank(k, n_sub)
    replicates = check_count(replicates, "replicates", minimum=2)
    seed = _rng.check_seed(seed)
    stats = _rng.map_blocks(
        partial(_orderstat_block, family, k, n_sub, seed), replicates, n_jobs=n_jobs
    )
    return ChiEstimate(
        mean=float(stats.mean()),
        stderr=float(stats.std(ddof=1) / math.sqrt(replicates)),
        replicates=replicates,
    )


def gaussian_chi_asymptotic(k, n_sub):
    """Leading-order expected ``k``-th largest of ``n_sub`` standard normals,
    ``sqrt(2 log(n_sub / k))``.

    Warns with :class:`RegimeWarning` when ``k > n_sub / log(n_sub)``.
    """
    n_sub, k = _check_rank(k, n_sub)
    if n_sub == 1 or k > n_sub / math.log(n_sub):
        warnings.warn(
            f"k={k} exceeds n/log(n) for n={n_sub}; asymptotic value is unreliable",
            RegimeWarning,
            stacklevel=2,
        )
    return math.sqrt(2.0 * math.log(n_sub / k))


def halfnormal_chi_upper(k, n_sub):
    """Upper bound ``sqrt(2 pi) (n - k + 1) / (n + 1)`` on the expected
    ``k``-th largest of ``n_sub`` half-normals, valid for ``k >= n_sub / 2``."""
    n_sub, k = _check_rank(k, n_sub)
    if 2 * k < n_sub:
        raise PreconditionError(f"bound needs k >= n/2, got k={k}, n={n_sub}")
    return math.sqrt(2.0 * math.pi) * (n_sub - k + 1) / (n_sub + 1)


def concentration_delta(epsilon):
    """Deviation radius ``sqrt(2 log(2 / epsilon))`` for Gaussian order statistics."""
    epsilon = check_real(epsilon, "epsilon", 0.0, 2.0, low_open=True)
    return math.sqrt(2.0 * math.log(2.0 / epsilon))
