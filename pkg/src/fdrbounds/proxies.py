"""Derandomized proxies for the number of discoveries and false discoveries.

Given a target FDR ``alpha``, FNR ``beta`` and analysis parameter
``epsilon``, the discovery proxies are

    k_minus = floor((1 - beta / epsilon) * m)
    k_plus  = ceil(m / (1 - alpha / epsilon))

and the false-discovery proxies ``ell_minus``, ``ell_plus`` are the largest
``ell`` (in their admissible ranges) such that the top ``k`` statistics
contain at least ``ell`` nulls with probability at least ``1 - epsilon``.
Counting nulls among the top ``k`` (``L(k)``) and comparing order
statistics, ``W_null(ell) > f(W_signal(k - ell + 1))``, define the same
event, so ``ell*`` is an empirical quantile of ``L(k)``; both routes are
implemented and must agree exactly.
"""

import math
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np
from sklearn.base import BaseEstimator

from . import _rng
from ._validation import (
    check_count,
    check_epsilon,
    check_real,
    check_signal_mask,
    check_statistics,
)
from .exceptions import ParameterError, RangeError
from .model import apply_alternative, sample_block, transform_f
from .orderstats import concentration_delta, kth_largest, top_sorted

MINUS = "minus"
PLUS = "plus"


def k_minus(beta, epsilon, m):
    """Lower proxy for the number of discoveries."""
    m = check_count(m, "m", minimum=1)
    beta = check_real(beta, "beta", 0.0, 1.0)
    epsilon = check_real(epsilon, "epsilon", 0.0, 1.0, low_open=True)
    if beta >= epsilon:
        raise ParameterError(f"k_minus needs beta < epsilon, got beta={beta}, epsilon={epsilon}")
    return max(int(math.floor((1.0 - beta / epsilon) * m + 1e-9)), 0)


def k_plus(alpha, epsilon, m, n=None):
    """Upper proxy for the number of discoveries, clamped to ``n`` if given."""
    m = check_count(m, "m", minimum=1)
    alpha = check_real(alpha, "alpha", 0.0, 1.0)
    epsilon = check_real(epsilon, "epsilon", 0.0, 1.0, low_open=True)
    if alpha >= epsilon:
        raise ParameterError(f"k_plus needs alpha < epsilon, got alpha={alpha}, epsilon={epsilon}")
    k = int(math.ceil(m / (1.0 - alpha / epsilon) - 1e-9))
    return k if n is None else min(k, n)


def ell_range(k, m, variant):
    """Admissible ``(low, high)`` for ``ell*`` at ``k``; ``low`` doubles as the
    value returned when no ``ell`` qualifies."""
    if variant == MINUS:
        return 0, k
    if variant == PLUS:
        return max(k - m, 0), k
    raise ParameterError(f"variant must be {MINUS!r} or {PLUS!r}, got {variant!r}")


def false_disc_count(x, layout, k):
    """Number of nulls among the ``k`` largest statistics of ``x``."""
    x = check_statistics(x)
    k = check_count(k, "k", minimum=0, maximum=len(x))
    if k == 0:
        return 0
    top = np.argpartition(-x, k - 1)[:k]
    return int(k - layout.signal_mask[top].sum())


def false_disc_curve(x, signal_mask, k_max):
    """``L(0), ..., L(k_max)`` for every row of a replicate matrix ``x``.

    Ties among statistics are broken by index (measure zero under the models).
    """
    x = np.atleast_2d(x)
    rows, n = x.shape
    k_max = min(k_max, n)
    if k_max == 0:
        return np.zeros((rows, 1), dtype=np.int32)
    if k_max < n:
        # the k_max largest, taking the lowest indices among values tied at the cut
        cut = -np.partition(-x, k_max - 1, axis=1)[:, [k_max - 1]]
        above = x > cut
        tied = x == cut
        room = k_max - above.sum(axis=1, keepdims=True)
        chosen = above | (tied & (np.cumsum(tied, axis=1) <= room))
        cand = np.nonzero(chosen)[1].reshape(rows, k_max)
    else:
        cand = np.broadcast_to(np.arange(n), (rows, n))
    vals = np.take_along_axis(x, cand, axis=1)
    # sort candidates by (-value, index) so ordering is reproducible
    order = np.lexsort((cand, -vals), axis=1)
    ranked = np.take_along_axis(cand, order, axis=1)
    nulls = ~signal_mask[ranked]
    curve = np.zeros((rows, k_max + 1), dtype=np.int32)
    np.cumsum(nulls, axis=1, out=curve[:, 1:])
    return curve


def required_count(replicates, epsilon):
    """Smallest replicate count ``c`` with ``c / replicates >= 1 - epsilon``."""
    c = max(int(math.ceil((1.0 - epsilon) * replicates)) - 1, 0)
    while c / replicates < 1.0 - epsilon:
        c += 1
    return c


def ell_star_from_counts(counts, k, m, epsilon, variant=MINUS):
    """Quantile route: largest ``ell`` with ``P[L(k) >= ell] >= 1 - epsilon``
    under the empirical law of ``counts``."""
    counts = np.asarray(counts)
    low, high = ell_range(k, m, variant)
    need = required_count(len(counts), epsilon)
    if need == 0:
        return high
    ell = int(np.sort(counts)[::-1][need - 1])
    ell = min(ell, high)
    return ell if ell > low else low


def order_stat_event(w, layout, spec, k, ell):
    """Indicator of ``W_null(ell) > f(W_signal(k - ell + 1))`` for one base vector.

    Out-of-range ranks follow the usual conventions: a missing null order
    statistic is ``-inf``, a signal rank ``<= 0`` is ``+inf`` and a signal
    rank above ``m`` is ``-inf``.
    """
    n_null, m = len(layout.nulls), len(layout.signals)
    if ell <= 0:
        return True
    if ell > n_null:
        return False
    null_stat = kth_largest(w, ell, layout.nulls)
    j = k - ell + 1
    if j <= 0:
        return False
    if j > m:
        return True
    return bool(null_stat > transform_f(spec, kth_largest(w, j, layout.signals)))


def order_stat_event_table(w, layout, spec, k):
    """Event indicators for ``ell = 0..k`` (columns) over replicate rows of ``w``.

    Vectorised form of :func:`order_stat_event`.
    """
    w = np.atleast_2d(w)
    rows = w.shape[0]
    n_null, m = len(layout.nulls), len(layout.signals)
    null_top = top_sorted(w[:, layout.nulls], k)
    sig_top = transform_f(spec, top_sorted(w[:, layout.signals], k)) if k else np.empty((rows, 0))
    table = np.zeros((rows, k + 1), dtype=bool)
    table[:, 0] = True
    for ell in range(1, k + 1):
        if ell > n_null:
            break
        j = k - ell + 1
        if j > m:
            table[:, ell] = True
        else:
            table[:, ell] = null_top[:, ell - 1] > sig_top[:, j - 1]
    return table


def _check_k(k, n):
    k = check_count(k, "k", minimum=0)
    if k > n:
        raise RangeError(f"k={k} out of range [0, {n}]")
    return k


def _curve_block(spec, layout, seed, k_max, start, stop):
    w = sample_block(spec, layout, seed, _rng.PROXY_STREAM, start, stop)
    return false_disc_curve(apply_alternative(spec, w, layout), layout.signal_mask, k_max)


def sample_false_disc_curves(spec, layout, k_max, replicates, seed, n_jobs=1):
    """Replicate matrix of ``L(0..k_max)`` on the proxy stream of ``seed``."""
    seed = _rng.check_seed(seed)
    replicates = check_count(replicates, "replicates", minimum=1)
    return _rng.map_blocks(
        partial(_curve_block, spec, layout, seed, min(k_max, spec.n)), replicates, n_jobs=n_jobs
    )


def _event_block(spec, layout, seed, k, start, stop):
    w = sample_block(spec, layout, seed, _rng.PROXY_STREAM, start, stop)
    return order_stat_event_table(w, layout, spec, k)


def _check_ell_inputs(spec, k, epsilon, replicates):
    k = _check_k(k, spec.n)
    epsilon = check_real(epsilon, "epsilon", 0.0, 1.0, low_open=True, high_open=True)
    replicates = check_count(replicates, "replicates", minimum=100)
    return k, epsilon, replicates


def ell_star_quantile(spec, layout, k, epsilon, replicates, seed, variant=MINUS, n_jobs=1):
    """``ell*`` at ``k`` from the empirical distribution of ``L(k)``."""
    k, epsilon, replicates = _check_ell_inputs(spec, k, epsilon, replicates)
    low, _ = ell_range(k, spec.m, variant)
    if k == 0:
        return low
    curves = sample_false_disc_curves(spec, layout, k, replicates, seed, n_jobs)
    return ell_star_from_counts(curves[:, k], k, spec.m, epsilon, variant)


def ell_star_scan(spec, layout, k, epsilon, replicates, seed, variant=MINUS, n_jobs=1):
    """``ell*`` at ``k`` by scanning ``ell`` over order-statistic events.

    Every ``ell`` is scored on the same replicate batch that
    :func:`ell_star_quantile` draws for this seed.
    """
    k, epsilon, replicates = _check_ell_inputs(spec, k, epsilon, replicates)
    low, high = ell_range(k, spec.m, variant)
    if k == 0:
        return low
    seed = _rng.check_seed(seed)
    table = _rng.map_blocks(partial(_event_block, spec, layout, seed, k), replicates, n_jobs=n_jobs)
    need = required_count(replicates, epsilon)
    hits = table.sum(axis=0)
    for ell in range(high, low, -1):
        if hits[ell] >= need:
            return ell
    return low


def check_targets(alpha, beta, epsilon):
    """Validate ``2 max(alpha, beta) < epsilon < 1/3``."""
    alpha = check_real(alpha, "alpha", 0.0, 1.0)
    beta = check_real(beta, "beta", 0.0, 1.0)
    epsilon = check_epsilon(epsilon)
    if not 2.0 * max(alpha, beta) < epsilon:
        raise ParameterError(
            f"need 2*max(alpha, beta) < epsilon, got alpha={alpha}, beta={beta}, "
            f"epsilon={epsilon}"
        )
    return alpha, beta, epsilon


@dataclass(frozen=True)
class ProxyConfig:
    alpha: float
    beta: float
    epsilon: float
    replicates: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        check_targets(self.alpha, self.beta, self.epsilon)
        check_count(self.replicates, "replicates", minimum=100)
        _rng.check_seed(self.master_seed)


@dataclass(frozen=True)
class ProxySet:
    """The four proxies with their intermediates.

    ``degenerate`` marks ``k_minus == 0``, in which case the minus-pair
    proportions are reported as 0.
    """

    k_minus: int
    k_plus: int
    ell_minus: int
    ell_plus: int
    fdp_minus: float
    fnp_minus: float
    fdp_plus: float
    fnp_plus: float
    m: int
    degenerate: bool = False

    def to_dict(self):
        return asdict(self)


def minus_proxies(curves, beta, epsilon, m):
    """``(k_minus, ell_minus, fdp_minus, fnp_minus, degenerate)`` from a curve matrix."""
    km = k_minus(beta, epsilon, m)
    if km == 0:
        return km, 0, 0.0, 0.0, True
    ell = ell_star_from_counts(curves[:, km], km, m, epsilon, MINUS)
    return km, ell, ell / m, (m - km + ell) / m, False


def plus_proxies(curves, alpha, epsilon, m, n):
    """``(k_plus, ell_plus, fdp_plus, fnp_plus)`` from a curve matrix."""
    kp = k_plus(alpha, epsilon, m, n)
    ell = ell_star_from_counts(curves[:, kp], kp, m, epsilon, PLUS)
    return kp, ell, ell / m, max(m - kp + ell, 0) / m


def proxies_from_curves(curves, m, n, alpha, beta, epsilon):
    km, ell_m, fdp_m, fnp_m, degenerate = minus_proxies(curves, beta, epsilon, m)
    kp, ell_p, fdp_p, fnp_p = plus_proxies(curves, alpha, epsilon, m, n)
    return ProxySet(
        k_minus=km, k_plus=kp, ell_minus=ell_m, ell_plus=ell_p,
        fdp_minus=fdp_m, fnp_minus=fnp_m, fdp_plus=fdp_p, fnp_plus=fnp_p,
        m=m, degenerate=degenerate,
    )


def proxy_set(spec, layout, config, n_jobs=1):
    """All four proxies for ``spec`` from one shared replicate batch."""
    kp = k_plus(config.alpha, config.epsilon, spec.m, spec.n)
    curves = sample_false_disc_curves(
        spec, layout, kp, config.replicates, config.master_seed, n_jobs
    )
    return proxies_from_curves(curves, spec.m, spec.n, config.alpha, config.beta, config.epsilon)


def c0(epsilon):
    """Constant turning proxies into FDR/FNR lower bounds, ``4/(1-3e) + 4/e``."""
    epsilon = check_epsilon(epsilon)
    return 4.0 / (1.0 - 3.0 * epsilon) + 4.0 / epsilon


@dataclass(frozen=True)
class TheoremBounds:
    alpha_lb: float
    beta_lb: float
    max_lb: float


def theorem_bounds(proxies, epsilon):
    """Lower bounds met by every ``(alpha, beta)``-controlled top-K procedure:
    ``alpha >= alpha_lb``, ``beta >= beta_lb``, ``max(alpha, beta) >= max_lb``."""
    c = c0(epsilon)
    return TheoremBounds(
        alpha_lb=proxies.fdp_minus / c,
        beta_lb=proxies.fnp_plus / c,
        max_lb=max(proxies.fnp_minus, proxies.fdp_plus) / c,
    )


def consistent(alpha, beta, fdp_minus, fnp_minus, fnp_plus, fdp_plus, epsilon):
    """Whether ``(alpha, beta)`` passes all four proxy inequalities.

    The minus-pair proxies must be evaluated at ``beta`` and the plus pair at
    ``alpha``.
    """
    c = c0(epsilon)
    top = max(alpha, beta)
    return (
        alpha >= fdp_minus / c
        and top >= fnp_minus / c
        and beta >= fnp_plus / c
        and top >= fdp_plus / c
    )


@dataclass(frozen=True)
class DerandomizationResult:
    holds: bool
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    delta: float


def _derandom_block(spec, layout, seed, signal_rank, null_rank, start, stop):
    w = sample_block(spec, layout, seed, _rng.DERANDOM_STREAM, start, stop)
    sig = transform_f(spec, kth_largest(w[:, layout.signals], signal_rank))
    null = kth_largest(w[:, layout.nulls], null_rank)
    return np.column_stack([sig, null])


def derandomization_check(spec, layout, k, ell, epsilon, replicates, seed, delta=None, n_jobs=1):
    """Compare ``E[f(W_signal(k-ell))] + D`` with ``E[W_null(ell+1)] - D``.

    ``D`` defaults to the Gaussian radius at ``epsilon / 3``. Expectations are
    Monte-Carlo means; ``holds`` is the strict inequality on those means.
    """
    k = _check_k(k, spec.n)
    ell = check_count(ell, "ell", minimum=0)
    epsilon = check_real(epsilon, "epsilon", 0.0, 1.0, low_open=True, high_open=True)
    replicates = check_count(replicates, "replicates", minimum=2)
    signal_rank, null_rank = k - ell, ell + 1
    if not 1 <= signal_rank <= spec.m:
        raise RangeError(f"signal rank k-ell={signal_rank} out of range [1, {spec.m}]")
    if not 1 <= null_rank <= spec.n - spec.m:
        raise RangeError(f"null rank ell+1={null_rank} out of range [1, {spec.n - spec.m}]")
    if delta is None:
        delta = concentration_delta(epsilon / 3.0)
    draws = _rng.map_blocks(
        partial(_derandom_block, spec, layout, _rng.check_seed(seed), signal_rank, null_rank),
        replicates,
        n_jobs=n_jobs,
    )
    means = draws.mean(axis=0)
    ses = draws.std(axis=0, ddof=1) / math.sqrt(replicates)
    lhs, rhs = float(means[0] + delta), float(means[1] - delta)
    return DerandomizationResult(
        holds=lhs > rhs, lhs=lhs, rhs=rhs, lhs_se=float(ses[0]), rhs_se=float(ses[1]),
        delta=float(delta),
    )


class DerandomizedProxies(BaseEstimator):
    """Estimate the proxies from a matrix of sampled statistic vectors.

    Parameters
    ----------
    alpha, beta : float
        Target FDR and FNR.
    epsilon : float
        Analysis parameter in ``(2 max(alpha, beta), 1/3)``.

    ``fit(X, y)`` takes ``X`` of shape ``(replicates, n)`` (one row per
    independent draw of the statistics) and the boolean signal mask ``y``.
    After fitting, ``proxy_set_`` and ``bounds_`` hold the results and the
    individual proxies are exposed as trailing-underscore attributes.
    """

    def __init__(self, alpha=0.01, beta=0.01, epsilon=0.25):
        self.alpha = alpha
        self.beta = beta
        self.epsilon = epsilon

    def fit(self, X, y):
        X = check_statistics(X, "X", allow_2d=True)
        if X.ndim != 2:
            raise ParameterError("X must be a (replicates, n) matrix")
        mask = check_signal_mask(y, X.shape[1])
        check_targets(self.alpha, self.beta, self.epsilon)
        m, n = int(mask.sum()), X.shape[1]
        kp = k_plus(self.alpha, self.epsilon, m, n)
        curves = false_disc_curve(X, mask, kp)
        self.proxy_set_ = proxies_from_curves(curves, m, n, self.alpha, self.beta, self.epsilon)
        self.bounds_ = theorem_bounds(self.proxy_set_, self.epsilon)
        for name, value in asdict(self.proxy_set_).items():
            if name not in ("m", "degenerate"):
                setattr(self, f"{name}_", value)
        self.n_replicates_ = len(X)
        return self
