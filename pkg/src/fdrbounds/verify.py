"""Self-checks of the order-statistic machinery behind the proxies.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs a
selection of them and :func:`format_table` renders a pass/fail table.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _rng
from .exceptions import ParameterError, RegimeWarning
from .model import Family, ModelSpec, apply_alternative, layout_for, sample_block
from .orderstats import expected_order_stat_mc, gaussian_chi_asymptotic, halfnormal_chi_upper
from .procedures import BHRule, band_probability
from .proxies import (
    ProxyConfig,
    derandomization_check,
    false_disc_curve,
    order_stat_event_table,
    proxy_set,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_small_spec(rng, n_max=20):
    """A random model with ``n <= n_max`` drawn across all five families."""
    family = Family(rng.choice([f.value for f in Family]))
    n = int(rng.integers(3, n_max + 1))
    m = int(rng.integers(1, n))
    params = {}
    if family.is_location:
        params["mu"] = float(rng.choice([0.0, rng.uniform(0.0, 3.0)]))
    if family is Family.IID_SCALE:
        params["sigma"] = float(rng.uniform(1.0, 4.0))
    if family is Family.LEHMANN:
        params["gamma"] = float(rng.uniform(0.05, 0.95))
    if family is Family.SPIKED:
        rho0, rho1 = rng.uniform(0.0, 0.9, size=2)
        params.update(rho0=float(rho0), rho1=float(rho1),
                      rhoc=float(rng.uniform(0.0, min(rho0, rho1))),
                      cross_sign=int(rng.choice([-1, 1])))
    if family is Family.GROUPED:
        m = int(rng.integers(1, n // 2 + 1))
        cap = min(m, n // m, n // m - 1)
        params["group_size"] = int(rng.integers(1, max(cap, 1) + 1))
    return ModelSpec(family=family, n=n, m=m, **params)


def check_identity(instances=200, replicates=10, seed=0):
    """Null-count events versus order-statistic events, every ``(k, ell)``."""
    rng = _rng.substream(seed, _rng.PROXY_STREAM, 10**6)
    failures = compared = 0
    for i in range(instances):
        spec = random_small_spec(rng)
        layout = layout_for(spec)
        w = sample_block(spec, layout, seed, _rng.PROXY_STREAM, i * replicates,
                         (i + 1) * replicates)
        curve = false_disc_curve(apply_alternative(spec, w, layout), layout.signal_mask, spec.n)
        for k in range(spec.n + 1):
            table = order_stat_event_table(w, layout, spec, k)
            counted = curve[:, [k]] >= np.arange(k + 1)
            failures += int(np.count_nonzero(table != counted))
            compared += table.size
    return CheckResult(
        "order-stat identity", failures == 0,
        f"{failures} mismatches in {compared} events over {instances} models",
    )


def figure_model(which="a", n=10_000):
    """The two rare-weak location models used for the frontier figures."""
    m, r = {"a": (15, 0.8), "b": (100, 0.6)}[which]
    return ModelSpec(family=Family.IID_LOCATION, n=n, m=m, mu=math.sqrt(2.0 * r * math.log(n)))


def check_band(trials=400, seed=0, q=0.1, epsilon=0.25, n_jobs=1):
    """BH's rejection count lands in the discovery band often enough."""
    spec = figure_model("a")
    res = band_probability(spec, layout_for(spec), BHRule(q), epsilon, trials, seed,
                           n_jobs=n_jobs)
    floor = 1.0 - 2.0 * epsilon - 0.05
    return CheckResult(
        "band probability", res.probability >= floor,
        f"P={res.probability:.4f} >= {floor:.2f} (band [{res.k_minus}, {res.k_plus}], "
        f"alpha={res.alpha:.4f}, beta={res.beta:.4f})",
    )


def check_derandomization(replicates=200, seed=0, epsilon=0.25, n_jobs=1):
    """The expectation inequality at the minus proxies of a rare-weak model."""
    spec = ModelSpec.rare_weak(10_000, 0.5, 0.6)
    layout = layout_for(spec)
    proxies = proxy_set(spec, layout, ProxyConfig(0.01, 0.01, epsilon, 1000, seed), n_jobs)
    res = derandomization_check(spec, layout, proxies.k_minus, proxies.ell_minus, epsilon,
                                replicates, seed, n_jobs=n_jobs)
    return CheckResult(
        "derandomization", res.holds,
        f"k={proxies.k_minus}, ell={proxies.ell_minus}: {res.lhs:.4f} > {res.rhs:.4f}",
    )


def check_gordon(n_sub=100, ranks=(50, 60, 80, 100), replicates=10_000, seed=0, n_jobs=1):
    """Half-normal expected order statistics stay under the closed-form bound."""
    worst = -math.inf
    ok = True
    for k in ranks:
        est = expected_order_stat_mc("halfnormal", k, n_sub, replicates, seed, n_jobs)
        gap = est.mean - halfnormal_chi_upper(k, n_sub) - 3.0 * est.stderr
        worst = max(worst, gap)
        ok &= gap <= 0
    return CheckResult("gordon bound", bool(ok), f"worst excess over bound+3SE: {worst:.4f}")


def asymptotic_ratios(sizes=(1_000, 10_000, 100_000), ranks=(1, 4, 16), replicates=500,
                      seed=0, n_jobs=1):
    """Monte-Carlo over leading-order expected normal order statistics, per ``(n, k)``."""
    out = {}
    for n_sub in sizes:
        for k in ranks:
            if k * math.log(n_sub) > n_sub:
                continue
            est = expected_order_stat_mc("normal", k, n_sub, replicates, seed, n_jobs)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                out[(n_sub, k)] = est.mean / gaussian_chi_asymptotic(k, n_sub)
    return out


def check_asymptotic(replicates=500, seed=0, n_jobs=1, low=0.8, high=1.2):
    ratios = asymptotic_ratios(replicates=replicates, seed=seed, n_jobs=n_jobs)
    bad = {key: r for key, r in ratios.items() if not low <= r <= high}
    detail = ", ".join(f"(n={n}, k={k}) {r:.4f}" for (n, k), r in sorted(bad.items()))
    lo, hi = min(ratios.values()), max(ratios.values())
    return CheckResult(
        "asymptotic ratio", not bad,
        f"ratios in [{lo:.4f}, {hi:.4f}]" + (f"; outside [{low}, {high}]: {detail}" if bad else ""),
    )


CHECKS = {
    "identity": check_identity,
    "band": check_band,
    "derandomization": check_derandomization,
    "gordon": check_gordon,
    "asymptotic": check_asymptotic,
}


def run_checks(names=None, seed=0, n_jobs=1):
    """Run the named checks (all by default) in a fixed order."""
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ParameterError(f"unknown check(s): {', '.join(unknown)}; choose from {list(CHECKS)}")
    seed = _rng.check_seed(seed)
    results = []
    for name in CHECKS:
        if name not in names:
            continue
        func = CHECKS[name]
        kwargs = {"seed": seed}
        if name != "identity":
            kwargs["n_jobs"] = n_jobs
        results.append(func(**kwargs))
    return results


def format_table(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  result  detail"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL':6}  {r.detail}")
    return "\n".join(lines)
