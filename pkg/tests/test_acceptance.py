"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from fdrbounds import _rng
from fdrbounds.bounds import (
    RateExponents,
    iid_location_feasible,
    kappa_star,
    spiked_feasible,
)
from fdrbounds.cli import run
from fdrbounds.frontier import GridSpec, calibrate, run_frontier
from fdrbounds.model import Family, ModelSpec, layout_for, sample_block
from fdrbounds.procedures import BHRule, estimate_fdr_fnr
from fdrbounds.proxies import (
    MINUS,
    PLUS,
    c0,
    ell_star_quantile,
    ell_star_scan,
    false_disc_curve,
    k_plus,
    minus_proxies,
    order_stat_event_table,
    plus_proxies,
    sample_false_disc_curves,
)
from fdrbounds.verify import (
    asymptotic_ratios,
    check_band,
    check_gordon,
    figure_model,
    random_small_spec,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EPS = 0.25


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# -- 1 ------------------------------------------------------------------------

def _oracle_x(spec, w_row):
    """Statistics computed element by element in plain Python."""
    m = spec.m
    out = []
    for i, w in enumerate(w_row):
        w = float(w)
        if i >= m:
            out.append(w)
        elif spec.family in (Family.IID_LOCATION, Family.SPIKED, Family.GROUPED):
            out.append(w + spec.mu)
        elif spec.family is Family.IID_SCALE:
            out.append(spec.sigma * w)
        else:
            out.append(1.0 - (1.0 - w) ** (1.0 / spec.gamma))
    return out


def _oracle_null_counts(x, m):
    """``L(k)`` for ``k = 0..n`` from a descending sort, ties to the lower index."""
    order = sorted(range(len(x)), key=lambda i: (-x[i], i))
    counts = [0]
    for i in order:
        counts.append(counts[-1] + (i >= m))
    return counts


def _oracle_events(x, m, k):
    """Order-statistic events for ``ell = 0..k``, using that every transform is increasing."""
    nulls = sorted(x[m:], reverse=True)
    signals = sorted(x[:m], reverse=True)
    row = []
    for ell in range(k + 1):
        if ell == 0:
            row.append(True)
        elif ell > len(nulls):
            row.append(False)
        elif k - ell + 1 > m:
            row.append(True)
        else:
            row.append(nulls[ell - 1] > signals[k - ell])
    return row


@pytest.mark.criterion(1, "order-statistic identity, exact, 200 small instances")
def test_criterion_1_identity():
    rng = np.random.default_rng(20240101)
    reps = 10
    families = set()
    failures = {"identity": 0, "curve": 0, "events": 0}
    with Timer() as t:
        for inst in range(200):
            spec = random_small_spec(rng)
            families.add(spec.family)
            layout = layout_for(spec)
            w = sample_block(spec, layout, inst, _rng.PROXY_STREAM, 0, reps)
            x_rows = [_oracle_x(spec, row) for row in w]
            curve = false_disc_curve(
                np.array(x_rows), layout.signal_mask, spec.n
            )
            for r, x in enumerate(x_rows):
                counts = _oracle_null_counts(x, spec.m)
                failures["curve"] += sum(int(curve[r, k]) != counts[k] for k in range(spec.n + 1))
                for k in range(spec.n + 1):
                    events = _oracle_events(x, spec.m, k)
                    table = order_stat_event_table(w[r], layout, spec, k)[0]
                    for ell in range(k + 1):
                        failures["identity"] += (counts[k] >= ell) != events[ell]
                        failures["events"] += bool(table[ell]) != events[ell]
    print(f"mismatches {failures}, families {sorted(f.value for f in families)}, "
          f"{t.elapsed:.1f}s")
    assert len(families) == len(Family)
    assert failures == {"identity": 0, "curve": 0, "events": 0}
    assert t.elapsed < 10.0


# -- 2 ------------------------------------------------------------------------

@pytest.mark.criterion(2, "quantile route equals scan route on 50 configurations")
def test_criterion_2_routes_agree():
    rng = np.random.default_rng(7)
    mismatches = []
    with Timer() as t:
        for i in range(50):
            spec = random_small_spec(rng, n_max=60)
            layout = layout_for(spec)
            k = int(rng.integers(0, spec.n + 1))
            eps = float(rng.choice([0.05, 0.1, 0.25, 0.3]))
            variant = MINUS if i % 2 else PLUS
            a = ell_star_quantile(spec, layout, k, eps, 200, seed=i, variant=variant)
            b = ell_star_scan(spec, layout, k, eps, 200, seed=i, variant=variant)
            if a != b:
                mismatches.append((spec, k, eps, a, b))
    print(f"{len(mismatches)} mismatches, {t.elapsed:.1f}s")
    assert not mismatches
    assert t.elapsed < 60.0


# -- 3 ------------------------------------------------------------------------

@pytest.mark.criterion(3, "BH lands in the discovery band with probability >= 1-2eps-0.05")
def test_criterion_3_band():
    with Timer() as t:
        res = check_band(trials=400, seed=0, epsilon=EPS)
    print(res.detail, f"{t.elapsed:.1f}s")
    assert res.passed
    assert t.elapsed < 300.0


# -- 4 ------------------------------------------------------------------------

def _dominance_rows(which, levels=(0.02, 0.05, 0.1, 0.2), trials=400, replicates=1000):
    spec = figure_model(which)
    layout = layout_for(spec)
    rows = []
    for j, q in enumerate(levels):
        rates = estimate_fdr_fnr(spec, layout, BHRule(q), trials, seed=100 + j)
        a_hat, b_hat = rates.fdr, rates.fnr
        need = spec.m
        if a_hat < EPS:
            need = max(need, k_plus(a_hat, EPS, spec.m, spec.n))
        curves = sample_false_disc_curves(spec, layout, need, replicates, seed=200 + j)
        # a side whose measured rate reaches epsilon makes its proxy vacuous
        fdp_minus = minus_proxies(curves, b_hat, EPS, spec.m)[2] if b_hat < EPS else 0.0
        fnp_plus = plus_proxies(curves, a_hat, EPS, spec.m, spec.n)[3] if a_hat < EPS else 0.0
        rows.append((which, q, a_hat, rates.fdr_se, b_hat, rates.fnr_se, fdp_minus, fnp_plus))
    return rows


@pytest.mark.criterion(4, "BH's measured rates dominate the proxy lower bounds")
def test_criterion_4_dominance():
    assert c0(EPS) == 32.0
    bad = []
    with Timer() as t:
        rows = _dominance_rows("a") + _dominance_rows("b")
    for which, q, a, a_se, b, b_se, fdp_m, fnp_p in rows:
        print(f"fig {which} q={q}: alpha={a:.4f}+-{a_se:.4f} >= {fdp_m / 32:.4f}, "
              f"beta={b:.4f}+-{b_se:.4f} >= {fnp_p / 32:.4f}")
        if a + 3 * a_se < fdp_m / 32 or b + 3 * b_se < fnp_p / 32:
            bad.append((which, q))
    assert not bad
    assert t.elapsed < 600.0


# -- 5 ------------------------------------------------------------------------

@pytest.mark.criterion(5, "frontier curves monotone, calibrated curve under BH, c_hat <= c_hat0")
@pytest.mark.parametrize("which", ["a", "b"])
def test_criterion_5_frontier(which):
    with Timer() as t:
        res = run_frontier(figure_model(which), GridSpec(25, EPS), replicates=1000, trials=400,
                           seed=7)
    lo = [p.beta_lo for p in res.points]
    bh = [p.beta_bh for p in res.points]
    print(f"fig {which}: c_hat={res.c_hat:.4f} c_hat0={res.c_hat0:.4f} "
          f"beta_bh {bh[0]:.3f}->{bh[-1]:.3f}, {t.elapsed:.1f}s")
    assert len(res.points) == 25
    assert all(x >= y for x, y in zip(lo, lo[1:]))
    assert all(x >= y for x, y in zip(bh, bh[1:]))
    assert all(res.c_hat * a <= b for a, b in zip(lo, bh))
    assert res.c_hat <= res.c_hat0
    assert t.elapsed < 1200.0


# -- 6 ------------------------------------------------------------------------

@pytest.mark.criterion(6, "order-statistic asymptotic ratio in [0.8, 1.2]; Gordon bound within 3SE")
def test_criterion_6_order_statistics():
    with Timer() as t:
        ratios = asymptotic_ratios(sizes=(1_000, 10_000, 100_000), ranks=(1, 4, 16),
                                   replicates=500, seed=0)
        gordon = check_gordon(n_sub=100, ranks=(50, 60, 75, 90, 100), replicates=10_000, seed=0)
    for (n, k), r in sorted(ratios.items()):
        print(f"n={n} k={k} ratio={r:.4f}")
    print(gordon.detail, f"{t.elapsed:.1f}s")
    assert gordon.passed
    outside = {key: r for key, r in ratios.items() if not 0.8 <= r <= 1.2}
    assert not outside, f"ratios outside [0.8, 1.2]: {outside}"
    assert t.elapsed < 120.0


# -- 7 ------------------------------------------------------------------------

@pytest.mark.criterion(7, "closed-form fixtures for the feasibility conditions")
def test_criterion_7_closed_forms():
    with Timer() as t:
        # hand value: (r - s)**2 / (4 r) = 0.09 / 3.2
        assert kappa_star(0.5, 0.8) == pytest.approx(0.028125, abs=1e-12)
        # sqrt(0.8) - sqrt(0.6) - sqrt(0.01) by hand: 0.894427 - 0.774597 - 0.1
        ok = iid_location_feasible(RateExponents(0.5, 0.8, 0.1, 0.01))
        assert ok.feasible and ok.slack == pytest.approx(0.019830, abs=1e-6)
        # sqrt(0.8) - sqrt(0.8) - sqrt(0.1)
        no = iid_location_feasible(RateExponents(0.5, 0.8, 0.3, 0.1))
        assert not no.feasible and no.slack == pytest.approx(-0.316228, abs=1e-6)
        rng = np.random.default_rng(3)
        for _ in range(1000):
            s = rng.uniform(0.01, 0.9)
            e = RateExponents(s, rng.uniform(s + 0.01, 0.99), *rng.uniform(0, 1, size=2))
            assert spiked_feasible(e, 0.0, 0.0).slack == iid_location_feasible(e).slack
        # sqrt(0.8) * (1 - 0.5) - 0.5 * sqrt(0.1): 0.447214 - 0.158114
        flip = spiked_feasible(RateExponents(0.5, 0.8, 0.3, 0.1), 0.75, 0.75)
        assert flip.feasible and flip.slack == pytest.approx(0.289100, abs=1e-6)
    assert t.elapsed < 1.0


# -- 8 ------------------------------------------------------------------------

@pytest.mark.criterion(8, "calibration fixture and pooled constant over the nine-model grid")
def test_criterion_8_calibration():
    cal = calibrate([0.1, 0.1], [0.2, 0.4])
    assert cal.c_hat0 == pytest.approx(3.0) and cal.c_hat == pytest.approx(2.0)

    doc = json.loads((CONFIGS / "appendix_b.json").read_text())
    specs = [ModelSpec.from_dict(d) for d in doc["models"]]
    expect = [ModelSpec.rare_weak(10_000, s, s + d) for s in (0.5, 0.6, 0.7)
              for d in (0.01, 0.05, 0.1)]
    assert [(s.n, s.m) for s in specs] == [(s.n, s.m) for s in expect]
    np.testing.assert_allclose([s.mu for s in specs], [s.mu for s in expect], rtol=1e-12)

    with Timer() as t:
        res = run_frontier(specs, GridSpec(25, EPS), replicates=300, trials=100, seed=11)
    per_model = []
    for i in range(len(specs)):
        pts = res.curve(i)
        c = calibrate([p.beta_lo for p in pts], [p.beta_bh for p in pts])
        if not c.skipped:
            per_model.append(c.c_hat)
    print(f"pooled c_hat={res.c_hat:.4f}, per-model {np.round(per_model, 4).tolist()}, "
          f"{t.elapsed:.1f}s")
    assert per_model
    assert all(res.c_hat <= c for c in per_model)
    assert res.c_hat <= res.c_hat0
    assert t.elapsed < 1800.0


# -- 9 ------------------------------------------------------------------------

@pytest.mark.criterion(9, "stochastic subcommands are byte-identical across worker counts")
@pytest.mark.parametrize("argv, name", [
    (["sample", "--n", "500", "--m", "10", "--mu", "3", "--replicate", "70"], "s.csv"),
    (["proxies", "--n", "2000", "--m", "20", "--mu", "3", "--alpha", "0.05",
      "--beta", "0.05", "--replicates", "300"], "p.json"),
    (["bh", "--n", "2000", "--m", "20", "--mu", "3", "--q", "0.1", "--trials", "200"], "b.json"),
    (["frontier", "--config", str(CONFIGS / "fig1b.json"), "--grid-b", "10",
      "--replicates", "200", "--trials", "130"], "f.csv"),
    (["frontier", "--config", str(CONFIGS / "fig1a.json"), "--grid-b", "10",
      "--replicates", "200", "--trials", "130"], "f.json"),
])
def test_criterion_9_determinism(tmp_path, argv, name):
    outputs = []
    with Timer() as t:
        for jobs in ("1", "2"):
            out = tmp_path / f"{jobs}-{name}"
            assert run(argv + ["--seed", "5", "--jobs", jobs, "--out", str(out)]) == 0
            outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert t.elapsed < 300.0
