"""Straight-line reference implementations and the oracle self-check.

The functions here deliberately share no code with the vectorised kernels:
plain Python loops over ``math`` functions, written directly from the
definitions.  :func:`run_oracle_check` compares kernels against them on
random windows and also checks filter frequency response and band coverage.
"""

import math

import numpy as np

from . import psmetrics
from .psmetrics import Metric

ORACLE_TOL = 1e-12


def plv_direct(dphi):
    re = sum(math.cos(d) for d in dphi) / len(dphi)
    im = sum(math.sin(d) for d in dphi) / len(dphi)
    return math.hypot(re, im)


def _mean_direction(angles):
    s = sum(math.sin(a) for a in angles)
    c = sum(math.cos(a) for a in angles)
    if math.hypot(s, c) / len(angles) <= 1e-12:
        return None
    return math.atan2(s, c)


def circ_circ_direct(px, py):
    mu = _mean_direction(px)
    nu = _mean_direction(py)
    if mu is None or nu is None:
        return math.nan
    num = sxx = syy = 0.0
    for a, b in zip(px, py):
        u = math.sin(a - mu)
        v = math.sin(b - nu)
        num += u * v
        sxx += u * u
        syy += v * v
    if sxx < 1e-12 or syy < 1e-12:
        return math.nan
    return num / math.sqrt(sxx * syy)


def _h(a, b):
    two_pi = 2 * math.pi
    a %= two_pi
    b %= two_pi
    d = a - b
    return d + math.pi if d < 0 else d - math.pi


def toroidal_direct(px, py):
    n = len(px)
    num = sxx = syy = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            hx = _h(px[i], px[j])
            hy = _h(py[i], py[j])
            num += hx * hy
            sxx += hx * hx
            syy += hy * hy
    if sxx < 1e-12 or syy < 1e-12:
        return math.nan
    return num / math.sqrt(sxx * syy)


def pearson_direct(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def _deviation(a, b):
    if math.isnan(a) and math.isnan(b):
        return 0.0
    if math.isnan(a) or math.isnan(b):
        return math.inf
    return abs(a - b)


def window_deviations(n_windows=1000, lengths=range(4, 33), seed=0):
    """Max |kernel - oracle| per windowed metric over random windows."""
    rng = np.random.default_rng(seed)
    lengths = list(lengths)
    worst = {m: 0.0 for m in (Metric.PLV, Metric.CIRC_CIRC, Metric.TOROIDAL, Metric.CSW)}
    for _ in range(n_windows):
        n = int(rng.choice(lengths))
        px = rng.uniform(-np.pi, np.pi, n)
        py = rng.uniform(-np.pi, np.pi, n)
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        dphi = psmetrics.phase_difference(px, py)
        pairs = {
            Metric.PLV: (psmetrics.plv_window(dphi), plv_direct(list(dphi))),
            Metric.CIRC_CIRC: (psmetrics.circ_circ_window(px, py), circ_circ_direct(list(px), list(py))),
            Metric.TOROIDAL: (psmetrics.toroidal_window(px, py), toroidal_direct(list(px), list(py))),
            Metric.CSW: (psmetrics.csw_window(x, y), pearson_direct(list(x), list(y))),
        }
        for m, (got, want) in pairs.items():
            worst[m] = max(worst[m], _deviation(float(got), want))
    return worst


def sliding_deviations(seed=1, n_samples=80, window=12):
    """Max |sliding_apply - per-slice kernel| per windowed metric."""
    rng = np.random.default_rng(seed)
    px = rng.uniform(-np.pi, np.pi, n_samples)
    py = rng.uniform(-np.pi, np.pi, n_samples)
    worst = {}
    for m in (Metric.PLV, Metric.CIRC_CIRC, Metric.TOROIDAL, Metric.CSW):
        series = psmetrics.sliding_apply(m, px, py, window)
        dev = 0.0
        for k, t in enumerate(range(window - 1, n_samples)):
            sx, sy = list(px[t - window + 1:t + 1]), list(py[t - window + 1:t + 1])
            if m is Metric.PLV:
                want = plv_direct([math.remainder(a - b, 2 * math.pi) for a, b in zip(sx, sy)])
            elif m is Metric.CIRC_CIRC:
                want = circ_circ_direct(sx, sy)
            elif m is Metric.TOROIDAL:
                want = toroidal_direct(sx, sy)
            else:
                want = pearson_direct(sx, sy)
            dev = max(dev, _deviation(float(series.values[k]), want))
        worst[m] = dev
    return worst


def filter_response_check(tr_seconds=2.0):
    """Band-pass sanity via direct evaluation of the transfer function."""
    from .signals import DEFAULT_BAND, design_butterworth_bandpass

    b, a = design_butterworth_bandpass(DEFAULT_BAND, tr_seconds)

    def gain(f):
        z = complex(math.cos(2 * math.pi * f * tr_seconds), -math.sin(2 * math.pi * f * tr_seconds))
        num = sum(c * z ** k for k, c in enumerate(b))
        den = sum(c * z ** k for k, c in enumerate(a))
        return abs(num / den)

    g_dc, g_mid, g_lo, g_hi = gain(0.0), gain(0.05), gain(0.01), gain(0.13)
    ok = (g_dc < 1e-10 and 1 / math.sqrt(2) <= g_mid <= 1 + 1e-12
          and g_mid > g_lo and g_mid > g_hi)
    return ok, {"dc": g_dc, "0.05Hz": g_mid, "0.01Hz": g_lo, "0.13Hz": g_hi}


def coverage_check(n_columns=200, n_rows=400, seed=2):
    """Fraction of Gaussian draws inside the summarize() 95% band."""
    from .simharness import summarize

    rng = np.random.default_rng(seed)
    stack = rng.standard_normal((n_rows, n_columns))
    cell = summarize(stack)
    inside = (stack >= cell.lower95) & (stack <= cell.upper95)
    frac = float(inside.mean())
    return 0.93 <= frac <= 0.97, frac


def run_oracle_check(n_windows=1000, seed=0):
    """Run every oracle; returns a list of ``(name, passed, detail)``."""
    report = []
    for m, dev in window_deviations(n_windows, seed=seed).items():
        report.append((f"window/{m.value}", dev <= ORACLE_TOL, f"max |kernel - oracle| = {dev:.3e}"))
    for m, dev in sliding_deviations(seed=seed + 1).items():
        report.append((f"sliding/{m.value}", dev <= ORACLE_TOL, f"max |sliding - slice| = {dev:.3e}"))
    ok, gains = filter_response_check()
    report.append(("filter/response", ok, ", ".join(f"|H({k})|={v:.4g}" for k, v in gains.items())))
    ok, frac = coverage_check(seed=seed + 2)
    report.append(("summary/coverage", ok, f"fraction inside band = {frac:.4f}"))
    return report
