"""Independent reference implementations used by the test suite.

Everything here is deliberately built from different primitives than the
package under test: numpy's default generator instead of RngStream, dense
linear algebra instead of banded or Cholesky-factored solves, and direct
quadrature instead of the engine's grid sampler. Agreement between the two
paths is then evidence, not tautology.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy.special import ndtr


def gillespie_birth_death(lam, mu, t_end, x0, rng):
    """Terminal state of an immigration-death process, simulated directly.

    Birth at rate lam, death at rate x * mu. ``rng`` is a numpy Generator.
    """
    x = int(x0)
    t = 0.0
    while True:
        rate = lam + x * mu
        if rate <= 0.0:
            return x
        t += rng.exponential(1.0 / rate)
        if t > t_end:
            return x
        if rng.random() <= lam / rate:
            x += 1
        else:
            x -= 1


def diffusion_posterior_cdf(y, t1, theta_max):
    """Posterior CDF of the volatility given one exact endpoint observation.

    Flat prior on (0, theta_max]; density proportional to
    theta^-1 exp(-y^2 / (2 theta^2 t1)), normalized by quadrature.
    """
    c = y * y / (2.0 * t1)

    def dens(t):
        return np.exp(-c / (t * t)) / t

    lo = abs(y) / np.sqrt(1e4 * t1) if y != 0.0 else 1e-12
    total, _ = integrate.quad(dens, lo, theta_max, limit=200)

    def cdf(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape or (1,), dtype=float)
        for k, v in enumerate(np.atleast_1d(t)):
            if v <= lo:
                out[k] = 0.0
            else:
                part, _ = integrate.quad(dens, lo, min(float(v), theta_max), limit=200)
                out[k] = part / total
        return out.reshape(t.shape) if t.shape else float(out[0])

    return cdf


def gmrf_level_posterior(q, observed, y):
    """Mean and precision of the field level given exactly observed sites.

    Works entirely in dense covariance coordinates: Sigma = Q^-1, restrict to
    the observed block, and combine with the flat prior on the level.
    """
    sigma = np.linalg.inv(np.asarray(q, dtype=float))
    sig_oo = sigma[np.ix_(observed, observed)]
    w = np.linalg.solve(sig_oo, np.ones(len(observed)))
    prec = float(w.sum())
    mean = float(np.asarray(y, dtype=float) @ w) / prec
    return mean, prec


def gmrf_level_posterior_cdf(q, observed, y):
    mean, prec = gmrf_level_posterior(q, observed, y)
    sd = 1.0 / np.sqrt(prec)
    return lambda t: ndtr((np.asarray(t, dtype=float) - mean) / sd)


def mixture_weight_posterior_cdf(log_f0, log_f1, points=20001):
    """Posterior CDF of the mixture weight with the labels integrated out.

    p(theta | y) is proportional to prod_i (theta f0(y_i) + (1-theta) f1(y_i))
    on (0, 1); evaluated by log-sum quadrature on a uniform grid.
    """
    lf0 = np.asarray(log_f0, dtype=float)
    lf1 = np.asarray(log_f1, dtype=float)
    grid = np.linspace(0.0, 1.0, points)
    inner = grid[1:-1]
    terms = np.logaddexp(np.log(inner)[None, :] + lf0[:, None],
                         np.log1p(-inner)[None, :] + lf1[:, None])
    logp = np.full(points, -np.inf)
    logp[1:-1] = terms.sum(axis=0)
    if np.all(np.isneginf(lf1)):
        logp[-1] = lf0.sum()  # theta = 1 boundary carries density when f1 never fires
    if np.all(np.isneginf(lf0)):
        logp[0] = lf1.sum()
    w = np.exp(logp - np.max(logp[np.isfinite(logp)]))
    cell = 0.5 * (w[1:] + w[:-1]) * np.diff(grid)
    cum = np.concatenate(([0.0], np.cumsum(cell)))
    cum /= cum[-1]

    def cdf(t):
        return np.interp(np.asarray(t, dtype=float), grid, cum)

    return cdf


def ar1_series(rho, n, rng):
    """Stationary AR(1) path with unit innovations, via scipy's filter."""
    from scipy.signal import lfilter

    z = rng.standard_normal(n)
    z[0] /= np.sqrt(1.0 - rho * rho)
    return lfilter([1.0], [1.0, -rho], z)


def pooled_counts(a, b, min_expected=5.0):
    """Histogram two integer samples on a shared support and pool sparse bins.

    Pools from both ends toward the middle until every pooled bin of the
    smaller-expectation side reaches ``min_expected``. Returns (obs_a, obs_b).
    """
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    lo = int(min(a.min(), b.min()))
    hi = int(max(a.max(), b.max()))
    ca = np.bincount(a - lo, minlength=hi - lo + 1).astype(float)
    cb = np.bincount(b - lo, minlength=hi - lo + 1).astype(float)
    out_a, out_b = [], []
    acc_a = acc_b = 0.0
    for va, vb in zip(ca, cb):
        acc_a += va
        acc_b += vb
        if min(acc_a, acc_b) >= min_expected:
            out_a.append(acc_a)
            out_b.append(acc_b)
            acc_a = acc_b = 0.0
    if acc_a or acc_b:
        if out_a:
            out_a[-1] += acc_a
            out_b[-1] += acc_b
        else:
            out_a.append(acc_a)
            out_b.append(acc_b)
    return np.asarray(out_a), np.asarray(out_b)


def homogeneity_chi_square(a, b, min_expected=5.0):
    """Two-sample chi-square statistic and degrees of freedom for counts."""
    obs_a, obs_b = pooled_counts(a, b, min_expected)
    n_a, n_b = obs_a.sum(), obs_b.sum()
    pooled = obs_a + obs_b
    exp_a = pooled * n_a / (n_a + n_b)
    exp_b = pooled * n_b / (n_a + n_b)
    stat = float(np.sum((obs_a - exp_a) ** 2 / exp_a)
                 + np.sum((obs_b - exp_b) ** 2 / exp_b))
    return stat, max(len(pooled) - 1, 1)
