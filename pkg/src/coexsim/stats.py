"""Empirical densities, univariate Gaussian-mixture EM and run summaries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from coexsim.engine import SampleSet


class DegenerateDataError(ValueError):
    """Input too small or without spread for the requested estimate."""


# --- histogram --------------------------------------------------------------

@dataclass
class Histogram:
    edges: np.ndarray
    densities: np.ndarray
    n: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write("bin_left,bin_right,density\n")
            for lo, hi, d in zip(self.edges[:-1], self.edges[1:], self.densities):
                fh.write(f"{lo:.10g},{hi:.10g},{d:.10g}\n")


def freedman_diaconis_width(x: np.ndarray) -> float:
    q75, q25 = np.percentile(x, [75, 25])
    return 2.0 * (q75 - q25) * len(x) ** (-1.0 / 3.0)


def histogram(samples, bin_width: float | None = None) -> Histogram:
    """Density-normalized histogram; ``bin_width=None`` uses Freedman-Diaconis."""
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < 2:
        raise DegenerateDataError("histogram needs at least 2 samples")
    if bin_width is None:
        bin_width = freedman_diaconis_width(x)
        if not bin_width > 0:
            raise DegenerateDataError("zero interquartile range; pass bin_width explicitly")
    elif not bin_width > 0:
        raise ValueError("bin_width must be positive")

    lo, hi = x.min(), x.max()
    n_bins = max(1, int(math.ceil((hi - lo) / bin_width)))
    edges = lo + bin_width * np.arange(n_bins + 1)
    if edges[-1] < hi:
        edges = np.append(edges, edges[-1] + bin_width)
    counts, _ = np.histogram(x, bins=edges)
    densities = counts / (len(x) * np.diff(edges))
    return Histogram(edges=edges, densities=densities, n=len(x))


# --- Gaussian mixture -------------------------------------------------------

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class FitConfig:
    """EM settings.

    ``variance_floor`` is absolute (in squared sample units); ``None`` means
    1e-6 times the sample variance.
    """

    k: int = 3
    max_iter: int = 500
    tol: float = 1e-8
    n_restarts: int = 5
    variance_floor: float | None = None
    seed: int = 0

    def __post_init__(self):
        errs = []
        if self.k < 1:
            errs.append("k must be >= 1")
        if not self.tol > 0:
            errs.append("tol must be > 0")
        if self.max_iter < 1:
            errs.append("max_iter must be >= 1")
        if self.n_restarts < 1:
            errs.append("n_restarts must be >= 1")
        if self.variance_floor is not None and not self.variance_floor > 0:
            errs.append("variance_floor must be > 0")
        if errs:
            raise ValueError("; ".join(errs))


@dataclass
class GaussianMixture:
    """Univariate mixture with components sorted by ascending mean."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood: float = float("nan")
    n_iter: int = 0
    converged: bool = False
    trace: list = field(default_factory=list, repr=False)

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def stds(self) -> np.ndarray:
        return np.sqrt(self.variances)

    def pdf(self, x):
        return gmm_pdf(self, x)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "weights": [float(w) for w in self.weights],
            "means": [float(m) for m in self.means],
            "variances": [float(v) for v in self.variances],
            "log_likelihood": float(self.log_likelihood),
            "n_iter": int(self.n_iter),
            "converged": bool(self.converged),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        model = cls(
            weights=np.asarray(d["weights"], dtype=float),
            means=np.asarray(d["means"], dtype=float),
            variances=np.asarray(d["variances"], dtype=float),
            log_likelihood=float(d.get("log_likelihood", float("nan"))),
            n_iter=int(d.get("n_iter", 0)),
            converged=bool(d.get("converged", False)),
        )
        if "k" in d and d["k"] != model.k:
            raise ValueError("k does not match the number of components")
        return model

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "GaussianMixture":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class EMStep:
    """State after one EM iteration, in original sample units."""

    log_likelihood: float
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray


def gmm_pdf(model: GaussianMixture, x):
    x = np.asarray(x, dtype=float)
    z = (x[..., None] - model.means) ** 2 / model.variances
    dens = model.weights * np.exp(-0.5 * z) / np.sqrt(2.0 * np.pi * model.variances)
    return dens.sum(axis=-1)


def responsibilities(model: GaussianMixture, x) -> np.ndarray:
    """Posterior component probabilities for each point, shape (n, k)."""
    a = _log_joint(np.atleast_1d(np.asarray(x, dtype=float)),
                   model.weights, model.means, model.variances)
    a -= a.max(axis=1, keepdims=True)
    np.exp(a, out=a)
    return a / a.sum(axis=1, keepdims=True)


def _log_joint(z, w, m, v):
    # N x k log of w_j * N(z; m_j, v_j)
    return np.log(w) - 0.5 * (_LOG_2PI + np.log(v)) - 0.5 * (z[:, None] - m) ** 2 / v


@numba.njit(cache=True)
def _em_pass(z, w, m, v):  # pragma: no cover - compiled
    """E-step fused with the sufficient statistics the M-step needs.

    Returns (log-likelihood, n_k, sum r z, sum r z^2) in one sweep over ``z``.
    """
    k = w.shape[0]
    const = np.empty(k)
    half_prec = np.empty(k)
    for j in range(k):
        const[j] = math.log(w[j]) - 0.5 * (_LOG_2PI + math.log(v[j]))
        half_prec[j] = 0.5 / v[j]
    nk = np.zeros(k)
    sz = np.zeros(k)
    szz = np.zeros(k)
    a = np.empty(k)
    ll = 0.0
    for i in range(z.shape[0]):
        zi = z[i]
        top = -np.inf
        for j in range(k):
            d = zi - m[j]
            a[j] = const[j] - half_prec[j] * d * d
            if a[j] > top:
                top = a[j]
        s = 0.0
        for j in range(k):
            a[j] = math.exp(a[j] - top)
            s += a[j]
        ll += math.log(s) + top
        for j in range(k):
            r = a[j] / s
            nk[j] += r
            sz[j] += r * zi
            szz[j] += r * zi * zi
    return ll, nk, sz, szz


def _m_step(stats, floor):
    _, nk, sz, szz = stats
    w = nk / nk.sum()
    safe = np.maximum(nk, np.finfo(float).tiny)
    m = sz / safe
    v = szz / safe - m * m
    return w, m, np.maximum(v, floor)


def _em(z, w, m, v, floor, fit: FitConfig, keep_trace: bool):
    stats = _em_pass(z, w, m, v)
    ll = stats[0]
    trace = []
    converged = False
    n_iter = 0
    for n_iter in range(1, fit.max_iter + 1):
        w, m, v = _m_step(stats, floor)
        stats = _em_pass(z, w, m, v)
        new_ll = stats[0]
        if keep_trace:
            trace.append((new_ll, w.copy(), m.copy(), v.copy()))
        change = new_ll - ll
        ll = new_ll
        if abs(change) <= fit.tol * abs(ll):
            converged = True
            break
    return w, m, v, ll, n_iter, converged, trace


def _initial_params(z, k, restart, seed):
    # restart 0 is the deterministic quantile start; later ones jitter the means
    q = (np.arange(k) + 0.5) / k
    m = np.quantile(z, q)
    if restart > 0:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))
        m = m + rng.normal(0.0, 1.0 / k, size=k)
    v = np.full(k, (1.0 / k) ** 2)  # z has unit spread
    w = np.full(k, 1.0 / k)
    return w, m, v


def fit_gmm(samples, fit: FitConfig | None = None, trace: bool = False) -> GaussianMixture:
    """Fit a ``fit.k``-component mixture by EM, best of ``fit.n_restarts``.

    Samples are sorted and standardized before fitting, which makes the result
    independent of input order and equivariant under affine rescaling. With
    ``trace=True`` the returned model carries one EMStep per iteration of the
    winning restart.
    """
    fit = fit or FitConfig()
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n < 10 * fit.k:
        raise DegenerateDataError(f"need at least {10 * fit.k} samples for k={fit.k}, got {n}")
    if not np.all(np.isfinite(x)):
        raise DegenerateDataError("samples contain non-finite values")
    center = x.mean()
    scale = x.std()
    if not scale > 0:
        raise DegenerateDataError("all samples identical; mixture is undefined")
    z = (x - center) / scale
    floor = 1e-6 if fit.variance_floor is None else fit.variance_floor / scale**2

    best = None
    for r in range(fit.n_restarts):
        w, m, v = _initial_params(z, fit.k, r, fit.seed)
        result = _em(z, w, m, v, floor, fit, trace)
        # strict '>' keeps the lowest restart index on ties
        if best is None or result[3] > best[3]:
            best = result
    w, m, v, ll, n_iter, converged, steps = best

    ll_shift = n * math.log(scale)

    def to_orig(wj, mj, vj):
        order = np.argsort(mj, kind="stable")
        return wj[order], center + scale * mj[order], scale**2 * vj[order]

    model_w, model_m, model_v = to_orig(w, m, v)
    return GaussianMixture(
        weights=model_w,
        means=model_m,
        variances=model_v,
        log_likelihood=ll - ll_shift,
        n_iter=n_iter,
        converged=converged,
        trace=[EMStep(s[0] - ll_shift, *to_orig(*s[1:])) for s in steps],
    )


def mixture_log_likelihood(model: GaussianMixture, samples) -> float:
    x = np.asarray(samples, dtype=float)
    a = _log_joint(x, model.weights, model.means, model.variances)
    top = a.max(axis=1)
    return float(np.sum(top + np.log(np.exp(a - top[:, None]).sum(axis=1))))


def bic(model: GaussianMixture, n: int) -> float:
    n_params = 3 * model.k - 1
    return -2.0 * model.log_likelihood + n_params * math.log(n)


def bic_sweep(samples, ks=range(1, 6), fit: FitConfig | None = None) -> dict[int, float]:
    """BIC per model order. Diagnostic only; the caller chooses k."""
    fit = fit or FitConfig()
    x = np.asarray(samples, dtype=float)
    out = {}
    for k in ks:
        model = fit_gmm(x, FitConfig(k=k, max_iter=fit.max_iter, tol=fit.tol,
                                     n_restarts=fit.n_restarts,
                                     variance_floor=fit.variance_floor, seed=fit.seed))
        out[k] = bic(model, len(x))
    return out


MAX_CURVE_POINTS = 1_000_000


def curve_points(model: GaussianMixture, lo: float, hi: float, step: float = 0.1):
    """Fitted density sampled on a regular grid, for plotting."""
    if step <= 0:
        raise ValueError("step must be > 0")
    n = int(math.floor((hi - lo) / step)) + 1
    if n > MAX_CURVE_POINTS:
        raise ValueError(f"curve grid of {n} points exceeds {MAX_CURVE_POINTS}; use a larger step")
    x = lo + step * np.arange(n)
    return x, gmm_pdf(model, x)


# --- summaries --------------------------------------------------------------

@dataclass
class Summary:
    n_samples: int
    n_interfered: int
    n_uninterfered: int
    interfered_fraction: float
    sinr_mean_interfered: float | None
    sinr_mean_uninterfered: float | None
    sinr_median_interfered: float | None
    sinr_median_uninterfered: float | None
    rate_mean_interfered: float | None
    rate_mean_uninterfered: float | None
    rate_median_interfered: float | None
    rate_median_uninterfered: float | None
    sinr_decrease: float | None
    rate_decrease: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _stat(fn, x):
    return float(fn(x)) if len(x) else None


def summarize(samples: SampleSet) -> Summary:
    """Sub-population statistics and relative decreases, interfered vs not.

    A decrease is ``1 - interfered_mean / uninterfered_mean`` (SINR taken in
    dB) and is ``None`` when either population is empty.
    """
    if len(samples) == 0:
        raise DegenerateDataError("empty sample set")
    f = np.asarray(samples.interfered, dtype=bool)
    s_i, s_u = samples.sinr_db[f], samples.sinr_db[~f]
    r_i, r_u = samples.rate_bps[f], samples.rate_bps[~f]

    def decrease(a, b):
        if not len(a) or not len(b):
            return None
        return float(1.0 - np.mean(a) / np.mean(b))

    return Summary(
        n_samples=len(samples),
        n_interfered=int(f.sum()),
        n_uninterfered=int((~f).sum()),
        interfered_fraction=float(f.mean()),
        sinr_mean_interfered=_stat(np.mean, s_i),
        sinr_mean_uninterfered=_stat(np.mean, s_u),
        sinr_median_interfered=_stat(np.median, s_i),
        sinr_median_uninterfered=_stat(np.median, s_u),
        rate_mean_interfered=_stat(np.mean, r_i),
        rate_mean_uninterfered=_stat(np.mean, r_u),
        rate_median_interfered=_stat(np.median, r_i),
        rate_median_uninterfered=_stat(np.median, r_u),
        sinr_decrease=decrease(s_i, s_u),
        rate_decrease=decrease(r_i, r_u),
    )
