"""Luminance segmentation with a 1-D Gaussian mixture over log-luminance.

Region and component indices are 0-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .radiometry import GRAY, LuminanceMap, log_luminance

SIGMA_FLOOR = 1e-2
_LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class EMConfig:
    """Knobs for :func:`fit_gmm`.

    ``restarts`` adds that many randomly seeded runs (drawn with ``seed``) on
    top of the deterministic quantile start; the best likelihood wins.
    """

    tol: float = 1e-6
    max_iter: int = 200
    max_samples: int = 2 ** 17
    sigma_floor: float = SIGMA_FLOOR
    restarts: int = 0
    seed: int | None = None


@dataclass(frozen=True)
class GmmModel:
    """Mixture components sorted by ascending mean.

    ``log_likelihood`` holds the per-sample log-likelihood after the
    initial state and after each EM iteration of the selected run.
    """

    pi: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    log_likelihood: tuple = field(default=(), compare=False)

    @property
    def n_components(self) -> int:
        return len(self.mu)

    def log_joint(self, x) -> np.ndarray:
        """``log(pi_k) + log N(x | mu_k, sigma_k)`` with shape ``(M, *x.shape)``."""
        x = np.asarray(x, dtype=np.float64)
        shape = (-1,) + (1,) * x.ndim
        mu = self.mu.reshape(shape)
        sigma = self.sigma.reshape(shape)
        with np.errstate(divide="ignore"):
            log_pi = np.log(self.pi).reshape(shape)
        z = (x - mu) / sigma
        return log_pi - 0.5 * z * z - np.log(sigma) - 0.5 * _LOG_2PI


@dataclass
class Segmentation:
    labels: np.ndarray
    n_regions: int
    m_ref: int | None = None

    def region(self, m: int) -> np.ndarray:
        return self.labels == m

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.n_regions)


def _mean_log_likelihood(x, pi, mu, sigma) -> tuple[float, np.ndarray]:
    """Return the mean log-likelihood and the ``(M, N)`` responsibilities."""
    z = (x[None, :] - mu[:, None]) / sigma[:, None]
    with np.errstate(divide="ignore"):
        log_p = np.log(pi)[:, None] - 0.5 * z * z - np.log(sigma)[:, None] - 0.5 * _LOG_2PI
    peak = log_p.max(axis=0)
    resp = np.exp(log_p - peak)
    total = resp.sum(axis=0)
    resp /= total
    return float(np.mean(peak + np.log(total))), resp


def _em(x, pi, mu, sigma, cfg: EMConfig):
    n = len(x)
    ll, resp = _mean_log_likelihood(x, pi, mu, sigma)
    history = [ll]
    for _ in range(cfg.max_iter):
        nk = resp.sum(axis=1)
        alive = nk > 0
        safe = np.where(alive, nk, 1.0)
        new_mu = np.where(alive, resp @ x / safe, mu)
        var = (resp * (x[None, :] - new_mu[:, None]) ** 2).sum(axis=1) / safe
        new_sigma = np.where(alive, np.maximum(np.sqrt(var), cfg.sigma_floor), sigma)
        pi, mu, sigma = nk / n, new_mu, new_sigma
        new_ll, resp = _mean_log_likelihood(x, pi, mu, sigma)
        history.append(new_ll)
        improved = new_ll - ll
        ll = new_ll
        if improved < cfg.tol:
            break
    return pi, mu, sigma, history


def _subsample(samples: np.ndarray, limit: int) -> np.ndarray:
    if len(samples) <= limit:
        return samples
    stride = -(-len(samples) // limit)
    return samples[::stride]


def fit_gmm(samples, n_components: int, config: EMConfig = EMConfig()) -> GmmModel:
    """Fit a 1-D Gaussian mixture by expectation-maximisation.

    Components start at the ``(m + 0.5) / M`` quantiles of the samples with
    equal weights and ``std / M`` spread. Iteration stops once the mean
    log-likelihood gains less than ``config.tol`` or after
    ``config.max_iter`` steps. Large inputs are fitted on a fixed-stride
    subsample of at most ``config.max_samples`` values.

    Parameters
    ----------
    samples : array_like
        Log-luminance values.
    n_components : int
        Number of mixture components ``M >= 1``.
    config : EMConfig
        Convergence, variance floor and restart settings.

    Returns
    -------
    GmmModel
        Components sorted by mean, ties broken by ascending sigma.
    """
    if n_components < 1:
        raise ValueError("need at least one mixture component")
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("cannot fit a mixture to no samples")
    x = _subsample(x, config.max_samples)
    m = n_components

    spread = max(float(np.std(x)) / m, config.sigma_floor)
    starts = [(np.full(m, 1.0 / m),
               np.quantile(x, (np.arange(m) + 0.5) / m),
               np.full(m, spread))]
    if config.restarts:
        rng = np.random.default_rng(config.seed)
        for _ in range(config.restarts):
            starts.append((np.full(m, 1.0 / m),
                           np.sort(rng.choice(x, size=m, replace=len(x) < m)),
                           np.full(m, spread)))

    best = None
    for pi, mu, sigma in starts:
        result = _em(x, pi, mu, sigma, config)
        if best is None or result[3][-1] > best[3][-1]:
            best = result
    pi, mu, sigma, history = best

    order = np.lexsort((sigma, mu))
    pi = pi[order] / pi.sum()
    return GmmModel(pi=pi, mu=mu[order], sigma=sigma[order], log_likelihood=tuple(history))


def assign_regions(lum: LuminanceMap, model: GmmModel) -> Segmentation:
    """Label each pixel with its maximum-posterior component.

    The posterior denominator is shared by all components, so the argmax is
    taken over the joint ``pi_k N(.)``; ties go to the lower index.
    """
    if lum.domain != "scaled":
        raise ValueError(f"expected scaled luminance, got {lum.domain}")
    x = log_luminance(lum.values)
    if model.n_components == 1:
        labels = np.zeros(x.shape, dtype=np.intp)
    else:
        labels = np.argmax(model.log_joint(x), axis=0)
    return Segmentation(labels=labels, n_regions=model.n_components)


def select_reference(model: GmmModel, gray: float = GRAY) -> int:
    """Index of the component with the largest ``pi_k N(log gray)``."""
    return int(np.argmax(model.log_joint(np.log(gray))))


def labels_monotone(model: GmmModel, low: float, high: float, n: int = 4097) -> bool:
    """Whether labels never decrease along ``[low, high]`` in log-luminance.

    Holds for equal spreads; a wide component can reclaim a tail otherwise.
    """
    if model.n_components == 1:
        return True
    grid = np.linspace(low, high, n)
    labels = np.argmax(model.log_joint(grid), axis=0)
    return bool(np.all(np.diff(labels) >= 0))
