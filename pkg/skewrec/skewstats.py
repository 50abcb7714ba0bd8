"""Skewrec Skew Normal Statistics Module

Skew normal density and distribution functions, the skewness and moment
functions of the shape parameter, the closed-form pooled AUC under a skew
normal estimator, and sampling/histogram tools for the estimator learned by
a trained model.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.special import erfc

from skewrec.artifacts import atomic_open
from skewrec.corpus import Interactions
from skewrec.embed import EmbeddingModel
from skewrec.sampler import TripleSampler

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
# standard units beyond which the tail mass is negligible
TRUNCATION = 12.0
MOMENT_PANELS = 48
MOMENT_ORDER = 20
HISTOGRAM_BINS = 100


@dataclass(frozen=True)
class SkewNormalParams:
    xi: float = 0.0
    omega: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.xi, self.omega, self.alpha)):
            raise ValueError(f"skew normal parameters must be finite, got {self}")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")

    @property
    def delta(self) -> float:
        return self.alpha / math.sqrt(1.0 + self.alpha ** 2)

    def __str__(self):
        return f"xi={self.xi:g} omega={self.omega:g} alpha={self.alpha:g}"


@dataclass
class EstimatorSample:
    values: np.ndarray
    sample_skewness: float
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def _std_pdf(z):
    return np.exp(-0.5 * z * z) / SQRT2PI


def _std_cdf(z):
    return 0.5 * erfc(-z / SQRT2)


def phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / SQRT2PI


def Phi(x: float) -> float:
    return float(_std_cdf(x))


def _owen_t_integral(h: float, a: float) -> float:
    value, _ = integrate.quad(lambda x: math.exp(-0.5 * h * h * (1.0 + x * x)) / (1.0 + x * x),
                              0.0, a, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value / (2.0 * math.pi)


def owen_t(h: float, a: float) -> float:
    """Owen's T function by adaptive quadrature of its defining integral.

    For |a| > 1 the integration range is folded back onto [0, 1/|a|] with
    T(h, a) = (Phi(h) + Phi(ah)) / 2 - Phi(h) Phi(ah) - T(ah, 1/a), h >= 0,
    which also gives the limit T(h, inf) = Phi(-|h|) / 2.
    """
    if math.isnan(h) or math.isnan(a):
        raise ValueError("Owen's T is undefined for NaN arguments")
    if a < 0:
        return -owen_t(h, -a)
    if a == 0:
        return 0.0
    h = abs(h)
    if math.isinf(a):
        return 0.5 * Phi(-h)
    if a <= 1.0:
        return _owen_t_integral(h, a)
    ah = a * h
    return 0.5 * (Phi(h) + Phi(ah)) - Phi(h) * Phi(ah) - _owen_t_integral(ah, 1.0 / a)


def pdf(params: SkewNormalParams, x: float) -> float:
    z = (x - params.xi) / params.omega
    return 2.0 / params.omega * phi(z) * Phi(params.alpha * z)


def cdf(params: SkewNormalParams, x: float) -> float:
    z = (x - params.xi) / params.omega
    value = Phi(z) - 2.0 * owen_t(z, params.alpha)
    return min(1.0, max(0.0, value))


def gamma_of_alpha(alpha: float) -> float:
    """Skewness of the skew normal distribution with shape `alpha`."""
    delta = alpha / math.sqrt(1.0 + alpha * alpha)
    mean = delta * math.sqrt(2.0 / math.pi)
    return (4.0 - math.pi) / 2.0 * mean ** 3 / (1.0 - mean ** 2) ** 1.5


def _moment_rule(panels: int = MOMENT_PANELS, order: int = MOMENT_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [-TRUNCATION, TRUNCATION]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-TRUNCATION, TRUNCATION, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


_NODES, _WEIGHTS = _moment_rule()


def _shape(params: SkewNormalParams, alpha: Optional[float]) -> float:
    a = params.alpha if alpha is None else float(alpha)
    if not math.isfinite(a):
        raise ValueError(f"shape must be finite, got {alpha}")
    return a


def kappa_of_alpha(params: SkewNormalParams, eta: int, alpha: Optional[float] = None) -> float:
    """E[((X - xi) / omega) ** eta] for X skew normal with shape `alpha`.

    `alpha` defaults to `params.alpha`.  With x = xi + omega z the density
    term omega f(x) is 2 phi(z) Phi(alpha z), so xi and omega drop out.  A
    fixed quadrature rule keeps kappa smooth in alpha, and `dkappa_dalpha`
    is the exact derivative of the same rule.
    """
    a = _shape(params, alpha)
    z = _NODES
    return float(np.sum(_WEIGHTS * z ** eta * 2.0 * _std_pdf(z) * _std_cdf(a * z)))


def dkappa_dalpha(params: SkewNormalParams, eta: int, alpha: Optional[float] = None) -> float:
    """Derivative of `kappa_of_alpha` in the shape parameter.

    The integrand z ** (eta + 1) * 2 phi(z) phi(alpha z) is non-negative for
    odd eta, so the derivative is positive.
    """
    a = _shape(params, alpha)
    z = _NODES
    return float(np.sum(_WEIGHTS * z ** (eta + 1) * 2.0 * _std_pdf(z) * _std_pdf(a * z)))


def auc_micro_closed(params: SkewNormalParams) -> float:
    """P(X > 0) = 1 - Phi(-xi/omega) + 2 T(-xi/omega, alpha)."""
    h = (0.0 - params.xi) / params.omega
    return 1.0 - Phi(h) + 2.0 * owen_t(h, params.alpha)


def sample_skewness(values: Sequence[float]) -> float:
    """Third standardized central moment of a sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ValueError("skewness needs at least two values")
    centred = values - values.mean()
    m2 = np.mean(centred ** 2)
    if m2 == 0:
        raise ValueError("skewness is undefined for a sample with zero variance")
    m3 = np.mean(centred ** 3)
    return float(m3 / m2 ** 1.5)


def sample_skew_normal(params: SkewNormalParams, n: int, seed: int = 0) -> np.ndarray:
    """Draw from the skew normal as xi + omega (delta |z0| + sqrt(1 - delta^2) z1)."""
    rng = np.random.default_rng(seed)
    z0 = rng.standard_normal(n)
    z1 = rng.standard_normal(n)
    delta = params.delta
    return params.xi + params.omega * (delta * np.abs(z0) + math.sqrt(1.0 - delta * delta) * z1)


def estimator_sample(values: np.ndarray, bins: int = HISTOGRAM_BINS) -> EstimatorSample:
    values = np.asarray(values, dtype=np.float64)
    counts, edges = np.histogram(values, bins=bins)
    return EstimatorSample(values=values, sample_skewness=sample_skewness(values),
                           bin_edges=edges, counts=counts)


def collect_estimator(model: EmbeddingModel, train: Interactions, n_triples: int,
                      seed: int = 0, bins: int = HISTOGRAM_BINS) -> EstimatorSample:
    """Realized estimator values over `n_triples` sampled training triples."""
    users, pos, neg = TripleSampler(train, seed).draw(n_triples)
    values = model.pair_scores(users, pos, neg)
    sample = estimator_sample(values, bins)
    logger.info("Estimator over %d triples: mean %.4f, skewness %.4f",
                n_triples, sample.mean, sample.sample_skewness)
    return sample


def pdf_curve(params: SkewNormalParams, xs: Sequence[float]) -> np.ndarray:
    return np.array([pdf(params, float(x)) for x in xs])


def write_histogram(path: str, sample: EstimatorSample, header: Optional[dict] = None) -> None:
    """Write `bin_left<TAB>bin_right<TAB>count` rows under a comment header."""
    with atomic_open(path) as f:
        f.write(f"# sample_skewness\t{sample.sample_skewness:.8g}\n")
        f.write(f"# mean\t{sample.mean:.8g}\n")
        f.write(f"# n\t{sample.values.size}\n")
        for key, value in (header or {}).items():
            f.write(f"# {key}\t{value}\n")
        for left, right, count in zip(sample.bin_edges[:-1], sample.bin_edges[1:], sample.counts):
            f.write(f"{left:.10g}\t{right:.10g}\t{int(count)}\n")


def write_pdf_curve(path: str, params: SkewNormalParams, xs: Sequence[float]) -> None:
    """Write `x<TAB>pdf` rows for a reference skew normal curve."""
    with atomic_open(path) as f:
        f.write(f"# {params}\n")
        for x, density in zip(xs, pdf_curve(params, xs)):
            f.write(f"{float(x):.10g}\t{density:.10g}\n")
