"""Skewrec Skewness Ranking Optimization Module

The skewness ranking optimization criterion.  For a triple (u, i, j) with
estimator x = x_ui - x_uj the likelihood is sigmoid(((x - xi) / omega) ** eta)
and the model is trained by asynchronous stochastic gradient ascent on the
summed log-likelihood minus an L2 penalty.  BPR is the special case
xi=0, omega=1, eta=1.
"""
import dataclasses
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from time import monotonic
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit, log_expit

from skewrec import kernels
from skewrec.corpus import Interactions
from skewrec.embed import EmbeddingModel, init_model
from skewrec.notify import TrainNotify
from skewrec.result import EpochResult
from skewrec.sampler import TripleSampler, epoch_size

logger = logging.getLogger(__name__)

# triples drawn per kernel call; bounds the memory of one draw
DRAW_BLOCK = 1 << 16


class ConfigError(ValueError):
    """Raised for invalid hyperparameters or config files."""


class DivergenceError(ValueError):
    """Raised when an update produces non-finite parameters."""


@dataclass(frozen=True)
class SkewOptConfig:
    xi: float = 0.0
    omega: float = 1.0
    eta: int = 1
    beta: float = 0.05
    lam: float = 0.0025
    epochs: int = 200
    seed: int = 0
    threads: int = 1
    clip: float = 10.0
    dim: int = 32

    def validate(self) -> "SkewOptConfig":
        problems = []
        for name in ("xi", "omega", "beta", "lam", "clip"):
            if not math.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if self.xi < 0:
            problems.append(f"xi must be >= 0, got {self.xi}")
        if self.omega <= 0:
            problems.append(f"omega must be > 0, got {self.omega}")
        if self.eta < 1 or self.eta % 2 == 0:
            problems.append(f"eta must be a positive odd integer, got {self.eta}")
        if self.beta <= 0:
            problems.append(f"beta must be > 0, got {self.beta}")
        if self.lam < 0:
            problems.append(f"lambda must be >= 0, got {self.lam}")
        if self.epochs < 0:
            problems.append(f"epochs must be >= 0, got {self.epochs}")
        if self.threads < 1:
            problems.append(f"threads must be >= 1, got {self.threads}")
        if self.clip <= 0:
            problems.append(f"clip must be > 0, got {self.clip}")
        if self.dim < 1:
            problems.append(f"dim must be >= 1, got {self.dim}")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def merged(self, **overrides) -> "SkewOptConfig":
        """Copy with the non-None overrides applied, validated."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return SkewOptConfig.from_mapping({**self.to_dict(), **changes})

    def to_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: Dict[str, object]) -> "SkewOptConfig":
        """Build from loosely typed values (strings from a config file, flags)."""
        fields = {field.name: field for field in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in values.items():
            name = _ALIASES.get(key, key)
            if name not in fields:
                raise ConfigError(f"unknown config key '{key}'")
            kind = int if fields[name].type in (int, "int") else float
            try:
                if kind is int and isinstance(value, float):
                    if not value.is_integer():
                        raise ValueError
                    value = int(value)
                kwargs[name] = kind(value)
            except (TypeError, ValueError):
                raise ConfigError(f"config key '{key}' expects {kind.__name__}, got '{value}'")
        return cls(**kwargs).validate()


_ALIASES = {"lambda": "lam", "d": "dim"}


def read_config(path: str) -> Dict[str, str]:
    """Parse a `key = value` config file into raw string values."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip() or not value.strip():
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key = key.strip()
            if _ALIASES.get(key, key) not in {f.name for f in dataclasses.fields(SkewOptConfig)}:
                raise ConfigError(f"{path}:{line_no}: unknown config key '{key}'")
            values[_ALIASES.get(key, key)] = value.strip()
    return values


@dataclass(frozen=True)
class TripleLossTerm:
    z: float
    zeta: float
    loglik: float
    dloss_dxhat: float


def _power(z: float, eta: int) -> float:
    with np.errstate(over="ignore"):
        return float(np.power(np.float64(z), eta))


def _standardize(xhat: float, cfg: SkewOptConfig) -> float:
    if not math.isfinite(xhat):
        raise ValueError(f"estimator must be finite, got {xhat}")
    return (xhat - cfg.xi) / cfg.omega


def log_likelihood(xhat: float, cfg: SkewOptConfig) -> float:
    """ln sigmoid(z ** eta) with z = (xhat - xi) / omega, stable for any finite input."""
    return float(log_expit(_power(_standardize(xhat, cfg), cfg.eta)))


def grad_pair(xhat: float, cfg: SkewOptConfig, clipped: bool = True) -> float:
    """Derivative of `log_likelihood` with respect to xhat, clamped to [0, clip]."""
    z = _standardize(xhat, cfg)
    s = float(expit(-_power(z, cfg.eta)))
    if s == 0.0:
        return 0.0
    g = s * cfg.eta * _power(z, cfg.eta - 1) / cfg.omega
    if clipped:
        g = min(g, cfg.clip)
    return max(g, 0.0)


def loss_term(xhat: float, cfg: SkewOptConfig) -> TripleLossTerm:
    z = _standardize(xhat, cfg)
    return TripleLossTerm(z=z, zeta=_power(z, cfg.eta),
                          loglik=log_likelihood(xhat, cfg),
                          dloss_dxhat=grad_pair(xhat, cfg))


def sgd_step(model: EmbeddingModel, triple: Tuple[int, int, int], cfg: SkewOptConfig) -> float:
    """One gradient ascent update of the three rows touched by `triple`.

    Return Value:
    The scalar gradient factor that was applied.
    """
    u, i, j = triple
    g = grad_pair(model.score_pair(u, i, j), cfg)
    wu = model.user_vecs[u].copy()
    hi = model.item_vecs[i].copy()
    hj = model.item_vecs[j].copy()

    new_u = wu + cfg.beta * (g * (hi - hj) - cfg.lam * wu)
    new_i = hi + cfg.beta * (g * wu - cfg.lam * hi)
    new_j = hj + cfg.beta * (-g * wu - cfg.lam * hj)
    if not (np.isfinite(new_u).all() and np.isfinite(new_i).all() and np.isfinite(new_j).all()):
        raise DivergenceError(f"non-finite parameters after step on triple {triple} with {cfg}")

    model.user_vecs[u] = new_u
    model.item_vecs[i] = new_i
    model.item_vecs[j] = new_j
    return g


def objective(model: EmbeddingModel, triples: Iterable[Tuple[int, int, int]],
              cfg: SkewOptConfig) -> float:
    """Summed log-likelihood over `triples` minus lambda times the squared norm of all parameters."""
    total = sum(log_likelihood(model.score_pair(u, i, j), cfg) for u, i, j in triples)
    return total - cfg.lam * model.squared_norm()


def _run_share(model: EmbeddingModel, sampler: TripleSampler, count: int,
               cfg: SkewOptConfig) -> Tuple[Optional[Tuple[int, int, int]], float]:
    loglik = 0.0
    remaining = count
    while remaining > 0:
        block = min(remaining, DRAW_BLOCK)
        users, pos, neg = sampler.draw(block)
        failed, block_loglik = kernels.apply_triples(
            model.user_vecs, model.item_vecs, users, pos, neg,
            float(cfg.xi), float(cfg.omega), int(cfg.eta), float(cfg.beta),
            float(cfg.lam), float(cfg.clip))
        loglik += block_loglik
        if failed >= 0:
            return (int(users[failed]), int(pos[failed]), int(neg[failed])), loglik
        remaining -= block
    return None, loglik


def _shares(total: int, workers: int) -> Sequence[int]:
    base, extra = divmod(total, workers)
    return [base + (1 if t < extra else 0) for t in range(workers)]


def train(train_data: Interactions, cfg: SkewOptConfig,
          notify: Optional[TrainNotify] = None,
          model: Optional[EmbeddingModel] = None) -> EmbeddingModel:
    """Fit embeddings with asynchronous stochastic gradient ascent.

    Keyword Arguments:
    train_data             -- Interactions holding the training positives.
    cfg                    -- SkewOptConfig with the hyperparameters.
    notify                 -- Object with base type of TrainNotify() told
                              about every finished epoch.
                              Default of None.
    model                  -- Starting model.  Default of None draws a fresh
                              one from cfg.seed.

    Return Value:
    The trained EmbeddingModel.  With cfg.threads == 1 the result is
    bit-identical for a fixed seed; with more threads workers update the
    shared matrices without locks and results vary run to run.
    """
    cfg.validate()
    notify = notify or TrainNotify()
    size = epoch_size(train_data)
    if model is None:
        model = init_model(train_data.n_users, train_data.n_items, cfg.dim, cfg.seed,
                           train_data.user_keys, train_data.item_keys)
    if cfg.epochs == 0:
        return model

    samplers = [TripleSampler(train_data, cfg.seed, thread) for thread in range(cfg.threads)]
    shares = _shares(size, cfg.threads)
    logger.info("Training %d epochs x %d triples on %d thread(s): %s", cfg.epochs, size, cfg.threads, cfg)
    notify.start(cfg)

    executor = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            start = monotonic()
            if executor is None:
                results = [_run_share(model, samplers[0], size, cfg)]
            else:
                futures = [executor.submit(_run_share, model, sampler, share, cfg)
                           for sampler, share in zip(samplers, shares)]
                results = [future.result() for future in futures]

            for failed, _ in results:
                if failed is not None:
                    raise DivergenceError(
                        f"non-finite parameters in epoch {epoch} at triple {failed} with {cfg}")

            result = EpochResult(
                epoch=epoch,
                epochs=cfg.epochs,
                loglik=sum(loglik for _, loglik in results) / size,
                penalty=cfg.lam * model.squared_norm(),
                elapsed=monotonic() - start,
            )
            logger.debug("Epoch %d/%d: mean log-likelihood %.6f", epoch, cfg.epochs, result.loglik)
            notify.update(result)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    notify.finish()
    return model


def gradient_curve(xhats: Sequence[float], cfg: SkewOptConfig,
                   omegas: Sequence[float]) -> pd.DataFrame:
    """Gradient factor over an estimator grid for several scales.

    Larger omega flattens the polynomial blow-up of the gradient for
    estimators far below xi.
    """
    rows = []
    for omega in omegas:
        curve_cfg = cfg.merged(omega=omega)
        for xhat in xhats:
            rows.append({
                "xhat": float(xhat),
                "omega": float(omega),
                "grad": grad_pair(float(xhat), curve_cfg, clipped=False),
                "grad_clipped": grad_pair(float(xhat), curve_cfg),
            })
    return pd.DataFrame(rows, columns=["xhat", "omega", "grad", "grad_clipped"])
