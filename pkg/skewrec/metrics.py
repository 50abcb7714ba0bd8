"""Skewrec Metrics Module

Top-N evaluation (Recall@N, mAP@N) and AUC in its per-user (macro) and
pooled (micro) forms.  Training positives are never ranked as candidates.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from skewrec.corpus import Interactions, SplitPair
from skewrec.embed import EmbeddingModel
from skewrec.result import EvalReport

logger = logging.getLogger(__name__)

EXACT_AUC_BOUND = 20_000
AUC_NEGATIVE_SAMPLES = 1_000


class EvaluationError(ValueError):
    """Raised when a model and a split cannot be evaluated together."""


def _check(model: EmbeddingModel, split: SplitPair) -> None:
    if model.n_users != split.train.n_users or model.n_items != split.train.n_items:
        raise EvaluationError(
            f"model covers {model.n_users} users / {model.n_items} items, "
            f"split covers {split.train.n_users} / {split.train.n_items}")
    if split.test.n_pairs == 0:
        raise EvaluationError("test set holds no positive pairs")


def _test_users(split: SplitPair) -> np.ndarray:
    return np.flatnonzero(split.test.counts() > 0)


def user_rank_metrics(model: EmbeddingModel, split: SplitPair, u: int, n: int) -> Tuple[float, float]:
    """Recall@n and average precision@n of user `u`."""
    relevant = split.test.pos(u)
    top = model.top_n(u, n, exclude=split.train.pos(u))
    hits = np.isin(top, relevant)
    denom = min(n, relevant.size)
    recall = hits.sum() / denom
    ranks = np.arange(1, top.size + 1)
    precision = np.cumsum(hits) / ranks
    ap = precision[hits].sum() / denom
    return float(recall), float(ap)


def rank_metrics(model: EmbeddingModel, split: SplitPair, n: int = 10) -> Tuple[float, float, int]:
    """Mean Recall@n, mean AP@n and the number of test users averaged over."""
    _check(model, split)
    if n < 1:
        raise EvaluationError(f"cutoff must be at least 1, got {n}")
    users = _test_users(split)
    scores = np.array([user_rank_metrics(model, split, int(u), n) for u in users])
    return float(scores[:, 0].mean()), float(scores[:, 1].mean()), int(users.size)


def recall_at_n(model: EmbeddingModel, split: SplitPair, n: int = 10) -> float:
    return rank_metrics(model, split, n)[0]


def map_at_n(model: EmbeddingModel, split: SplitPair, n: int = 10) -> float:
    return rank_metrics(model, split, n)[1]


def auc_counts(model: EmbeddingModel, heldout: Interactions,
               known: Optional[Interactions] = None,
               exact_bound: int = EXACT_AUC_BOUND,
               neg_samples: int = AUC_NEGATIVE_SAMPLES,
               seed: int = 0) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Per-user counts of correctly ordered and total (positive, negative) pairs.

    Positives are the held-out items of each user; negatives every item that
    is neither held out nor known.  A pair counts only when the positive
    scores strictly higher.  Above `exact_bound` items, `neg_samples`
    negatives per user are drawn uniformly with replacement.

    Return Value:
    Tuple of (hits per user, pairs per user, whether counting was exact).
    """
    exact = model.n_items <= exact_bound
    rng = np.random.default_rng(seed)
    hits = np.zeros(model.n_users, dtype=np.int64)
    pairs = np.zeros(model.n_users, dtype=np.int64)

    for u in np.flatnonzero(heldout.counts() > 0):
        positives = heldout.pos(u)
        mask = np.ones(model.n_items, dtype=bool)
        mask[positives] = False
        if known is not None:
            mask[known.pos(u)] = False
        negatives = np.flatnonzero(mask)
        if negatives.size == 0:
            continue
        if not exact:
            negatives = negatives[rng.integers(negatives.size, size=neg_samples)]
        scores = model.scores(int(u))
        neg_scores = np.sort(scores[negatives])
        hits[u] = np.searchsorted(neg_scores, scores[positives], side="left").sum()
        pairs[u] = positives.size * negatives.size
    return hits, pairs, exact


def _macro(hits, pairs) -> float:
    counted = pairs > 0
    if not counted.any():
        raise EvaluationError("no user has both held-out and negative items")
    return float(np.mean(hits[counted] / pairs[counted]))


def _micro(hits, pairs) -> float:
    if pairs.sum() == 0:
        raise EvaluationError("no user has both held-out and negative items")
    return float(hits.sum() / pairs.sum())


def auc_macro(model: EmbeddingModel, split: SplitPair, **kwargs) -> float:
    _check(model, split)
    hits, pairs, _ = auc_counts(model, split.test, split.train, **kwargs)
    return _macro(hits, pairs)


def auc_micro(model: EmbeddingModel, split: SplitPair, **kwargs) -> float:
    _check(model, split)
    hits, pairs, _ = auc_counts(model, split.test, split.train, **kwargs)
    return _micro(hits, pairs)


def train_auc_micro(model: EmbeddingModel, train: Interactions, **kwargs) -> float:
    """Pooled AUC with the training positives themselves as held-out items."""
    hits, pairs, _ = auc_counts(model, train, None, **kwargs)
    return _micro(hits, pairs)


def evaluate(model: EmbeddingModel, split: SplitPair, n: int = 10,
             exact_bound: int = EXACT_AUC_BOUND,
             neg_samples: int = AUC_NEGATIVE_SAMPLES,
             seed: int = 0, config: Optional[dict] = None) -> EvalReport:
    """Compute every metric in one pass over the test users."""
    recall, ap, users = rank_metrics(model, split, n)
    hits, pairs, exact = auc_counts(model, split.test, split.train,
                                    exact_bound=exact_bound, neg_samples=neg_samples, seed=seed)
    report = EvalReport(
        n=n,
        recall=recall,
        map=ap,
        auc_macro=_macro(hits, pairs),
        auc_micro=_micro(hits, pairs),
        users_evaluated=users,
        auc_pairs=int(pairs.sum()),
        auc_exact=exact,
        config=dict(config or {}),
        seed=seed,
    )
    logger.info("Evaluated %d users: %s", users, report)
    return report
