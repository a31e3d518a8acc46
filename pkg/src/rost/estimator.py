"""Scikit-learn style front end for the spatiotemporal topic model.

`fit` trains in batch with full Gibbs sweeps; `partial_fit` consumes one
observation (timestep) at a time and refines within the configured budget,
which is the realtime streaming mode.  Token records are rows of
``(t, x, y, word)``, the same layout as the stream file format.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import evaluation
from .grid import CellGrid, TopicCounts, add_observation, cell_of
from .pipeline import Budget, RefinementLedger, step
from .sampler import GibbsParams, batch_gibbs, init_labels, rng_from_seed
from .schedulers import Scheduler
from .validation import check_positive, check_token_array


class SpatiotemporalTopicModel(BaseEstimator):
    """Streaming topic model over a spacetime cell grid.

    Parameters
    ----------
    n_topics : number of latent topics.
    vocab_size : vocabulary size; may be None for `fit` (inferred from the
        data) but must be set for `partial_fit`.
    alpha, beta : Dirichlet smoothing of the neighborhood topic mixture and
        of the topic word distributions.
    cell_size : spatial side length of a grid cell.
    scheduler, q, eta : refinement-time distribution used by `partial_fit`.
    refine_rounds / refine_millis : per-interval refinement budget
        (exactly one may be set; rounds are deterministic).
    batch_sweeps : full Gibbs sweeps run by `fit`.
    coupling : "vonneumann" for the 6-neighbor grid prior, "self" for
        plain per-cell LDA.
    random_state : seed for the deterministic generator.
    """

    def __init__(
        self,
        n_topics=16,
        vocab_size=None,
        alpha=0.1,
        beta=0.5,
        cell_size=64,
        scheduler="uniform_now",
        q=0.5,
        eta=0.5,
        refine_rounds=10,
        refine_millis=None,
        batch_sweeps=200,
        coupling="vonneumann",
        random_state=0,
    ):
        self.n_topics = n_topics
        self.vocab_size = vocab_size
        self.alpha = alpha
        self.beta = beta
        self.cell_size = cell_size
        self.scheduler = scheduler
        self.q = q
        self.eta = eta
        self.refine_rounds = refine_rounds
        self.refine_millis = refine_millis
        self.batch_sweeps = batch_sweeps
        self.coupling = coupling
        self.random_state = random_state

    # -- internals ---------------------------------------------------------

    def _budget(self) -> Budget:
        if self.refine_millis is not None:
            if self.refine_rounds is not None:
                raise ValueError("set refine_rounds or refine_millis, not both")
            return Budget.wall_clock(self.refine_millis)
        return Budget.rounds(self.refine_rounds)

    def _init_state(self, vocab_size: int) -> None:
        check_positive("n_topics", self.n_topics)
        check_positive("cell_size", self.cell_size)
        params = GibbsParams(
            alpha=self.alpha, beta=self.beta, n_topics=self.n_topics, seed=self.random_state or 0
        )
        self.grid_ = CellGrid(
            params.n_topics, cell_size=self.cell_size, alpha=params.alpha, coupling=self.coupling
        )
        self.counts_ = TopicCounts(params.n_topics, vocab_size, beta=params.beta)
        self.scheduler_ = Scheduler(self.scheduler, q=self.q, eta=self.eta)
        self.ledger_ = RefinementLedger()
        self.rng_ = rng_from_seed(self.random_state or 0)
        self.n_seen_steps_ = 0

    def _check_fitted(self):
        if not hasattr(self, "grid_"):
            raise NotFittedError("this model has not been fitted yet")

    # -- estimation ----------------------------------------------------------

    def fit(self, X, y=None):
        """Batch-train on all records at once with full Gibbs sweeps."""
        arr = check_token_array(X, self.vocab_size)
        if arr.shape[0] == 0:
            raise ValueError("cannot fit on an empty token set")
        vocab = self.vocab_size if self.vocab_size is not None else int(arr[:, 3].max()) + 1
        self._init_state(vocab)
        order = np.argsort(arr[:, 0], kind="stable")
        self._input_order_ = np.empty_like(order)
        self._input_order_[order] = np.arange(order.size)
        arr = arr[order]
        for t_raw in np.unique(arr[:, 0]):
            rows = arr[arr[:, 0] == t_raw][:, [1, 2, 3]]
            add_observation(self.grid_, self.counts_, self.n_seen_steps_, rows)
            self.n_seen_steps_ += 1
        init_labels(self.grid_, self.counts_, self.grid_.tokens(), self.rng_)
        batch_gibbs(self.grid_, self.counts_, self.batch_sweeps, self.rng_)
        return self

    def partial_fit(self, X):
        """Ingest one observation (a single new timestep) and refine in budget."""
        if not hasattr(self, "grid_"):
            if self.vocab_size is None:
                raise ValueError("partial_fit requires vocab_size to be set")
            self._init_state(self.vocab_size)
        arr = check_token_array(X, self.counts_.vocab_size)
        ts = np.unique(arr[:, 0])
        if ts.size > 1:
            raise ValueError("partial_fit takes one timestep per call")
        t = int(ts[0]) if ts.size else self.n_seen_steps_
        if t != self.n_seen_steps_:
            raise ValueError(
                f"partial_fit expects timestep {self.n_seen_steps_}, got {t}"
            )
        step(
            self.grid_,
            self.counts_,
            self.scheduler_,
            self._budget(),
            t,
            arr[:, [1, 2, 3]],
            self.rng_,
            self.ledger_,
        )
        self.n_seen_steps_ += 1
        self._input_order_ = None  # labels_ follows ingestion order when streaming
        return self

    # -- read-only views -------------------------------------------------------

    @property
    def labels_(self) -> np.ndarray:
        """Current topic label of every ingested token."""
        self._check_fitted()
        labels = self.grid_._topics[: self.grid_.n_tokens].copy()
        if getattr(self, "_input_order_", None) is not None:
            labels = labels[self._input_order_]
        return labels

    @property
    def components_(self) -> np.ndarray:
        """Smoothed topic-word matrix (rows sum to 1)."""
        self._check_fitted()
        return self.counts_.word_probs_matrix()

    def _predictive(self, X) -> np.ndarray:
        """Joint weights phi[k, w] * theta_cell[k] per record, shape (n, K)."""
        self._check_fitted()
        arr = check_token_array(X, self.counts_.vocab_size)
        phi = self.counts_.word_probs_matrix()
        out = np.empty((arr.shape[0], self.counts_.n_topics))
        theta_cache = {}
        for i, (t, x, y, w) in enumerate(arr):
            key = cell_of((int(x), int(y), int(t)), self.grid_.cell_size)
            theta = theta_cache.get(key)
            if theta is None:
                theta = self.grid_.topic_probs(key)
                theta_cache[key] = theta
            out[i] = phi[:, w] * theta
        return out

    def transform(self, X) -> np.ndarray:
        """Posterior topic distribution for each (t, x, y, word) record."""
        weights = self._predictive(X)
        return weights / weights.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        """Most likely topic for each record."""
        return np.argmax(self._predictive(X), axis=1)

    def perplexity(self, X=None) -> float:
        """Predictive perplexity of records (default: all ingested tokens)."""
        self._check_fitted()
        if X is None:
            return evaluation.perplexity_of_indices(
                np.arange(self.grid_.n_tokens, dtype=np.int64), self.counts_, self.grid_
            )
        weights = self._predictive(X)
        if weights.shape[0] == 0:
            raise ValueError("perplexity of an empty token set is undefined")
        return float(np.exp(-np.log(weights.sum(axis=1)).mean()))

    def score(self, X, y=None) -> float:
        """Mean log predictive probability (higher is better)."""
        return -float(np.log(self.perplexity(X)))
