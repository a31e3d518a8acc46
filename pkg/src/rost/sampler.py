"""Collapsed Gibbs sampling over the cell grid.

A token's topic is resampled from the product of two smoothed factors: how
well each topic explains the token's word globally, and how prevalent each
topic is in the token's spacetime neighborhood, both computed with the token
itself excluded from the counts.  With the neighborhood restricted to the
token's own cell this is exactly the standard collapsed Gibbs conditional
for LDA with cells as documents.

The sequential scan is the algorithm: every draw must see the table updates
of all previous draws, so there is no internal parallelism.  The hot loop is
compiled with numba; :func:`topic_posterior` is the plain numpy statement of
the same conditional, used for verification and diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .grid import UNASSIGNED, CellGrid, CellKey, CountCorruptionError, TopicCounts, WordToken


@dataclass
class GibbsParams:
    """Model hyperparameters shared by the batch and realtime samplers."""

    alpha: float = 0.1
    beta: float = 0.5
    n_topics: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.n_topics < 1:
            raise ValueError(f"n_topics must be >= 1, got {self.n_topics}")


def rng_from_seed(seed: int) -> np.random.Generator:
    """Deterministic counter-based generator; one stream per run."""
    return np.random.Generator(np.random.Philox(seed))


def topic_posterior(token: WordToken, counts: TopicCounts, grid: CellGrid) -> np.ndarray:
    """Resampling distribution over topics for one token.

    Excludes the token's own current label from every count it touches
    (no exclusion if the token is unassigned).  Returns a normalized
    length-K probability vector.
    """
    v = token.word
    z = token.topic
    exclude = token if z != UNASSIGNED else None
    nbh = grid.neighborhood_counts(token.cell_key, exclude=exclude).astype(np.float64)
    word_counts = counts.counts[:, v].astype(np.float64)
    totals = counts.topic_totals.astype(np.float64)
    if exclude is not None:
        if word_counts[z] <= 0 or totals[z] <= 0:
            raise CountCorruptionError("token exclusion would drive counts negative")
        word_counts[z] -= 1
        totals[z] -= 1
    w = (word_counts + counts.beta) / (totals + counts.vocab_size * counts.beta)
    w *= (nbh + grid.alpha) / (nbh.sum() + grid.n_topics * grid.alpha)
    return w / w.sum()


@njit(cache=True)
def _gibbs_sweep(
    cell_rows,
    nbr_rows,
    tok_offsets,
    tok_idx,
    words,
    topics,
    counts,
    topic_totals,
    cell_hist,
    alpha,
    beta,
    uniforms,
):
    """Sequentially resample every listed token, cell by cell.

    For each cell the neighborhood histogram is re-gathered from the
    current per-cell table, so earlier cells' updates are visible to later
    ones.  Consumes exactly one uniform per token (cumulative-sum inversion
    on the unnormalized weights).
    """
    n_topics, vocab_size = counts.shape
    nbh = np.empty(n_topics, dtype=np.int64)
    weights = np.empty(n_topics, dtype=np.float64)
    u_next = 0
    for ci in range(cell_rows.shape[0]):
        row = cell_rows[ci]
        for k in range(n_topics):
            nbh[k] = 0
        for j in range(nbr_rows.shape[1]):
            r = nbr_rows[ci, j]
            if r >= 0:
                for k in range(n_topics):
                    nbh[k] += cell_hist[r, k]
        nbh_total = 0
        for k in range(n_topics):
            nbh_total += nbh[k]
        for p in range(tok_offsets[ci], tok_offsets[ci + 1]):
            i = tok_idx[p]
            v = words[i]
            z = topics[i]
            counts[z, v] -= 1
            topic_totals[z] -= 1
            cell_hist[row, z] -= 1
            nbh[z] -= 1
            if counts[z, v] < 0 or cell_hist[row, z] < 0 or nbh[z] < 0:
                raise CountCorruptionError(
                    "count table corruption: negative count during exclusion"
                )
            theta_den = (nbh_total - 1) + n_topics * alpha
            wsum = 0.0
            for k in range(n_topics):
                w = (
                    (counts[k, v] + beta)
                    / (topic_totals[k] + vocab_size * beta)
                    * (nbh[k] + alpha)
                    / theta_den
                )
                weights[k] = w
                wsum += w
            u = uniforms[u_next] * wsum
            u_next += 1
            z_new = n_topics - 1
            acc = 0.0
            for k in range(n_topics):
                acc += weights[k]
                if u < acc:
                    z_new = k
                    break
            counts[z_new, v] += 1
            topic_totals[z_new] += 1
            cell_hist[row, z_new] += 1
            nbh[z_new] += 1
            topics[i] = z_new


def init_labels(grid: CellGrid, counts: TopicCounts, tokens, rng: np.random.Generator) -> None:
    """Assign each token an independent uniform-random topic.

    Rejects tokens that already carry a label (no double initialization).
    All count tables end up exactly as if each token had been relabeled
    one by one.
    """
    idx = np.asarray([t.index for t in tokens], dtype=np.int64)
    if idx.size == 0:
        return
    if np.any(grid._topics[idx] != UNASSIGNED):
        raise ValueError("init_labels called on already-assigned tokens")
    zs = rng.integers(0, counts.n_topics, size=idx.size)
    ws = grid._words[idx].astype(np.int64)
    rows = grid._cell_row_of[idx].astype(np.int64)
    np.add.at(counts.counts, (zs, ws), 1)
    counts.topic_totals += np.bincount(zs, minlength=counts.n_topics)
    np.add.at(grid._cell_hist, (rows, zs), 1)
    grid._topics[idx] = zs


def _sweep_cells(grid: CellGrid, counts: TopicCounts, cells, rng: np.random.Generator) -> int:
    """Run the compiled sweep over the given cells (in the given order)."""
    live = [c for c in cells if c.token_indices]
    if not live:
        return 0
    cell_rows = np.asarray([c.row for c in live], dtype=np.int32)
    nbr_rows = np.stack([grid.neighbor_rows(c) for c in live]).astype(np.int32)
    tok_idx = np.concatenate([c.index_array() for c in live])
    tok_offsets = np.zeros(len(live) + 1, dtype=np.int32)
    tok_offsets[1:] = np.cumsum([len(c) for c in live])
    _gibbs_sweep(
        cell_rows,
        nbr_rows,
        tok_offsets,
        tok_idx,
        grid._words,
        grid._topics,
        counts.counts,
        counts.topic_totals,
        grid._cell_hist,
        grid.alpha,
        counts.beta,
        rng.random(tok_idx.size),
    )
    return int(tok_idx.size)


def refine_word(grid: CellGrid, counts: TopicCounts, token: WordToken, rng: np.random.Generator) -> int:
    """Resample one assigned token in place; returns its new topic."""
    if token.topic == UNASSIGNED:
        raise ValueError("cannot refine an unassigned token")
    cell = grid._cell_list[grid._cell_row_of[token.index]]
    cell_rows = np.asarray([cell.row], dtype=np.int32)
    nbr_rows = grid.neighbor_rows(cell).reshape(1, -1).astype(np.int32)
    tok_idx = np.asarray([token.index], dtype=np.int32)
    tok_offsets = np.asarray([0, 1], dtype=np.int32)
    _gibbs_sweep(
        cell_rows,
        nbr_rows,
        tok_offsets,
        tok_idx,
        grid._words,
        grid._topics,
        counts.counts,
        counts.topic_totals,
        grid._cell_hist,
        grid.alpha,
        counts.beta,
        rng.random(1),
    )
    return int(grid._topics[token.index])


def refine_cell(grid: CellGrid, counts: TopicCounts, key: CellKey, rng: np.random.Generator) -> int:
    """Resample every token of one cell in insertion order; returns the count.

    An unknown key is an empty cell: zero refinements, not an error.
    """
    cell = grid.cells.get(key)
    if cell is None or not cell.token_indices:
        return 0
    return _sweep_cells(grid, counts, [cell], rng)


def _cells_of_timestep(grid: CellGrid, t: int):
    keys = sorted(grid.time_index.get(t, ()), key=lambda k: (k.ct, k.cy, k.cx))
    return [grid.cells[k] for k in keys]


def refine_timestep(grid: CellGrid, counts: TopicCounts, t: int, rng: np.random.Generator) -> int:
    """One refinement round: resample every cell of timestep ``t``.

    Cells are visited in ascending (ct, cy, cx) order, tokens within a cell
    in insertion order.  Returns the number of words refined (0 for a
    timestep with no tokens).
    """
    return _sweep_cells(grid, counts, _cells_of_timestep(grid, t), rng)


def batch_gibbs(grid: CellGrid, counts: TopicCounts, n_sweeps: int, rng: np.random.Generator) -> None:
    """Full-batch sampler: ``n_sweeps`` passes over every cell in the world."""
    if grid.n_tokens and np.any(grid._topics[: grid.n_tokens] == UNASSIGNED):
        raise ValueError("batch_gibbs requires all tokens to be initialized")
    timesteps = sorted(grid.time_index)
    for _ in range(n_sweeps):
        for t in timesteps:
            refine_timestep(grid, counts, t, rng)
