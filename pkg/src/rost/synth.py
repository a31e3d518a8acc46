"""Synthetic spatiotemporal word streams with planted topics.

Runs the generative story forward: every cell of a bounded spacetime box
carries a topic mixture, each emitted token draws a topic from its cell's
mixture and a word from that topic's distribution.  The planted topic-word
matrix is block-diagonal (each topic owns a disjoint vocabulary slice), so
the true topic of every generated token is recoverable from the word alone,
which gives recovery tests an exact reference labeling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DEFAULT_CELL_SIZE, CellKey
from .stream_io import Stream


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))
    )


@dataclass
class PlantedModel:
    """Ground-truth generator state for one synthetic stream."""

    phi_true: np.ndarray  # topics x vocabulary, row-stochastic
    theta_field: dict[CellKey, np.ndarray]  # cell -> topic mixture
    words_per_step: int
    extent: int  # spatial width and height, in cells
    t_total: int
    cell_size: int
    seed: int

    @property
    def n_topics(self) -> int:
        return self.phi_true.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.phi_true.shape[1]


def make_separable(
    n_topics: int,
    vocab_size: int,
    extent: int,
    t_total: int,
    smoothness: float = 0.7,
    seed: int = 0,
    words_per_step: int = 50,
    cell_size: int = DEFAULT_CELL_SIZE,
) -> PlantedModel:
    """Build a planted model with disjoint per-topic vocabularies.

    Each topic is uniform over its own slice of ``vocab_size // n_topics``
    words.  The per-cell topic mixtures come from a softmax over a few
    low-frequency sinusoids of the cell coordinates, so neighboring cells
    have similar mixtures; ``smoothness`` scales the field (0 collapses
    every cell to one shared uniform mixture).
    """
    if vocab_size < n_topics:
        raise ValueError(
            f"vocab_size must be >= n_topics, got V={vocab_size} < K={n_topics}"
        )
    if not 0.0 <= smoothness <= 1.0:
        raise ValueError(f"smoothness must lie in [0, 1], got {smoothness}")
    if extent < 1 or t_total < 1 or words_per_step < 0:
        raise ValueError("extent and t_total must be >= 1, words_per_step >= 0")

    slice_size = vocab_size // n_topics
    phi = np.zeros((n_topics, vocab_size), dtype=np.float64)
    for k in range(n_topics):
        phi[k, k * slice_size : (k + 1) * slice_size] = 1.0 / slice_size

    rng = _rng(seed, 0)
    n_waves = 2
    amp = rng.uniform(0.5, 1.0, size=(n_topics, n_waves))
    freq_x = rng.uniform(0.3, 1.0, size=(n_topics, n_waves))
    freq_y = rng.uniform(0.3, 1.0, size=(n_topics, n_waves))
    freq_t = rng.uniform(0.5, 2.0, size=(n_topics, n_waves))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n_topics, n_waves))

    cx = np.arange(extent)
    cy = np.arange(extent)
    ct = np.arange(t_total)
    gx, gy, gt = np.meshgrid(cx, cy, ct, indexing="ij")
    scores = np.zeros((extent, extent, t_total, n_topics))
    for k in range(n_topics):
        f = np.zeros_like(gx, dtype=np.float64)
        for j in range(n_waves):
            f += amp[k, j] * np.sin(
                2.0 * np.pi
                * (
                    freq_x[k, j] * gx / extent
                    + freq_y[k, j] * gy / extent
                    + freq_t[k, j] * gt / t_total
                )
                + phase[k, j]
            )
        scores[..., k] = f
    # Gain picked so cells leans clearly toward a few topics (recovery is
    # then well-posed) while the low-frequency field keeps neighbors alike.
    scores *= 8.0 * smoothness
    scores -= scores.max(axis=-1, keepdims=True)
    field = np.exp(scores)
    field /= field.sum(axis=-1, keepdims=True)

    theta_field = {
        CellKey(int(i), int(j), int(t)): field[i, j, t]
        for i in range(extent)
        for j in range(extent)
        for t in range(t_total)
    }
    return PlantedModel(
        phi_true=phi,
        theta_field=theta_field,
        words_per_step=words_per_step,
        extent=extent,
        t_total=t_total,
        cell_size=cell_size,
        seed=seed,
    )


def generate(model: PlantedModel) -> tuple[Stream, list[np.ndarray]]:
    """Sample a word stream and its true topic labels from a planted model.

    Every timestep emits ``words_per_step`` tokens at uniform-random
    positions inside the spatial extent; each token draws its topic from
    its cell's planted mixture and its word from that topic.  Bit-exact
    for a fixed model (the generator stream is derived from the model
    seed).
    """
    rng = _rng(model.seed, 1)
    span = model.extent * model.cell_size
    # Normalizing the cumulative rows to end at exactly 1.0 keeps every
    # inverse-cdf draw inside the support (uniforms are < 1).
    phi_cum = np.cumsum(model.phi_true, axis=1)
    phi_cum /= phi_cum[:, -1:]
    steps: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    for t in range(model.t_total):
        n = model.words_per_step
        xs = rng.integers(0, span, size=n)
        ys = rng.integers(0, span, size=n)
        zs = np.empty(n, dtype=np.int64)
        cell_rows = (xs // model.cell_size) * model.extent + (ys // model.cell_size)
        for row in np.unique(cell_rows):
            js = np.flatnonzero(cell_rows == row)
            key = CellKey(int(row) // model.extent, int(row) % model.extent, t)
            theta_cum = np.cumsum(model.theta_field[key])
            theta_cum /= theta_cum[-1]
            zs[js] = np.searchsorted(theta_cum, rng.random(js.size), side="right")
        ws = np.empty(n, dtype=np.int64)
        for k in np.unique(zs):
            js = np.flatnonzero(zs == k)
            ws[js] = np.searchsorted(phi_cum[k], rng.random(js.size), side="right")
        steps.append(np.stack([xs, ys, ws], axis=1).astype(np.int64))
        labels.append(zs)
    return Stream(vocab_size=model.vocab_size, steps=steps), labels
