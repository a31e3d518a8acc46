"""Shared builders and independent oracles for the test suite.

The oracles here deliberately avoid the package's incremental tables: they
recompute everything from a flat list of raw token records, so agreement
with the library is a genuine two-path check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pytest

from rost import CellGrid, TopicCounts, add_observation


@dataclass
class RawToken:
    x: int
    y: int
    t: int
    word: int
    topic: int


def build_world(raw_tokens, n_topics, vocab_size, alpha=0.1, beta=0.5, cell_size=64,
                coupling="vonneumann"):
    """Construct grid+counts from raw records, applying the recorded labels."""
    from rost import reassign

    grid = CellGrid(n_topics, cell_size=cell_size, alpha=alpha, coupling=coupling)
    counts = TopicCounts(n_topics, vocab_size, beta=beta)
    by_t: dict[int, list[tuple[int, RawToken]]] = {}
    for j, tok in enumerate(raw_tokens):
        by_t.setdefault(tok.t, []).append((j, tok))
    handles = [None] * len(raw_tokens)
    for t in range(max(by_t) + 1 if by_t else 0):
        group = by_t.get(t, [])
        hs = add_observation(
            grid, counts, t, [(tok.word, (tok.x, tok.y, tok.t)) for _, tok in group]
        )
        for (j, tok), h in zip(group, hs):
            handles[j] = h
            if tok.topic >= 0:
                reassign(grid, counts, h, tok.topic)
    return grid, counts, handles


def random_raw_tokens(rng, n_tokens, n_topics, vocab_size, extent=3, n_steps=4, cell_size=64):
    """Random labeled token records spread over a small spacetime box."""
    tokens = []
    span = extent * cell_size
    for i in range(n_tokens):
        tokens.append(
            RawToken(
                x=int(rng.integers(0, span)),
                y=int(rng.integers(0, span)),
                t=int(rng.integers(0, n_steps)),
                word=int(rng.integers(0, vocab_size)),
                topic=int(rng.integers(0, n_topics)),
            )
        )
    # every timestep up to the max must exist for monotone ingestion
    seen = {tok.t for tok in tokens}
    for t in range(max(seen)):
        if t not in seen:
            tokens.append(
                RawToken(x=0, y=0, t=t, word=int(rng.integers(0, vocab_size)),
                         topic=int(rng.integers(0, n_topics)))
            )
    return tokens


def neighborhood_keys(key, coupling="vonneumann"):
    cx, cy, ct = key
    if coupling == "self":
        return {key}
    keys = {key}
    for dx, dy, dt in ((-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)):
        if ct + dt >= 0:
            keys.add((cx + dx, cy + dy, ct + dt))
    return keys


def oracle_posterior(raw_tokens, i, n_topics, vocab_size, alpha, beta, cell_size=64,
                     coupling="vonneumann"):
    """From-scratch resampling distribution for token i.

    Rebuilds the count tables from every *other* token record (physically
    removing token i rather than decrementing), then evaluates the smoothed
    product directly.
    """
    tok = raw_tokens[i]
    key = (math.floor(tok.x) // cell_size, math.floor(tok.y) // cell_size, tok.t)
    nbr = neighborhood_keys(key, coupling)
    word_counts = np.zeros(n_topics)
    totals = np.zeros(n_topics)
    nbh = np.zeros(n_topics)
    for j, other in enumerate(raw_tokens):
        if j == i or other.topic < 0:
            continue
        totals[other.topic] += 1
        if other.word == tok.word:
            word_counts[other.topic] += 1
        okey = (math.floor(other.x) // cell_size, math.floor(other.y) // cell_size, other.t)
        if okey in nbr:
            nbh[other.topic] += 1
    w = (word_counts + beta) / (totals + vocab_size * beta)
    w *= (nbh + alpha) / (nbh.sum() + n_topics * alpha)
    return w / w.sum()


def oracle_lda_conditional(raw_tokens, i, n_topics, vocab_size, alpha, beta, cell_size=64):
    """Standard collapsed-LDA conditional with cells as documents.

    Independent implementation of the classic sampler: word factor over the
    global topic-word counts, document factor over the token's own cell
    only, both with the current token removed.
    """
    tok = raw_tokens[i]
    doc = (math.floor(tok.x) // cell_size, math.floor(tok.y) // cell_size, tok.t)
    n_kw = np.zeros(n_topics)
    n_k = np.zeros(n_topics)
    n_dk = np.zeros(n_topics)
    for j, other in enumerate(raw_tokens):
        if j == i or other.topic < 0:
            continue
        n_k[other.topic] += 1
        if other.word == tok.word:
            n_kw[other.topic] += 1
        okey = (math.floor(other.x) // cell_size, math.floor(other.y) // cell_size, other.t)
        if okey == doc:
            n_dk[other.topic] += 1
    p = (n_kw + beta) / (n_k + vocab_size * beta) * (n_dk + alpha) / (n_dk.sum() + n_topics * alpha)
    return p / p.sum()


@pytest.fixture
def small_world():
    """Tiny assigned world used by several sampler tests.

    K=2, V=2: two word-0/topic-0 tokens plus the probe token in or near the
    origin cell, three word-1/topic-1 tokens of which two sit inside the
    probe's neighborhood.  Exclusion-adjusted counts for the probe:
    word counts [[2,0],[0,3]], neighborhood histogram [1, 2].
    """
    tokens = [
        RawToken(x=10, y=10, t=0, word=0, topic=0),   # probe, cell (0,0,0)
        RawToken(x=20, y=20, t=0, word=0, topic=0),   # same cell
        RawToken(x=300, y=300, t=0, word=0, topic=0),  # far away, outside neighborhood
        RawToken(x=70, y=10, t=0, word=1, topic=1),   # neighbor cell (1,0,0)
        RawToken(x=75, y=15, t=0, word=1, topic=1),   # neighbor cell (1,0,0)
        RawToken(x=300, y=10, t=0, word=1, topic=1),  # far away
    ]
    grid, counts, handles = build_world(tokens, n_topics=2, vocab_size=2,
                                        alpha=0.1, beta=0.5)
    return grid, counts, handles, tokens
