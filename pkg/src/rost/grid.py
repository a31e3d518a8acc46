"""Spacetime cell grid, token storage, and topic/word count tables.

The world is decomposed into cells of ``cell_size`` x ``cell_size`` spatial
units by one timestep.  Every observed word token lives in exactly one cell.
Two count tables summarize the current labeling: a global topics-by-words
matrix (:class:`TopicCounts`) and a per-cell topic histogram (kept inside
:class:`CellGrid`).  Both are maintained incrementally and must always agree
with a from-scratch recount of the tokens.

Token storage is columnar (flat numpy arrays indexed by token id) so the
Gibbs kernels in :mod:`rost.sampler` can run compiled loops over it;
:class:`WordToken` is a lightweight handle into those arrays.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

UNASSIGNED = -1

DEFAULT_CELL_SIZE = 64

_NBR_OFFSETS = ((-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1))


class CountCorruptionError(RuntimeError):
    """A count table would go negative; the incremental bookkeeping is broken."""


class Position(NamedTuple):
    x: int
    y: int
    t: int


class CellKey(NamedTuple):
    cx: int
    cy: int
    ct: int


def cell_of(pos, cell_size: int = DEFAULT_CELL_SIZE) -> CellKey:
    """Map a position to the key of the cell containing it.

    Spatial coordinates use floor division (negative coordinates land in
    negative cells); the temporal cell width is one timestep.
    """
    if cell_size <= 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    x, y, t = pos
    return CellKey(math.floor(x) // cell_size, math.floor(y) // cell_size, t)


def neighborhood(key: CellKey) -> list[CellKey]:
    """The cell itself plus its 4 spatial and 2 temporal grid neighbors.

    Keys with a negative timestep are omitted, so cells at ct=0 have a
    6-key neighborhood and all others 7.  Keys of cells that hold no
    tokens are still listed; they contribute zero counts.
    """
    cx, cy, ct = key
    keys = [CellKey(cx, cy, ct)]
    for dx, dy, dt in _NBR_OFFSETS:
        if ct + dt < 0:
            continue
        keys.append(CellKey(cx + dx, cy + dy, ct + dt))
    return keys


class TopicCounts:
    """Global topics-by-words count matrix with Dirichlet smoothing.

    ``counts[k, v]`` is the number of tokens of word ``v`` currently labeled
    with topic ``k``; ``topic_totals[k]`` caches the row sums.
    """

    def __init__(self, n_topics: int, vocab_size: int, beta: float = 0.5):
        if n_topics < 1:
            raise ValueError(f"n_topics must be >= 1, got {n_topics}")
        if vocab_size < 1:
            raise ValueError(f"vocab_size must be >= 1, got {vocab_size}")
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        self.n_topics = int(n_topics)
        self.vocab_size = int(vocab_size)
        self.beta = float(beta)
        self.counts = np.zeros((self.n_topics, self.vocab_size), dtype=np.int64)
        self.topic_totals = np.zeros(self.n_topics, dtype=np.int64)

    def increment(self, k: int, v: int) -> None:
        self.counts[k, v] += 1
        self.topic_totals[k] += 1

    def decrement(self, k: int, v: int) -> None:
        if self.counts[k, v] <= 0:
            raise CountCorruptionError(
                f"word count for topic {k}, word {v} would go negative"
            )
        self.counts[k, v] -= 1
        self.topic_totals[k] -= 1

    def word_probs(self, k: int) -> np.ndarray:
        """Smoothed word distribution of topic ``k``; sums to 1."""
        if not 0 <= k < self.n_topics:
            raise ValueError(f"topic index {k} out of range [0, {self.n_topics})")
        return (self.counts[k] + self.beta) / (
            self.topic_totals[k] + self.vocab_size * self.beta
        )

    def word_probs_matrix(self) -> np.ndarray:
        """All topic word distributions as a row-stochastic matrix."""
        return (self.counts + self.beta) / (
            self.topic_totals + self.vocab_size * self.beta
        )[:, None]


class Cell:
    """One spacetime bucket: its tokens (insertion order) and topic histogram."""

    __slots__ = ("key", "row", "token_indices", "_idx_cache", "_nbr_cache")

    def __init__(self, key: CellKey, row: int):
        self.key = key
        self.row = row  # row into CellGrid._cell_hist
        self.token_indices: list[int] = []
        self._idx_cache: Optional[np.ndarray] = None
        self._nbr_cache: Optional[np.ndarray] = None

    def index_array(self) -> np.ndarray:
        if self._idx_cache is None or self._idx_cache.shape[0] != len(self.token_indices):
            self._idx_cache = np.asarray(self.token_indices, dtype=np.int32)
        return self._idx_cache

    def __len__(self) -> int:
        return len(self.token_indices)


class WordToken:
    """Handle to one observed word token stored in a :class:`CellGrid`."""

    __slots__ = ("grid", "index")

    def __init__(self, grid: "CellGrid", index: int):
        self.grid = grid
        self.index = index

    @property
    def word(self) -> int:
        return int(self.grid._words[self.index])

    @property
    def topic(self) -> int:
        return int(self.grid._topics[self.index])

    @property
    def pos(self) -> Position:
        g = self.grid
        return Position(int(g._x[self.index]), int(g._y[self.index]), int(g._t[self.index]))

    @property
    def cell_key(self) -> CellKey:
        return self.grid._cell_list[self.grid._cell_row_of[self.index]].key

    def __eq__(self, other):
        return (
            isinstance(other, WordToken)
            and other.grid is self.grid
            and other.index == self.index
        )

    def __hash__(self):
        return hash((id(self.grid), self.index))

    def __repr__(self):
        return f"WordToken(word={self.word}, pos={tuple(self.pos)}, topic={self.topic})"


class CellGrid:
    """Cell decomposition of spacetime plus all token and per-cell topic state.

    Parameters
    ----------
    n_topics : number of topics K (length of every cell histogram).
    cell_size : spatial side length of a cell.
    alpha : Dirichlet smoothing of the neighborhood topic distribution.
    coupling : "vonneumann" couples each cell to its 6 grid neighbors;
        "self" restricts the neighborhood to the cell itself, which reduces
        the sampler to plain per-cell-document LDA.
    """

    def __init__(
        self,
        n_topics: int,
        cell_size: int = DEFAULT_CELL_SIZE,
        alpha: float = 0.1,
        coupling: str = "vonneumann",
    ):
        if n_topics < 1:
            raise ValueError(f"n_topics must be >= 1, got {n_topics}")
        if cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if coupling not in ("vonneumann", "self"):
            raise ValueError(f"unknown coupling {coupling!r}")
        self.n_topics = int(n_topics)
        self.cell_size = int(cell_size)
        self.alpha = float(alpha)
        self.coupling = coupling
        self.max_t = -1

        self.cells: dict[CellKey, Cell] = {}
        self.time_index: dict[int, list[CellKey]] = {}
        self._cell_list: list[Cell] = []
        self._cell_hist = np.zeros((16, self.n_topics), dtype=np.int64)

        cap = 1024
        self._n_tokens = 0
        self._words = np.empty(cap, dtype=np.int32)
        self._topics = np.empty(cap, dtype=np.int32)
        self._x = np.empty(cap, dtype=np.int32)
        self._y = np.empty(cap, dtype=np.int32)
        self._t = np.empty(cap, dtype=np.int32)
        self._cell_row_of = np.empty(cap, dtype=np.int32)

    # -- token/cell accessors ------------------------------------------------

    @property
    def n_tokens(self) -> int:
        return self._n_tokens

    def token(self, index: int) -> WordToken:
        if not 0 <= index < self._n_tokens:
            raise IndexError(f"token index {index} out of range")
        return WordToken(self, index)

    def tokens(self) -> list[WordToken]:
        return [WordToken(self, i) for i in range(self._n_tokens)]

    def cell_tokens(self, key: CellKey) -> list[WordToken]:
        cell = self.cells.get(key)
        if cell is None:
            return []
        return [WordToken(self, i) for i in cell.token_indices]

    def cells_at(self, t: int) -> list[CellKey]:
        """Keys of the cells holding tokens of timestep ``t`` (the set M_t)."""
        return list(self.time_index.get(t, ()))

    def token_indices_at(self, t: int) -> np.ndarray:
        idx = [i for key in self.time_index.get(t, ()) for i in self.cells[key].token_indices]
        return np.asarray(idx, dtype=np.int32)

    def cell_hist(self, key: CellKey) -> np.ndarray:
        """Topic histogram of one cell (zeros for a cell never observed)."""
        cell = self.cells.get(key)
        if cell is None:
            return np.zeros(self.n_topics, dtype=np.int64)
        return self._cell_hist[cell.row].copy()

    # -- neighborhood and smoothed estimates ----------------------------------

    def neighbor_keys(self, key: CellKey) -> list[CellKey]:
        if self.coupling == "self":
            return [key]
        return neighborhood(key)

    def neighborhood_counts(self, key: CellKey, exclude: Optional[WordToken] = None) -> np.ndarray:
        """Summed topic histogram of the neighborhood of ``key``.

        With ``exclude``, that token's current label is removed from the sum
        (the token must be assigned and its cell must lie in the
        neighborhood); underflow means the tables are corrupt and aborts.
        """
        keys = self.neighbor_keys(key)
        out = np.zeros(self.n_topics, dtype=np.int64)
        for nk in keys:
            cell = self.cells.get(nk)
            if cell is not None:
                out += self._cell_hist[cell.row]
        if exclude is not None:
            z = exclude.topic
            if z == UNASSIGNED:
                raise ValueError("cannot exclude an unassigned token")
            if exclude.cell_key not in keys:
                raise ValueError("excluded token lies outside the neighborhood")
            if out[z] <= 0:
                raise CountCorruptionError(
                    f"neighborhood count for topic {z} would go negative"
                )
            out[z] -= 1
        return out

    def topic_probs(self, key: CellKey) -> np.ndarray:
        """Smoothed topic distribution around ``key``; sums to 1."""
        counts = self.neighborhood_counts(key)
        return (counts + self.alpha) / (counts.sum() + self.n_topics * self.alpha)

    # -- internal plumbing -----------------------------------------------------

    def _ensure_cell(self, key: CellKey) -> Cell:
        cell = self.cells.get(key)
        if cell is not None:
            return cell
        row = len(self._cell_list)
        if row == self._cell_hist.shape[0]:
            grown = np.zeros((2 * row, self.n_topics), dtype=np.int64)
            grown[:row] = self._cell_hist
            self._cell_hist = grown
        cell = Cell(key, row)
        self.cells[key] = cell
        self._cell_list.append(cell)
        # A new cell invalidates the cached neighbor rows of adjacent cells.
        for nk in neighborhood(key):
            other = self.cells.get(nk)
            if other is not None:
                other._nbr_cache = None
        return cell

    def neighbor_rows(self, cell: Cell) -> np.ndarray:
        """Histogram row indices of the existing neighborhood cells (-1 padded)."""
        if cell._nbr_cache is None:
            keys = self.neighbor_keys(cell.key)
            rows = np.full(7, -1, dtype=np.int32)
            for j, nk in enumerate(keys):
                other = self.cells.get(nk)
                if other is not None:
                    rows[j] = other.row
            cell._nbr_cache = rows
        return cell._nbr_cache

    def _append_tokens(self, t: int, xs, ys, words) -> list[WordToken]:
        n_new = len(words)
        need = self._n_tokens + n_new
        if need > self._words.shape[0]:
            cap = max(2 * self._words.shape[0], need)
            for name in ("_words", "_topics", "_x", "_y", "_t", "_cell_row_of"):
                old = getattr(self, name)
                grown = np.empty(cap, dtype=old.dtype)
                grown[: self._n_tokens] = old[: self._n_tokens]
                setattr(self, name, grown)
        handles = []
        new_keys = self.time_index.setdefault(t, [])
        for x, y, w in zip(xs, ys, words):
            i = self._n_tokens
            key = cell_of((x, y, t), self.cell_size)
            cell = self._ensure_cell(key)
            if not cell.token_indices:
                new_keys.append(key)
            cell.token_indices.append(i)
            cell._idx_cache = None
            self._words[i] = w
            self._topics[i] = UNASSIGNED
            self._x[i] = x
            self._y[i] = y
            self._t[i] = t
            self._cell_row_of[i] = cell.row
            self._n_tokens += 1
            handles.append(WordToken(self, i))
        return handles


def add_observation(grid: CellGrid, counts: TopicCounts, t: int, words) -> list[WordToken]:
    """Insert the words observed at timestep ``t`` into their cells.

    ``words`` is either a sequence of ``(word_index, position)`` pairs, where
    a position is ``(x, y)`` or ``(x, y, t)``, or an ``(n, 3)`` array with
    columns ``x, y, word``.  Tokens are inserted unassigned; no count table
    changes until they are given labels.  Arrival must be monotone:
    ``t`` has to be exactly one past the last ingested timestep (0 first).
    """
    if t != grid.max_t + 1:
        raise ValueError(
            f"out-of-order observation: expected timestep {grid.max_t + 1}, got {t}"
        )
    xs, ys, ws = [], [], []
    if isinstance(words, np.ndarray):
        if words.size and (words.ndim != 2 or words.shape[1] != 3):
            raise ValueError("array observations must have shape (n, 3): x, y, word")
        xs = [math.floor(v) for v in words[:, 0]] if words.size else []
        ys = [math.floor(v) for v in words[:, 1]] if words.size else []
        ws = [int(v) for v in words[:, 2]] if words.size else []
    else:
        for w, pos in words:
            if len(pos) == 3 and pos[2] != t:
                raise ValueError(f"position timestep {pos[2]} does not match observation t={t}")
            xs.append(math.floor(pos[0]))
            ys.append(math.floor(pos[1]))
            ws.append(int(w))
    for w in ws:
        if not 0 <= w < counts.vocab_size:
            raise ValueError(f"word index {w} out of range [0, {counts.vocab_size})")
    handles = grid._append_tokens(t, xs, ys, ws)
    grid.max_t = t
    return handles


def reassign(grid: CellGrid, counts: TopicCounts, token: WordToken, new_topic: int) -> None:
    """Relabel one token, updating the global and per-cell count tables."""
    if not 0 <= new_topic < counts.n_topics:
        raise ValueError(f"topic index {new_topic} out of range [0, {counts.n_topics})")
    i = token.index
    old = int(grid._topics[i])
    if old == new_topic:
        return
    row = grid._cell_row_of[i]
    v = int(grid._words[i])
    if old != UNASSIGNED:
        counts.decrement(old, v)
        if grid._cell_hist[row, old] <= 0:
            raise CountCorruptionError(
                f"cell histogram for topic {old} would go negative"
            )
        grid._cell_hist[row, old] -= 1
    counts.increment(new_topic, v)
    grid._cell_hist[row, new_topic] += 1
    grid._topics[i] = new_topic
