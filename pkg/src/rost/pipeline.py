"""Realtime refinement pipeline: ingest, initialize, refine within budget.

Each arriving observation is added to the grid, its tokens get uniform
random labels, and the rest of the arrival interval is spent on refinement:
the scheduler repeatedly picks a past timestep and every cell of that
timestep is resampled.  The budget is either a fixed number of rounds
(deterministic, the testing surface) or a wall-clock window in
milliseconds (the realtime setting).

A round is one full refine pass over all cells of one sampled timestep.

After the last observation the stream gets one trailing budget window with
the clock advanced one tick past the newest arrival, exactly as if a next
observation were due: the scheduler may then draw the not-yet-observed
timestep, which refines nothing but still spends its round.  This keeps
budget accounting uniform (rounds = R x (observations + 1)) and gives the
last observation the same measurement point as every other: its
instantaneous perplexity is read after one full interval.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .evaluation import instantaneous_perplexity, perplexity_of_indices
from .grid import DEFAULT_CELL_SIZE, CellGrid, TopicCounts, add_observation
from .sampler import GibbsParams, init_labels, refine_timestep
from .schedulers import Scheduler
from .stream_io import Stream


@dataclass
class Budget:
    """Refinement budget per arrival interval; exactly one mode is active."""

    mode: str  # "rounds" | "wallclock"
    rounds_per_interval: Optional[int] = None
    millis_per_interval: Optional[int] = None

    def __post_init__(self):
        if self.mode == "rounds":
            if self.rounds_per_interval is None or self.rounds_per_interval < 0:
                raise ValueError("rounds budget requires rounds_per_interval >= 0")
            if self.millis_per_interval is not None:
                raise ValueError("rounds budget must not set millis_per_interval")
        elif self.mode == "wallclock":
            if self.millis_per_interval is None or self.millis_per_interval <= 0:
                raise ValueError("wallclock budget requires millis_per_interval > 0")
            if self.rounds_per_interval is not None:
                raise ValueError("wallclock budget must not set rounds_per_interval")
        else:
            raise ValueError(f"unknown budget mode {self.mode!r}")

    @classmethod
    def rounds(cls, n: int) -> "Budget":
        return cls(mode="rounds", rounds_per_interval=n)

    @classmethod
    def wall_clock(cls, millis: int) -> "Budget":
        return cls(mode="wallclock", millis_per_interval=millis)


@dataclass
class RefinementLedger:
    """How often each timestep was picked, and how many words that refined."""

    rounds: dict[int, int] = field(default_factory=dict)
    words_refined: dict[int, int] = field(default_factory=dict)

    def record(self, t: int, n_words: int) -> None:
        self.rounds[t] = self.rounds.get(t, 0) + 1
        self.words_refined[t] = self.words_refined.get(t, 0) + n_words

    @property
    def total_rounds(self) -> int:
        return sum(self.rounds.values())

    @property
    def total_words(self) -> int:
        return sum(self.words_refined.values())


@dataclass
class StepReport:
    t: int
    rounds_executed: int
    words_refined: int
    prev_instant: Optional[tuple[int, float]]  # (t-1, perplexity) or None on the first step


@dataclass
class RunReport:
    """Everything one pipeline run produces."""

    instant: list[tuple[int, float]]
    final_ppx: float
    final_by_t: list[tuple[int, float]]
    ledger: RefinementLedger
    n_words: dict[int, int]
    total_rounds: int


def _instant_or_nan(t: int, counts: TopicCounts, grid: CellGrid) -> float:
    if grid.token_indices_at(t).size == 0:
        return float("nan")
    return instantaneous_perplexity(t, counts, grid)


def _run_window(
    grid: CellGrid,
    counts: TopicCounts,
    scheduler: Scheduler,
    budget: Budget,
    current_t: int,
    rng: np.random.Generator,
    ledger: RefinementLedger,
) -> tuple[int, int]:
    """Spend one budget window refining; returns (rounds, words refined).

    ``current_t`` is 0-indexed; the scheduler runs on 1-indexed timesteps.
    """

    def one_round() -> int:
        t_pick = scheduler.sample(current_t + 1, rng) - 1
        n = refine_timestep(grid, counts, t_pick, rng)
        ledger.record(t_pick, n)
        return n

    rounds = 0
    words = 0
    if budget.mode == "rounds":
        for _ in range(budget.rounds_per_interval):
            words += one_round()
            rounds += 1
    else:
        deadline = time.monotonic() + budget.millis_per_interval / 1000.0
        while True:
            words += one_round()
            rounds += 1
            if time.monotonic() >= deadline:
                break
    return rounds, words


def step(
    grid: CellGrid,
    counts: TopicCounts,
    scheduler: Scheduler,
    budget: Budget,
    t: int,
    words,
    rng: np.random.Generator,
    ledger: Optional[RefinementLedger] = None,
) -> StepReport:
    """Process one arriving observation.

    Measures the instantaneous perplexity of the previous timestep first
    (the model state is exactly one arrival interval past that
    observation), then ingests, initializes the new tokens uniformly at
    random, and refines until the budget for this interval is exhausted.
    """
    if ledger is None:
        ledger = RefinementLedger()
    prev = None
    if t > 0:
        prev = (t - 1, _instant_or_nan(t - 1, counts, grid))
    tokens = add_observation(grid, counts, t, words)
    init_labels(grid, counts, tokens, rng)
    rounds, refined = _run_window(grid, counts, scheduler, budget, t, rng, ledger)
    return StepReport(t=t, rounds_executed=rounds, words_refined=refined, prev_instant=prev)


def _final_scores(grid: CellGrid, counts: TopicCounts) -> tuple[float, list[tuple[int, float]]]:
    by_t = []
    for t in sorted(grid.time_index):
        idx = grid.token_indices_at(t)
        ppx = perplexity_of_indices(idx, counts, grid) if idx.size else float("nan")
        by_t.append((t, ppx))
    if grid.n_tokens == 0:
        return float("nan"), by_t
    all_idx = np.arange(grid.n_tokens, dtype=np.int64)
    return perplexity_of_indices(all_idx, counts, grid), by_t


def run_stream(
    stream: Stream,
    scheduler: Scheduler,
    budget: Budget,
    params: GibbsParams,
    rng: np.random.Generator,
    cell_size: int = DEFAULT_CELL_SIZE,
    coupling: str = "vonneumann",
    return_state: bool = False,
):
    """Run the realtime pipeline over a whole stream.

    One step per observation, then the trailing budget window, then the
    last timestep's instantaneous measurement and the end-of-stream
    (final) scores.  With ``return_state`` the final (grid, counts) pair
    is returned alongside the report.
    """
    grid = CellGrid(params.n_topics, cell_size=cell_size, alpha=params.alpha, coupling=coupling)
    counts = TopicCounts(params.n_topics, stream.vocab_size, beta=params.beta)
    ledger = RefinementLedger()
    if stream.n_steps == 0:
        report = RunReport(
            instant=[],
            final_ppx=float("nan"),
            final_by_t=[],
            ledger=ledger,
            n_words={},
            total_rounds=0,
        )
        return (report, grid, counts) if return_state else report
    instant: list[tuple[int, float]] = []
    n_words: dict[int, int] = {}
    for t, rows in enumerate(stream.steps):
        report = step(grid, counts, scheduler, budget, t, rows, rng, ledger)
        n_words[t] = len(rows)
        if report.prev_instant is not None:
            instant.append(report.prev_instant)
    last_t = stream.n_steps - 1
    _run_window(grid, counts, scheduler, budget, last_t + 1, rng, ledger)
    instant.append((last_t, _instant_or_nan(last_t, counts, grid)))
    final_ppx, final_by_t = _final_scores(grid, counts)
    report = RunReport(
        instant=instant,
        final_ppx=final_ppx,
        final_by_t=final_by_t,
        ledger=ledger,
        n_words=n_words,
        total_rounds=ledger.total_rounds,
    )
    return (report, grid, counts) if return_state else report


def run_batch_baseline(
    stream: Stream,
    total_rounds: int,
    params: GibbsParams,
    rng: np.random.Generator,
    cell_size: int = DEFAULT_CELL_SIZE,
    coupling: str = "vonneumann",
) -> RunReport:
    """Batch counterpart given the same total refinement effort.

    Ingests everything, initializes all labels, then runs whole sweeps
    until the cumulative word-refinement count first reaches what an
    online run spends: ``total_rounds`` rounds at the stream's mean words
    per timestep.  With a zero budget the labels stay unassigned, so the
    perplexity equals that of an untrained model.

    The report's per-timestep scores are all measured under the final
    model state (a batch run has no online measurement points).
    """
    grid = CellGrid(params.n_topics, cell_size=cell_size, alpha=params.alpha, coupling=coupling)
    counts = TopicCounts(params.n_topics, stream.vocab_size, beta=params.beta)
    ledger = RefinementLedger()
    if stream.n_steps == 0:
        return RunReport(
            instant=[],
            final_ppx=float("nan"),
            final_by_t=[],
            ledger=ledger,
            n_words={},
            total_rounds=0,
        )
    n_words = {}
    for t, rows in enumerate(stream.steps):
        add_observation(grid, counts, t, rows)
        n_words[t] = len(rows)
    total_tokens = grid.n_tokens
    target_words = int(math.ceil(total_rounds * total_tokens / stream.n_steps))
    if target_words > 0 and total_tokens > 0:
        init_labels(grid, counts, grid.tokens(), rng)
        done = 0
        while done < target_words:
            for t in sorted(grid.time_index):
                n = refine_timestep(grid, counts, t, rng)
                ledger.record(t, n)
            done += total_tokens
    final_ppx, final_by_t = _final_scores(grid, counts)
    return RunReport(
        instant=list(final_by_t),
        final_ppx=final_ppx,
        final_by_t=final_by_t,
        ledger=ledger,
        n_words=n_words,
        total_rounds=ledger.total_rounds,
    )
