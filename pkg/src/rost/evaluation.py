"""Perplexity scoring, labeling agreement, and benchmark report assembly.

Perplexity here is predictive: a token's probability is the topic-marginal
p(w | x) = sum_k p(w | k) p(k | x), with the word factor taken from the
global topic-word table and the location factor from the smoothed topic
distribution of the token's cell neighborhood.  The score over a token set
is exp of the negative mean log probability, so an untrained model scores
exactly the vocabulary size and a perfect model approaches 1.

Tokens are never excluded from the counts when scoring: the final score is
a training-set perplexity, while the instantaneous score of a timestep is
measured one arrival later, before refinement of that timestep necessarily
finished, which is what makes it a useful held-out-style number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import CellGrid, TopicCounts
from .schedulers import VARIANTS


def _log_predictive(token_idx: np.ndarray, counts: TopicCounts, grid: CellGrid) -> np.ndarray:
    """Log p(w | x) for the model tokens listed by index."""
    phi = counts.word_probs_matrix()
    words = grid._words[token_idx]
    rows = grid._cell_row_of[token_idx]
    groups: dict[int, list[int]] = {}
    for j, r in enumerate(rows):
        groups.setdefault(int(r), []).append(j)
    logs = np.empty(token_idx.size, dtype=np.float64)
    for row, js in groups.items():
        theta = grid.topic_probs(grid._cell_list[row].key)
        logs[js] = np.log(theta @ phi[:, words[js]])
    return logs


def perplexity(tokens, counts: TopicCounts, grid: CellGrid) -> float:
    """Predictive perplexity of the given model tokens under the current state."""
    idx = np.asarray([tok.index for tok in tokens], dtype=np.int64)
    return perplexity_of_indices(idx, counts, grid)


def perplexity_of_indices(token_idx: np.ndarray, counts: TopicCounts, grid: CellGrid) -> float:
    if token_idx.size == 0:
        raise ValueError("perplexity of an empty token set is undefined")
    return float(np.exp(-_log_predictive(token_idx, counts, grid).mean()))


def instantaneous_perplexity(t: int, counts: TopicCounts, grid: CellGrid) -> float:
    """Perplexity over exactly the tokens observed at timestep ``t``."""
    if t not in grid.time_index:
        raise ValueError(f"timestep {t} has not been ingested")
    return perplexity_of_indices(grid.token_indices_at(t), counts, grid)


def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information I(A;B) / sqrt(H(A) H(B)).

    1.0 for labelings identical up to renaming, 0.0 for independent ones.
    Two constant labelings count as identical; one constant against a
    varying one carries no information.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size != b.size:
        raise ValueError(f"label lists differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("labelings must be nonempty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.float64)
    np.add.at(joint, (ai, bi), 1.0)
    joint /= a.size
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    ha = float(-(pa * np.log(pa, where=pa > 0, out=np.zeros_like(pa))).sum())
    hb = float(-(pb * np.log(pb, where=pb > 0, out=np.zeros_like(pb))).sum())
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / np.outer(pa, pb)[nz])).sum())
    return float(min(max(mi / np.sqrt(ha * hb), 0.0), 1.0))


@dataclass
class PerplexityTrace:
    """Per-timestep instantaneous perplexities plus the end-of-stream score.

    ``final_by_t`` re-scores each timestep's tokens under the final model
    state (the per-timestep view of the final score).  Ratio fields are
    filled in against a batch baseline by :func:`compare_report`.
    """

    instant: list[tuple[int, float]]
    final_ppx: float
    final_by_t: list[tuple[int, float]] = field(default_factory=list)
    batch_ratio_instant: Optional[list[tuple[int, float]]] = None
    batch_ratio_final: Optional[float] = None


@dataclass
class ComparisonRow:
    scheduler: str
    budget: str
    mean_instant_ppx: float
    mean_final_ppx: float
    instant_ratio: float
    final_ratio: float


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]

    def row(self, scheduler: str) -> ComparisonRow:
        for r in self.rows:
            if r.scheduler == scheduler:
                return r
        raise KeyError(scheduler)


def _mean_instant(trace: PerplexityTrace) -> float:
    vals = np.asarray([p for _, p in trace.instant], dtype=np.float64)
    return float(np.nanmean(vals)) if vals.size else float("nan")


def compare_report(
    traces: dict[str, PerplexityTrace], batch: PerplexityTrace, budget: str = ""
) -> ComparisonTable:
    """Assemble the scheduler-vs-batch comparison table.

    One row per scheduler with its mean instantaneous and final perplexity
    and their ratios to the batch baseline, plus a trailing batch row with
    unit ratios.  Also fills the per-timestep ratio fields of each trace.
    All traces must cover the same stream.
    """
    n_steps = len(batch.instant)
    for name, trace in traces.items():
        if len(trace.instant) != n_steps:
            raise ValueError(
                f"trace {name!r} covers {len(trace.instant)} timesteps, batch covers {n_steps}"
            )
    batch_mean_instant = _mean_instant(batch)
    batch_by_t = dict(batch.instant)
    rows = []
    ordered = [v for v in VARIANTS if v in traces]
    ordered += [name for name in traces if name not in VARIANTS]
    for name in ordered:
        trace = traces[name]
        trace.batch_ratio_instant = [
            (t, p / batch_by_t[t]) for t, p in trace.instant
        ]
        trace.batch_ratio_final = trace.final_ppx / batch.final_ppx
        mean_inst = _mean_instant(trace)
        rows.append(
            ComparisonRow(
                scheduler=name,
                budget=budget,
                mean_instant_ppx=mean_inst,
                mean_final_ppx=trace.final_ppx,
                instant_ratio=mean_inst / batch_mean_instant,
                final_ratio=trace.batch_ratio_final,
            )
        )
    rows.append(
        ComparisonRow(
            scheduler="batch",
            budget=budget,
            mean_instant_ppx=batch_mean_instant,
            mean_final_ppx=batch.final_ppx,
            instant_ratio=1.0,
            final_ratio=1.0,
        )
    )
    return ComparisonTable(rows)
