"""Bit-exact file formats: word streams, label sidecars, CSV reports.

Stream files are plain ASCII text.  Line 1 is the header
``rost-stream v1 V=<int>``; every following line is one token record
``<t> <x> <y> <word>`` (four base-10 integers, single spaces, one record
per line, sorted by non-decreasing t).  Only ASCII digits and a leading
``-`` are accepted, so parsing cannot depend on the locale.

Timestep gaps in an input file are remapped to consecutive indices with a
warning instead of being rejected; downstream refinement schedules assume
consecutive timesteps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

_HEADER_RE = re.compile(r"^rost-stream v1 V=([0-9]+)$")
_INT_RE = re.compile(r"^-?[0-9]+$")

RUN_CSV_HEADER = "t,n_words,instant_ppx,r_t"
COMPARISON_CSV_HEADER = (
    "scheduler,T_R_or_R,mean_instant_ppx,mean_final_ppx,instant_ratio,final_ratio"
)
RATIO_CSV_HEADER = "scheduler,t,instant_ratio,final_ratio"


@dataclass
class Stream:
    """An ordered word stream: one (n, 3) array of x, y, word rows per timestep."""

    vocab_size: int
    steps: list[np.ndarray]
    warnings: list[str] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def n_words(self) -> int:
        return sum(len(s) for s in self.steps)


def _parse_int(text: str, line_no: int, what: str) -> int:
    if not _INT_RE.match(text):
        raise ValueError(f"line {line_no}: {what} is not a base-10 integer: {text!r}")
    return int(text)


def read_stream(path) -> Stream:
    """Parse a stream file, grouping records by consecutive timestep."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        m = _HEADER_RE.match(header)
        if not m:
            raise ValueError(f"line 1: bad header {header!r}; expected 'rost-stream v1 V=<int>'")
        vocab_size = int(m.group(1))
        warnings: list[str] = []
        raw_steps: list[list[tuple[int, int, int]]] = []
        prev_t = None
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            fields = line.split(" ")
            if len(fields) != 4:
                raise ValueError(f"line {line_no}: expected 4 fields, got {len(fields)}")
            t = _parse_int(fields[0], line_no, "t")
            x = _parse_int(fields[1], line_no, "x")
            y = _parse_int(fields[2], line_no, "y")
            w = _parse_int(fields[3], line_no, "word")
            if not 0 <= w < vocab_size:
                raise ValueError(
                    f"line {line_no}: word index {w} out of range [0, {vocab_size})"
                )
            if prev_t is not None and t < prev_t:
                raise ValueError(
                    f"line {line_no}: decreasing timestep {t} after {prev_t}"
                )
            if prev_t is None or t > prev_t:
                if prev_t is not None and t > prev_t + 1:
                    warnings.append(
                        f"timestep gap: {t} follows {prev_t}, remapped to consecutive index {len(raw_steps)}"
                    )
                raw_steps.append([])
                prev_t = t
            raw_steps[-1].append((x, y, w))
    steps = [np.asarray(rows, dtype=np.int64).reshape(-1, 3) for rows in raw_steps]
    return Stream(vocab_size=vocab_size, steps=steps, warnings=warnings)


def write_stream(stream: Stream, path) -> None:
    """Write a stream file (timesteps are the list indices, starting at 0)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"rost-stream v1 V={stream.vocab_size}\n")
        for t, rows in enumerate(stream.steps):
            for x, y, w in rows:
                fh.write(f"{t} {x} {y} {w}\n")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_run_csv(report, path) -> None:
    """Per-run CSV: one row per observed timestep."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(RUN_CSV_HEADER + "\n")
        for t, ppx in report.instant:
            n = report.n_words.get(t, 0)
            r_t = report.ledger.rounds.get(t, 0)
            fh.write(f"{t},{n},{_fmt(ppx)},{r_t}\n")


def write_comparison_csv(table, path) -> None:
    """Comparison CSV: one row per scheduler plus the batch row."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(COMPARISON_CSV_HEADER + "\n")
        for row in table.rows:
            fh.write(
                f"{row.scheduler},{row.budget},{_fmt(row.mean_instant_ppx)},"
                f"{_fmt(row.mean_final_ppx)},{_fmt(row.instant_ratio)},{_fmt(row.final_ratio)}\n"
            )


def write_ratio_csv(traces: dict, batch, path) -> None:
    """Per-timestep instantaneous and final perplexity ratios to batch."""
    batch_final_by_t = dict(batch.final_by_t)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(RATIO_CSV_HEADER + "\n")
        for name, trace in traces.items():
            final_by_t = dict(trace.final_by_t)
            for t, r_inst in trace.batch_ratio_instant or []:
                r_final = final_by_t[t] / batch_final_by_t[t]
                fh.write(f"{name},{t},{_fmt(r_inst)},{_fmt(r_final)}\n")
