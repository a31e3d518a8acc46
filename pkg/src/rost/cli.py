"""Command-line interface: run, batch, compare, synth.

`run` executes one realtime scheduler over a stream file, `batch` the
batch baseline at matched effort, `compare` the full 8-scheduler matrix
plus the baseline with restarts, and `synth` writes a synthetic stream
with a planted ground-truth sidecar.  All commands are deterministic for
a fixed --seed: re-running produces byte-identical outputs.
"""

from __future__ import annotations

import os

import click
import numpy as np

from .evaluation import PerplexityTrace, compare_report
from .pipeline import Budget, RunReport, run_batch_baseline, run_stream
from .sampler import GibbsParams, rng_from_seed
from .schedulers import VARIANTS, Scheduler
from .stream_io import (
    Stream,
    read_stream,
    write_comparison_csv,
    write_ratio_csv,
    write_run_csv,
    write_stream,
)
from .synth import generate, make_separable


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


def _budget_from(rounds, millis) -> Budget:
    if (rounds is None) == (millis is None):
        raise _fail("exactly one of --budget-rounds / --budget-millis is required")
    return Budget.rounds(rounds) if rounds is not None else Budget.wall_clock(millis)


def _budget_label(budget: Budget) -> str:
    if budget.mode == "rounds":
        return str(budget.rounds_per_interval)
    return f"{budget.millis_per_interval}ms"


def _model_options(fn):
    fn = click.option("--topics", "-K", default=16, show_default=True, help="Number of topics.")(fn)
    fn = click.option("--alpha", default=0.1, show_default=True, help="Neighborhood Dirichlet smoothing.")(fn)
    fn = click.option("--beta", default=0.5, show_default=True, help="Topic-word Dirichlet smoothing.")(fn)
    fn = click.option("--cell-size", default=64, show_default=True, help="Spatial cell side length.")(fn)
    fn = click.option("--seed", default=0, show_default=True, help="Master seed (restart i uses seed+i).")(fn)
    return fn


def _budget_options(fn):
    fn = click.option("--budget-rounds", type=int, default=None, help="Refinement rounds per interval.")(fn)
    fn = click.option("--budget-millis", type=int, default=None, help="Refinement milliseconds per interval.")(fn)
    return fn


def _mean_reports(reports: list[RunReport]) -> PerplexityTrace:
    """Average the per-timestep traces and final scores of several restarts."""
    ts = [t for t, _ in reports[0].instant]
    inst = np.array([[p for _, p in r.instant] for r in reports]).mean(axis=0)
    fint = np.array([[p for _, p in r.final_by_t] for r in reports]).mean(axis=0)
    return PerplexityTrace(
        instant=[(t, float(v)) for t, v in zip(ts, inst)],
        final_ppx=float(np.mean([r.final_ppx for r in reports])),
        final_by_t=[(t, float(v)) for t, v in zip(ts, fint)],
    )


@click.group()
def main():
    """Realtime spatiotemporal topic modeling benchmark tool."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--scheduler", "scheduler_name", required=True, help="One of: " + ", ".join(VARIANTS))
@click.option("--eta", default=0.5, show_default=True, help="Local/global mixing proportion.")
@click.option("--q", default=0.5, show_default=True, help="Geometric decay of the exp family.")
@click.option("--restarts", default=1, show_default=True, help="Independent restarts to average.")
@_budget_options
@_model_options
def run(input_path, output_path, scheduler_name, eta, q, restarts, budget_rounds, budget_millis,
        topics, alpha, beta, cell_size, seed):
    """Run one realtime scheduler over a stream and write the per-run CSV."""
    try:
        scheduler = Scheduler(scheduler_name, q=q, eta=eta)
        budget = _budget_from(budget_rounds, budget_millis)
        stream = read_stream(input_path)
        params = GibbsParams(alpha=alpha, beta=beta, n_topics=topics, seed=seed)
        reports = [
            run_stream(stream, scheduler, budget, params, rng_from_seed(seed + i), cell_size=cell_size)
            for i in range(restarts)
        ]
    except (ValueError, OSError) as exc:
        raise _fail(str(exc))
    for warning in stream.warnings:
        click.echo(f"warning: {warning}", err=True)
    report = reports[0]
    if restarts > 1:
        trace = _mean_reports(reports)
        report = RunReport(
            instant=trace.instant,
            final_ppx=trace.final_ppx,
            final_by_t=trace.final_by_t,
            ledger=reports[0].ledger,
            n_words=reports[0].n_words,
            total_rounds=reports[0].total_rounds,
        )
    write_run_csv(report, output_path)
    click.echo(f"wrote {output_path} ({len(report.instant)} timesteps, final ppx {report.final_ppx:.4f})")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--restarts", default=1, show_default=True)
@_budget_options
@_model_options
def batch(input_path, output_path, restarts, budget_rounds, budget_millis,
          topics, alpha, beta, cell_size, seed):
    """Run the batch baseline at effort matched to an online run."""
    try:
        budget = _budget_from(budget_rounds, budget_millis)
        if budget.mode != "rounds":
            raise ValueError("the batch baseline requires --budget-rounds")
        stream = read_stream(input_path)
        params = GibbsParams(alpha=alpha, beta=beta, n_topics=topics, seed=seed)
        total = budget.rounds_per_interval * (stream.n_steps + 1)
        reports = [
            run_batch_baseline(stream, total, params, rng_from_seed(seed + i), cell_size=cell_size)
            for i in range(restarts)
        ]
    except (ValueError, OSError) as exc:
        raise _fail(str(exc))
    report = reports[0]
    if restarts > 1:
        trace = _mean_reports(reports)
        report = RunReport(
            instant=trace.instant,
            final_ppx=trace.final_ppx,
            final_by_t=trace.final_by_t,
            ledger=reports[0].ledger,
            n_words=reports[0].n_words,
            total_rounds=reports[0].total_rounds,
        )
    write_run_csv(report, output_path)
    click.echo(f"wrote {output_path} (final ppx {report.final_ppx:.4f})")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False),
              help="Comparison CSV path; per-timestep ratios go to *_ratios.csv alongside.")
@click.option("--eta", default=0.5, show_default=True)
@click.option("--q", default=0.5, show_default=True)
@click.option("--restarts", default=1, show_default=True)
@_budget_options
@_model_options
def compare(input_path, output_path, eta, q, restarts, budget_rounds, budget_millis,
            topics, alpha, beta, cell_size, seed):
    """Run all 8 schedulers plus the batch baseline and tabulate the results."""
    try:
        budget = _budget_from(budget_rounds, budget_millis)
        stream = read_stream(input_path)
        params = GibbsParams(alpha=alpha, beta=beta, n_topics=topics, seed=seed)
        traces, batch_trace = run_comparison(
            stream, budget, params, eta=eta, q=q, restarts=restarts, seed=seed, cell_size=cell_size
        )
        table = compare_report(traces, batch_trace, budget=_budget_label(budget))
    except (ValueError, OSError) as exc:
        raise _fail(str(exc))
    write_comparison_csv(table, output_path)
    root, ext = os.path.splitext(output_path)
    ratio_path = f"{root}_ratios{ext or '.csv'}"
    write_ratio_csv(traces, batch_trace, ratio_path)
    click.echo(f"wrote {output_path} and {ratio_path}")


def run_comparison(
    stream: Stream,
    budget: Budget,
    params: GibbsParams,
    eta: float = 0.5,
    q: float = 0.5,
    restarts: int = 1,
    seed: int = 0,
    cell_size: int = 64,
):
    """All-scheduler comparison on one stream; returns (traces, batch trace).

    Restart i of every scheduler (and of the batch baseline) uses seed+i,
    so reruns and partial reruns are reproducible.
    """
    traces: dict[str, PerplexityTrace] = {}
    online_round_totals = []
    for name in VARIANTS:
        scheduler = Scheduler(name, q=q, eta=eta)
        reports = [
            run_stream(stream, scheduler, budget, params, rng_from_seed(seed + i), cell_size=cell_size)
            for i in range(restarts)
        ]
        online_round_totals.extend(r.total_rounds for r in reports)
        traces[name] = _mean_reports(reports)
    if budget.mode == "rounds":
        total = budget.rounds_per_interval * (stream.n_steps + 1)
    else:
        # Wall-clock fairness: give batch the mean round total the online
        # runs actually managed within their clock windows.
        total = int(round(np.mean(online_round_totals)))
    batch_reports = [
        run_batch_baseline(stream, total, params, rng_from_seed(seed + i), cell_size=cell_size)
        for i in range(restarts)
    ]
    return traces, _mean_reports(batch_reports)


@main.command()
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False),
              help="Stream file path; ground-truth labels go to <output>.labels.")
@click.option("--vocab", "-V", required=True, type=int, help="Vocabulary size.")
@click.option("--steps", "-T", required=True, type=int, help="Number of timesteps.")
@click.option("--words-per-step", default=50, show_default=True)
@click.option("--smoothness", default=0.7, show_default=True,
              help="Spatial smoothness of the planted topic field in [0, 1].")
@click.option("--extent", default=4, show_default=True, help="Spatial width/height in cells.")
@_model_options
def synth(output_path, vocab, steps, words_per_step, smoothness, extent,
          topics, alpha, beta, cell_size, seed):
    """Generate a synthetic stream with planted topics plus a label sidecar."""
    try:
        model = make_separable(
            topics, vocab, extent, steps,
            smoothness=smoothness, seed=seed,
            words_per_step=words_per_step, cell_size=cell_size,
        )
        stream, labels = generate(model)
    except ValueError as exc:
        raise _fail(str(exc))
    write_stream(stream, output_path)
    sidecar = Stream(
        vocab_size=model.n_topics,
        steps=[
            np.stack([rows[:, 0], rows[:, 1], zs], axis=1)
            for rows, zs in zip(stream.steps, labels)
        ],
    )
    write_stream(sidecar, output_path + ".labels")
    click.echo(f"wrote {output_path} and {output_path}.labels")


if __name__ == "__main__":
    main()
