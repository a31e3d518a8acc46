"""Realtime online spatiotemporal topic modeling.

A streaming topic model over a grid of spacetime cells: token topics are
resampled by a collapsed Gibbs sampler whose location prior couples each
cell to its spatial and temporal neighbors, and a budgeted refinement
pipeline keeps labels converged as observations arrive.  Includes the
family of refinement-time schedulers, a perplexity benchmark harness, a
synthetic stream generator with planted topics, and a scikit-learn style
estimator front end.
"""

from .estimator import SpatiotemporalTopicModel
from .evaluation import (
    ComparisonTable,
    PerplexityTrace,
    compare_report,
    instantaneous_perplexity,
    nmi,
    perplexity,
)
from .grid import (
    UNASSIGNED,
    Cell,
    CellGrid,
    CellKey,
    CountCorruptionError,
    Position,
    TopicCounts,
    WordToken,
    add_observation,
    cell_of,
    neighborhood,
    reassign,
)
from .pipeline import (
    Budget,
    RefinementLedger,
    RunReport,
    StepReport,
    run_batch_baseline,
    run_stream,
    step,
)
from .sampler import (
    GibbsParams,
    batch_gibbs,
    init_labels,
    refine_cell,
    refine_timestep,
    refine_word,
    rng_from_seed,
    topic_posterior,
)
from .schedulers import VARIANTS, Scheduler, simulate_refinement_counts
from .stream_io import Stream, read_stream, write_stream
from .synth import PlantedModel, generate, make_separable

__version__ = "0.1.0"

__all__ = [
    "UNASSIGNED",
    "Budget",
    "Cell",
    "CellGrid",
    "CellKey",
    "ComparisonTable",
    "CountCorruptionError",
    "GibbsParams",
    "PerplexityTrace",
    "PlantedModel",
    "Position",
    "RefinementLedger",
    "RunReport",
    "Scheduler",
    "SpatiotemporalTopicModel",
    "StepReport",
    "Stream",
    "TopicCounts",
    "VARIANTS",
    "WordToken",
    "add_observation",
    "batch_gibbs",
    "cell_of",
    "compare_report",
    "generate",
    "init_labels",
    "instantaneous_perplexity",
    "make_separable",
    "neighborhood",
    "nmi",
    "perplexity",
    "read_stream",
    "reassign",
    "refine_cell",
    "refine_timestep",
    "refine_word",
    "rng_from_seed",
    "run_batch_baseline",
    "run_stream",
    "simulate_refinement_counts",
    "step",
    "topic_posterior",
    "write_stream",
]
