"""Refinement-time distributions: which past timestep to refine next.

Each variant defines a pmf P(t | T) over the 1-indexed timesteps t = 1..T,
where T is the timestep of the newest observation.  "now" always picks the
newest; "uniform" and "agep" (age-proportional) favor global coverage;
"exp" decays geometrically away from the present; the four mixed variants
blend a local and a global strategy with weight eta on the local part.

The geometric pmf has unbounded support, so it is truncated to the observed
range and renormalized by 1 - (1-q)^T; the mixed exponential variants
renormalize their geometric component before mixing so every pmf sums to 1
at any horizon.  The degenerate one-observation case of the +now mixtures
puts all mass on t=1.

``expected_refinements`` returns the exact finite sum
R * sum_{s=t..T} P(t | s): the expected number of rounds spent on timestep
t by the time T arrives, given R rounds per arrival interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VARIANTS = (
    "now",
    "uniform",
    "agep",
    "exp",
    "uniform_now",
    "agep_now",
    "uniform_exp",
    "agep_exp",
)


@dataclass(frozen=True)
class Scheduler:
    """One refinement-time distribution, identified by variant name.

    ``q`` is the geometric decay parameter of the exponential family;
    ``eta`` the local-vs-global mixing proportion of the mixed variants.
    Both are stored regardless of variant so configurations stay uniform.
    """

    variant: str
    q: float = 0.5
    eta: float = 0.5

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown scheduler {self.variant!r}; valid: {', '.join(VARIANTS)}"
            )
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    # -- pmf -------------------------------------------------------------

    def _exp_pmf(self, t: int, T: int) -> float:
        norm = 1.0 - (1.0 - self.q) ** T
        return self.q * (1.0 - self.q) ** (T - t) / norm

    def pmf(self, t: int, T: int) -> float:
        """P(t | T) for 1 <= t <= T."""
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        if not 1 <= t <= T:
            raise ValueError(f"timestep {t} out of range [1, {T}]")
        v = self.variant
        if v == "now":
            return 1.0 if t == T else 0.0
        if v == "uniform":
            return 1.0 / T
        if v == "agep":
            return 2.0 * t / (T * (T + 1))
        if v == "exp":
            return self._exp_pmf(t, T)
        if v == "uniform_now":
            if T == 1:
                return 1.0
            return self.eta if t == T else (1.0 - self.eta) / (T - 1)
        if v == "agep_now":
            if T == 1:
                return 1.0
            return self.eta if t == T else (1.0 - self.eta) * 2.0 * t / (T * (T - 1))
        if v == "uniform_exp":
            return self.eta * self._exp_pmf(t, T) + (1.0 - self.eta) / T
        # agep_exp
        return self.eta * self._exp_pmf(t, T) + (1.0 - self.eta) * 2.0 * t / (T * (T + 1))

    def pmf_vector(self, T: int) -> np.ndarray:
        """The full pmf over t = 1..T as an array (index i holds t = i+1)."""
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        t = np.arange(1, T + 1, dtype=np.float64)
        v = self.variant
        if v == "now":
            out = np.zeros(T)
            out[-1] = 1.0
            return out
        if v == "uniform":
            return np.full(T, 1.0 / T)
        if v == "agep":
            return 2.0 * t / (T * (T + 1))
        exp_part = None
        if v in ("exp", "uniform_exp", "agep_exp"):
            exp_part = self.q * np.power(1.0 - self.q, T - t)
            exp_part /= 1.0 - (1.0 - self.q) ** T
        if v == "exp":
            return exp_part
        if v == "uniform_now":
            if T == 1:
                return np.ones(1)
            out = np.full(T, (1.0 - self.eta) / (T - 1))
            out[-1] = self.eta
            return out
        if v == "agep_now":
            if T == 1:
                return np.ones(1)
            out = (1.0 - self.eta) * 2.0 * t / (T * (T - 1))
            out[-1] = self.eta
            return out
        if v == "uniform_exp":
            return self.eta * exp_part + (1.0 - self.eta) / T
        return self.eta * exp_part + (1.0 - self.eta) * 2.0 * t / (T * (T + 1))

    # -- sampling and analysis --------------------------------------------

    def sample(self, T: int, rng: np.random.Generator) -> int:
        """Draw one timestep t ~ P(t | T); consumes exactly one uniform."""
        cum = np.cumsum(self.pmf_vector(T))
        t = int(np.searchsorted(cum, rng.random(), side="right")) + 1
        return min(t, T)

    def expected_refinements(self, t: int, T: int, R: float) -> float:
        """Exact expected refinement count of timestep t once T has arrived.

        Sums the pmf over every arrival interval from t to T and scales by
        the R rounds available per interval.
        """
        if not 1 <= t <= T:
            raise ValueError(f"timestep {t} out of range [1, {T}]")
        return R * sum(self.pmf(t, s) for s in range(t, T + 1))


def simulate_refinement_counts(
    scheduler: Scheduler, T: int, R: int, n_replicates: int, rng: np.random.Generator
) -> np.ndarray:
    """Mean empirical r(t) over replicates of the realtime sampling loop.

    Each replicate runs T arrival intervals; in interval s it draws R
    timesteps from P(t | s).  Returns the per-timestep mean count,
    indexed t-1.
    """
    totals = np.zeros(T, dtype=np.int64)
    for s in range(1, T + 1):
        cum = np.cumsum(scheduler.pmf_vector(s))
        draws = np.searchsorted(cum, rng.random(n_replicates * R), side="right")
        np.clip(draws, 0, s - 1, out=draws)
        totals += np.bincount(draws, minlength=T)
    return totals / n_replicates
