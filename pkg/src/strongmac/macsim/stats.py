"""Binomial summaries of Monte-Carlo error counts."""

import math
from dataclasses import dataclass

Z95 = 1.959963984540054


def wilson_interval(errors, trials, z=Z95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    phat = errors / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class SimResult:
    trials: int
    errors: int
    seed: int

    @property
    def error_prob(self):
        return self.errors / self.trials if self.trials else 0.0

    @property
    def ci(self):
        return wilson_interval(self.errors, self.trials)

    @property
    def half_width(self):
        lo, hi = self.ci
        return (hi - lo) / 2

    def to_dict(self):
        lo, hi = self.ci
        return {
            "trials": self.trials,
            "errors": self.errors,
            "error_prob": self.error_prob,
            "ci_lo": lo,
            "ci_hi": hi,
            "seed": self.seed,
        }
