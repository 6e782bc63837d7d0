"""Run configuration.  Defaults are the published experiment settings."""

from __future__ import annotations

import math
from dataclasses import dataclass

PENALTY_MODES = ("intersection", "union")


@dataclass(frozen=True)
class Config:
    threads: int = 1
    size_limit: int = 1000
    work_limit: int = 200_000_000
    cand_number: int = 5_000_000
    max_probe_number: int = 1000
    eff_threshold: float = 1000.0
    time_limit_seconds: float = 30.0
    max_propagation_rounds: int = 10
    tol: float = 1e-6
    conflict_penalty_mode: str = "intersection"
    # Treat PBCs with complemented literals as cliques too (off: only sum x_j <= 1 shapes).
    complemented_cliques: bool = False

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        for name in (
            "size_limit",
            "work_limit",
            "cand_number",
            "max_probe_number",
            "max_propagation_rounds",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eff_threshold <= 0 or self.time_limit_seconds <= 0 or self.tol <= 0:
            raise ValueError("eff_threshold, time_limit_seconds and tol must be positive")
        if self.conflict_penalty_mode not in PENALTY_MODES:
            raise ValueError(
                f"conflict_penalty_mode must be one of {PENALTY_MODES}, "
                f"got {self.conflict_penalty_mode!r}"
            )


def thread_pair_cap(max_probe_number: int, threads: int) -> int:
    """Per-worker pair limit ``ceil(max_probe_number / ln(threads + 1))``."""
    return math.ceil(max_probe_number / math.log(threads + 1))
