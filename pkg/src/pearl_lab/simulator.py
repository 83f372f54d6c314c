"""Discrete-event timing over recorded decode traces.

The simulator never re-derives acceptance: it prices the steps an engine (or
a kernel) already produced, so one stochastic run can be timed under any
schedule. Time is measured in draft-forward units: a draft forward costs t,
a target forward costs c * t, and a plain autoregressive decoder therefore
needs N * c * t for N tokens, which is the speedup baseline.

Step prices:
  draft-then-verify   gamma * t + c * t   (phases alternate, costs add)
  two-phase overlap   max(gamma * t, c * t)   (phases run together)
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence

import numpy as np

from .engines import StepTrace
from .kernels import pearl_step_finalized

SWEEP_CSV_HEADER = ["gamma", "alpha", "c", "speedup_mean", "speedup_stderr"]


class MismatchedEngine(ValueError):
    """Raised when a trace's step kinds do not belong to the claimed engine."""


@dataclass(frozen=True)
class TimingParams:
    """Draft forward time t and target/draft cost ratio c, both positive."""

    t: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        if not self.t > 0.0:
            raise ValueError(f"t must be positive, got {self.t}")
        if not self.c > 0.0:
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def target_time(self) -> float:
        return self.c * self.t


def time_ar_step(params: TimingParams) -> float:
    """Cost of one autoregressive step: one target forward."""
    return params.target_time


def time_sd_step(gamma: int, params: TimingParams) -> float:
    """Cost of one draft-then-verify step: gamma draft forwards plus one target forward."""
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return gamma * params.t + params.target_time


def time_pearl_step(gamma: int, params: TimingParams) -> float:
    """Cost of one two-phase step: the slower of the overlapped phases."""
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return max(gamma * params.t, params.target_time)


@dataclass(frozen=True)
class SimReport:
    """Timing summary of one simulated run."""

    engine: str
    steps: int
    finalized_tokens: int
    total_time: float
    tokens_per_time: float
    speedup_vs_ar: float


_KINDS = {
    "ar": ("ar",),
    "sd": ("sd",),
    "pearl": ("pre_verify", "post_verify"),
}


def _step_time(kind: str, n_drafted: int, params: TimingParams) -> float:
    if kind == "ar":
        return time_ar_step(params)
    if kind == "sd":
        return time_sd_step(n_drafted, params)
    return time_pearl_step(n_drafted, params)


def _report(engine: str, n_steps: int, finalized: int, total_time: float, params: TimingParams) -> SimReport:
    tokens_per_time = finalized / total_time
    # An AR decoder spends c * t per token, so the speedup is the token rate
    # times that per-token cost.
    return SimReport(
        engine=engine,
        steps=n_steps,
        finalized_tokens=finalized,
        total_time=total_time,
        tokens_per_time=tokens_per_time,
        speedup_vs_ar=tokens_per_time * params.target_time,
    )


def simulate_run(steps: Sequence[StepTrace], params: TimingParams, engine_kind: str) -> SimReport:
    """Price a recorded trace under ``params``.

    Raises:
        MismatchedEngine: when ``engine_kind`` is unknown, the trace is empty,
            or any step kind does not belong to that engine.
    """
    if engine_kind not in _KINDS:
        raise MismatchedEngine(f"unknown engine kind {engine_kind!r}")
    if not steps:
        raise MismatchedEngine("empty trace")
    allowed = _KINDS[engine_kind]
    total_time = 0.0
    finalized = 0
    for tr in steps:
        if tr.kind not in allowed:
            raise MismatchedEngine(
                f"step {tr.index} has kind {tr.kind!r}, not a {engine_kind!r} step"
            )
        total_time += _step_time(tr.kind, len(tr.drafted), params)
        finalized += tr.finalized_delta
    return _report(engine_kind, len(steps), finalized, total_time, params)


def simulate_counts(
    finalized: np.ndarray, gamma: int, params: TimingParams, engine_kind: str
) -> SimReport:
    """Price per-step finalized counts when every step costs the same.

    The array form of ``simulate_run`` for kernel output: all steps of one
    engine at fixed gamma share one price, so only the counts are needed.
    """
    if engine_kind not in _KINDS:
        raise MismatchedEngine(f"unknown engine kind {engine_kind!r}")
    if len(finalized) == 0:
        raise MismatchedEngine("empty trace")
    n_drafted = 0 if engine_kind == "ar" else gamma
    step_time = _step_time(_KINDS[engine_kind][0], n_drafted, params)
    total = int(np.asarray(finalized).sum())
    return _report(engine_kind, len(finalized), total, step_time * len(finalized), params)


@dataclass(frozen=True)
class SweepRow:
    gamma: int
    alpha: float
    c: float
    speedup_mean: float
    speedup_stderr: float


def sweep_rows(
    alpha: float,
    c: float,
    gammas: Sequence[int],
    n_steps: int = 100_000,
    seed: int = 0,
) -> List[SweepRow]:
    """Monte Carlo two-phase speedup per gamma, with a standard error.

    Each gamma cell simulates ``n_steps`` chained two-phase steps for the
    constant-acceptance pair at ``alpha`` under TimingParams(1, c), using an
    independent child seed per cell.
    """
    params = TimingParams(t=1.0, c=c)
    children = np.random.SeedSequence(seed).spawn(len(gammas))
    rows: List[SweepRow] = []
    for gamma, child in zip(gammas, children):
        fin, _ = pearl_step_finalized(alpha, gamma, n_steps, child)
        per_token_cost = params.target_time / time_pearl_step(gamma, params)
        mean = float(fin.mean()) * per_token_cost
        stderr = float(fin.std(ddof=1)) / np.sqrt(len(fin)) * per_token_cost
        rows.append(SweepRow(gamma=int(gamma), alpha=alpha, c=c, speedup_mean=mean, speedup_stderr=stderr))
    return rows


def sweep_gamma(
    alpha: float,
    c: float,
    gammas: Sequence[int],
    n_steps: int = 100_000,
    seed: int = 0,
) -> Dict[int, float]:
    """Map gamma -> simulated two-phase speedup over AR (see ``sweep_rows``)."""
    return {row.gamma: row.speedup_mean for row in sweep_rows(alpha, c, gammas, n_steps, seed)}


def write_sweep_csv(rows: Iterable[SweepRow], path: str) -> None:
    """Sweep rows as RFC-4180 CSV with the documented header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for row in rows:
            writer.writerow(
                [row.gamma, row.alpha, row.c, f"{row.speedup_mean:.6f}", f"{row.speedup_stderr:.6f}"]
            )
