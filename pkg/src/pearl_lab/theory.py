"""Closed-form performance model of the decoding engines.

Everything here is a pure function of the per-token acceptance rate alpha,
the draft block length gamma, and the cost ratio c. The Monte Carlo suites
check the engines and kernels against these forms, and the forms against
independent oracles, so the two routes validate each other.
"""

from __future__ import annotations

from .kernels import segment_accept_runs
from .models import InvalidAlpha
from .simulator import TimingParams, time_pearl_step


def _check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha < 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1), got {alpha}")
    return float(alpha)


def sd_expected_tokens(alpha: float, gamma: int) -> float:
    """Expected finalized tokens of one draft-then-verify step.

    The accepted run is geometric truncated at gamma and every step adds one
    more token (bonus or correction), giving
    (1 - alpha^(gamma+1)) / (1 - alpha). Equals 1 at alpha = 0 and grows
    toward gamma + 1 as alpha -> 1.
    """
    alpha = _check_alpha(alpha)
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return (1.0 - alpha ** (gamma + 1)) / (1.0 - alpha)


def sd_speedup(alpha: float, gamma: int, c: float) -> float:
    """Draft-then-verify speedup over the autoregressive baseline.

    Tokens per step divided by the step cost (gamma + c) draft units, times
    the per-token AR cost c:
    (1 - alpha^(gamma+1)) / ((1 - alpha) * (gamma / c + 1)).
    """
    if not c > 0.0:
        raise ValueError(f"c must be positive, got {c}")
    return sd_expected_tokens(alpha, gamma) / (gamma / c + 1.0)


def pearl_expected_tokens_formula(alpha: float) -> float:
    """The claimed closed form for mean tokens per drafting segment: 1/(1-alpha) + 1.

    The independent segment oracle (``pearl_segment_tokens_oracle``) measures
    a geometric accepted run plus one correction, which converges to
    1/(1 - alpha); this claimed form sits exactly one token above it. Both
    values are reported side by side by the verify-theorems command, and the
    test suite asserts only against the oracle.
    """
    alpha = _check_alpha(alpha)
    return 1.0 / (1.0 - alpha) + 1.0


def pearl_segment_tokens_oracle(alpha: float, n_segments: int = 200_000, seed: int = 0) -> float:
    """Monte Carlo mean tokens per drafting segment: accepted run + 1 correction.

    A segment drafts until the first rejection; the accepted run is geometric
    with mean alpha/(1 - alpha), so the analytic value is 1/(1 - alpha).
    """
    runs = segment_accept_runs(alpha, n_segments, seed)
    return float(runs.mean()) + 1.0


def pearl_optimal_gamma(c: float) -> float:
    """The speedup-maximizing draft length of the two-phase engine: gamma* = c.

    Below c the overlapped step is bounded by the target forward, so extra
    drafting is free; above c the step cost grows linearly while the token
    yield gains shrink geometrically. For non-integer c the best integer
    gamma is floor(c) or ceil(c).
    """
    if not c > 0.0:
        raise ValueError(f"c must be positive, got {c}")
    return float(c)


def comparative_gain(alpha: float, gamma: int) -> float:
    """Expected tokens per segment minus expected tokens per capped step.

    1/(1 - alpha) - sd_expected_tokens(alpha, gamma)
    = alpha^(gamma+1) / (1 - alpha) >= 0: uncapped drafting never finalizes
    fewer tokens per segment than a gamma-capped step, at every alpha and
    gamma.
    """
    alpha = _check_alpha(alpha)
    return 1.0 / (1.0 - alpha) - sd_expected_tokens(alpha, gamma)


def pearl_steady_state_tokens(alpha: float, gamma: int) -> float:
    """Stationary mean finalized tokens per two-phase step.

    The mode chain has two states. A pre-verify step finalizes 1 and moves to
    post-verify with probability alpha; a post-verify step examines gamma
    trials, finalizes min(first failure index, gamma), and stays in
    post-verify with probability alpha^gamma. Flow balance gives stationary
    weights (1 - alpha^gamma) : alpha for pre : post, and the mean works out
    to (1 - alpha^gamma) / ((1 - alpha) * (1 + alpha - alpha^gamma)).
    """
    alpha = _check_alpha(alpha)
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if alpha == 0.0:
        return 1.0
    u = 1.0 - alpha**gamma
    return u / ((1.0 - alpha) * (1.0 + alpha - alpha**gamma))


def pearl_speedup(alpha: float, gamma: int, c: float) -> float:
    """Stationary two-phase speedup over AR: steady-state tokens * c / max(gamma, c)."""
    params = TimingParams(t=1.0, c=c)
    return pearl_steady_state_tokens(alpha, gamma) * params.target_time / time_pearl_step(gamma, params)


def pearl_cycle_time_blocking(gamma: int, params: TimingParams) -> float:
    """Per-token cycle cost when the verify forward does not overlap drafting.

    (max(gamma * t, c * t) + c * t) / gamma: the drafting phase overlaps one
    target forward, but the verdict forward blocks the next phase. The
    simulator does not use this schedule; it prices the fully overlapped step
    max(gamma * t, c * t). The expression is kept for comparison.
    """
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return (time_pearl_step(gamma, params) + params.target_time) / gamma
