"""Lossless accelerated decoding over pluggable sequence models.

The package couples three layers that the tests hold against each other:
token-level engines (autoregressive, draft-then-verify, and a two-phase
scheme that overlaps drafting with verification), a step-time simulator
priced by a draft/target latency ratio, and closed-form predictions for
both throughput and speedup. Hot Monte Carlo paths live in ``kernels`` with
a numba and a pure-numpy backend selected via ``PEARL_LAB_BACKEND``.
"""

from .core import (
    AllZeroResidual,
    InvalidDistribution,
    ProbDist,
    RandomStream,
    Vocabulary,
    ZeroDraftProb,
    byte_vocabulary,
    one_hot,
    residual_dist,
    sample,
    uniform_dist,
)
from .engines import (
    DecodeMode,
    DecodeResult,
    DecodeState,
    EngineConfig,
    StepTrace,
    decode_autoregressive,
    decode_pearl,
    decode_sd,
    draft_run_lengths,
    empirical_acceptance,
    pearl_postverify_step,
    pearl_preverify_step,
    read_trace_jsonl,
    write_trace_jsonl,
)
from .models import (
    AlphaPair,
    ConstDistModel,
    EmptyCorpus,
    InvalidAlpha,
    LatencyProfile,
    NGramModel,
    ScriptedModel,
    SequenceModel,
    compute_c,
    estimate_alpha,
    make_alpha_pair,
    train_ngram,
)
from .sampling import VerifyResult, accept_prob, verify_chain
from .simulator import (
    MismatchedEngine,
    SimReport,
    SweepRow,
    TimingParams,
    simulate_counts,
    simulate_run,
    sweep_gamma,
    sweep_rows,
    time_ar_step,
    time_pearl_step,
    time_sd_step,
    write_sweep_csv,
)
from . import kernels, theory, verification

__version__ = "0.1.0"

__all__ = [
    "AllZeroResidual",
    "AlphaPair",
    "ConstDistModel",
    "DecodeMode",
    "DecodeResult",
    "DecodeState",
    "EmptyCorpus",
    "EngineConfig",
    "InvalidAlpha",
    "InvalidDistribution",
    "LatencyProfile",
    "MismatchedEngine",
    "NGramModel",
    "ProbDist",
    "RandomStream",
    "ScriptedModel",
    "SequenceModel",
    "SimReport",
    "StepTrace",
    "SweepRow",
    "TimingParams",
    "VerifyResult",
    "Vocabulary",
    "ZeroDraftProb",
    "accept_prob",
    "byte_vocabulary",
    "compute_c",
    "decode_autoregressive",
    "decode_pearl",
    "decode_sd",
    "draft_run_lengths",
    "empirical_acceptance",
    "estimate_alpha",
    "kernels",
    "make_alpha_pair",
    "one_hot",
    "pearl_postverify_step",
    "pearl_preverify_step",
    "read_trace_jsonl",
    "residual_dist",
    "sample",
    "simulate_counts",
    "simulate_run",
    "sweep_gamma",
    "sweep_rows",
    "theory",
    "time_ar_step",
    "time_pearl_step",
    "time_sd_step",
    "train_ngram",
    "uniform_dist",
    "verification",
    "verify_chain",
    "write_sweep_csv",
    "write_trace_jsonl",
]
