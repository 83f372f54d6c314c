"""Decoding engines: plain autoregressive, draft-then-verify, and two-phase overlap.

All three engines are lossless: their outputs are distributed exactly as
sampling from the target model alone, position by position. They differ in
how much target latency they hide:

* ``decode_autoregressive``: one target forward per token. The baseline.
* ``decode_sd``: draft a block of gamma tokens, then verify the block with a
  single target forward; a fully accepted block earns one bonus token sampled
  from the target. Draft and verify phases alternate, so each step costs the
  sum of both phases.
* ``decode_pearl``: draft and target forwards run at the same time. In the
  pre-verify phase the target forward over the current prefix runs while the
  block is being drafted, and verifies the first draft the moment the block
  is ready. In the post-verify phase the leftover drafts of the previous
  block are verified while the next block is being drafted. Each step costs
  only the slower of the two phases.

Verification is verify-once: every target distribution verifies the token in
the slot right after the positions the forward consumed, and an accepted
token is never re-tested later. Randomness is split before the loop into a
draft stream and a verify stream, so thread scheduling cannot change any
outcome and a serial run of the same seed is bit-for-bit identical.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import ProbDist, RandomStream, TokenId, TokenSeq, sample
from .models import SequenceModel
from .sampling import VerifyResult, verify_chain


class DecodeMode(Enum):
    PRE_VERIFY = "pre_verify"
    POST_VERIFY = "post_verify"


@dataclass(frozen=True)
class EngineConfig:
    """Knobs shared by all engines.

    Attributes:
        gamma: Draft block length, >= 1.
        max_new_tokens: Hard cap L on emitted tokens; longer step output is
            truncated to exactly L.
        seed: Master seed; engines split it into draft and verify streams.
        greedy: Argmax decoding everywhere (draft picks, verification is an
            exact-match test, corrections and bonus are argmax). For oracle
            tests; every engine then reproduces the argmax chain of the
            target exactly.
        eos_id: Token id that stops decoding, or None. The id itself is
            emitted; pending and undrafted tokens after it are discarded.
        real_latency: Busy-wait each model phase for its profiled duration
            (wall-clock benchmarking mode).
    """

    gamma: int = 4
    max_new_tokens: int = 64
    seed: int = 0
    greedy: bool = False
    eos_id: Optional[int] = None
    real_latency: bool = False

    def __post_init__(self) -> None:
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if self.max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")


@dataclass(frozen=True)
class DecodeState:
    """Between-steps state of the two-phase engine.

    ``committed`` is append-only and always includes the prompt prefix.
    ``pending`` holds drafted-but-unverified tokens together with the draft
    distributions they were sampled from; pre-verify is only entered with an
    empty pending block.
    """

    committed: TokenSeq
    pending: TokenSeq
    pending_dists: Tuple[ProbDist, ...]
    mode: DecodeMode

    def __post_init__(self) -> None:
        if len(self.pending) != len(self.pending_dists):
            raise ValueError("pending tokens and pending dists must align")
        if self.mode is DecodeMode.PRE_VERIFY and self.pending:
            raise ValueError("pre-verify state cannot carry pending drafts")


@dataclass(frozen=True)
class StepTrace:
    """One engine step, as recorded in trace files.

    ``accepted_count`` counts accepted draft tokens only; bonus and correction
    tokens appear in ``finalized_delta`` but not here. Durations are simulated
    time units taken from the models' latency profiles: the draft phase costs
    one forward per drafted token, the target phase one forward regardless of
    how many positions it covered.
    """

    index: int
    kind: str  # "ar" | "sd" | "pre_verify" | "post_verify"
    drafted: TokenSeq
    accepted_count: int
    correction: Optional[TokenId]
    finalized_delta: int
    draft_time: float
    target_time: float

    def to_dict(self) -> dict:
        return {
            "step": self.index,
            "kind": self.kind,
            "drafted": list(self.drafted),
            "accepted_count": self.accepted_count,
            "correction": self.correction,
            "finalized_delta": self.finalized_delta,
            "draft_time": self.draft_time,
            "target_time": self.target_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepTrace":
        return cls(
            index=int(d["step"]),
            kind=str(d["kind"]),
            drafted=tuple(int(t) for t in d["drafted"]),
            accepted_count=int(d["accepted_count"]),
            correction=None if d["correction"] is None else int(d["correction"]),
            finalized_delta=int(d["finalized_delta"]),
            draft_time=float(d["draft_time"]),
            target_time=float(d["target_time"]),
        )


@dataclass(frozen=True)
class DecodeResult:
    """Emitted tokens (prefix excluded) plus the per-step trace."""

    tokens: TokenSeq
    steps: Tuple[StepTrace, ...]


def write_trace_jsonl(steps: Sequence[StepTrace], path: str) -> None:
    """One StepTrace JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for tr in steps:
            fh.write(json.dumps(tr.to_dict()) + "\n")


def read_trace_jsonl(path: str) -> List[StepTrace]:
    with open(path, "r", encoding="utf-8") as fh:
        return [StepTrace.from_dict(json.loads(line)) for line in fh if line.strip()]


def empirical_acceptance(steps: Sequence[StepTrace]) -> float:
    """Accepted fraction among all verified draft tokens in a trace."""
    accepted = sum(tr.accepted_count for tr in steps)
    rejected = sum(1 for tr in steps if tr.correction is not None)
    examined = accepted + rejected
    return accepted / examined if examined else float("nan")


def draft_run_lengths(steps: Sequence[StepTrace]) -> List[int]:
    """Lengths of continuous accepted-draft runs, one entry per finished run.

    A draft-then-verify step restarts drafting every step, so each step's
    accepted block is one complete run (capped at gamma). The two-phase
    engine keeps drafting across steps until a rejection, so its runs span
    steps and are unbounded; a trailing run not yet ended by a correction is
    incomplete and therefore dropped.
    """
    runs: List[int] = []
    current = 0
    for tr in steps:
        if tr.kind == "sd":
            runs.append(tr.accepted_count)
        elif tr.kind in ("pre_verify", "post_verify"):
            current += tr.accepted_count
            if tr.correction is not None:
                runs.append(current)
                current = 0
    return runs


# -- step internals ---------------------------------------------------------


def _busy_wait(seconds: float) -> None:
    # Sleep through most of the wait so the interpreter lock is released and
    # concurrent phases genuinely overlap; spin the last stretch because
    # sleep granularity is far coarser than short forward times.
    deadline = time.perf_counter() + seconds
    while True:
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            return
        if remaining > 2e-4:
            time.sleep(remaining / 2)


def _pick(dist: ProbDist, rng: RandomStream, greedy: bool) -> TokenId:
    if greedy:
        return int(np.argmax(dist.probs))
    return sample(dist, rng)


def _verify_chain_greedy(drafted: Sequence[TokenId], target_dists: Sequence[ProbDist]) -> VerifyResult:
    # Greedy verification: a draft passes iff it equals the target argmax.
    for i, token in enumerate(drafted):
        best = int(np.argmax(target_dists[i].probs))
        if token != best:
            return VerifyResult(accepted_count=i, correction=best, examined=i + 1)
    return VerifyResult(accepted_count=len(drafted), correction=None, examined=len(drafted))


def _verify(
    drafted: Sequence[TokenId],
    draft_dists: Sequence[ProbDist],
    target_dists: Sequence[ProbDist],
    rng: RandomStream,
    greedy: bool,
) -> VerifyResult:
    if greedy:
        return _verify_chain_greedy(drafted, target_dists)
    return verify_chain(drafted, draft_dists, target_dists, rng)


class _PhaseRunner:
    """Runs one step's draft closure and target closure, serial or on two threads.

    The two closures own disjoint random streams (the target closure draws no
    randomness at all), so the serial order and the threaded interleaving
    produce identical results; the threaded mode exists to overlap real
    latency and to prove the rendezvous discipline.
    """

    def __init__(self, concurrent: bool) -> None:
        self._pool = ThreadPoolExecutor(max_workers=2) if concurrent else None

    def run(self, draft_work: Callable, target_work: Callable):
        if self._pool is None:
            return draft_work(), target_work()
        draft_future = self._pool.submit(draft_work)
        target_future = self._pool.submit(target_work)
        return draft_future.result(), target_future.result()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)


def _draft_block(
    draft: SequenceModel,
    context: Sequence[TokenId],
    cfg: EngineConfig,
    rng_draft: RandomStream,
) -> Tuple[List[TokenId], List[ProbDist]]:
    """Sample gamma tokens from the draft model continuing ``context``."""
    if cfg.real_latency:
        _busy_wait(cfg.gamma * draft.latency.forward_time)
    xs: List[TokenId] = []
    qs: List[ProbDist] = []
    buf = list(context)
    for _ in range(cfg.gamma):
        q = draft.next_dist(buf)
        x = _pick(q, rng_draft, cfg.greedy)
        xs.append(x)
        qs.append(q)
        buf.append(x)
    return xs, qs


# -- engines ------------------------------------------------------------------


def decode_autoregressive(
    target: SequenceModel,
    prefix: Sequence[TokenId],
    cfg: EngineConfig,
) -> DecodeResult:
    """Sample from the target one token per step until L tokens or EOS."""
    rng = RandomStream(cfg.seed)
    seq = list(prefix)
    n_prefix = len(prefix)
    steps: List[StepTrace] = []
    while len(seq) - n_prefix < cfg.max_new_tokens:
        if cfg.real_latency:
            _busy_wait(target.latency.forward_time)
        dist = target.next_dist(seq)
        token = _pick(dist, rng, cfg.greedy)
        seq.append(token)
        steps.append(
            StepTrace(
                index=len(steps),
                kind="ar",
                drafted=(),
                accepted_count=0,
                correction=None,
                finalized_delta=1,
                draft_time=0.0,
                target_time=target.latency.forward_time,
            )
        )
        if cfg.eos_id is not None and token == cfg.eos_id:
            break
    return DecodeResult(tuple(seq[n_prefix:]), tuple(steps))


def _commit(
    seq: List[TokenId],
    n_prefix: int,
    tokens: Sequence[TokenId],
    cfg: EngineConfig,
) -> Tuple[int, bool]:
    """Append step output under the EOS and length rules.

    Returns (number actually appended, whether decoding is finished). Tokens
    after an EOS or past the L cap are dropped.
    """
    appended = 0
    for token in tokens:
        seq.append(token)
        appended += 1
        if cfg.eos_id is not None and token == cfg.eos_id:
            return appended, True
        if len(seq) - n_prefix >= cfg.max_new_tokens:
            return appended, True
    return appended, False


def decode_sd(
    draft: SequenceModel,
    target: SequenceModel,
    prefix: Sequence[TokenId],
    cfg: EngineConfig,
) -> DecodeResult:
    """Draft-then-verify decoding with block length gamma.

    Each step drafts gamma tokens, verifies them against one target forward
    over the block, and finalizes the accepted prefix plus either the
    correction (on rejection) or a bonus token sampled from the target's
    last distribution (on full acceptance). Every step finalizes between 1
    and gamma + 1 tokens.
    """
    root = RandomStream(cfg.seed)
    rng_draft = root.split(0)
    rng_verify = root.split(1)
    seq = list(prefix)
    n_prefix = len(prefix)
    steps: List[StepTrace] = []
    done = False
    while not done and len(seq) - n_prefix < cfg.max_new_tokens:
        base = len(seq)
        xs, qs = _draft_block(draft, seq, cfg, rng_draft)
        if cfg.real_latency:
            _busy_wait(target.latency.forward_time)
        seq.extend(xs)
        # One forward yields the distribution after every block position:
        # ps[i] verifies xs[i], ps[gamma] is the bonus law.
        ps = [target.next_dist(seq[: base + i]) for i in range(cfg.gamma + 1)]
        del seq[base:]
        res = _verify(xs, qs, ps[: cfg.gamma], rng_verify, cfg.greedy)
        block = list(xs[: res.accepted_count])
        if res.correction is None:
            block.append(_pick(ps[cfg.gamma], rng_verify, cfg.greedy))
        else:
            block.append(res.correction)
        appended, done = _commit(seq, n_prefix, block, cfg)
        steps.append(
            StepTrace(
                index=len(steps),
                kind="sd",
                drafted=tuple(xs),
                accepted_count=min(res.accepted_count, appended),
                correction=res.correction,
                finalized_delta=appended,
                draft_time=cfg.gamma * draft.latency.forward_time,
                target_time=target.latency.forward_time,
            )
        )
    return DecodeResult(tuple(seq[n_prefix:]), tuple(steps))


def pearl_preverify_step(
    draft: SequenceModel,
    target: SequenceModel,
    state: DecodeState,
    cfg: EngineConfig,
    rng_draft: RandomStream,
    rng_verify: RandomStream,
    runner: Optional[_PhaseRunner] = None,
    index: int = 0,
) -> Tuple[DecodeState, StepTrace]:
    """One pre-verify step: draft a block while the target scores the prefix.

    The target forward over the committed prefix runs concurrently with
    drafting and verifies only the first draft token. On acceptance that
    token is committed and the rest of the block becomes pending for the
    post-verify phase; on rejection the correction is committed and the whole
    block is discarded. Either way exactly one token is finalized.
    """
    if state.mode is not DecodeMode.PRE_VERIFY:
        raise ValueError(f"pre-verify step on state in mode {state.mode}")
    ctx = state.committed

    def draft_work():
        return _draft_block(draft, ctx, cfg, rng_draft)

    def target_work():
        if cfg.real_latency:
            _busy_wait(target.latency.forward_time)
        return target.next_dist(ctx)

    if runner is None:
        runner = _SERIAL_RUNNER
    (xs, qs), p0 = runner.run(draft_work, target_work)
    res = _verify(xs[:1], qs[:1], [p0], rng_verify, cfg.greedy)
    if res.correction is None:
        new_state = DecodeState(
            committed=ctx + (xs[0],),
            pending=tuple(xs[1:]),
            pending_dists=tuple(qs[1:]),
            mode=DecodeMode.POST_VERIFY,
        )
        accepted, correction = 1, None
    else:
        new_state = DecodeState(
            committed=ctx + (res.correction,),
            pending=(),
            pending_dists=(),
            mode=DecodeMode.PRE_VERIFY,
        )
        accepted, correction = 0, res.correction
    trace = StepTrace(
        index=index,
        kind="pre_verify",
        drafted=tuple(xs),
        accepted_count=accepted,
        correction=correction,
        finalized_delta=1,
        draft_time=cfg.gamma * draft.latency.forward_time,
        target_time=target.latency.forward_time,
    )
    return new_state, trace


def pearl_postverify_step(
    draft: SequenceModel,
    target: SequenceModel,
    state: DecodeState,
    cfg: EngineConfig,
    rng_draft: RandomStream,
    rng_verify: RandomStream,
    runner: Optional[_PhaseRunner] = None,
    index: int = 0,
) -> Tuple[DecodeState, StepTrace]:
    """One post-verify step: verify leftovers while the next block is drafted.

    The target forward covers every pending position and the slot right after
    them, so it verifies each pending token exactly once and, when all of
    them pass, additionally verifies the first token of the block drafted
    during this step. Full acceptance commits pending plus that first new
    draft and stays in post-verify with the remaining new drafts pending; any
    rejection commits the accepted prefix plus the correction, discards every
    newer draft, and falls back to pre-verify.
    """
    if state.mode is not DecodeMode.POST_VERIFY:
        raise ValueError(f"post-verify step on state in mode {state.mode}")
    k = len(state.pending)
    ctx = state.committed
    full = list(ctx) + list(state.pending)

    def draft_work():
        return _draft_block(draft, full, cfg, rng_draft)

    def target_work():
        if cfg.real_latency:
            _busy_wait(target.latency.forward_time)
        return [target.next_dist(full[: len(ctx) + j]) for j in range(k + 1)]

    if runner is None:
        runner = _SERIAL_RUNNER
    (xs, qs), ps = runner.run(draft_work, target_work)
    chain_tokens = list(state.pending) + [xs[0]]
    chain_dists = list(state.pending_dists) + [qs[0]]
    res = _verify(chain_tokens, chain_dists, ps, rng_verify, cfg.greedy)
    if res.correction is None:
        new_state = DecodeState(
            committed=ctx + tuple(chain_tokens),
            pending=tuple(xs[1:]),
            pending_dists=tuple(qs[1:]),
            mode=DecodeMode.POST_VERIFY,
        )
        accepted, correction, delta = k + 1, None, k + 1
    else:
        new_state = DecodeState(
            committed=ctx + tuple(chain_tokens[: res.accepted_count]) + (res.correction,),
            pending=(),
            pending_dists=(),
            mode=DecodeMode.PRE_VERIFY,
        )
        accepted, correction, delta = res.accepted_count, res.correction, res.accepted_count + 1
    trace = StepTrace(
        index=index,
        kind="post_verify",
        drafted=tuple(xs),
        accepted_count=accepted,
        correction=correction,
        finalized_delta=delta,
        draft_time=cfg.gamma * draft.latency.forward_time,
        target_time=target.latency.forward_time,
    )
    return new_state, trace


_SERIAL_RUNNER = _PhaseRunner(concurrent=False)


def decode_pearl(
    draft: SequenceModel,
    target: SequenceModel,
    prefix: Sequence[TokenId],
    cfg: EngineConfig,
    concurrent: bool = True,
) -> DecodeResult:
    """Two-phase overlapped decoding.

    Starts in pre-verify. Each step runs exactly two tasks, one drafting and
    one target forward, joined at a rendezvous before verification; with
    ``concurrent=False`` the same two closures run back to back instead.
    Randomness is split into a draft stream and a verify stream up front, so
    both execution modes produce bit-for-bit identical output for one seed.

    Unlike draft-then-verify there is no bonus token: after a fully accepted
    step the engine keeps drafting, which is why accepted runs are not capped
    at gamma.
    """
    root = RandomStream(cfg.seed)
    rng_draft = root.split(0)
    rng_verify = root.split(1)
    n_prefix = len(prefix)
    state = DecodeState(
        committed=tuple(prefix), pending=(), pending_dists=(), mode=DecodeMode.PRE_VERIFY
    )
    steps: List[StepTrace] = []
    runner = _PhaseRunner(concurrent)
    try:
        produced = 0
        while produced < cfg.max_new_tokens:
            step_fn = (
                pearl_preverify_step
                if state.mode is DecodeMode.PRE_VERIFY
                else pearl_postverify_step
            )
            state, trace = step_fn(
                draft, target, state, cfg, rng_draft, rng_verify, runner, index=len(steps)
            )
            new_block = state.committed[n_prefix + produced :]
            stop_at = None
            if cfg.eos_id is not None:
                for off, token in enumerate(new_block):
                    if token == cfg.eos_id:
                        stop_at = produced + off + 1
                        break
            if stop_at is None:
                if len(state.committed) - n_prefix >= cfg.max_new_tokens:
                    stop_at = cfg.max_new_tokens
            else:
                stop_at = min(stop_at, cfg.max_new_tokens)
            if stop_at is not None:
                trace = replace(trace, finalized_delta=stop_at - produced)
                steps.append(trace)
                return DecodeResult(state.committed[n_prefix : n_prefix + stop_at], tuple(steps))
            steps.append(trace)
            produced = len(state.committed) - n_prefix
        return DecodeResult(state.committed[n_prefix:], tuple(steps))
    finally:
        runner.close()
