"""Probabilistic sequence models the decoding engines draw from and verify against.

Three families:

* ``NGramModel``: an order-k add-lambda counting model trained on token
  sequences. Cheap enough that a "forward pass" is a dictionary lookup, which
  is what lets the test suites run millions of decode steps.
* ``AlphaPair``: a synthetic draft/target pair whose per-token acceptance
  probability is a constant alpha by construction. The target is a point mass,
  so lossless decoding has a known exact output and every accept decision is
  an independent Bernoulli(alpha) coin.
* ``ScriptedModel``: a fixed table keyed by prefix length, for step-by-step
  trace tests where every proposal and every verdict must be forced.

Latency belongs to models, not engines: a model carries the simulated cost of
one forward pass and the engines/simulator read it from there, so simulated
timing and real busy-wait timing consume the same profile.
"""

from __future__ import annotations

import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .core import MAX_VOCAB, ProbDist, TokenId, one_hot, uniform_dist

MAGIC = b"PRLNG1"


class EmptyCorpus(ValueError):
    """Raised when a training corpus contains no window of the model order."""


class InvalidAlpha(ValueError):
    """Raised for an acceptance rate outside [0, 1]."""


@dataclass(frozen=True)
class LatencyProfile:
    """Simulated cost of one model forward pass, in abstract time units.

    One forward pass covers any number of input positions (the verify pass
    over a block of drafts is a single forward), so engines charge this cost
    per pass, not per position.
    """

    forward_time: float = 1.0

    def __post_init__(self) -> None:
        if not self.forward_time > 0.0:
            raise ValueError(f"forward_time must be positive, got {self.forward_time}")


class SequenceModel(ABC):
    """Anything that maps a token prefix to a next-token distribution."""

    vocab_size: int
    latency: LatencyProfile

    @abstractmethod
    def next_dist(self, prefix: Sequence[TokenId]) -> ProbDist:
        """The next-token distribution after ``prefix``.

        Must return a valid ProbDist for every prefix, including contexts
        never seen in training, and must be pure: equal prefixes yield equal
        distributions.
        """


class NGramModel(SequenceModel):
    """Order-k n-gram model with add-lambda smoothing.

    The conditional law of the next token t after context c is
    ``(count(c, t) + lam) / (count(c, .) + lam * V)``; a context that never
    occurred in training therefore backs off to the uniform distribution.
    Distributions are cached per context, so repeated queries return the same
    object and a decode loop costs one dict lookup per position.
    """

    def __init__(
        self,
        order: int,
        vocab_size: int,
        smoothing: float,
        counts: Mapping[Tuple[TokenId, ...], np.ndarray],
        latency: LatencyProfile | None = None,
    ) -> None:
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if not 2 <= vocab_size <= MAX_VOCAB:
            raise ValueError(f"vocab_size {vocab_size} outside [2, {MAX_VOCAB}]")
        if not smoothing > 0.0:
            raise ValueError(f"smoothing lambda must be positive, got {smoothing}")
        self.order = order
        self.vocab_size = vocab_size
        self.smoothing = float(smoothing)
        self.counts: Dict[Tuple[TokenId, ...], np.ndarray] = {
            tuple(k): np.asarray(v, dtype=np.int64) for k, v in counts.items()
        }
        for ctx, vec in self.counts.items():
            if len(ctx) != order - 1 or vec.shape != (vocab_size,):
                raise ValueError(f"malformed count record for context {ctx}")
        self.latency = latency if latency is not None else LatencyProfile()
        self._cache: Dict[Tuple[TokenId, ...], ProbDist] = {}
        self._unseen = uniform_dist(vocab_size)

    def next_dist(self, prefix: Sequence[TokenId]) -> ProbDist:
        ctx = tuple(prefix[len(prefix) - self.order + 1 :]) if self.order > 1 else ()
        if len(ctx) < self.order - 1:
            # Prefix shorter than the context window: necessarily unseen.
            return self._unseen
        cached = self._cache.get(ctx)
        if cached is not None:
            return cached
        vec = self.counts.get(ctx)
        if vec is None:
            return self._unseen
        lam = self.smoothing
        dist = ProbDist((vec + lam) / (float(vec.sum()) + lam * self.vocab_size))
        self._cache[ctx] = dist
        return dist

    # -- serialization -----------------------------------------------------
    #
    # Binary layout (all integers little-endian):
    #   magic    6 bytes  "PRLNG1"
    #   order    uint32
    #   vocab    uint32
    #   lambda   float64 (IEEE-754)
    #   n_ctx    uint64
    #   then per context, in insertion order:
    #     context   (order-1) x uint32
    #     n_entries uint32
    #     entries   n_entries x (uint32 token, uint64 count), tokens ascending

    def to_bytes(self) -> bytes:
        out: List[bytes] = [MAGIC, struct.pack("<IId", self.order, self.vocab_size, self.smoothing)]
        out.append(struct.pack("<Q", len(self.counts)))
        for ctx, vec in self.counts.items():
            out.append(struct.pack(f"<{self.order - 1}I", *ctx))
            nz = np.nonzero(vec)[0]
            out.append(struct.pack("<I", len(nz)))
            for tok in nz:
                out.append(struct.pack("<IQ", int(tok), int(vec[tok])))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, latency: LatencyProfile | None = None) -> "NGramModel":
        if data[:6] != MAGIC:
            raise ValueError(f"bad magic {data[:6]!r}, expected {MAGIC!r}")
        off = 6
        try:
            return cls._parse_payload(data, off, latency)
        except struct.error as exc:
            raise ValueError(f"truncated model payload: {exc}") from None

    @classmethod
    def _parse_payload(
        cls, data: bytes, off: int, latency: LatencyProfile | None
    ) -> "NGramModel":
        order, vocab, lam = struct.unpack_from("<IId", data, off)
        off += struct.calcsize("<IId")
        (n_ctx,) = struct.unpack_from("<Q", data, off)
        off += 8
        counts: Dict[Tuple[TokenId, ...], np.ndarray] = {}
        for _ in range(n_ctx):
            ctx = struct.unpack_from(f"<{order - 1}I", data, off)
            off += 4 * (order - 1)
            (n_entries,) = struct.unpack_from("<I", data, off)
            off += 4
            vec = np.zeros(vocab, dtype=np.int64)
            for _ in range(n_entries):
                tok, cnt = struct.unpack_from("<IQ", data, off)
                off += struct.calcsize("<IQ")
                vec[tok] = cnt
            counts[tuple(int(t) for t in ctx)] = vec
        if off != len(data):
            raise ValueError(f"{len(data) - off} trailing bytes after model payload")
        return cls(order, vocab, lam, counts, latency=latency)

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path: str, latency: LatencyProfile | None = None) -> "NGramModel":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), latency=latency)


def train_ngram(
    corpus: Sequence[Sequence[TokenId]],
    order: int,
    smoothing_lambda: float = 0.5,
    vocab_size: int = 257,
    latency: LatencyProfile | None = None,
) -> NGramModel:
    """Count all order-length windows in ``corpus`` and build an NGramModel.

    Args:
        corpus: Token sequences; windows never cross sequence boundaries.
        order: Window length k; the context is the leading k-1 tokens.
        smoothing_lambda: Add-lambda pseudo-count, must be positive.
        vocab_size: Size of the token id space.

    Raises:
        EmptyCorpus: if no sequence contains a full window of length ``order``.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    counts: Dict[Tuple[TokenId, ...], np.ndarray] = {}
    n_windows = 0
    for seq in corpus:
        for i in range(len(seq) - order + 1):
            ctx = tuple(seq[i : i + order - 1])
            tok = seq[i + order - 1]
            vec = counts.get(ctx)
            if vec is None:
                vec = np.zeros(vocab_size, dtype=np.int64)
                counts[ctx] = vec
            vec[tok] += 1
            n_windows += 1
    if n_windows == 0:
        raise EmptyCorpus(f"no window of length {order} in corpus")
    return NGramModel(order, vocab_size, smoothing_lambda, counts, latency=latency)


class ConstDistModel(SequenceModel):
    """A model that returns the same distribution for every prefix."""

    def __init__(self, dist: ProbDist, latency: LatencyProfile | None = None) -> None:
        self._dist = dist
        self.vocab_size = dist.vocab_size
        self.latency = latency if latency is not None else LatencyProfile()

    def next_dist(self, prefix: Sequence[TokenId]) -> ProbDist:
        return self._dist


@dataclass(frozen=True)
class AlphaPair:
    """A draft/target pair with constant per-token acceptance probability.

    The target puts all mass on token 0 at every prefix; the draft puts
    ``alpha`` on token 0 and spreads the rest uniformly. A drafted token is
    therefore accepted exactly when the draft sampled token 0, an event of
    probability alpha, independent across positions; every correction is
    token 0 as well. Lossless decoding must output token 0 at every position,
    which makes this pair the exact-losslessness oracle.
    """

    alpha: float
    draft: SequenceModel
    target: SequenceModel


def make_alpha_pair(
    alpha: float,
    vocab_size: int = 64,
    draft_time: float = 1.0,
    target_time: float = 1.0,
) -> AlphaPair:
    """Build an AlphaPair over ``vocab_size`` ids with the given latencies.

    Raises:
        InvalidAlpha: for alpha outside [0, 1].
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1], got {alpha}")
    if vocab_size < 2:
        raise ValueError(f"vocab_size must be >= 2, got {vocab_size}")
    probs = np.full(vocab_size, (1.0 - alpha) / (vocab_size - 1))
    probs[0] = alpha
    draft = ConstDistModel(ProbDist(probs), LatencyProfile(draft_time))
    target = ConstDistModel(one_hot(vocab_size, 0), LatencyProfile(target_time))
    return AlphaPair(alpha=alpha, draft=draft, target=target)


@dataclass
class ScriptedModel(SequenceModel):
    """A fixed prefix-length -> distribution table, for forced trace tests."""

    table: Mapping[int, ProbDist]
    vocab_size: int
    latency: LatencyProfile = field(default_factory=LatencyProfile)

    def next_dist(self, prefix: Sequence[TokenId]) -> ProbDist:
        n = len(prefix)
        try:
            return self.table[n]
        except KeyError:
            raise KeyError(f"no scripted distribution for prefix length {n}") from None


def estimate_alpha(
    draft: SequenceModel,
    target: SequenceModel,
    prefixes: Sequence[Sequence[TokenId]],
) -> float:
    """Mean overlap sum(min(p, q)) between the two models over ``prefixes``.

    This is the expected per-token acceptance rate of the accept/resample rule
    when drafts are sampled from ``draft`` and verified against ``target``.
    """
    if len(prefixes) == 0:
        raise ValueError("need at least one prefix")
    total = 0.0
    for prefix in prefixes:
        p = target.next_dist(prefix).probs
        q = draft.next_dist(prefix).probs
        total += float(np.minimum(p, q).sum())
    return total / len(prefixes)


def compute_c(draft_latency: LatencyProfile, target_latency: LatencyProfile) -> float:
    """Cost ratio of one target forward to one draft forward."""
    return target_latency.forward_time / draft_latency.forward_time
