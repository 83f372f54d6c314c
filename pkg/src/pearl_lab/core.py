"""Shared primitives: tokens, validated distributions, seeded uniform streams.

Everything downstream (models, engines, simulator) is built on the value types
in this module. Distributions live in linear probability space as dense numpy
vectors and are renormalized once, at construction. Sampling is inverse-CDF
with exactly one uniform draw per sampled token, which keeps decode runs
reproducible draw-for-draw and makes RNG-consumption assertions possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

TokenId = int
TokenSeq = Tuple[TokenId, ...]

# Construction accepts mass within this distance of 1.0 and then renormalizes.
NORM_TOL = 1e-9

# Dense vectors over the vocabulary stay cheap below this size.
MAX_VOCAB = 65536


class InvalidDistribution(ValueError):
    """Raised when a probability vector fails validation."""


class AllZeroResidual(ValueError):
    """Raised when max(0, p - q) carries no mass (p == q everywhere)."""


class ZeroDraftProb(ValueError):
    """Raised when a drafted token has zero probability under its own draft dist."""


@dataclass(frozen=True)
class Vocabulary:
    """Flat token id space with an optional reserved end-of-sequence id.

    Attributes:
        size: Number of distinct token ids, 2 <= size <= MAX_VOCAB.
        eos_id: Reserved id that terminates decoding, or None.
        token_strings: Optional printable form per id (len == size).
    """

    size: int
    eos_id: Optional[int] = None
    token_strings: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if not 2 <= self.size <= MAX_VOCAB:
            raise ValueError(f"vocabulary size must be in [2, {MAX_VOCAB}], got {self.size}")
        if self.eos_id is not None and not 0 <= self.eos_id < self.size:
            raise ValueError(f"eos_id {self.eos_id} outside [0, {self.size})")
        if self.token_strings is not None and len(self.token_strings) != self.size:
            raise ValueError("token_strings length must equal vocabulary size")


def byte_vocabulary() -> Vocabulary:
    """The default vocabulary: 256 byte values plus a reserved EOS id (256)."""
    return Vocabulary(size=257, eos_id=256)


class ProbDist:
    """A validated probability vector over token ids.

    Construction checks that entries are finite and nonnegative and that the
    total mass is within NORM_TOL of 1, then renormalizes so the mass is
    exactly 1.0. The vector and its cumulative form are frozen afterwards.

    Raises:
        InvalidDistribution: on negative, non-finite, all-zero, or
            badly-normalized input, or an out-of-range vector length.
    """

    __slots__ = ("probs", "_cdf")

    def __init__(self, probs: Sequence[float] | np.ndarray) -> None:
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidDistribution(f"expected a 1-d vector, got shape {arr.shape}")
        if not 2 <= arr.size <= MAX_VOCAB:
            raise InvalidDistribution(f"vector length {arr.size} outside [2, {MAX_VOCAB}]")
        if not np.all(np.isfinite(arr)):
            raise InvalidDistribution("probabilities must be finite")
        if np.any(arr < 0.0):
            raise InvalidDistribution(f"negative probability (min {arr.min():.3g})")
        total = float(arr.sum())
        if total == 0.0:
            raise InvalidDistribution("all-zero probability vector")
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidDistribution(f"mass {total!r} is farther than {NORM_TOL} from 1")
        arr = arr / total
        arr.flags.writeable = False
        cdf = np.cumsum(arr)
        cdf[-1] = 1.0  # guard the top bin against cumsum roundoff
        cdf.flags.writeable = False
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "_cdf", cdf)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("ProbDist is immutable")

    @property
    def vocab_size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.vocab_size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProbDist):
            return NotImplemented
        return bool(np.array_equal(self.probs, other.probs))

    def __repr__(self) -> str:
        return f"ProbDist(V={self.vocab_size})"


def one_hot(vocab_size: int, token: TokenId) -> ProbDist:
    """A point mass on ``token`` over a vocabulary of ``vocab_size`` ids."""
    v = np.zeros(vocab_size, dtype=np.float64)
    v[token] = 1.0
    return ProbDist(v)


def uniform_dist(vocab_size: int) -> ProbDist:
    """The uniform distribution over ``vocab_size`` ids."""
    return ProbDist(np.full(vocab_size, 1.0 / vocab_size))


class RandomStream:
    """A seeded uniform stream with a stable identity, splittable into children.

    Streams are PCG64 generators keyed by (seed, spawn path). ``split`` derives
    a child that is statistically independent of the parent and of siblings,
    so concurrent consumers (a draft task and a verify task) can hold separate
    streams and scheduling order cannot change any outcome.

    Attributes:
        seed: The 64-bit master seed shared by a stream and all its children.
        stream_id: Integer label of this stream under its parent.
        n_draws: Number of uniforms drawn so far (for consumption tests).
    """

    __slots__ = ("seed", "stream_id", "n_draws", "_path", "_gen")

    def __init__(self, seed: int, stream_id: int = 0, _path: Optional[Tuple[int, ...]] = None) -> None:
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(_path) if _path is not None else (self.stream_id,)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._path)
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self.n_draws = 0

    def uniform(self) -> float:
        """One uniform draw from [0, 1)."""
        self.n_draws += 1
        return float(self._gen.random())

    def split(self, stream_id: int) -> "RandomStream":
        """An independent child stream labeled ``stream_id``.

        Children with distinct labels are independent of each other and of
        the parent; calling split twice with the same label yields streams
        that produce identical draws.
        """
        return RandomStream(self.seed, stream_id, _path=self._path + (int(stream_id),))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, path={self._path}, n_draws={self.n_draws})"


def split(seed: int, stream_id: int) -> RandomStream:
    """A fresh independent stream for ``(seed, stream_id)``."""
    return RandomStream(seed, stream_id)


def sample(dist: ProbDist, rng: RandomStream) -> TokenId:
    """Inverse-CDF sample from ``dist`` using exactly one uniform draw.

    Zero-probability tokens are never returned: the draw lands in the first
    bin whose cumulative mass strictly exceeds it, and flat (zero-width) bins
    are skipped by the right-sided search.
    """
    u = rng.uniform()
    return int(np.searchsorted(dist._cdf, u, side="right"))


def residual_dist(target: ProbDist, draft: ProbDist) -> ProbDist:
    """The normalized positive part of ``target - draft``.

    This is the correction law after a rejection: sampling from it, combined
    with the accept rule, reproduces ``target`` exactly.

    Raises:
        AllZeroResidual: when the positive part carries no mass, i.e. the two
            distributions are identical; that case is certain acceptance and
            the caller must not ask for a correction.
        InvalidDistribution: on mismatched vector lengths.
    """
    if target.vocab_size != draft.vocab_size:
        raise InvalidDistribution(
            f"vocab mismatch: target V={target.vocab_size}, draft V={draft.vocab_size}"
        )
    r = np.maximum(target.probs - draft.probs, 0.0)
    mass = float(r.sum())
    # Mass below 1e-15 is indistinguishable from p == q at double precision.
    if mass < 1e-15:
        raise AllZeroResidual("target and draft distributions are identical")
    return ProbDist(r / mass)
