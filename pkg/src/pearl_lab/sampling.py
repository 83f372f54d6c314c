"""The lossless accept-or-resample rule for drafted tokens.

One drafted token x, proposed from draft law q and checked against target law
p, is accepted with probability 1 if p[x] >= q[x] and p[x]/q[x] otherwise; on
rejection the replacement is sampled from the normalized positive part of
p - q. Accepted-or-replaced output is distributed exactly as p, so a decoder
built on this rule matches plain sampling from the target, token for token,
in distribution.

``verify_chain`` applies the rule along a block of drafted tokens and stops at
the first rejection: tokens after it are never examined and consume no
randomness, which is what makes draw-for-draw reproducibility possible for
engines that discard unverified drafts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import ProbDist, RandomStream, TokenId, ZeroDraftProb, residual_dist, sample


def accept_prob(target_dist: ProbDist, draft_dist: ProbDist, token: TokenId) -> float:
    """Acceptance probability of ``token`` drafted from q against target p.

    Returns min(1, p[token]/q[token]). Ties (p[token] == q[token]) accept with
    probability 1.

    Raises:
        ZeroDraftProb: if the draft law assigns ``token`` zero probability;
            such a token cannot have been drafted from q and the ratio is
            undefined.
    """
    q = float(draft_dist.probs[token])
    if q <= 0.0:
        raise ZeroDraftProb(f"draft probability of token {token} is {q}")
    p = float(target_dist.probs[token])
    if p >= q:
        return 1.0
    return p / q


@dataclass(frozen=True)
class VerifyResult:
    """Outcome of verifying a block of drafted tokens.

    Attributes:
        accepted_count: Number of leading drafts accepted.
        correction: Replacement token sampled at the first rejected position,
            or None when every draft was accepted.
        examined: Number of drafts actually tested, == accepted_count when all
            pass and accepted_count + 1 otherwise.
    """

    accepted_count: int
    correction: Optional[TokenId]
    examined: int


def verify_chain(
    drafted: Sequence[TokenId],
    draft_dists: Sequence[ProbDist],
    target_dists: Sequence[ProbDist],
    rng: RandomStream,
) -> VerifyResult:
    """Accept a prefix of ``drafted`` and resample at the first rejection.

    Walks the drafts in order; position i is accepted when a uniform draw is
    <= accept_prob(target_dists[i], draft_dists[i], drafted[i]). The walk
    stops at the first rejection and samples the correction from the residual
    law at that position. Consumes exactly ``examined`` uniforms plus one for
    the correction when a rejection occurs; positions past the first rejection
    are never touched.

    Args:
        drafted: Drafted token per position.
        draft_dists: Law each draft was sampled from, aligned with ``drafted``.
        target_dists: Target law for the same slots, aligned with ``drafted``.
        rng: Stream for the accept draws and the correction sample.
    """
    if not (len(drafted) == len(draft_dists) == len(target_dists)):
        raise ValueError(
            f"length mismatch: {len(drafted)} drafts, {len(draft_dists)} draft dists, "
            f"{len(target_dists)} target dists"
        )
    for i, token in enumerate(drafted):
        a = accept_prob(target_dists[i], draft_dists[i], token)
        if rng.uniform() <= a:
            continue
        correction = sample(residual_dist(target_dists[i], draft_dists[i]), rng)
        return VerifyResult(accepted_count=i, correction=correction, examined=i + 1)
    return VerifyResult(accepted_count=len(drafted), correction=None, examined=len(drafted))
