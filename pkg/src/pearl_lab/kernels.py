"""Monte Carlo step-process kernels for the constant-acceptance model.

The closed-form checks and the gamma sweeps need tens of millions of
simulated decode steps. For the synthetic draft/target pair whose per-token
acceptance probability is a constant alpha, each engine step is a short
sequence of independent Bernoulli(alpha) trials, so the step process can be
replayed directly from a matrix of uniforms without touching the
object-level engines:

* a draft-then-verify step examines up to gamma drafts and finalizes the
  accepted run plus one (bonus on full acceptance, correction otherwise);
* a two-phase step finalizes 1 token in pre-verify (moving to post-verify on
  acceptance), and in post-verify examines its gamma - 1 pending tokens plus
  the first new draft, falling back to pre-verify on any rejection;
* a drafting segment accepts a geometric run of tokens and ends with one
  correction.

Two interchangeable backends compute these: numba @njit loops and a pure
numpy fallback. Both consume the same uniform matrix drawn once per call
(PCG64), so their outputs are bit-identical; select one explicitly with
PEARL_LAB_BACKEND=numba|numpy, the default being numba when importable.
"""

from __future__ import annotations

import os
from typing import Tuple

import numpy as np

from .models import InvalidAlpha

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time choice
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        return wrap


_ENV_VAR = "PEARL_LAB_BACKEND"


def active_backend() -> str:
    """The backend kernels will dispatch to: "numba" or "numpy".

    Controlled by the PEARL_LAB_BACKEND environment variable, read per call
    so tests can flip it. Requesting numba without numba installed raises.
    """
    requested = os.environ.get(_ENV_VAR, "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        if not HAS_NUMBA:
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        return "numba"
    if requested:
        raise RuntimeError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {requested!r}")
    return "numba" if HAS_NUMBA else "numpy"


def _check_alpha(alpha: float, allow_one: bool) -> float:
    hi_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (0.0 <= alpha and hi_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise InvalidAlpha(f"alpha must be in {bound}, got {alpha}")
    return float(alpha)


def _uniforms(n_rows: int, n_cols: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).random((n_rows, n_cols))


# -- draft-then-verify steps --------------------------------------------------


@njit(cache=True)
def _sd_counts_numba(u: np.ndarray, alpha: float) -> np.ndarray:  # pragma: no cover
    n, g = u.shape
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        accepted = 0
        for j in range(g):
            if u[i, j] <= alpha:
                accepted += 1
            else:
                break
        out[i] = accepted + 1
    return out


def _sd_counts_numpy(u: np.ndarray, alpha: float) -> np.ndarray:
    g = u.shape[1]
    rejected = u > alpha
    first = np.argmax(rejected, axis=1)  # 0 when no rejection in the row
    accepted = np.where(rejected.any(axis=1), first, g)
    return (accepted + 1).astype(np.int64)


def sd_step_finalized(alpha: float, gamma: int, n_steps: int, seed) -> np.ndarray:
    """Finalized-token count of ``n_steps`` independent draft-then-verify steps.

    Each entry is (accepted run length) + 1 and lies in [1, gamma + 1]; the
    mean converges to (1 - alpha^(gamma+1)) / (1 - alpha).
    """
    alpha = _check_alpha(alpha, allow_one=True)
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    u = _uniforms(n_steps, gamma, seed)
    if active_backend() == "numba":
        return _sd_counts_numba(u, alpha)
    return _sd_counts_numpy(u, alpha)


# -- two-phase steps ----------------------------------------------------------


@njit(cache=True)
def _pearl_counts_numba(u: np.ndarray, alpha: float) -> Tuple[np.ndarray, np.ndarray]:  # pragma: no cover
    n, g = u.shape
    fin = np.empty(n, dtype=np.int64)
    modes = np.empty(n, dtype=np.uint8)
    post = False
    for i in range(n):
        if not post:
            modes[i] = 0
            fin[i] = 1
            post = u[i, 0] <= alpha
        else:
            modes[i] = 1
            j = 0
            rejected = False
            while j < g:
                if u[i, j] > alpha:
                    rejected = True
                    break
                j += 1
            if rejected:
                fin[i] = j + 1
                post = False
            else:
                fin[i] = g
    return fin, modes


def _pearl_counts_numpy(u: np.ndarray, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    n, g = u.shape
    pre_accept = u[:, 0] <= alpha
    rejected = u > alpha
    first = np.argmax(rejected, axis=1)
    any_rej = rejected.any(axis=1)
    post_fin = np.where(any_rej, first + 1, g).astype(np.int64)
    fin = np.empty(n, dtype=np.int64)
    modes = np.empty(n, dtype=np.uint8)
    post = False
    # The mode sequence is a scan over per-row outcomes; the per-row work is
    # precomputed above, the numba path is the fast route for the scan itself.
    for i in range(n):
        if not post:
            modes[i] = 0
            fin[i] = 1
            post = bool(pre_accept[i])
        else:
            modes[i] = 1
            fin[i] = post_fin[i]
            post = not bool(any_rej[i])
    return fin, modes


def pearl_step_finalized(alpha: float, gamma: int, n_steps: int, seed) -> Tuple[np.ndarray, np.ndarray]:
    """Finalized counts and modes of ``n_steps`` consecutive two-phase steps.

    Returns (finalized, modes); modes[i] is 0 for a pre-verify step and 1 for
    a post-verify step, at the step's start. The chain starts in pre-verify.
    A pre-verify step always finalizes exactly 1 token; a post-verify step
    examines gamma trials (gamma - 1 pending plus the first new draft) and
    finalizes gamma on full acceptance, or the accepted run plus the
    correction otherwise.
    """
    alpha = _check_alpha(alpha, allow_one=True)
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    u = _uniforms(n_steps, gamma, seed)
    if active_backend() == "numba":
        return _pearl_counts_numba(u, alpha)
    return _pearl_counts_numpy(u, alpha)


# -- drafting segments --------------------------------------------------------


def segment_accept_runs(alpha: float, n_segments: int, seed) -> np.ndarray:
    """Accepted-run length of ``n_segments`` independent drafting segments.

    A segment accepts draft tokens until the first rejection, so the run
    length is geometric: P(run >= k) = alpha^k, with mean alpha/(1 - alpha).
    One uniform per segment via the inverse CDF; already fully vectorized, so
    both backends share this implementation.
    """
    alpha = _check_alpha(alpha, allow_one=False)
    u = np.random.default_rng(seed).random(n_segments)
    if alpha == 0.0:
        return np.zeros(n_segments, dtype=np.int64)
    # 1 - u lies in (0, 1], keeping the log finite at the u -> 0 corner.
    return np.floor(np.log1p(-u) / np.log(alpha)).astype(np.int64)
