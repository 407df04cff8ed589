"""Rate-1/2 convolutional code: encoder and log-domain BCJR (MAP) decoder.

The decoder is soft-input soft-output: it takes per-bit probabilities,
returns per-bit posteriors, and also reports the log model evidence of
the whole frame (total unnormalized observation probability under the
code constraint, read off the forward recursion).  That evidence is
what the phase detector ranks candidates by.

All metrics live in the log domain.  Impossible states carry a large
negative sentinel rather than -inf so no NaN masking is ever needed;
raw log metrics stay far from float64 limits even for frames of tens of
thousands of bits, so no per-step rescaling is required either.

For speed the forward/backward recursions run on a composed trellis
that advances several steps at a time; intermediate state metrics are
reconstructed afterwards in vectorized passes.  The results are exactly
the single-step recursions, just grouped differently.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PROB_FLOOR = 1e-12

_BIG_NEG = -1e30  # "impossible" log metric; exp(x - max) underflows to exactly 0
_RADIX = 4  # trellis steps folded into one recursion step


def clamp_probs(p: np.ndarray) -> np.ndarray:
    """Clip probabilities into [PROB_FLOOR, 1 - PROB_FLOOR]."""
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


@dataclass(frozen=True)
class CodeSpec:
    """Feedforward rate-1/2 convolutional code with octal generators.

    With `terminated` set, the encoder appends `constraint_length - 1`
    zero tail bits so the trellis ends in state 0, which makes the
    backward recursion and the frame evidence well-defined.
    """

    generators: tuple[int, int] = (0o5, 0o7)
    constraint_length: int = 3
    terminated: bool = True

    @property
    def rate(self) -> float:
        return 0.5

    @property
    def num_states(self) -> int:
        return 2 ** (self.constraint_length - 1)

    @property
    def tail_len(self) -> int:
        return self.constraint_length - 1 if self.terminated else 0

    def coded_len(self, num_info_bits: int) -> int:
        return 2 * (num_info_bits + self.tail_len)


@dataclass
class DecodeResult:
    """BCJR output: bit posteriors plus the frame log evidence (nats).

    `info_posteriors` has one entry per trellis step; when the code is
    terminated the final `tail_len` entries correspond to the forced
    zero tail bits.  `coded_log_odds` carries the same coded posteriors
    as unclamped log odds: near-certain decisions saturate the clamped
    probability representation, and the turbo loop needs the full
    magnitude to form extrinsics that do not cancel against an equally
    certain input.
    """

    coded_posteriors: np.ndarray
    info_posteriors: np.ndarray
    log_evidence: float
    coded_log_odds: np.ndarray | None = None


@lru_cache(maxsize=8)
def _trellis_tables(generators: tuple[int, int], constraint_length: int):
    """State-transition and output tables for the single-step trellis.

    State is the register content (most recent bit in the high bit); an
    input bit `b` forms the value ``(b << (Lc-1)) | state`` whose parity
    against each generator gives the two output bits.
    """
    g0, g1 = generators
    n_states = 2 ** (constraint_length - 1)
    next_state = np.zeros((n_states, 2), dtype=np.int64)
    out0 = np.zeros((n_states, 2), dtype=np.int64)
    out1 = np.zeros((n_states, 2), dtype=np.int64)
    for s in range(n_states):
        for b in (0, 1):
            reg = (b << (constraint_length - 1)) | s
            out0[s, b] = bin(reg & g0).count("1") % 2
            out1[s, b] = bin(reg & g1).count("1") % 2
            next_state[s, b] = reg >> 1
    pred_state, pred_input = _pred_tables(next_state)
    return next_state, out0, out1, pred_state, pred_input


def _pred_tables(next_table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Incoming edges per state; shift-register trellises are balanced."""
    n_states, fan = next_table.shape
    incoming: list[list[tuple[int, int]]] = [[] for _ in range(n_states)]
    for s in range(n_states):
        for c in range(fan):
            incoming[next_table[s, c]].append((s, c))
    pred_state = np.zeros((n_states, fan), dtype=np.int64)
    pred_code = np.zeros((n_states, fan), dtype=np.int64)
    for s_to, edges in enumerate(incoming):
        if len(edges) != fan:
            raise AssertionError("unbalanced trellis transition table")
        for i, (s_from, c) in enumerate(edges):
            pred_state[s_to, i] = s_from
            pred_code[s_to, i] = c
    return pred_state, pred_code


@lru_cache(maxsize=8)
def _super_tables(generators: tuple[int, int], constraint_length: int, radix: int):
    """Transition table for `radix` consecutive steps, input word MSB-first."""
    next_state = _trellis_tables(generators, constraint_length)[0]
    composed = next_state
    for _ in range(radix - 1):
        composed = next_state[composed].reshape(composed.shape[0], -1)
    pred_state, pred_code = _pred_tables(composed)
    return composed, pred_state, pred_code


def conv_encode(info_bits, spec: CodeSpec = CodeSpec()) -> np.ndarray:
    """Encode info bits; tail bits are appended internally when terminated.

    Output length is ``2 * (len(info_bits) + tail_len)``.
    """
    info_bits = np.asarray(info_bits, dtype=np.int64)
    if info_bits.size == 0:
        raise ValueError("cannot encode an empty bit sequence")
    if np.any((info_bits != 0) & (info_bits != 1)):
        raise ValueError("info bits must be 0 or 1")
    bits = np.concatenate([info_bits, np.zeros(spec.tail_len, dtype=np.int64)])
    lc = spec.constraint_length
    coded = np.empty(2 * bits.size, dtype=np.int64)
    for j, g in enumerate(spec.generators):
        taps = np.array([(g >> (lc - 1 - i)) & 1 for i in range(lc)], dtype=np.int64)
        coded[j::2] = np.convolve(bits, taps)[: bits.size] % 2
    return coded


def _step_log_priors(info_priors, num_steps: int, spec: CodeSpec) -> np.ndarray:
    """Per-step log priors [log p(b=0), log p(b=1)], tail steps forced to 0."""
    free_steps = num_steps - spec.tail_len
    log_priors = np.full((num_steps, 2), np.log(0.5))
    if info_priors is not None:
        p = clamp_probs(np.asarray(info_priors, dtype=float))
        if p.shape not in {(num_steps,), (free_steps,)}:
            raise ValueError(
                f"info prior length {p.shape[0]} matches neither the trellis "
                f"length {num_steps} nor the free info length {free_steps}"
            )
        p = p[:free_steps]
        log_priors[:free_steps, 0] = np.log1p(-p)
        log_priors[:free_steps, 1] = np.log(p)
    if spec.tail_len:
        log_priors[free_steps:, 0] = 0.0
        log_priors[free_steps:, 1] = _BIG_NEG
    return log_priors


def _lse(x: np.ndarray, axis) -> np.ndarray:
    """logsumexp; the max-shifted sum is always >= 1, so log never sees 0."""
    m = np.max(x, axis=axis, keepdims=True)
    return np.log(np.sum(np.exp(x - m), axis=axis)) + np.squeeze(m, axis=axis)


def _fold_gamma(gamma: np.ndarray, next_state: np.ndarray, radix: int) -> np.ndarray:
    """Sum single-step metrics along every length-`radix` path.

    gamma is (B, n_super * radix, S, 2); the result is (B, n_super, S, C)
    with C = 2**radix, input word MSB-first, matching `_super_tables`.
    """
    batch = gamma.shape[0]
    n_super = gamma.shape[1] // radix
    n_states = gamma.shape[2]
    if n_super == 0:
        return np.zeros((batch, 0, n_states, 2**radix))
    acc = gamma[:, 0::radix]
    reached = next_state
    for j in range(1, radix):
        step = gamma[:, j::radix]
        acc = acc[..., None] + step[:, :, reached, :]
        acc = acc.reshape(batch, n_super, n_states, -1)
        reached = next_state[reached].reshape(n_states, -1)
    return acc


def bcjr_decode_batch(
    log_likelihood_pairs: np.ndarray,
    info_priors=None,
    spec: CodeSpec = CodeSpec(),
) -> list[DecodeResult]:
    """Run the forward-backward recursion on a batch of frames.

    `log_likelihood_pairs` has shape (B, K, 2): unnormalized log
    likelihoods of coded bit k being 0 or 1, sharing one trellis and one
    prior sequence across the batch.
    """
    ll = np.asarray(log_likelihood_pairs, dtype=float)
    if ll.ndim != 3 or ll.shape[2] != 2:
        raise ValueError(f"expected shape (B, K, 2), got {ll.shape}")
    batch, coded_len = ll.shape[0], ll.shape[1]
    if coded_len % 2:
        raise ValueError(f"coded length must be even, got {coded_len}")
    ll = np.maximum(ll, _BIG_NEG)
    steps = coded_len // 2
    next_state, out0, out1, pred_state, pred_input = _trellis_tables(
        spec.generators, spec.constraint_length
    )
    n_states = spec.num_states
    log_priors = _step_log_priors(info_priors, steps, spec)

    # gamma[b, t, s, u]: log metric of the edge leaving state s on input u
    gamma = (
        log_priors[None, :, None, :]
        + ll[:, 0::2, :][:, :, out0]
        + ll[:, 1::2, :][:, :, out1]
    )
    gamma_in = gamma[:, :, pred_state, pred_input]

    radix = _RADIX
    n_super = steps // radix
    grid_end = n_super * radix
    super_next, super_pred_s, super_pred_c = _super_tables(
        spec.generators, spec.constraint_length, radix
    )
    super_gamma = _fold_gamma(gamma[:, :grid_end], next_state, radix)
    super_gamma_in = super_gamma[:, :, super_pred_s, super_pred_c]

    # forward pass over the composed trellis, then single-step remainder;
    # metrics are rescaled by their max once per block, accumulated into
    # the evidence, which keeps them near zero for full precision
    alpha = np.empty((batch, steps + 1, n_states))
    alpha[:, 0, :] = _BIG_NEG
    alpha[:, 0, 0] = 0.0
    log_norm = np.zeros(batch)
    a = alpha[:, 0, :]
    for k in range(n_super):
        a = _lse(a[:, super_pred_s] + super_gamma_in[:, k], axis=2)
        c = a.max(axis=1)
        a = a - c[:, None]
        log_norm += c
        alpha[:, (k + 1) * radix, :] = a
    for t in range(grid_end, steps):
        cand = a[:, pred_state] + gamma_in[:, t]
        a = np.logaddexp(cand[..., 0], cand[..., 1])
        c = a.max(axis=1)
        a = a - c[:, None]
        log_norm += c
        alpha[:, t + 1, :] = a
    # reconstruct the skipped state metrics, vectorized across blocks
    for j in range(1, radix):
        prev = alpha[:, j - 1 : grid_end : radix, :]
        cand = prev[:, :, pred_state] + gamma_in[:, j - 1 : grid_end : radix]
        alpha[:, j:grid_end:radix, :] = np.logaddexp(cand[..., 0], cand[..., 1])

    # backward pass: single-step remainder first, then composed blocks
    beta = np.empty((batch, steps + 1, n_states))
    if spec.terminated:
        beta[:, steps, :] = _BIG_NEG
        beta[:, steps, 0] = 0.0
    else:
        beta[:, steps, :] = 0.0
    b_cur = beta[:, steps, :]
    for t in range(steps - 1, grid_end - 1, -1):
        cand = b_cur[:, next_state] + gamma[:, t]
        b_cur = np.logaddexp(cand[..., 0], cand[..., 1])
        b_cur = b_cur - b_cur.max(axis=1, keepdims=True)
        beta[:, t, :] = b_cur
    for k in range(n_super - 1, -1, -1):
        b_cur = _lse(b_cur[:, super_next] + super_gamma[:, k], axis=2)
        b_cur = b_cur - b_cur.max(axis=1, keepdims=True)
        beta[:, k * radix, :] = b_cur
    for j in range(radix - 1, 0, -1):
        nxt = beta[:, j + 1 : grid_end + 1 : radix, :]
        cand = nxt[:, :, next_state] + gamma[:, j:grid_end:radix]
        beta[:, j:grid_end:radix, :] = np.logaddexp(cand[..., 0], cand[..., 1])

    if spec.terminated:
        log_evidence = log_norm + alpha[:, steps, 0]
    else:
        log_evidence = log_norm + _lse(alpha[:, steps, :], axis=1)

    # edge posteriors, vectorized over all steps at once
    joint = alpha[:, :steps, :, None] + gamma + beta[:, 1:, :][:, :, next_state]
    total = _lse(joint, axis=(2, 3))
    info_log1 = _lse(joint[:, :, :, 1], axis=2)
    mask0 = out0.astype(bool)
    mask1 = out1.astype(bool)
    first_log1 = _lse(np.where(mask0, joint, _BIG_NEG), axis=(2, 3))
    first_log0 = _lse(np.where(~mask0, joint, _BIG_NEG), axis=(2, 3))
    second_log1 = _lse(np.where(mask1, joint, _BIG_NEG), axis=(2, 3))
    second_log0 = _lse(np.where(~mask1, joint, _BIG_NEG), axis=(2, 3))

    results = []
    for b in range(batch):
        coded = np.empty(coded_len)
        coded[0::2] = np.exp(first_log1[b] - total[b])
        coded[1::2] = np.exp(second_log1[b] - total[b])
        log_odds = np.empty(coded_len)
        log_odds[0::2] = first_log1[b] - first_log0[b]
        log_odds[1::2] = second_log1[b] - second_log0[b]
        info = np.exp(info_log1[b] - total[b])
        results.append(
            DecodeResult(
                coded_posteriors=clamp_probs(coded),
                info_posteriors=clamp_probs(info),
                log_evidence=float(log_evidence[b]),
                coded_log_odds=log_odds,
            )
        )
    return results


def bcjr_decode(
    coded_likelihoods,
    info_priors=None,
    spec: CodeSpec = CodeSpec(),
) -> DecodeResult:
    """MAP-decode one frame from per-bit probabilities of coded bit = 1."""
    p = np.asarray(coded_likelihoods, dtype=float)
    if p.ndim != 1:
        raise ValueError("coded likelihoods must be a 1-D sequence")
    if p.size % 2:
        raise ValueError(f"coded length must be even, got {p.size}")
    p = clamp_probs(p)
    ll = np.stack([np.log1p(-p), np.log(p)], axis=-1)[None, :, :]
    return bcjr_decode_batch(ll, info_priors, spec)[0]


def extrinsic_divide(posterior, incoming) -> np.ndarray:
    """Remove incoming information from a posterior by odds division."""
    p = clamp_probs(np.asarray(posterior, dtype=float))
    q = clamp_probs(np.asarray(incoming, dtype=float))
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    odds = (p / (1.0 - p)) * ((1.0 - q) / q)
    return clamp_probs(odds / (1.0 + odds))


def extrinsic_from_log_odds(posterior_log_odds, incoming) -> np.ndarray:
    """Odds division with the posterior given as unclamped log odds.

    Same operation as :func:`extrinsic_divide`, but a near-certain
    posterior does not collapse against a near-certain input: the
    division happens before any clamping can erase the decoder's added
    certainty.
    """
    log_odds = np.asarray(posterior_log_odds, dtype=float)
    q = np.asarray(incoming, dtype=float)
    if log_odds.shape != q.shape:
        raise ValueError(f"shape mismatch: {log_odds.shape} vs {q.shape}")
    x = log_odds - (np.log(q) - np.log1p(-q))
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    grow = np.exp(x[~pos])
    out[~pos] = grow / (1.0 + grow)
    return clamp_probs(out)
