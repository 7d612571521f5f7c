"""Desk-scale scaled dot-product attention testbed.

Swaps softmax implementations inside chained self-attention blocks to
measure how approximation error propagates with depth, plus the
head/sequence softmax operation-count arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engines import ProbVector, softmax_exact
from .errors import InvalidParams, NonFiniteInput, ShapeMismatch
from .harness import DEFAULT_SEED, ErrorReport, kl_divergence


@dataclass(frozen=True)
class AttentionConfig:
    heads: int
    seq_len: int
    hidden: int
    d_k: int
    layers: int

    def __post_init__(self):
        for name in ("heads", "seq_len", "hidden", "d_k", "layers"):
            if getattr(self, name) < 1:
                raise InvalidParams(f"{name} must be >= 1")
        if self.hidden % self.heads != 0:
            raise InvalidParams(
                f"hidden={self.hidden} must be divisible by heads={self.heads}"
            )


def softmax_op_count(cfg: AttentionConfig) -> int:
    """Softmax invocations per sample: layers * heads * seq_len^2."""
    return cfg.layers * cfg.heads * cfg.seq_len * cfg.seq_len


def _prob_values(p) -> np.ndarray:
    return p.values if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)


def _as_matrix(m, name: str) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return arr


def scaled_dot_attention(q, k, v, softmax_impl=softmax_exact) -> np.ndarray:
    """rowwise-softmax(Q K^T / sqrt(d_k)) V with an injected softmax.

    Rows are reduced serially so results never depend on scheduling.
    """
    q, k, v = _as_matrix(q, "Q"), _as_matrix(k, "K"), _as_matrix(v, "V")
    if q.shape[1] != k.shape[1]:
        raise ShapeMismatch(f"Q has d_k={q.shape[1]} but K has d_k={k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ShapeMismatch(f"K has {k.shape[0]} rows but V has {v.shape[0]}")
    logits = q @ k.T / math.sqrt(q.shape[1])
    weights = np.stack([_prob_values(softmax_impl(row)) for row in logits])
    return weights @ v


def _attention_weights(x, wq, wk, softmax_impl) -> np.ndarray:
    logits = (x @ wq) @ (x @ wk).T / math.sqrt(wq.shape[1])
    return np.stack([_prob_values(softmax_impl(row)) for row in logits])


def _run_stack(x0, projections, softmax_impl):
    """Chained self-attention blocks; returns per-layer states and the
    pooled attention-weight rows that produced them."""
    x = x0
    states, weights = [], []
    for layer in projections:
        head_outs, head_weights = [], []
        for wq, wk, wv in layer:
            w = _attention_weights(x, wq, wk, softmax_impl)
            head_outs.append(w @ (x @ wv))
            head_weights.append(w)
        x = np.hstack(head_outs)
        states.append(x)
        weights.append(np.vstack(head_weights))
    return states, weights


def stacked_error_probe(cfg: AttentionConfig, softmax_impl, seed: int = DEFAULT_SEED):
    """Run the block stack twice (exact vs. softmax_impl) from identical
    seeded inputs and projections; report per-layer divergence.

    Per layer: linf and l1_mean measure elementwise divergence of the
    layer output states; kl_div and norm_dev summarize that layer's
    attention-weight rows (exact||approx KL, worst |row sum - 1| of the
    approximate run). n_vectors counts the pooled weight rows.
    """
    rng = np.random.default_rng(seed)
    d_v = cfg.hidden // cfg.heads
    # 1/sqrt(hidden) keeps the attention logits near unit variance, so the
    # denominator sums stay in the moderate regime the tables are sized for.
    scale = 1.0 / math.sqrt(cfg.hidden)
    x0 = rng.standard_normal((cfg.seq_len, cfg.hidden))
    projections = [
        [
            (
                rng.standard_normal((cfg.hidden, cfg.d_k)) * scale,
                rng.standard_normal((cfg.hidden, cfg.d_k)) * scale,
                rng.standard_normal((cfg.hidden, d_v)) * scale,
            )
            for _ in range(cfg.heads)
        ]
        for _ in range(cfg.layers)
    ]
    exact_states, exact_weights = _run_stack(x0, projections, softmax_exact)
    approx_states, approx_weights = _run_stack(x0, projections, softmax_impl)

    reports = []
    for se, sa, we, wa in zip(exact_states, approx_states, exact_weights, approx_weights):
        diff = np.abs(se - sa)
        kl = np.mean([kl_divergence(pe, pa) for pe, pa in zip(we, wa)])
        norm_dev = float(np.abs(wa.sum(axis=1) - 1.0).max())
        reports.append(
            ErrorReport(
                linf=float(diff.max()),
                l1_mean=float(diff.mean()),
                kl_div=float(kl),
                norm_dev=norm_dev,
                n_vectors=int(wa.shape[0]),
            )
        )
    return reports
