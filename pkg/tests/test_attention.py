import numpy as np
import pytest

from lut_softmax.attention import (
    AttentionConfig,
    scaled_dot_attention,
    softmax_op_count,
    stacked_error_probe,
)
from lut_softmax.engines import Method, run_method, softmax_exact, softmax_rexp_raw
from lut_softmax.errors import InvalidParams, NonFiniteInput, ShapeMismatch
from lut_softmax.harness import DEFAULT_SEED, make_kernel_config


class TestConfig:
    def test_validation(self):
        with pytest.raises(InvalidParams):
            AttentionConfig(heads=0, seq_len=1, hidden=1, d_k=1, layers=1)
        with pytest.raises(InvalidParams):
            AttentionConfig(heads=3, seq_len=4, hidden=8, d_k=2, layers=1)
        AttentionConfig(heads=2, seq_len=4, hidden=8, d_k=2, layers=1)


class TestOpCount:
    @pytest.mark.parametrize(
        "layers,heads,seq,expected",
        [(6, 8, 128, 786_432), (12, 12, 128, 2_359_296), (1, 1, 1, 1)],
    )
    def test_counts(self, layers, heads, seq, expected):
        cfg = AttentionConfig(heads=heads, seq_len=seq, hidden=heads, d_k=1, layers=layers)
        assert softmax_op_count(cfg) == expected


class TestScaledDotAttention:
    def test_single_row_returns_v(self):
        rng = np.random.default_rng(0)
        q, k, v = rng.standard_normal((1, 4)), rng.standard_normal((1, 4)), rng.standard_normal((1, 3))
        for impl in (softmax_exact, softmax_rexp_raw):
            assert np.allclose(scaled_dot_attention(q, k, v, impl), v)

    def test_zero_queries_average_v(self):
        rng = np.random.default_rng(1)
        k, v = rng.standard_normal((6, 4)), rng.standard_normal((6, 3))
        out = scaled_dot_attention(np.zeros((5, 4)), k, v, softmax_exact)
        assert np.allclose(out, np.tile(v.mean(axis=0), (5, 1)))

    def test_shape_validation(self):
        with pytest.raises(ShapeMismatch):
            scaled_dot_attention(np.zeros((2, 3)), np.zeros((2, 4)), np.zeros((2, 2)))
        with pytest.raises(ShapeMismatch):
            scaled_dot_attention(np.zeros((2, 3)), np.zeros((4, 3)), np.zeros((2, 2)))
        with pytest.raises(ShapeMismatch):
            scaled_dot_attention(np.zeros(3), np.zeros((4, 3)), np.zeros((4, 2)))

    def test_nonfinite_rejected(self):
        bad = np.full((2, 2), np.nan)
        with pytest.raises(NonFiniteInput):
            scaled_dot_attention(bad, np.zeros((2, 2)), np.zeros((2, 2)))

    def test_rexp_output_deviation_bound(self):
        # |out_exact - out_approx| <= L * max per-row softmax Linf error * max|V|
        rng = np.random.default_rng(2)
        cfg = make_kernel_config(Method.REXP, "uint8")
        rexp = lambda row: run_method(Method.REXP, row, cfg)
        for _ in range(10):
            q, k = rng.standard_normal((8, 4)), rng.standard_normal((8, 4))
            v = rng.standard_normal((8, 5))
            logits = q @ k.T / 2.0
            row_err = max(
                np.abs(rexp(row).values - softmax_exact(row).values).max() for row in logits
            )
            dev = np.abs(
                scaled_dot_attention(q, k, v, softmax_exact)
                - scaled_dot_attention(q, k, v, rexp)
            ).max()
            assert dev <= 8 * row_err * np.abs(v).max() + 1e-12

    def test_outputs_within_inflated_v_bounding_box(self):
        rng = np.random.default_rng(3)
        cfg = make_kernel_config(Method.REXP, "uint8")
        rexp = lambda row: run_method(Method.REXP, row, cfg)
        for _ in range(10):
            q, k = rng.standard_normal((6, 4)), rng.standard_normal((6, 4))
            v = rng.standard_normal((6, 3))
            logits = q @ k.T / 2.0
            dev = max(abs(rexp(row).values.sum() - 1.0) for row in logits)
            out = scaled_dot_attention(q, k, v, rexp)
            mn, mx = v.min(axis=0), v.max(axis=0)
            lo = np.where(mn < 0, (1 + dev) * mn, (1 - dev) * mn)
            hi = np.where(mx > 0, (1 + dev) * mx, (1 - dev) * mx)
            assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)


PROBE_CFG = AttentionConfig(heads=8, seq_len=32, hidden=64, d_k=8, layers=6)


class TestStackedProbe:
    def test_exact_self_comparison_is_zero(self):
        reports = stacked_error_probe(PROBE_CFG, softmax_exact, seed=DEFAULT_SEED)
        assert len(reports) == 6
        for r in reports:
            assert r.linf == 0.0 and r.l1_mean == 0.0 and r.kl_div == 0.0
            assert r.n_vectors == 8 * 32

    def test_deterministic(self):
        a = stacked_error_probe(PROBE_CFG, softmax_rexp_raw, seed=7)
        b = stacked_error_probe(PROBE_CFG, softmax_rexp_raw, seed=7)
        assert a == b

    def test_single_layer_matches_direct_comparison(self):
        # reconstruct the probe's seeded draw and compare against a direct
        # one-layer attention run
        cfg = AttentionConfig(heads=1, seq_len=8, hidden=4, d_k=4, layers=1)
        seed = 99
        report = stacked_error_probe(cfg, softmax_rexp_raw, seed=seed)[0]
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal((cfg.seq_len, cfg.hidden))
        scale = 1.0 / np.sqrt(cfg.hidden)
        wq = rng.standard_normal((cfg.hidden, cfg.d_k)) * scale
        wk = rng.standard_normal((cfg.hidden, cfg.d_k)) * scale
        wv = rng.standard_normal((cfg.hidden, cfg.hidden)) * scale
        exact_out = scaled_dot_attention(x0 @ wq, x0 @ wk, x0 @ wv, softmax_exact)
        raw_out = scaled_dot_attention(x0 @ wq, x0 @ wk, x0 @ wv, softmax_rexp_raw)
        assert report.linf == pytest.approx(np.abs(exact_out - raw_out).max())

    def test_raw_reciprocal_error_accumulates_with_depth(self):
        # frozen at the default seed: mean absolute state divergence of the
        # unnormalized baseline grows monotonically through the stack
        reports = stacked_error_probe(PROBE_CFG, softmax_rexp_raw, seed=DEFAULT_SEED)
        l1 = [r.l1_mean for r in reports]
        assert all(l1[i] <= l1[i + 1] for i in range(len(l1) - 1))
        assert l1[-1] >= 4 * l1[0]
        assert reports[0].norm_dev > 1.0  # rows visibly unnormalized

    def test_rexp_kernel_stays_close_where_raw_debases(self):
        cfg = make_kernel_config(Method.REXP, "uint8")
        rexp_reports = stacked_error_probe(
            PROBE_CFG, lambda r: run_method(Method.REXP, r, cfg), seed=DEFAULT_SEED
        )
        raw_reports = stacked_error_probe(PROBE_CFG, softmax_rexp_raw, seed=DEFAULT_SEED)
        assert raw_reports[-1].linf > 5 * rexp_reports[-1].linf
