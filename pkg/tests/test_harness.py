import json
import pathlib

import numpy as np
import pytest

from lut_softmax.engines import Method, softmax_exact
from lut_softmax.errors import InvalidParams, InvalidRange, LengthMismatch
from lut_softmax.harness import (
    DEFAULT_SEED,
    CorpusSpec,
    ErrorReport,
    error_report,
    gen_corpus,
    gen_logits,
    histogram_to_csv,
    kl_divergence,
    sum_exp_histogram,
    sum_exp_values,
    sweep,
    sweep_to_csv,
    sweep_to_json,
)

GOLDEN = pathlib.Path(__file__).parent / "golden" / "sweep_default.csv"


class TestGenLogits:
    def test_degenerate_uniform(self):
        assert gen_logits("uniform:0,0", 5, seed=1).tolist() == [0.0] * 5

    def test_deterministic(self):
        for dist in ("uniform:-1,1", "gaussian:0,1", "attention_like:16"):
            a = gen_logits(dist, 33, seed=42)
            b = gen_logits(dist, 33, seed=42)
            assert np.array_equal(a, b)
            assert len(a) == 33

    def test_gaussian_mean_sanity(self):
        x = gen_logits("gaussian:0,1", 10_000, seed=9)
        assert abs(x.mean()) <= 5 / np.sqrt(10_000)

    def test_invalid_specs(self):
        for bad in ("uniform:3,1", "gaussian:0,-1", "attention_like:0.5",
                    "attention_like:0", "cauchy:0,1", "uniform:1", "gaussian:a,b"):
            with pytest.raises(InvalidParams):
                gen_logits(bad, 4, seed=0)
        with pytest.raises(InvalidParams):
            gen_logits("gaussian:0,1", 0, seed=0)


class TestCorpus:
    def test_deterministic_and_bounded(self):
        spec = CorpusSpec(n_vectors=50, min_len=2, max_len=9, seed=5)
        a, b = gen_corpus(spec), gen_corpus(spec)
        assert len(a) == 50
        assert all(np.array_equal(u, v) for u, v in zip(a, b))
        assert all(2 <= len(v) <= 9 for v in a)

    def test_validation(self):
        with pytest.raises(InvalidParams):
            CorpusSpec(n_vectors=0)
        with pytest.raises(InvalidParams):
            CorpusSpec(min_len=4, max_len=3)
        with pytest.raises(InvalidParams):
            CorpusSpec(dists=())


class TestErrorReport:
    def test_self_comparison_is_zero(self):
        outs = [softmax_exact(v) for v in ([0.0, 1.0], [2.0, -1.0, 0.5])]
        rep = error_report(outs, outs)
        assert (rep.linf, rep.l1_mean, rep.kl_div) == (0.0, 0.0, 0.0)
        assert rep.norm_dev <= 1e-12
        assert rep.n_vectors == 2

    def test_single_pair_linf(self):
        rep = error_report([np.array([1.0, 0.0])], [np.array([0.9, 0.1])])
        assert rep.linf == pytest.approx(0.1)
        assert rep.l1_mean == pytest.approx(0.1)

    def test_kl_finite_with_zero_codes(self):
        rep = error_report([np.array([1.0, 0.0])], [np.array([0.5, 0.5])])
        assert np.isfinite(rep.kl_div) and rep.kl_div > 0

    def test_kl_clamped_nonnegative(self):
        # approximate outputs summing past 1 would otherwise push KL negative
        assert kl_divergence(np.array([0.5, 0.5]), np.array([1.0, 1.0])) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            error_report([np.array([1.0])], [np.array([1.0]), np.array([1.0])])
        with pytest.raises(LengthMismatch):
            error_report([np.array([1.0, 0.0])], [np.array([1.0])])

    def test_invariants_enforced(self):
        with pytest.raises(InvalidParams):
            ErrorReport(linf=-0.1, l1_mean=0.0, kl_div=0.0, norm_dev=0.0, n_vectors=1)
        with pytest.raises(InvalidParams):
            ErrorReport(linf=0.1, l1_mean=0.5, kl_div=0.0, norm_dev=0.0, n_vectors=1)


class TestSumExpHistogram:
    def test_uniform_vector_value_is_length(self):
        vals = sum_exp_values([np.full(17, 3.3)])
        assert vals.tolist() == [17.0]

    def test_values_within_length_bound(self):
        rng = np.random.default_rng(2)
        vecs = [rng.standard_normal(rng.integers(1, 50)) for _ in range(100)]
        vals = sum_exp_values(vecs)
        assert np.all(vals >= 1.0)
        assert np.all(vals <= np.array([len(v) for v in vecs]))

    def test_default_preset_accepted(self):
        hist = sum_exp_histogram([np.zeros(3)], bins=50, value_range=(0, 500))
        assert hist.bins == 50 and (hist.lo, hist.hi) == (0.0, 500.0)
        assert hist.counts.sum() == 1
        assert hist.mean == 3.0

    def test_counts_cover_in_range_samples(self):
        rng = np.random.default_rng(3)
        vecs = [rng.standard_normal(rng.integers(1, 120)) for _ in range(300)]
        hist = sum_exp_histogram(vecs, bins=10, value_range=(0.0, 20.0))
        vals = sum_exp_values(vecs)
        in_range = int(np.count_nonzero((vals >= 0.0) & (vals <= 20.0)))
        assert int(hist.counts.sum()) == in_range

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        vecs = [rng.standard_normal(12) for _ in range(40)]
        a = sum_exp_histogram(vecs, bins=8, value_range=(0, 16))
        b = sum_exp_histogram(vecs[::-1], bins=8, value_range=(0, 16))
        assert np.array_equal(a.counts, b.counts) and a.mean == b.mean

    def test_invalid_range(self):
        with pytest.raises(InvalidRange):
            sum_exp_histogram([np.zeros(2)], bins=0)
        with pytest.raises(InvalidRange):
            sum_exp_histogram([np.zeros(2)], value_range=(5, 5))

    def test_csv_layout(self):
        hist = sum_exp_histogram([np.zeros(4)], bins=2, value_range=(0, 8))
        lines = histogram_to_csv(hist).splitlines()
        assert lines[0] == "bin_lo,bin_hi,count"
        assert lines[1] == "0.0,4.0,0"
        assert lines[2] == "4.0,8.0,1"
        assert lines[-1] == "mean,4.0"


class TestSweep:
    CORPUS = CorpusSpec(n_vectors=60, max_len=32, seed=7)

    def test_exact_rows_are_zero(self):
        rows = sweep(["exact"], ["uint8", "uint2"], self.CORPUS)
        assert len(rows) == 2
        for row in rows:
            assert row.report.linf == 0.0
            assert row.report.l1_mean == 0.0
            assert row.report.kl_div == 0.0
            assert row.report.norm_dev <= 1e-12

    def test_row_count_and_order(self):
        rows = sweep(["exact", "rexp"], ["uint8", "uint4"], self.CORPUS)
        assert [(str(r.method), r.precision) for r in rows] == [
            ("exact", "uint8"),
            ("exact", "uint4"),
            ("rexp", "uint8"),
            ("rexp", "uint4"),
        ]

    def test_threaded_matches_serial(self):
        serial = sweep(["rexp", "2dlut"], ["uint8"], self.CORPUS, threads=1)
        threaded = sweep(["rexp", "2dlut"], ["uint8"], self.CORPUS, threads=4)
        assert sweep_to_csv(serial) == sweep_to_csv(threaded)

    def test_empty_lists_rejected(self):
        with pytest.raises(InvalidParams):
            sweep([], ["uint8"], self.CORPUS)
        with pytest.raises(InvalidParams):
            sweep(["exact"], [], self.CORPUS)

    def test_json_shape(self):
        rows = sweep(["rexp"], ["uint8"], self.CORPUS)
        doc = json.loads(sweep_to_json(rows))
        assert set(doc) == {"rexp"}
        assert set(doc["rexp"]) == {"uint8"}
        assert set(doc["rexp"]["uint8"]) == {"linf", "l1_mean", "kl_div", "norm_dev", "n_vectors"}

    def test_precision_ladder_example(self):
        rows = sweep(["rexp"], ["int16", "uint4"], CorpusSpec(n_vectors=300, seed=3))
        by_prec = {r.precision: r.report.l1_mean for r in rows}
        assert by_prec["int16"] <= by_prec["uint4"]


def test_default_sweep_reproduces_golden_file():
    """Frozen output of the audited first run: every kernel is deterministic
    integer math on a seeded corpus, so the full report must reproduce
    byte-for-byte."""
    rows = sweep(
        [m for m in Method], ["int16", "uint8", "uint4", "uint2"], CorpusSpec()
    )
    assert sweep_to_csv(rows) == GOLDEN.read_text()
