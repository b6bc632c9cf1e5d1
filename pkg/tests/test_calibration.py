import math

import numpy as np
import pytest

from uqroute.calibration import (
    CalibrationSet,
    bin_index,
    build_histogram,
    generalization_report,
    leave_one_out_calibration,
    load_calibration,
    sample_calibration,
    save_calibration,
    transfer_threshold,
)
from uqroute.errors import (
    EmptyCalibrationSet,
    EmptyScores,
    InvalidArgument,
    SingleDataset,
    UnknownDataset,
)
from uqroute.scoring import ConfidenceScore, score_batch
from uqroute.traces import TraceSet, synth_traces


def scores_from(values, prefix="q", dataset=""):
    return [ConfidenceScore("m", v, f"{prefix}{i}") for i, v in enumerate(values)]


class TestBuildHistogram:
    def test_bin_edge_convention(self):
        # half-open [0, 0.5), [0.5, 1.0]; 1.0 lands in the last bin
        h = build_histogram(scores_from([0.0, 0.5, 1.0]), 2)
        assert h.counts == [1, 2]
        assert h.edges == [0.0, 0.5, 1.0]

    def test_degenerate_distribution(self):
        h = build_histogram(scores_from([0.99] * 17), 30)
        assert sum(h.counts) == 17
        assert h.counts[bin_index(0.99, 30)] == 17
        assert sum(1 for c in h.counts if c) == 1

    def test_uniform_counts_concentrate(self):
        rng = np.random.default_rng(0)
        n, m = 10_000, 30
        h = build_histogram(scores_from(list(rng.uniform(size=n))), m)
        expect = n / m
        sigma = math.sqrt(n * (1 / m) * (1 - 1 / m))
        for c in h.counts:
            assert abs(c - expect) < 5 * sigma

    def test_membership_is_exhaustive(self):
        values = [0.05, 0.5, 0.95, 1.0]
        h = build_histogram(scores_from(values), 10, source="demo")
        assert sum(h.counts) == 4
        flat = [m for bucket in h.members for m in bucket]
        assert {m.trace_id for m in flat} == {"q0", "q1", "q2", "q3"}
        assert all(m.dataset == "demo" for m in flat)

    def test_errors(self):
        with pytest.raises(EmptyScores):
            build_histogram([], 30)
        with pytest.raises(InvalidArgument):
            build_histogram(scores_from([0.5]), 0)


class TestSampleCalibration:
    def test_floor_arithmetic(self):
        h = build_histogram(scores_from([0.5] * 20), 2)
        cal = sample_calibration(h, rate=0.1, seed=50)
        assert len(cal) == 2
        assert cal.per_bin_counts == [0, 2]

    def test_min_one_rule_for_small_bins(self):
        h = build_histogram(scores_from([0.7, 0.71, 0.72]), 10)
        cal = sample_calibration(h, rate=0.1, seed=50)
        assert len(cal) == 1

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        h = build_histogram(scores_from(list(rng.uniform(size=500))), 30)
        c1 = sample_calibration(h, rate=0.1, seed=50)
        c2 = sample_calibration(h, rate=0.1, seed=50)
        assert c1.entries == c2.entries

    def test_input_order_does_not_matter(self):
        rng = np.random.default_rng(2)
        values = list(rng.uniform(size=300))
        h1 = build_histogram(scores_from(values), 30)
        h2 = build_histogram(scores_from(values[::-1], prefix="x"), 30)
        # same content in different file order: ids differ, so compare counts
        c1 = sample_calibration(h1, seed=50)
        shuffled = scores_from(values)
        rng.shuffle(shuffled)
        c3 = sample_calibration(build_histogram(shuffled, 30), seed=50)
        assert c1.entries == c3.entries
        assert c1.per_bin_counts == sample_calibration(h2, seed=50).per_bin_counts

    def test_per_bin_rule_across_random_histograms(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(30, 400))
            h = build_histogram(scores_from(list(rng.uniform(size=n))), 30)
            cal = sample_calibration(h, rate=0.1, seed=50)
            for n_b, k_b in zip(h.counts, cal.per_bin_counts):
                assert k_b == (max(1, math.floor(0.1 * n_b)) if n_b else 0)

    def test_pooling_multiple_sources(self):
        h1 = build_histogram(scores_from([0.1] * 10, prefix="a"), 2, source="d1")
        h2 = build_histogram(scores_from([0.2] * 10, prefix="b"), 2, source="d2")
        cal = sample_calibration([h1, h2], rate=0.1, seed=50)
        assert cal.per_bin_counts == [2, 0]
        assert cal.pooled_counts == [20, 0]

    def test_errors(self):
        h = build_histogram(scores_from([0.5]), 2)
        with pytest.raises(InvalidArgument):
            sample_calibration(h, rate=0.0)
        with pytest.raises(InvalidArgument):
            sample_calibration(h, rate=1.5)
        h3 = build_histogram(scores_from([0.5]), 3)
        with pytest.raises(InvalidArgument):
            sample_calibration([h, h3])


class TestLeaveOneOut:
    def _groups(self, n=400):
        return {
            tag: synth_traces(n, seed, 1.0, dataset=tag)
            for tag, seed in [("alpha", 1), ("beta", 2), ("gamma", 3)]
        }

    def test_target_excluded(self):
        groups = self._groups()
        cal = leave_one_out_calibration(groups, "alpha", "perplexity")
        assert cal.datasets() <= {"beta", "gamma"}
        assert not (cal.ids() & set(groups["alpha"].ids()))

    def test_unknown_target(self):
        with pytest.raises(UnknownDataset):
            leave_one_out_calibration(self._groups(), "zeta", "perplexity")

    def test_single_group_rejected(self):
        with pytest.raises(SingleDataset):
            leave_one_out_calibration(
                {"only": synth_traces(10, 1, 1.0)}, "only", "perplexity"
            )

    def test_matches_target_distribution(self):
        # same generator for all groups: calibration histogram should be close
        # to the target's in total-variation distance
        for seed0 in (10, 20, 30):
            groups = {
                tag: synth_traces(10_000, seed0 + k, 1.0, dataset=tag)
                for k, tag in enumerate(["src1", "src2", "tgt"])
            }
            cal = leave_one_out_calibration(groups, "tgt", "perplexity")
            target_scores, _ = score_batch(groups["tgt"], "perplexity")
            h_t = build_histogram(target_scores, 30)
            p = np.array(h_t.counts) / sum(h_t.counts)
            h_c = np.zeros(30)
            for e in cal.entries:
                h_c[bin_index(e.confidence, 30)] += 1
            q = h_c / h_c.sum()
            tv = 0.5 * np.abs(p - q).sum()
            assert tv < 0.1


class TestTransferThreshold:
    def _cal(self, values):
        from uqroute.calibration import BinMember

        entries = [BinMember(f"q{i}", "d", v) for i, v in enumerate(values)]
        return CalibrationSet(entries, [], [], 30, 0.1, 50)

    def test_hand_quantile(self):
        cal = self._cal([0.1, 0.2, 0.3, 0.4])
        assert transfer_threshold(cal, 0.5) == 0.3

    def test_endpoints(self):
        cal = self._cal([0.1, 0.2, 0.3, 0.4])
        assert transfer_threshold(cal, 0.0) <= 0.1
        assert transfer_threshold(cal, 1.0) > 0.4

    def test_monotone_in_ratio(self):
        rng = np.random.default_rng(8)
        cal = self._cal(sorted(rng.uniform(size=77)))
        taus = [transfer_threshold(cal, r) for r in np.linspace(0, 1, 21)]
        assert all(a <= b for a, b in zip(taus, taus[1:]))

    def test_empty_rejected(self):
        with pytest.raises(EmptyCalibrationSet):
            transfer_threshold(CalibrationSet([], [], [], 30, 0.1, 50), 0.5)


class TestGeneralizationReport:
    def _setup(self, n=2000, seed=5):
        ts = synth_traces(n, seed, 1.0)
        scores, _ = score_batch(ts, "perplexity")
        slm = ts.labels()
        rng = np.random.default_rng(seed + 1)
        llm = {tid: bool(rng.uniform() < 0.9) for tid in ts.ids()}
        return ts, scores, slm, llm

    def test_self_transfer_identity(self):
        from uqroute.calibration import BinMember

        _, scores, slm, llm = self._setup()
        cal = CalibrationSet(
            [BinMember(s.trace_id, "self", s.value) for s in scores],
            [], [], 30, 1.0, 50,
        )
        grid = [i / 10 for i in range(11)]
        rep = generalization_report(cal, scores, slm, llm, grid)
        n = len(scores)
        assert rep.max_ratio_gap <= 1.0 / n + 1e-12
        assert rep.max_accuracy_gap <= 1.0 / n + 1e-12

    def test_same_distribution_transfers(self):
        src_ts = synth_traces(10_000, 42, 1.0, dataset="src")
        src_scores, _ = score_batch(src_ts, "perplexity")
        cal = sample_calibration(build_histogram(src_scores, 30, source="src"))
        _, scores, slm, llm = self._setup(n=10_000, seed=43)
        grid = [i / 10 for i in range(11)]
        rep = generalization_report(cal, scores, slm, llm, grid)
        assert rep.max_ratio_gap < 0.05
        assert rep.max_accuracy_gap < 0.03

    def test_shifted_distribution_is_detected(self):
        from uqroute.calibration import BinMember

        src_ts = synth_traces(10_000, 42, 1.0, dataset="src")
        src_scores, _ = score_batch(src_ts, "perplexity")
        shifted = [
            ConfidenceScore(s.method, min(1.0, s.value + 0.3), s.trace_id)
            for s in src_scores
        ]
        cal = sample_calibration(build_histogram(shifted, 30, source="src"))
        _, scores, slm, llm = self._setup(n=10_000, seed=43)
        grid = [i / 10 for i in range(11)]
        rep = generalization_report(cal, scores, slm, llm, grid)
        assert rep.max_ratio_gap > 0.05


class TestManifestIO:
    def test_round_trip(self, tmp_path):
        ts = synth_traces(500, 11, 1.0, dataset="demo")
        scores, _ = score_batch(ts, "perplexity")
        cal = sample_calibration(build_histogram(scores, 30, source="demo"))
        path = tmp_path / "cal.tsv"
        save_calibration(cal, path)
        loaded = load_calibration(path)
        assert loaded.entries == cal.entries
        assert loaded.per_bin_counts == cal.per_bin_counts
        assert loaded.pooled_counts == cal.pooled_counts
        assert (loaded.bin_count, loaded.rate, loaded.seed) == (30, 0.1, 50)

    def test_bad_manifest_rejected(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("nope\n")
        with pytest.raises(InvalidArgument):
            load_calibration(p)
