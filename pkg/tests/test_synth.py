import dataclasses

import numpy as np
import pytest

from tslatent.errors import AnomalyOutOfRange, OverlappingAnomalies, ValidationError
from tslatent.synth import (
    GroundTruth,
    SynthConfig,
    gen_mtoy,
    gen_s1,
    gen_s2,
    gen_s3,
    generate,
    load_annotations,
    save_annotations,
)


class TestS1:
    CFG = SynthConfig(total_length=4000, noise_std=0.0, seed=1)

    def test_boundaries_partition_series(self):
        _, truth = gen_s1(self.CFG)
        assert [s[:2] for s in truth.segments] == [(0, 1000), (1000, 2000), (2000, 3000), (3000, 4000)]
        assert [s[2] for s in truth.segments] == ["df_1", "df_2", "df_3", "df_4"]

    def test_segment_variances_match_analytic(self):
        # sinusoid variance is A^2 / 2: amplitudes (1, 1, 3, 1) give
        # (0.5, 0.5, 4.5, 0.5), so the amp-3 segment is 9x an amp-1 one
        ts, truth = gen_s1(self.CFG)
        variances = [ts.values[a:b, 0].var() for a, b, _ in truth.segments]
        assert variances[2] == pytest.approx(4.5, rel=1e-2)
        assert variances[2] / variances[0] == pytest.approx(9.0, rel=1e-2)

    def test_deterministic(self):
        cfg = dataclasses.replace(self.CFG, noise_std=0.1)
        a, _ = gen_s1(cfg)
        b, _ = gen_s1(cfg)
        assert np.array_equal(a.values, b.values)

    def test_noiseless_matches_closed_form(self):
        ts, _ = gen_s1(self.CFG)
        t = np.arange(1000)
        expected = np.sin(2 * np.pi * t / 20.0)
        assert np.allclose(ts.values[:1000, 0], expected, atol=1e-12)

    def test_requires_four_segments(self):
        with pytest.raises(ValidationError):
            gen_s1(dataclasses.replace(self.CFG, segment_periods=(20.0, 50.0)))


class TestS2:
    CFG = SynthConfig(total_length=10_000, noise_std=0.0, seed=2)

    def test_two_annotated_anomalies(self):
        ts, truth = gen_s2(self.CFG)
        assert truth.anomalies == ((2500, 1), (7500, 1))
        for pos, _ in truth.anomalies:
            assert abs(ts.values[pos, 0]) > 6 * self.CFG.base_amplitude

    def test_residual_is_periodic_without_noise(self):
        ts, truth = gen_s2(self.CFG)
        t = np.arange(self.CFG.total_length)
        clean = np.sin(2 * np.pi * t / self.CFG.base_period)
        residual = ts.values[:, 0] - clean
        spikes = {pos for pos, _ in truth.anomalies}
        keep = np.array([i not in spikes for i in t])
        assert np.allclose(residual[keep], 0.0, atol=1e-12)

    def test_same_seed_same_spikes(self):
        cfg = dataclasses.replace(self.CFG, noise_std=0.3)
        a, _ = gen_s2(cfg)
        b, _ = gen_s2(cfg)
        assert np.array_equal(a.values, b.values)

    def test_position_out_of_range(self):
        with pytest.raises(AnomalyOutOfRange):
            gen_s2(dataclasses.replace(self.CFG, anomaly_positions=(2500, 10_000)))

    def test_positions_too_close(self):
        with pytest.raises(ValidationError):
            gen_s2(dataclasses.replace(self.CFG, anomaly_positions=(2500, 2600)))


class TestS3:
    CFG = SynthConfig(total_length=10_000, noise_std=0.0, seed=3, trend_slope=0.001)

    def test_least_squares_slope(self):
        ts, truth = gen_s3(self.CFG)
        t = np.arange(ts.length)
        slope = np.polyfit(t, ts.values[:, 0], 1)[0]
        assert slope == pytest.approx(0.001, abs=1e-9)
        assert truth.trend_slope == 0.001

    def test_zero_slope_rejected(self):
        with pytest.raises(ValidationError):
            gen_s3(dataclasses.replace(self.CFG, trend_slope=0.0))

    def test_detrended_zero_mean(self):
        ts, _ = gen_s3(self.CFG)
        t = np.arange(ts.length)
        coeffs = np.polyfit(t, ts.values[:, 0], 1)
        residual = ts.values[:, 0] - np.polyval(coeffs, t)
        assert abs(residual.mean()) < 1e-6


class TestMToy:
    CFG = SynthConfig(total_length=8000, noise_std=0.02, seed=4)

    def test_two_annotated_subsequences(self):
        _, truth = gen_mtoy(self.CFG)
        assert truth.anomalies == ((1000, 64), (4000, 64))

    def test_outside_anomalies_matches_paired_generation(self):
        ts_a, _ = gen_mtoy(self.CFG)
        moved = dataclasses.replace(self.CFG, subsequence_anomalies=((2000, 64), (5000, 64)))
        ts_b, _ = gen_mtoy(moved)
        touched = np.zeros(self.CFG.total_length, dtype=bool)
        for start, length in [(1000, 64), (4000, 64), (2000, 64), (5000, 64)]:
            touched[start : start + length] = True
        assert np.array_equal(ts_a.values[~touched], ts_b.values[~touched])

    def test_overlapping_anomalies_rejected(self):
        with pytest.raises(OverlappingAnomalies):
            gen_mtoy(dataclasses.replace(self.CFG, subsequence_anomalies=((1000, 64), (1032, 64))))

    def test_deterministic(self):
        a, _ = gen_mtoy(self.CFG)
        b, _ = gen_mtoy(self.CFG)
        assert np.array_equal(a.values, b.values)

    def test_noiseless_matches_closed_form_outside_anomalies(self):
        cfg = dataclasses.replace(self.CFG, noise_std=0.0)
        ts, truth = gen_mtoy(cfg)
        t = np.arange(cfg.total_length)
        touched = np.zeros(cfg.total_length, dtype=bool)
        for start, length in truth.anomalies:
            touched[start : start + length] = True
        for c in range(cfg.n_channels):
            expected = np.sin(2 * np.pi * t / cfg.channel_periods[c] + 2 * np.pi * c / 3)
            assert np.allclose(ts.values[~touched, c], expected[~touched], atol=1e-12)

    def test_needs_multiple_channels(self):
        with pytest.raises(ValidationError):
            gen_mtoy(dataclasses.replace(self.CFG, n_channels=1, channel_periods=(25.0,)))


class TestCommon:
    @pytest.mark.parametrize("kind", ["s1", "s2", "s3", "mtoy"])
    def test_truth_validates_and_noiseless_is_closed_form(self, kind):
        cfg = SynthConfig(
            total_length=4000,
            noise_std=0.0,
            seed=9,
            anomaly_positions=(1000, 3000),
            subsequence_anomalies=((500, 64), (2000, 64)),
        )
        ts, truth = generate(kind, cfg)
        truth.validate(ts.length)
        # identical config twice: identical bytes
        ts2, _ = generate(kind, cfg)
        assert np.array_equal(ts.values, ts2.values)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            generate("nope", SynthConfig())

    def test_annotation_round_trip(self, tmp_path):
        truth = GroundTruth(
            segments=((0, 10, "a"), (10, 20, "b")), anomalies=((3, 1),), trend_slope=0.5
        )
        path = tmp_path / "ann.json"
        save_annotations(truth, path)
        assert load_annotations(path) == truth
