import numpy as np
import pytest

from conftest import agent, aloha, mac_spec, tdma
from cplab.errors import (EmptyLogError, MetricDomainError,
                          MisalignedSeriesError, PreconditionError)
from cplab.metrics import (ThroughputSeries, alpha_fair_value,
                           clamped_alpha_fair_value, flow_throughputs,
                           jain_index, read_throughput_csv, rmse_vs_reference,
                           slot_utilization, window_series,
                           windowed_throughput, write_throughput_csv)
from cplab.simulation import get_world
from cplab.simulation.mac_world import silent_policy
from cplab.simulation.trajectory import TcpLog, TrajectoryLog


def tdma_log(frames=20):
    return get_world(mac_spec(tdma(0), frames=frames)).run_frames(
        silent_policy, frames)


class TestJain:

    def test_reno_vegas_gap(self):
        assert jain_index((589.7, 193.6)) == pytest.approx(0.796, abs=1e-3)

    def test_equal_shares(self):
        assert jain_index([3.0, 3.0, 3.0]) == pytest.approx(1.0)

    def test_monopoly(self):
        assert jain_index([5.0, 0.0, 0.0, 0.0]) == pytest.approx(0.25)

    def test_bounds_and_scale_invariance(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            n = int(rng.integers(1, 12))
            x = rng.uniform(0.0, 100.0, n)
            if not np.any(x > 0):
                continue
            j = jain_index(x)
            assert 1.0 / n - 1e-12 <= j <= 1.0 + 1e-12
            c = float(rng.uniform(0.01, 1000.0))
            assert jain_index(c * x) == pytest.approx(j, rel=1e-9)

    def test_domain_errors(self):
        with pytest.raises(MetricDomainError):
            jain_index([])
        with pytest.raises(MetricDomainError):
            jain_index([0.0, 0.0])
        with pytest.raises(MetricDomainError):
            jain_index([1.0, -1.0])


class TestAlphaFair:

    def test_alpha_zero_is_scaled_sum(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            x = rng.uniform(0.0, 1.0, int(rng.integers(1, 10)))
            assert alpha_fair_value(x, 0) == pytest.approx(
                100.0 * np.sum(x), rel=1e-9)

    def test_alpha_one_is_log_sum(self):
        x = [0.4, 0.1]
        assert alpha_fair_value(x, 1) == pytest.approx(np.log(400.0))

    def test_alpha_two(self):
        assert alpha_fair_value([0.5, 0.25], 2) == pytest.approx(
            -(1 / 50.0 + 1 / 25.0))

    def test_zero_throughput_needs_floor(self):
        with pytest.raises(MetricDomainError):
            alpha_fair_value([0.5, 0.0], 1)
        value = clamped_alpha_fair_value([0.5, 0.0], 1, floor=1e-3)
        assert value == pytest.approx(np.log(50.0) + np.log(0.1))

    def test_negative_rejected(self):
        with pytest.raises(MetricDomainError):
            alpha_fair_value([-0.1, 0.5], 0)


class TestWindowedThroughput:

    def test_tdma_share(self):
        series = windowed_throughput(tdma_log(20), 10)
        assert series.node_ids == (0,)
        assert series.frames.tolist() == list(range(10, 21))
        assert np.allclose(series.series(0), 0.2)

    def test_window_longer_than_log(self):
        series = windowed_throughput(tdma_log(5), 10)
        assert len(series.frames) == 0

    def test_sliding_mean(self):
        rates = np.array([[0.0], [1.0], [1.0], [0.0]])
        series = window_series((4,), 0, rates, 2)
        assert series.frames.tolist() == [2, 3, 4]
        assert series.series(4).tolist() == [0.5, 1.0, 0.5]

    def test_empty_log(self):
        with pytest.raises(EmptyLogError):
            windowed_throughput(TrajectoryLog(10), 10)

    def test_bad_window(self):
        with pytest.raises(PreconditionError):
            windowed_throughput(tdma_log(), 0)


class TestRmse:

    def _series(self, values, frames=None, node_ids=(0, 1)):
        values = np.asarray(values, dtype=float)
        if frames is None:
            frames = np.arange(1, len(values) + 1)
        return ThroughputSeries(tuple(node_ids), np.asarray(frames), values)

    def test_zero_iff_equal(self):
        s = self._series([[0.2, 0.8], [0.3, 0.7]])
        assert rmse_vs_reference(s, s) == 0.0
        other = self._series([[0.2, 0.8], [0.3, 0.5]])
        assert rmse_vs_reference(s, other) == pytest.approx(
            np.sqrt(0.04 / 4))

    def test_warmup_skips_leading_frames(self):
        s = self._series([[0.0, 0.0], [0.2, 0.8]])
        ref = self._series([[1.0, 1.0], [0.2, 0.8]])
        assert rmse_vs_reference(s, ref, warmup=1) == 0.0

    def test_nan_reference_ignored(self):
        s = self._series([[0.2, 0.8], [0.3, 0.7]])
        ref = self._series([[0.2, np.nan], [0.3, 0.7]])
        assert rmse_vs_reference(s, ref) == 0.0

    def test_node_sets_must_match(self):
        s = self._series([[0.2, 0.8]])
        ref = self._series([[0.2, 0.8]], node_ids=(0, 2))
        with pytest.raises(MisalignedSeriesError):
            rmse_vs_reference(s, ref)

    def test_reference_must_cover_frames(self):
        s = self._series([[0.2, 0.8], [0.3, 0.7]], frames=[5, 6])
        ref = self._series([[0.2, 0.8]], frames=[5])
        with pytest.raises(MisalignedSeriesError):
            rmse_vs_reference(s, ref)

    def test_warmup_longer_than_series(self):
        s = self._series([[0.2, 0.8]])
        with pytest.raises(PreconditionError):
            rmse_vs_reference(s, s, warmup=5)


class TestSlotUtilization:

    def test_tdma(self):
        expected = np.zeros(10)
        expected[[3, 5]] = 1.0
        assert np.array_equal(slot_utilization(tdma_log(), 10), expected)

    def test_silent_network(self):
        log = get_world(mac_spec(agent(0), frames=10)).run_frames(
            silent_policy, 10)
        assert np.array_equal(slot_utilization(log, 10), np.zeros(10))

    def test_excluded_node(self):
        assert np.array_equal(slot_utilization(tdma_log(), 10, exclude=(0,)),
                              np.zeros(10))

    def test_aloha_rate(self):
        log = get_world(mac_spec(aloha(0), frames=1000)).run_frames(
            silent_policy, 1000)
        u = slot_utilization(log, 1000)
        sigma = np.sqrt(0.2 * 0.8 / 1000)
        assert np.all(np.abs(u - 0.2) < 4 * sigma)

    def test_empty_window(self):
        with pytest.raises(EmptyLogError):
            slot_utilization(TrajectoryLog(10), 10)


class TestFiles:

    def test_csv_round_trip(self, tmp_path):
        path = str(tmp_path / 'trajectory.csv')
        series = windowed_throughput(tdma_log(12), 10)
        write_throughput_csv(path, series.rows())
        data, header = read_throughput_csv(path)
        assert header == ['frame', 'node', 'throughput']
        assert data == {0: {10: 0.2, 11: 0.2, 12: 0.2}}

    def test_rows_skip_missing(self):
        series = ThroughputSeries((0, 1), np.array([1, 2]),
                                  np.array([[0.1, np.nan], [0.2, 0.3]]))
        assert list(series.rows()) == [(1, 0, 0.1), (2, 0, 0.2), (2, 1, 0.3)]

    def test_flow_throughputs_of_empty_log(self):
        with pytest.raises(EmptyLogError):
            flow_throughputs(TcpLog(1000, 0.1))
