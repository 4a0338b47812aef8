"""Throughput windows, fairness objectives, RMSE and slot utilization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import (EmptyLogError, MetricDomainError, MisalignedSeriesError,
                     PreconditionError)

SCALE = 100.0


@dataclass(frozen=True)
class ThroughputSeries:
    """Per-node series aligned on frame labels.

    Label f covers the frames ending with the f-th frame of the run, so
    windowed values and per-frame references share one axis.
    """

    node_ids: Tuple[int, ...]
    frames: np.ndarray
    values: np.ndarray
    window: int = 1

    def series(self, node_id):
        return self.values[:, self.node_ids.index(node_id)]

    def mean(self):
        """Mean per node over the labels where the node has a value."""
        with np.errstate(invalid='ignore'):
            return {n: float(np.nanmean(self.series(n))) for n in self.node_ids}

    def rows(self):
        for i, f in enumerate(self.frames):
            for j, n in enumerate(self.node_ids):
                v = self.values[i, j]
                if not np.isnan(v):
                    yield int(f), n, float(v)


def window_series(node_ids, first_frame, frame_rates, window):
    """Sliding mean of per-frame rates over `window` frames."""
    if window < 1:
        raise PreconditionError('window must be >= 1')
    frame_rates = np.asarray(frame_rates, dtype=float)
    n = frame_rates.shape[0]
    if n < window:
        return ThroughputSeries(tuple(node_ids), np.zeros(0, dtype=int),
                                np.zeros((0, len(node_ids))), window)
    c = np.vstack([np.zeros((1, frame_rates.shape[1])),
                   np.cumsum(frame_rates, axis=0)])
    values = (c[window:] - c[:-window]) / window
    frames = first_frame + np.arange(window, n + 1)
    return ThroughputSeries(tuple(node_ids), frames, values, window)


def frame_rates(log, node_ids=None):
    """Per-frame success fraction of each node."""
    if len(log) == 0:
        raise EmptyLogError('trajectory log is empty')
    if node_ids is None:
        node_ids = log.node_ids()
    return node_ids, log.frame_successes(node_ids) / log.frame_len


def windowed_throughput(log, window):
    """Successes in the last `window` frames over window * frame_len slots."""
    if window < 1:
        raise PreconditionError('window must be >= 1')
    node_ids, rates = frame_rates(log)
    return window_series(node_ids, log.first_frame, rates, window)


def alpha_fair_value(x, alpha=1.0):
    """Sum of the alpha-fair utility of 100 * x."""
    x = np.asarray(x, dtype=float)
    if alpha == 1:
        if np.any(x <= 0):
            raise MetricDomainError(
                'alpha=1 needs positive throughputs; clamp to a floor first')
        return float(np.sum(np.log(SCALE * x)))
    if np.any(x < 0):
        raise MetricDomainError('throughputs must be nonnegative')
    if alpha == 0:
        return float(np.sum(SCALE * x))
    return float(np.sum((SCALE * x) ** (1.0 - alpha) / (1.0 - alpha)))


def clamped_alpha_fair_value(x, alpha=1.0, floor=1e-3):
    return alpha_fair_value(np.maximum(np.asarray(x, dtype=float), floor),
                            alpha)


def jain_index(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise MetricDomainError('jain index needs at least one value')
    if np.any(x < 0):
        raise MetricDomainError('throughputs must be nonnegative')
    sq = np.sum(x ** 2)
    if sq == 0:
        raise MetricDomainError('jain index is undefined for all-zero input')
    return float(np.sum(x) ** 2 / (x.size * sq))


def rmse_vs_reference(series, reference, warmup=0):
    """RMSE over every (node, frame) pair after warmup where a reference exists."""
    if set(series.node_ids) != set(reference.node_ids):
        raise MisalignedSeriesError('node sets differ: {} vs {}'.format(
            series.node_ids, reference.node_ids))
    if warmup >= len(series.frames):
        raise PreconditionError('warmup {} not below series length {}'.format(
            warmup, len(series.frames)))
    ref_row = {int(f): i for i, f in enumerate(reference.frames)}
    missing = [int(f) for f in series.frames if int(f) not in ref_row]
    if missing:
        raise MisalignedSeriesError(
            'reference lacks frame {}'.format(missing[0]))
    keep = series.frames > series.frames[0] + warmup - 1 if warmup else \
        np.ones(len(series.frames), dtype=bool)
    rows = [ref_row[int(f)] for f in series.frames[keep]]
    cols = [reference.node_ids.index(n) for n in series.node_ids]
    ref = reference.values[np.ix_(rows, cols)]
    err = series.values[keep] - ref
    err = err[~np.isnan(ref)]
    if err.size == 0:
        raise MisalignedSeriesError('no overlapping reference values')
    return float(np.sqrt(np.mean(err ** 2)))


def slot_utilization(log, window, exclude=()):
    """Fraction of the last `window` frames in which each position carried a
    transmission from a node not in `exclude`."""
    if window < 1:
        raise PreconditionError('window must be >= 1')
    tail = log.tail(window)
    if tail.n_frames == 0:
        raise EmptyLogError('no complete frame in the window')
    return tail.busy(exclude).mean(axis=0)


def flow_throughputs(tcp_log, last_rounds=None):
    """Mean acks/rtt per flow in kbit/s over the last rounds of a TCP run."""
    if len(tcp_log) == 0:
        raise EmptyLogError('TCP log is empty')
    log = tcp_log if last_rounds is None else tcp_log.tail(last_rounds)
    return {fid: float(np.mean([v for _, v in series]))
            for fid, series in sorted(log.throughput_kbps().items())}


def write_throughput_csv(path, rows, header=('frame', 'node', 'throughput')):
    with open(path, 'w', newline='') as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow(['{:.6f}'.format(v) if isinstance(v, float) else v
                        for v in row])


def read_throughput_csv(path):
    """Inverse of write_throughput_csv: ({node: {frame: value}}, header)."""
    out = {}
    with open(path, newline='') as f:
        r = csv.reader(f)
        header = next(r)
        for frame, node, value in r:
            out.setdefault(int(node), {})[int(frame)] = float(value)
    return out, header
