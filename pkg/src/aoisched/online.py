"""Window-based rate estimation and the online scheduling replay.

The online driver partitions an arrival trace into fixed-length windows.
Window 0 runs with a uniform schedule (no rate information yet); every later
window re-solves the schedule optimization against the rates estimated from
the previous window's counts and serves the network queue with priority keys
recomputed from the same estimates. The whole trace is then replayed through
the queueing kernels in one pass, so cross-window backlog carries over
exactly. An offline reference replays the identical trace and service
randomness under one schedule solved with the configured (true) rates, which
makes online-vs-offline gaps a paired comparison rather than two noisy runs.

Trace files are CSV with header columns timestamp_ms,key (extra columns are
ignored). Keys are opaque; they map to job classes either through an explicit
class_map or by frequency-rank bucketing: distinct keys ranked by descending
count (ties by key string), rank r goes to class (r mod J) + 1.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .model import ConfigError, SystemConfig, validate_config
from .optimizer import InfeasibleError, OptimizerSettings, optimize_pps
from .simulator import (
    SimResult,
    _backlog_growing,
    _class_means,
    _poisson_arrivals,
    assign_vms,
    interdeparture_stats,
    network_start_times,
)


@dataclass(frozen=True)
class TraceRecord:
    timestamp: float  # ms since trace start
    class_key: str


@dataclass(frozen=True)
class TraceWindow:
    """Per-class arrival counts and rate estimates measured in one window."""

    index: int
    window_length: float
    counts: np.ndarray
    rates: np.ndarray  # counts / window_length, per ms


def ingest_trace(path: str | Path) -> list[TraceRecord]:
    """Read a trace CSV, sorted by timestamp.

    Requires header columns timestamp_ms and key; extra columns are ignored.
    Malformed rows and empty traces raise ConfigError with the line number.
    """
    path = Path(path)
    records: list[TraceRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty trace file") from None
        header = [h.strip() for h in header]
        try:
            t_col = header.index("timestamp_ms")
            k_col = header.index("key")
        except ValueError:
            raise ConfigError(
                f"{path}: header must contain timestamp_ms and key, got {header}"
            ) from None
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) <= max(t_col, k_col):
                raise ConfigError(f"{path}: line {lineno}: too few columns")
            try:
                ts = float(row[t_col])
            except ValueError:
                raise ConfigError(
                    f"{path}: line {lineno}: bad timestamp {row[t_col]!r}"
                ) from None
            if not np.isfinite(ts):
                raise ConfigError(f"{path}: line {lineno}: non-finite timestamp")
            records.append(TraceRecord(timestamp=ts, class_key=row[k_col].strip()))
    if not records:
        raise ConfigError(f"{path}: trace has no records")
    records.sort(key=lambda r: r.timestamp)
    return records


def resolve_classes(
    records: list[TraceRecord],
    num_classes: int,
    class_map: dict[str, int] | None = None,
) -> tuple[np.ndarray, np.ndarray, dict[str, int]]:
    """Map trace keys to class indices.

    Returns (timestamps, zero-based class indices, mapping used). An explicit
    class_map must cover every key; without one, keys are bucketed by
    frequency rank.
    """
    if not records:
        raise ConfigError("empty trace")
    keys = [r.class_key for r in records]
    if class_map is not None:
        for key, cid in class_map.items():
            if not 1 <= int(cid) <= num_classes:
                raise ConfigError(
                    f"class_map sends {key!r} to class {cid}, outside 1..{num_classes}"
                )
        missing = sorted({k for k in keys if k not in class_map})
        if missing:
            raise ConfigError(f"trace keys not in class_map: {missing[:5]}")
        mapping = {k: int(v) for k, v in class_map.items()}
    else:
        ranked = sorted(Counter(keys).items(), key=lambda kv: (-kv[1], kv[0]))
        mapping = {
            key: (rank % num_classes) + 1 for rank, (key, _) in enumerate(ranked)
        }
    times = np.array([r.timestamp for r in records], dtype=np.float64)
    cls = np.array([mapping[k] - 1 for k in keys], dtype=np.int64)
    order = np.argsort(times, kind="stable")
    return times[order], cls[order], mapping


def estimate_rates(
    records: list[TraceRecord],
    window_length: float,
    index: int,
    num_classes: int,
    class_map: dict[str, int] | None = None,
) -> TraceWindow:
    """Count arrivals per class in window [index*W, (index+1)*W) and divide."""
    if window_length <= 0.0:
        raise ConfigError(f"window_length must be positive, got {window_length}")
    times, cls, _ = resolve_classes(records, num_classes, class_map)
    lo, hi = index * window_length, (index + 1) * window_length
    mask = (times >= lo) & (times < hi)
    counts = np.bincount(cls[mask], minlength=num_classes)
    return TraceWindow(
        index=index,
        window_length=window_length,
        counts=counts,
        rates=counts / window_length,
    )


def synthesize_poisson_trace(
    config: SystemConfig, horizon: float, seed: int = 0
) -> list[TraceRecord]:
    """Stationary Poisson trace at the config's rates; keys are class ids."""
    if horizon <= 0.0:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    rng = np.random.Generator(np.random.PCG64DXSM(np.random.SeedSequence(seed)))
    records: list[TraceRecord] = []
    for c in config.classes:
        for t in _poisson_arrivals(rng, c.arrival_rate, horizon):
            records.append(TraceRecord(timestamp=float(t), class_key=str(c.id)))
    records.sort(key=lambda r: r.timestamp)
    return records


def template_class_map(config: SystemConfig) -> dict[str, int]:
    """The identity mapping for traces keyed by class id strings."""
    return {str(c.id): c.id for c in config.classes}


def default_window(config: SystemConfig) -> float:
    """1e5 ms, stretched so a window expects at least 1000 arrivals."""
    return max(1.0e5, 1000.0 / config.total_rate)


@dataclass(frozen=True)
class OnlineResult:
    """Per-window decisions plus the end-to-end replay statistics.

    windows[k] holds the counts measured in window k; schedules[k] is the
    schedule that governed window k (solved from windows[k-1], uniform for
    k=0). `result` aggregates jobs arriving from window 1 onward, treating
    the cold-start window as warmup.
    """

    windows: list[TraceWindow]
    schedules: np.ndarray
    sources: list[str]  # per window: uniform | optimized | fallback | offline
    window_objectives: np.ndarray
    result: SimResult
    class_map: dict[str, int]
    window_length: float

    @property
    def num_windows(self) -> int:
        return len(self.windows)

    def to_dict(self) -> dict:
        return {
            "window_length": self.window_length,
            "num_windows": self.num_windows,
            "class_map": self.class_map,
            "windows": [
                {
                    "index": w.index,
                    "source": self.sources[k],
                    "objective_estimate": float(self.window_objectives[k]),
                    "counts": [int(x) for x in w.counts],
                    "rates": [float(x) for x in w.rates],
                }
                for k, w in enumerate(self.windows)
            ],
            "overall": self.result.to_dict(),
        }

    def write_windows_csv(self, path: str | Path) -> None:
        J = len(self.windows[0].rates)
        cols = ["window", "source", "objective_estimate"] + [
            f"rate_{j + 1}" for j in range(J)
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for k, w in enumerate(self.windows):
                writer.writerow(
                    [k, self.sources[k], repr(float(self.window_objectives[k]))]
                    + [repr(float(x)) for x in w.rates]
                )


def _window_partition(
    times: np.ndarray, window_length: float
) -> tuple[np.ndarray, int]:
    """Zero-based window index per job plus the count of full windows."""
    n_windows = int(np.floor(float(times[-1]) / window_length))
    if n_windows < 2:
        raise ConfigError(
            "need at least two full windows of trace data; got "
            f"{n_windows} at window_length={window_length}"
        )
    win = np.floor(times / window_length).astype(np.int64)
    return win, n_windows


def _replay(
    config: SystemConfig,
    times: np.ndarray,
    cls: np.ndarray,
    row_of_job: np.ndarray,
    keys: np.ndarray,
    seed: int,
) -> dict[str, np.ndarray]:
    """Push the trace through both queueing phases with per-job schedules.

    row_of_job selects each job's schedule matrix (e.g. its window); service
    randomness depends only on (seed, job position), so two replays of the
    same trace with the same seed are driven by identical draws even when
    their schedules differ.
    """
    rng = np.random.Generator(np.random.PCG64DXSM(np.random.SeedSequence(seed)))
    n = len(times)
    u = rng.random(n)
    e1 = rng.exponential(1.0, n)
    e2 = rng.exponential(1.0, n)
    return _replay_with_draws(config, times, cls, row_of_job, keys, u, e1, e2)


def _replay_with_draws(config, times, cls, row_of_job, keys, u, e1, e2):
    schedules = row_of_job["schedules"]
    win = row_of_job["window"]
    vm_idx = np.empty(len(times), dtype=np.int64)
    for k in range(schedules.shape[0]):
        mask = win == k
        if np.any(mask):
            vm_idx[mask] = assign_vms(u[mask], schedules[k], cls[mask])
    d = config.compute_sizes()
    e = config.output_sizes()
    vrate = np.array([v.rate for v in config.vms])
    vshift = np.array([v.shift for v in config.vms])
    s1 = d[cls] * (vshift[vm_idx] + e1 / vrate[vm_idx])
    s2 = e[cls] * (config.network.shift + e2 / config.network.rate)
    start1 = _kernels.fcfs_start(times, vm_idx, s1, config.num_vms)
    dep1 = start1 + s1
    start2 = network_start_times(
        dep1, cls, keys, s2, config.num_classes, "priority"
    )
    return {
        "vm_idx": vm_idx,
        "s1": s1,
        "s2": s2,
        "start1": start1,
        "dep1": dep1,
        "start2": start2,
        "dep2": start2 + s2,
    }


def _weighted_objective(
    config: SystemConfig,
    kc: np.ndarray,
    s1: np.ndarray,
    w2: np.ndarray,
    s2: np.ndarray,
    completion: np.ndarray,
) -> float:
    """Empirical weighted objective with empirical class frequencies."""
    if len(kc) == 0:
        return float("nan")
    n_classes = config.num_classes
    counts = np.bincount(kc, minlength=n_classes)
    freq = counts / counts.sum()
    nz = counts > 0
    s1m = _class_means(kc, s1, n_classes, counts)
    w2m = _class_means(kc, w2, n_classes, counts)
    s2m = _class_means(kc, s2, n_classes, counts)
    cm = _class_means(kc, completion, n_classes, counts)
    if config.aoi_network_weighting == "paper_theorem1":
        aoi_term = np.where(nz, s1m + freq * (w2m + s2m), 0.0)
    else:
        aoi_term = np.where(nz, s1m + w2m + s2m, 0.0)
    return float(
        np.sum(
            freq[nz] * (config.theta * cm[nz] + (1.0 - config.theta) * aoi_term[nz])
        )
    )


def _single_pass_result(
    config: SystemConfig,
    times: np.ndarray,
    cls: np.ndarray,
    flow: dict[str, np.ndarray],
    keep: np.ndarray,
    horizon: float,
) -> SimResult:
    n_classes = config.num_classes
    n_vms = config.num_vms
    w1 = flow["start1"] - times
    w2 = flow["start2"] - flow["dep1"]
    completion = flow["dep2"] - times
    aoi = flow["s1"] + w2 + flow["s2"]
    kc = cls[keep]
    counts = np.bincount(kc, minlength=n_classes)
    nanarr = np.full(n_classes, np.nan)
    freq = counts / max(counts.sum(), 1)
    c_m = _class_means(kc, completion[keep], n_classes, counts)
    aoi_m = _class_means(kc, aoi[keep], n_classes, counts)
    dep_mean, dep_cv = interdeparture_stats(flow["dep1"][keep])
    return SimResult(
        class_ids=np.arange(1, n_classes + 1),
        counts=counts,
        mean_wait_compute=_class_means(kc, w1[keep], n_classes, counts),
        mean_service_compute=_class_means(kc, flow["s1"][keep], n_classes, counts),
        mean_wait_network=_class_means(kc, w2[keep], n_classes, counts),
        mean_service_network=_class_means(kc, flow["s2"][keep], n_classes, counts),
        mean_aoi=aoi_m,
        ci_aoi=nanarr,
        mean_completion=c_m,
        ci_completion=nanarr,
        se_wait_compute=nanarr,
        se_service_compute=nanarr,
        se_wait_network=nanarr,
        se_service_network=nanarr,
        se_aoi=nanarr,
        se_completion=nanarr,
        weighted_objective=_weighted_objective(
            config, kc, flow["s1"][keep], w2[keep], flow["s2"][keep],
            completion[keep],
        ),
        ci_weighted_objective=float("nan"),
        weighted_completion=float(np.nansum(freq * c_m)),
        weighted_aoi=float(np.nansum(freq * aoi_m)),
        vm_utilization=np.bincount(
            flow["vm_idx"], weights=flow["s1"], minlength=n_vms
        )
        / max(horizon, float(flow["dep1"].max())),
        unstable_vms=_backlog_growing(
            times, flow["start1"], horizon, flow["vm_idx"], n_vms
        ),
        unstable_network=bool(
            _backlog_growing(flow["dep1"], flow["start2"], horizon, None, 1)[0]
        ),
        interdeparture_mean=dep_mean,
        interdeparture_cv=dep_cv,
        replications=1,
        horizon=horizon,
        backend=_kernels.backend_name(),
    )


def _prepare_trace(trace, config, window_length, class_map):
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    times, cls, mapping = resolve_classes(trace, config.num_classes, class_map)
    window_length = window_length or default_window(config)
    win, n_windows = _window_partition(times, window_length)
    keep = win < n_windows  # trailing partial window is dropped
    times, cls, win = times[keep], cls[keep], win[keep]
    counts = np.zeros((n_windows, config.num_classes), dtype=np.int64)
    for k in range(n_windows):
        counts[k] = np.bincount(cls[win == k], minlength=config.num_classes)
    windows = [
        TraceWindow(
            index=k,
            window_length=window_length,
            counts=counts[k],
            rates=counts[k] / window_length,
        )
        for k in range(n_windows)
    ]
    return times, cls, win, windows, mapping, window_length, n_windows


def online_driver(
    trace: list[TraceRecord],
    config: SystemConfig,
    window_length: float | None = None,
    settings: OptimizerSettings | None = None,
    class_map: dict[str, int] | None = None,
    seed: int = 0,
) -> OnlineResult:
    """Replay a trace under per-window re-optimized schedules.

    Window k >= 1 is governed by the schedule solved against window k-1's
    estimated rates (warm-started from the previous schedule); classes unseen
    in the estimation window get uniform rows, and an infeasible window falls
    back to the previous schedule (flagged, never aborted). Priority keys for
    window k's jobs come from the same estimates. Statistics cover windows
    1..K-1; the uniform cold-start window is treated as warmup.
    """
    settings = settings or OptimizerSettings()
    times, cls, win, windows, mapping, window_length, n_windows = _prepare_trace(
        trace, config, window_length, class_map
    )
    J, V = config.num_classes, config.num_vms
    e_sizes = config.output_sizes()

    schedules = np.empty((n_windows, J, V))
    sources: list[str] = []
    key_rows = np.empty((n_windows, J))
    schedules[0] = np.full((J, V), 1.0 / V)
    sources.append("uniform")
    key_rows[0] = (1.0 / J) / e_sizes  # no estimates yet: act as if uniform
    for k in range(1, n_windows):
        est = windows[k - 1].rates
        if est.sum() <= 0.0:
            schedules[k] = schedules[k - 1]
            key_rows[k] = key_rows[k - 1]
            sources.append("fallback")
            continue
        key_rows[k] = (est / est.sum()) / e_sizes
        try:
            trace_cfg = config.with_rates(est)
            sched = optimize_pps(
                trace_cfg, settings, initial=schedules[k - 1]
            ).schedule
            unseen = est <= 0.0
            if np.any(unseen):
                sched = sched.copy()
                sched[unseen] = 1.0 / V
            schedules[k] = sched
            sources.append("optimized")
        except InfeasibleError:
            schedules[k] = schedules[k - 1]
            sources.append("fallback")

    flow = _replay(
        config,
        times,
        cls,
        {"schedules": schedules, "window": win},
        key_rows[win, cls],
        seed,
    )

    w2 = flow["start2"] - flow["dep1"]
    completion = flow["dep2"] - times
    window_objectives = np.array(
        [
            _weighted_objective(
                config,
                cls[win == k],
                flow["s1"][win == k],
                w2[win == k],
                flow["s2"][win == k],
                completion[win == k],
            )
            for k in range(n_windows)
        ]
    )
    result = _single_pass_result(
        config, times, cls, flow, win >= 1, n_windows * window_length
    )
    return OnlineResult(
        windows=windows,
        schedules=schedules,
        sources=sources,
        window_objectives=window_objectives,
        result=result,
        class_map=mapping,
        window_length=window_length,
    )


def offline_reference(
    trace: list[TraceRecord],
    config: SystemConfig,
    window_length: float | None = None,
    settings: OptimizerSettings | None = None,
    class_map: dict[str, int] | None = None,
    seed: int = 0,
) -> OnlineResult:
    """Replay the same trace under one schedule solved with the true rates.

    Shares the draw discipline of online_driver (same seed means identical
    service randomness per job), so online minus offline is a paired
    comparison. Statistics cover the same windows (1..K-1).
    """
    settings = settings or OptimizerSettings()
    times, cls, win, windows, mapping, window_length, n_windows = _prepare_trace(
        trace, config, window_length, class_map
    )
    J = config.num_classes
    schedule = optimize_pps(config, settings).schedule
    schedules = np.broadcast_to(
        schedule, (n_windows, J, config.num_vms)
    ).copy()
    lam = config.arrival_rates()
    key_row = (lam / lam.sum()) / config.output_sizes()

    flow = _replay(
        config,
        times,
        cls,
        {"schedules": schedules, "window": win},
        key_row[cls],
        seed,
    )
    w2 = flow["start2"] - flow["dep1"]
    completion = flow["dep2"] - times
    window_objectives = np.array(
        [
            _weighted_objective(
                config,
                cls[win == k],
                flow["s1"][win == k],
                w2[win == k],
                flow["s2"][win == k],
                completion[win == k],
            )
            for k in range(n_windows)
        ]
    )
    result = _single_pass_result(
        config, times, cls, flow, win >= 1, n_windows * window_length
    )
    return OnlineResult(
        windows=windows,
        schedules=schedules,
        sources=["offline"] * n_windows,
        window_objectives=window_objectives,
        result=result,
        class_map=mapping,
        window_length=window_length,
    )
