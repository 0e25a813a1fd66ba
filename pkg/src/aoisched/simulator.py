"""Discrete-event simulation of the two-phase compute/network system.

Each replication draws Poisson arrivals per class over [0, horizon), assigns
every job a VM by sampling its schedule row, runs each VM queue FCFS, then
feeds compute departures into the shared network link (non-preemptive
priority by default, FCFS optionally). Generated jobs all run to completion
(the system drains past the horizon), which keeps per-job samples unbiased
rather than censoring jobs still in flight.

Randomness and reproducibility: the master seed spawns one child SeedSequence
per replication; each replication's PCG64DXSM generator draws, in this fixed
order: per-class arrival gaps (ascending class id), VM-choice uniforms (in
merged arrival order), compute-service exponentials, network-service
exponentials, then per-class update-process gaps (ascending class id, only
when simulate_updates is on). Identical seeds therefore give identical
results, on either kernel backend.

Per-job samples: wait and service in each phase, completion = their sum, and
age = compute service + network wait + network service (+ source staleness at
compute start when simulate_updates is on; compute wait is excluded because
fresher inputs keep arriving until compute begins). Jobs arriving before
warmup_fraction * horizon are excluded from statistics. Confidence intervals
come from across-replication means (Student t).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as _sps

from . import _kernels
from .model import ConfigError, SystemConfig, validate_config
from .analytics import check_schedule

SERVICE_MODES = ("shifted_exponential", "deterministic")
NETWORKING_DISCIPLINES = ("priority", "fcfs")

EVENT_LOG_COLUMNS = [
    "serial",
    "class_id",
    "release",
    "compute_start",
    "compute_end",
    "net_start",
    "net_end",
]


@dataclass(frozen=True)
class SimConfig:
    """Knobs for one simulation run (system parameters live in SystemConfig)."""

    horizon: float = 1.0e6  # ms
    replications: int = 10
    warmup_fraction: float = 0.2
    seed: int = 0
    networking: str = "priority"
    service_mode: str = "shifted_exponential"
    simulate_updates: bool = False
    collect_event_log: bool = False
    confidence: float = 0.95


@dataclass(frozen=True)
class ScriptedJob:
    """One deterministic job for scripted runs: fixed times, no sampling."""

    release: float
    class_id: int
    compute_time: float
    network_time: float


@dataclass(frozen=True)
class SimResult:
    """Aggregated per-class statistics across replications.

    Mean columns are averages of per-replication means; ci_* are 95 percent
    (by default) half-widths from the replication means, nan when fewer than
    two replications contributed. weighted_objective applies the configured
    theta and AoI weighting using empirical class frequencies as weights.
    """

    class_ids: np.ndarray
    counts: np.ndarray
    mean_wait_compute: np.ndarray
    mean_service_compute: np.ndarray
    mean_wait_network: np.ndarray
    mean_service_network: np.ndarray
    mean_aoi: np.ndarray
    ci_aoi: np.ndarray
    mean_completion: np.ndarray
    ci_completion: np.ndarray
    se_wait_compute: np.ndarray
    se_service_compute: np.ndarray
    se_wait_network: np.ndarray
    se_service_network: np.ndarray
    se_aoi: np.ndarray
    se_completion: np.ndarray
    weighted_objective: float
    ci_weighted_objective: float
    weighted_completion: float
    weighted_aoi: float
    vm_utilization: np.ndarray
    unstable_vms: np.ndarray
    unstable_network: bool
    interdeparture_mean: float
    interdeparture_cv: float
    replications: int
    horizon: float
    backend: str
    event_log: np.ndarray | None = None
    manifest: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "replications": self.replications,
            "horizon": self.horizon,
            "backend": self.backend,
            "weighted_objective": self.weighted_objective,
            "ci_weighted_objective": _nanfloat(self.ci_weighted_objective),
            "weighted_completion": self.weighted_completion,
            "weighted_aoi": self.weighted_aoi,
            "vm_utilization": [float(x) for x in self.vm_utilization],
            "unstable_vms": [bool(x) for x in self.unstable_vms],
            "unstable_network": bool(self.unstable_network),
            "interdeparture_mean": _nanfloat(self.interdeparture_mean),
            "interdeparture_cv": _nanfloat(self.interdeparture_cv),
            "classes": [
                {
                    "class_id": int(self.class_ids[j]),
                    "count": int(self.counts[j]),
                    "mean_wait_compute": _nanfloat(self.mean_wait_compute[j]),
                    "mean_service_compute": _nanfloat(self.mean_service_compute[j]),
                    "mean_wait_network": _nanfloat(self.mean_wait_network[j]),
                    "mean_service_network": _nanfloat(self.mean_service_network[j]),
                    "mean_aoi": _nanfloat(self.mean_aoi[j]),
                    "ci_aoi": _nanfloat(self.ci_aoi[j]),
                    "mean_completion": _nanfloat(self.mean_completion[j]),
                    "ci_completion": _nanfloat(self.ci_completion[j]),
                }
                for j in range(len(self.class_ids))
            ],
        }
        if self.manifest:
            out["manifest"] = self.manifest
        return out

    def write_csv(self, path: str | Path) -> None:
        cols = [
            "class_id",
            "count",
            "mean_wait_compute",
            "mean_service_compute",
            "mean_wait_network",
            "mean_service_network",
            "mean_aoi",
            "ci_aoi",
            "mean_completion",
            "ci_completion",
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for j in range(len(self.class_ids)):
                writer.writerow(
                    [
                        int(self.class_ids[j]),
                        int(self.counts[j]),
                        repr(float(self.mean_wait_compute[j])),
                        repr(float(self.mean_service_compute[j])),
                        repr(float(self.mean_wait_network[j])),
                        repr(float(self.mean_service_network[j])),
                        repr(float(self.mean_aoi[j])),
                        repr(float(self.ci_aoi[j])),
                        repr(float(self.mean_completion[j])),
                        repr(float(self.ci_completion[j])),
                    ]
                )


def _nanfloat(x: float) -> float | None:
    x = float(x)
    return None if np.isnan(x) else x


def sample_shifted_exp(
    rng: np.random.Generator,
    rate: float,
    shift: float,
    size: int | None = None,
    mode: str = "shifted_exponential",
) -> np.ndarray | float:
    """Draw shift + Exp(rate); deterministic mode returns the shift exactly."""
    if rate <= 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    if shift < 0.0:
        raise ValueError(f"shift must be non-negative, got {shift}")
    if mode == "deterministic":
        if size is None:
            return shift
        return np.full(size, shift, dtype=np.float64)
    if mode != "shifted_exponential":
        raise ValueError(f"unknown service mode {mode!r}")
    return shift + rng.exponential(1.0 / rate, size=size)


def interdeparture_stats(departures: np.ndarray) -> tuple[float, float]:
    """Mean and coefficient of variation of sorted inter-departure gaps."""
    d = np.sort(np.asarray(departures, dtype=np.float64))
    if d.size < 3:
        return float("nan"), float("nan")
    gaps = np.diff(d)
    mean = float(gaps.mean())
    if mean <= 0.0:
        return mean, float("nan")
    return mean, float(gaps.std(ddof=1) / mean)


def _poisson_arrivals(
    rng: np.random.Generator, rate: float, horizon: float
) -> np.ndarray:
    """Arrival times of a Poisson(rate) process on [0, horizon)."""
    n_est = int(rate * horizon + 6.0 * np.sqrt(rate * horizon) + 16.0)
    times = np.cumsum(rng.exponential(1.0 / rate, n_est))
    while times.size == 0 or times[-1] < horizon:
        extra = np.cumsum(rng.exponential(1.0 / rate, max(16, n_est // 4)))
        base = times[-1] if times.size else 0.0
        times = np.concatenate([times, base + extra])
    return times[times < horizon]


def assign_vms(u: np.ndarray, p: np.ndarray, cls: np.ndarray) -> np.ndarray:
    """Map uniforms to VM indices by inverting each job's schedule row."""
    pcum = np.cumsum(np.asarray(p, dtype=np.float64), axis=1)
    vm_idx = np.empty(len(u), dtype=np.int64)
    for j in range(p.shape[0]):
        mask = cls == j
        if np.any(mask):
            vm_idx[mask] = np.searchsorted(pcum[j], u[mask], side="right")
    return np.minimum(vm_idx, p.shape[1] - 1)


def group_by_class(cls: np.ndarray, order: np.ndarray, n_classes: int):
    """Job indices grouped per class, each group in `order` order.

    Returns (grouped, offsets) in the layout the priority kernel expects.
    """
    cls_sorted = cls[order]
    grouped = order[np.argsort(cls_sorted, kind="stable")]
    counts = np.bincount(cls, minlength=n_classes)
    offsets = np.zeros(n_classes + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return grouped.astype(np.int64), offsets


def network_start_times(
    dep1: np.ndarray,
    cls: np.ndarray,
    key: np.ndarray,
    s2: np.ndarray,
    n_classes: int,
    networking: str,
    use_python_kernels: bool = False,
) -> np.ndarray:
    """Service start time at the shared link for every job."""
    fcfs = _kernels._fcfs_start_impl if use_python_kernels else _kernels.fcfs_start
    prio = (
        _kernels._priority_start_impl
        if use_python_kernels
        else _kernels.priority_start
    )
    order = np.argsort(dep1, kind="stable")
    if networking == "fcfs":
        start_sorted = fcfs(
            dep1[order], np.zeros(len(order), dtype=np.int64), s2[order], 1
        )
        start2 = np.empty_like(dep1)
        start2[order] = start_sorted
        return start2
    if networking != "priority":
        raise ValueError(f"unknown networking discipline {networking!r}")
    grouped, offsets = group_by_class(cls, order, n_classes)
    return prio(dep1, grouped, offsets, key.astype(np.float64), s2)


def _staleness(
    rng: np.random.Generator,
    config: SystemConfig,
    cls: np.ndarray,
    compute_start: np.ndarray,
) -> np.ndarray:
    """Age of the newest input update at compute start, per job.

    Every source class carries a Poisson update process (plus an implicit
    update at time 0); a job's sources are its class's info_set, defaulting
    to the class itself.
    """
    horizon = float(compute_start.max()) + 1.0 if compute_start.size else 1.0
    updates: list[np.ndarray] = []
    for c in config.classes:
        if c.update_rate is None:
            raise ConfigError(
                f"class {c.id}: simulate_updates needs update_rate set"
            )
        updates.append(_poisson_arrivals(rng, c.update_rate, horizon))
    y = np.zeros(len(cls), dtype=np.float64)
    for j, c in enumerate(config.classes):
        mask = cls == j
        if not np.any(mask):
            continue
        sources = c.info_set if c.info_set is not None else (c.id,)
        starts = compute_start[mask]
        newest = np.zeros(len(starts), dtype=np.float64)
        for sid in sources:
            upd = updates[sid - 1]
            idx = np.searchsorted(upd, starts, side="right")
            last = np.where(idx > 0, upd[np.maximum(idx - 1, 0)], 0.0)
            newest = np.maximum(newest, last)
        y[mask] = starts - newest
    return y


def _backlog_growing(
    enter: np.ndarray, leave: np.ndarray, horizon: float, group: np.ndarray | None,
    n_groups: int,
) -> np.ndarray:
    """Flag queues whose backlog rises monotonically across four checkpoints."""
    checks = np.array([0.25, 0.5, 0.75, 1.0]) * horizon
    backlog = np.zeros((len(checks), n_groups), dtype=np.int64)
    for i, t in enumerate(checks):
        mask = (enter <= t) & (leave > t)
        if group is None:
            backlog[i, 0] = int(mask.sum())
        else:
            backlog[i] = np.bincount(group[mask], minlength=n_groups)
    rising = np.all(np.diff(backlog, axis=0) > 0, axis=0)
    return rising & (backlog[-1] >= 10)


@dataclass
class _RepStats:
    counts: np.ndarray
    w1: np.ndarray
    s1: np.ndarray
    w2: np.ndarray
    s2: np.ndarray
    aoi: np.ndarray
    completion: np.ndarray
    objective: float
    vm_util: np.ndarray
    unstable_vms: np.ndarray
    unstable_net: bool
    dep_mean: float
    dep_cv: float


def _class_means(cls, values, n_classes, counts):
    sums = np.bincount(cls, weights=values, minlength=n_classes)
    out = np.full(n_classes, np.nan)
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz]
    return out


def _replication(
    config: SystemConfig,
    p: np.ndarray,
    sim: SimConfig,
    seed_seq: np.random.SeedSequence,
    want_log: bool,
) -> tuple[_RepStats, np.ndarray | None]:
    rng = np.random.Generator(np.random.PCG64DXSM(seed_seq))
    lam = config.arrival_rates()
    n_classes = config.num_classes
    n_vms = config.num_vms

    per_class = [_poisson_arrivals(rng, lam[j], sim.horizon) for j in range(n_classes)]
    t = np.concatenate(per_class) if per_class else np.empty(0)
    cls = np.concatenate(
        [np.full(len(a), j, dtype=np.int64) for j, a in enumerate(per_class)]
    )
    order = np.argsort(t, kind="stable")  # ties resolve by ascending class id
    t = t[order]
    cls = cls[order]
    n = len(t)
    if n == 0:
        raise ConfigError("no arrivals generated; horizon too short for the rates")

    u = rng.random(n)
    e1 = rng.exponential(1.0, n)
    e2 = rng.exponential(1.0, n)

    vm_idx = assign_vms(u, p, cls)
    d = config.compute_sizes()
    vrate = np.array([v.rate for v in config.vms])
    vshift = np.array([v.shift for v in config.vms])
    if sim.service_mode == "deterministic":
        s1 = d[cls] * vshift[vm_idx]
    else:
        s1 = d[cls] * (vshift[vm_idx] + e1 / vrate[vm_idx])
    e = config.output_sizes()
    if sim.service_mode == "deterministic":
        s2 = e[cls] * config.network.shift
    else:
        s2 = e[cls] * (config.network.shift + e2 / config.network.rate)

    fcfs = _kernels.fcfs_start
    start1 = fcfs(t, vm_idx, s1, n_vms)
    dep1 = start1 + s1

    class_key = (lam / lam.sum()) / config.output_sizes()
    start2 = network_start_times(
        dep1, cls, class_key[cls], s2, n_classes, sim.networking
    )
    dep2 = start2 + s2

    y = None
    if sim.simulate_updates:
        y = _staleness(rng, config, cls, start1)

    keep = t >= sim.warmup_fraction * sim.horizon
    kc = cls[keep]
    counts = np.bincount(kc, minlength=n_classes)
    w1 = _class_means(kc, (start1 - t)[keep], n_classes, counts)
    s1m = _class_means(kc, s1[keep], n_classes, counts)
    w2 = _class_means(kc, (start2 - dep1)[keep], n_classes, counts)
    s2m = _class_means(kc, s2[keep], n_classes, counts)
    aoi_samples = s1 + (start2 - dep1) + s2
    if y is not None:
        aoi_samples = aoi_samples + y
    aoim = _class_means(kc, aoi_samples[keep], n_classes, counts)
    complm = _class_means(kc, (dep2 - t)[keep], n_classes, counts)

    nz = counts > 0
    freq = counts / counts.sum()
    if config.aoi_network_weighting == "paper_theorem1":
        ym = (
            _class_means(kc, y[keep], n_classes, counts)
            if y is not None
            else np.zeros(n_classes)
        )
        aoi_term = np.where(nz, s1m + ym + freq * (w2 + s2m), 0.0)
    else:
        aoi_term = np.where(nz, aoim, 0.0)
    obj = float(
        np.sum(
            freq[nz]
            * (
                config.theta * complm[nz]
                + (1.0 - config.theta) * aoi_term[nz]
            )
        )
    )

    span = max(sim.horizon, float(dep1.max()))
    vm_util = np.bincount(vm_idx, weights=s1, minlength=n_vms) / span
    unstable_vms = _backlog_growing(t, start1, sim.horizon, vm_idx, n_vms)
    unstable_net = bool(
        _backlog_growing(dep1, start2, sim.horizon, None, 1)[0]
    )
    dep_mean, dep_cv = interdeparture_stats(dep1[keep])

    log = None
    if want_log:
        log = np.rec.fromarrays(
            [
                np.arange(n, dtype=np.int64),
                (cls + 1).astype(np.int64),
                t,
                start1,
                dep1,
                start2,
                dep2,
            ],
            names=EVENT_LOG_COLUMNS,
        )

    return (
        _RepStats(
            counts=counts,
            w1=w1,
            s1=s1m,
            w2=w2,
            s2=s2m,
            aoi=aoim,
            completion=complm,
            objective=obj,
            vm_util=vm_util,
            unstable_vms=unstable_vms,
            unstable_net=unstable_net,
            dep_mean=dep_mean,
            dep_cv=dep_cv,
        ),
        log,
    )


def _mean_se_ci(rep_values: np.ndarray, confidence: float):
    """Aggregate per-replication values: (mean, se, ci half-width), nan-aware."""
    vals = np.asarray(rep_values, dtype=np.float64)
    n = np.sum(~np.isnan(vals), axis=0)
    mean = np.where(n > 0, np.nanmean(vals, axis=0), np.nan)
    se = np.full(mean.shape, np.nan)
    ci = np.full(mean.shape, np.nan)
    multi = n > 1
    if np.any(multi):
        sd = np.nanstd(vals, axis=0, ddof=1)
        se = np.where(multi, sd / np.sqrt(np.maximum(n, 1)), np.nan)
        # Student t on the replication means; dof varies if classes miss reps.
        tq = np.where(
            multi, _sps.t.ppf(0.5 + confidence / 2.0, np.maximum(n - 1, 1)), np.nan
        )
        ci = tq * se
    return mean, se, ci


def run_simulation(
    config: SystemConfig, p: np.ndarray, sim: SimConfig | None = None
) -> SimResult:
    """Simulate the configured system under schedule p."""
    sim = sim or SimConfig()
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    sched_problems = check_schedule(p, config)
    if sched_problems:
        raise ConfigError("; ".join(sched_problems))
    if sim.horizon <= 0.0:
        raise ConfigError(f"horizon must be positive, got {sim.horizon}")
    if not 0.0 <= sim.warmup_fraction < 1.0:
        raise ConfigError(
            f"warmup_fraction must lie in [0, 1), got {sim.warmup_fraction}"
        )
    if sim.replications < 1:
        raise ConfigError(f"replications must be >= 1, got {sim.replications}")
    if sim.networking not in NETWORKING_DISCIPLINES:
        raise ConfigError(f"unknown networking discipline {sim.networking!r}")
    if sim.service_mode not in SERVICE_MODES:
        raise ConfigError(f"unknown service mode {sim.service_mode!r}")

    p = np.asarray(p, dtype=np.float64)
    children = np.random.SeedSequence(sim.seed).spawn(sim.replications)
    reps: list[_RepStats] = []
    event_log = None
    for r, child in enumerate(children):
        stats, log = _replication(
            config, p, sim, child, want_log=(sim.collect_event_log and r == 0)
        )
        if log is not None:
            event_log = log
        reps.append(stats)

    J = config.num_classes
    stack = lambda attr: np.vstack([getattr(s, attr) for s in reps])
    counts = np.sum([s.counts for s in reps], axis=0)
    w1_m, w1_se, _ = _mean_se_ci(stack("w1"), sim.confidence)
    s1_m, s1_se, _ = _mean_se_ci(stack("s1"), sim.confidence)
    w2_m, w2_se, _ = _mean_se_ci(stack("w2"), sim.confidence)
    s2_m, s2_se, _ = _mean_se_ci(stack("s2"), sim.confidence)
    aoi_m, aoi_se, aoi_ci = _mean_se_ci(stack("aoi"), sim.confidence)
    c_m, c_se, c_ci = _mean_se_ci(stack("completion"), sim.confidence)
    obj_m, _, obj_ci = _mean_se_ci(
        np.array([s.objective for s in reps])[:, None], sim.confidence
    )

    freq = counts / counts.sum()
    wc = float(np.nansum(freq * c_m))
    wa = float(np.nansum(freq * aoi_m))

    return SimResult(
        class_ids=np.arange(1, J + 1),
        counts=counts,
        mean_wait_compute=w1_m,
        mean_service_compute=s1_m,
        mean_wait_network=w2_m,
        mean_service_network=s2_m,
        mean_aoi=aoi_m,
        ci_aoi=aoi_ci,
        mean_completion=c_m,
        ci_completion=c_ci,
        se_wait_compute=w1_se,
        se_service_compute=s1_se,
        se_wait_network=w2_se,
        se_service_network=s2_se,
        se_aoi=aoi_se,
        se_completion=c_se,
        weighted_objective=float(obj_m[0]),
        ci_weighted_objective=float(obj_ci[0]),
        weighted_completion=wc,
        weighted_aoi=wa,
        vm_utilization=np.mean([s.vm_util for s in reps], axis=0),
        unstable_vms=np.any([s.unstable_vms for s in reps], axis=0),
        unstable_network=any(s.unstable_net for s in reps),
        interdeparture_mean=float(np.nanmean([s.dep_mean for s in reps])),
        interdeparture_cv=float(np.nanmean([s.dep_cv for s in reps])),
        replications=sim.replications,
        horizon=sim.horizon,
        backend=_kernels.backend_name(),
        event_log=event_log,
    )


def scripted_arrivals(
    jobs: list[ScriptedJob], vm_assignment: list[int], num_vms: int
) -> SimResult:
    """Deterministic run: explicit release times, VM choices, and durations.

    Jobs tied on release time are served in list order. The network link runs
    FCFS on compute departures (with deterministic times and one waiter at a
    time this coincides with any priority rule). Class ids need not be
    contiguous here; each distinct id reports its own row. Always uses the
    interpreted kernels, so tiny scripted runs never pay JIT compile time.
    """
    if len(jobs) != len(vm_assignment):
        raise ConfigError("need one VM id per scripted job")
    if not jobs:
        raise ConfigError("scripted run needs at least one job")
    order = np.argsort([j.release for j in jobs], kind="stable")
    t = np.array([jobs[i].release for i in order])
    ids = np.array([jobs[i].class_id for i in order], dtype=np.int64)
    s1 = np.array([jobs[i].compute_time for i in order])
    s2 = np.array([jobs[i].network_time for i in order])
    vm_idx = np.array([vm_assignment[i] - 1 for i in order], dtype=np.int64)
    if vm_idx.min() < 0 or vm_idx.max() >= num_vms:
        raise ConfigError("vm assignment outside 1..num_vms")

    distinct = np.unique(ids)
    cls = np.searchsorted(distinct, ids)
    n_classes = len(distinct)

    start1 = _kernels._fcfs_start_impl(t, vm_idx, s1, num_vms)
    dep1 = start1 + s1
    start2 = network_start_times(
        dep1, cls, np.zeros(len(t)), s2, n_classes, "fcfs", use_python_kernels=True
    )
    dep2 = start2 + s2

    counts = np.bincount(cls, minlength=n_classes)
    w2 = start2 - dep1
    nanarr = np.full(n_classes, np.nan)
    return SimResult(
        class_ids=distinct,
        counts=counts,
        mean_wait_compute=_class_means(cls, start1 - t, n_classes, counts),
        mean_service_compute=_class_means(cls, s1, n_classes, counts),
        mean_wait_network=_class_means(cls, w2, n_classes, counts),
        mean_service_network=_class_means(cls, s2, n_classes, counts),
        mean_aoi=_class_means(cls, s1 + w2 + s2, n_classes, counts),
        ci_aoi=nanarr,
        mean_completion=_class_means(cls, dep2 - t, n_classes, counts),
        ci_completion=nanarr,
        se_wait_compute=nanarr,
        se_service_compute=nanarr,
        se_wait_network=nanarr,
        se_service_network=nanarr,
        se_aoi=nanarr,
        se_completion=nanarr,
        weighted_objective=float("nan"),
        ci_weighted_objective=float("nan"),
        weighted_completion=float("nan"),
        weighted_aoi=float("nan"),
        vm_utilization=np.bincount(vm_idx, weights=s1, minlength=num_vms)
        / max(float(dep1.max()), 1e-12),
        unstable_vms=np.zeros(num_vms, dtype=bool),
        unstable_network=False,
        interdeparture_mean=float("nan"),
        interdeparture_cv=float("nan"),
        replications=1,
        horizon=float(dep2.max()),
        backend="python",
        event_log=np.rec.fromarrays(
            [np.arange(len(t)), ids, t, start1, dep1, start2, dep2],
            names=EVENT_LOG_COLUMNS,
        ),
    )


def policy_tradeoff_example() -> dict:
    """Three deterministic jobs, two VMs, two assignment policies.

    Job (compute, network) times: (50, 20), (15, 7), (1, 0.1), all released
    at t=0. Policy 1 runs jobs 1 then 2 on VM 1 and job 3 on VM 2; policy 2
    runs jobs 1 then 3 on VM 1 and job 2 on VM 2. Weighted sums use per-job
    weights 1.0 (job 2) and 0.5 (job 3); job 1 behaves identically under both
    policies and is excluded from the weighting.
    """
    jobs = [
        ScriptedJob(0.0, 1, 50.0, 20.0),
        ScriptedJob(0.0, 2, 15.0, 7.0),
        ScriptedJob(0.0, 3, 1.0, 0.1),
    ]
    out: dict = {}
    for name, assignment in (("policy1", [1, 1, 2]), ("policy2", [1, 2, 1])):
        res = scripted_arrivals(jobs, assignment, num_vms=2)
        completions = res.mean_completion
        ages = res.mean_aoi
        out[name] = {
            "completions": [float(x) for x in completions],
            "ages": [float(x) for x in ages],
            "weighted_age": float(1.0 * ages[1] + 0.5 * ages[2]),
            "weighted_completion": float(
                1.0 * completions[1] + 0.5 * completions[2]
            ),
        }
    return out
