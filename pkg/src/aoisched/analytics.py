"""Closed-form age and completion analytics for the two-phase system.

Phase 1: each VM is an M/G/1 queue fed by the Poisson thinning that the
schedule matrix p induces (entry p[j, v] is the probability a class-j job is
assigned to VM v). Phase 2: all compute departures share one non-preemptive
priority M/G/1 link, with priority order given by the weighted shortest
expected processing time rule. Mean waits come from the Pollaczek-Khinchine
formula and its priority generalization; both need only the first two service
moments, so everything here is exact given Poisson arrivals at each queue.

Per-class results, with share_j = rate_j / total_rate:
    completion_j = sum_v p[j,v] * (W1_v + S1_jv) + W2_j + S2_j
    age_j        = sum_v p[j,v] * S1_jv + c_j * (W2_j + S2_j)
where c_j = share_j under the "paper_theorem1" weighting and 1 otherwise.
The scalar objective is sum_j share_j * (theta * completion_j +
(1 - theta) * age_j).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import SystemConfig

# Queues within this margin of full utilization count as unstable for
# feasibility purposes; analytic formulas only hard-fail at 1.
STABILITY_MARGIN = 1e-3


class StabilityError(RuntimeError):
    """A queueing formula was evaluated at or beyond its stability limit."""


def check_schedule(p: np.ndarray, config: SystemConfig | None = None) -> list[str]:
    """Rule violations for a schedule matrix; empty list means valid."""
    problems: list[str] = []
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2:
        return [f"schedule must be 2-D, got shape {p.shape}"]
    if config is not None and p.shape != (config.num_classes, config.num_vms):
        problems.append(
            f"schedule shape {p.shape} does not match "
            f"(J={config.num_classes}, V={config.num_vms})"
        )
    if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
        problems.append("schedule entries must lie in [0, 1]")
    bad_rows = np.where(np.abs(p.sum(axis=1) - 1.0) > 1e-9)[0]
    if bad_rows.size:
        problems.append(
            f"schedule rows {list(bad_rows + 1)} do not sum to 1 within 1e-9"
        )
    return problems


def service_moment_matrices(config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """First and second compute-service moments, shape (J, V).

    A class-j job on VM v is served in shift*size + Exp(rate/size) ms. The
    exact second moment is (b + 1/a)^2 + 1/a^2 expanded below; the
    "paper_literal" mode reproduces a published variant b^2 + b + (b+2)/a
    that drops the size scaling on its middle terms.
    """
    d = config.compute_sizes()[:, None]
    rate = np.array([v.rate for v in config.vms])[None, :]
    shift = np.array([v.shift for v in config.vms])[None, :]
    b = shift * d
    inv_a = d / rate
    m1 = b + inv_a
    if config.moment_mode == "paper_literal":
        m2 = b * b + b + (b + 2.0) * inv_a
    else:
        m2 = b * b + 2.0 * b * inv_a + 2.0 * inv_a * inv_a
    return m1, m2


def net_service_moments(config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """First and second network-service moments per class, shape (J,) each."""
    e = config.output_sizes()
    b = config.network.shift * e
    inv_g = e / config.network.rate
    m1 = b + inv_g
    if config.moment_mode == "paper_literal":
        m2 = b * b + b + (b + 2.0) * inv_g
    else:
        m2 = b * b + 2.0 * b * inv_g + 2.0 * inv_g * inv_g
    return m1, m2


def vm_arrival_rates(p: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Poisson rate reaching each VM: Lambda_v = sum_j p[j,v] * rate_j."""
    return np.asarray(p, dtype=np.float64).T @ config.arrival_rates()


def vm_aggregate_moments(
    p: np.ndarray, config: SystemConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Mixture service moments seen by each VM, shape (V,) each.

    The mixture weight of class j at VM v is p[j,v]*rate_j / Lambda_v. VMs
    receiving no traffic get zero moments.
    """
    lam = config.arrival_rates()
    m1, m2 = service_moment_matrices(config)
    flow = np.asarray(p, dtype=np.float64) * lam[:, None]
    lam_v = flow.sum(axis=0)
    ez = np.zeros_like(lam_v)
    ez2 = np.zeros_like(lam_v)
    nz = lam_v > 0.0
    ez[nz] = (flow * m1).sum(axis=0)[nz] / lam_v[nz]
    ez2[nz] = (flow * m2).sum(axis=0)[nz] / lam_v[nz]
    return ez, ez2


def vm_waiting_time(
    lam_v: np.ndarray, ez: np.ndarray, ez2: np.ndarray
) -> np.ndarray:
    """Pollaczek-Khinchine mean wait per VM: Lambda*E[Z^2] / (2*(1 - rho))."""
    lam_v = np.atleast_1d(np.asarray(lam_v, dtype=np.float64))
    ez = np.atleast_1d(np.asarray(ez, dtype=np.float64))
    ez2 = np.atleast_1d(np.asarray(ez2, dtype=np.float64))
    rho = lam_v * ez
    bad = np.where(rho >= 1.0)[0]
    if bad.size:
        v = int(bad[0])
        raise StabilityError(
            f"compute queue at VM {v + 1} unstable: utilization {rho[v]:.6f} >= 1"
        )
    return lam_v * ez2 / (2.0 * (1.0 - rho))


def vm_waiting_times(p: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Mean compute wait at each VM under schedule p, shape (V,)."""
    lam_v = vm_arrival_rates(p, config)
    ez, ez2 = vm_aggregate_moments(p, config)
    return vm_waiting_time(lam_v, ez, ez2)


def wsept_order(config: SystemConfig) -> np.ndarray:
    """Class ids ordered by decreasing (w_j + g_j) / output_size.

    w_j + g_j = rate_j / total_rate regardless of theta, so the order only
    depends on arrival rates and output sizes. Ties break toward the lower
    class id.
    """
    lam = config.arrival_rates()
    key = (lam / lam.sum()) / config.output_sizes()
    ids = np.arange(1, config.num_classes + 1)
    order = np.lexsort((ids, -key))
    return ids[order]


def _priority_waits(config: SystemConfig) -> np.ndarray:
    """Mean network wait per class (class-id order) under WSEPT priorities."""
    lam = config.arrival_rates()
    mean_s2, m2_s2 = net_service_moments(config)
    residual = float(np.dot(lam, m2_s2)) / 2.0
    order = wsept_order(config) - 1
    rho = lam * mean_s2
    waits = np.empty(config.num_classes, dtype=np.float64)
    cum_prev = 0.0
    for level, j in enumerate(order):
        cum = cum_prev + rho[j]
        if cum >= 1.0:
            raise StabilityError(
                f"networking queue unstable at priority level {level + 1} "
                f"(class {j + 1}): cumulative utilization {cum:.6f} >= 1"
            )
        waits[j] = residual / ((1.0 - cum_prev) * (1.0 - cum))
        cum_prev = cum
    return waits


def priority_waiting_times(config: SystemConfig) -> np.ndarray:
    """Per-class mean network wait, indexed by class id order."""
    return _priority_waits(config)


def fcfs_waiting_time(config: SystemConfig) -> float:
    """Mean network wait if the link served FCFS instead of by priority."""
    lam = config.arrival_rates()
    mean_s2, m2_s2 = net_service_moments(config)
    rho = float(np.dot(lam, mean_s2))
    if rho >= 1.0:
        raise StabilityError(
            f"networking queue unstable: utilization {rho:.6f} >= 1"
        )
    residual = float(np.dot(lam, m2_s2)) / 2.0
    return residual / (1.0 - rho)


def _network_waits(config: SystemConfig, networking: str) -> np.ndarray:
    if networking == "priority":
        return priority_waiting_times(config)
    if networking == "fcfs":
        return np.full(config.num_classes, fcfs_waiting_time(config))
    raise ValueError(f"networking must be 'priority' or 'fcfs', got {networking!r}")


def expected_aoi(
    p: np.ndarray, config: SystemConfig, networking: str = "priority"
) -> np.ndarray:
    """Per-class mean age: schedule-averaged compute service plus the
    (optionally traffic-share weighted) network wait and service."""
    p = np.asarray(p, dtype=np.float64)
    m1, _ = service_moment_matrices(config)
    s1 = (p * m1).sum(axis=1)
    mean_s2, _ = net_service_moments(config)
    w2 = _network_waits(config, networking)
    if config.aoi_network_weighting == "paper_theorem1":
        share = config.arrival_rates() / config.total_rate
    else:
        share = np.ones(config.num_classes)
    return s1 + share * (w2 + mean_s2)


def expected_completion(
    p: np.ndarray, config: SystemConfig, networking: str = "priority"
) -> np.ndarray:
    """Per-class mean completion: both waits plus both services."""
    p = np.asarray(p, dtype=np.float64)
    m1, _ = service_moment_matrices(config)
    s1 = (p * m1).sum(axis=1)
    w1 = p @ vm_waiting_times(p, config)
    mean_s2, _ = net_service_moments(config)
    w2 = _network_waits(config, networking)
    return w1 + s1 + w2 + mean_s2


def weighted_metrics(
    p: np.ndarray, config: SystemConfig, networking: str = "priority"
) -> tuple[float, float]:
    """(weighted completion, weighted age), both share-weighted over classes."""
    share = config.arrival_rates() / config.total_rate
    comp = expected_completion(p, config, networking)
    aoi = expected_aoi(p, config, networking)
    return float(np.dot(share, comp)), float(np.dot(share, aoi))


def objective(
    p: np.ndarray, config: SystemConfig, networking: str = "priority"
) -> float:
    """Scalar tradeoff objective: sum_j share_j * (theta*C_j + (1-theta)*A_j)."""
    wc, wa = weighted_metrics(p, config, networking)
    return config.theta * wc + (1.0 - config.theta) * wa


@dataclass(frozen=True)
class StabilityReport:
    vm_utilization: np.ndarray
    network_utilization: float
    network_cumulative: np.ndarray  # cumulative rho per priority level
    priority_order: np.ndarray  # class ids, highest priority first
    margin: float
    stable: bool


def stability_report(
    p: np.ndarray, config: SystemConfig, margin: float = STABILITY_MARGIN
) -> StabilityReport:
    """Utilizations of every queue plus a margin-aware stability verdict."""
    lam_v = vm_arrival_rates(p, config)
    ez, _ = vm_aggregate_moments(p, config)
    rho_vm = lam_v * ez
    lam = config.arrival_rates()
    mean_s2, _ = net_service_moments(config)
    order = wsept_order(config)
    cum = np.cumsum((lam * mean_s2)[order - 1])
    stable = bool(
        np.all(rho_vm < 1.0 - margin) and (cum[-1] if cum.size else 0.0) < 1.0 - margin
    )
    return StabilityReport(
        vm_utilization=rho_vm,
        network_utilization=float(cum[-1]) if cum.size else 0.0,
        network_cumulative=cum,
        priority_order=order,
        margin=margin,
        stable=stable,
    )


REPORT_COLUMNS = [
    "class_id",
    "arrival_rate",
    "mean_wait_compute",
    "mean_service_compute",
    "mean_wait_network",
    "mean_service_network",
    "mean_aoi",
    "mean_completion",
]


@dataclass(frozen=True)
class AnalyticReport:
    """All closed-form per-class and per-VM results for one schedule."""

    class_ids: np.ndarray
    arrival_rates: np.ndarray
    wait_compute: np.ndarray
    service_compute: np.ndarray
    wait_network: np.ndarray
    service_network: np.ndarray
    aoi: np.ndarray
    completion: np.ndarray
    vm_rates: np.ndarray
    vm_utilization: np.ndarray
    priority_order: np.ndarray
    weighted_completion: float
    weighted_aoi: float
    objective: float
    theta: float
    moment_mode: str
    networking: str
    manifest: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "theta": self.theta,
            "moment_mode": self.moment_mode,
            "networking": self.networking,
            "objective": self.objective,
            "weighted_completion": self.weighted_completion,
            "weighted_aoi": self.weighted_aoi,
            "priority_order": [int(x) for x in self.priority_order],
            "vm_rates": [float(x) for x in self.vm_rates],
            "vm_utilization": [float(x) for x in self.vm_utilization],
            "classes": [
                {
                    "class_id": int(self.class_ids[j]),
                    "arrival_rate": float(self.arrival_rates[j]),
                    "mean_wait_compute": float(self.wait_compute[j]),
                    "mean_service_compute": float(self.service_compute[j]),
                    "mean_wait_network": float(self.wait_network[j]),
                    "mean_service_network": float(self.service_network[j]),
                    "mean_aoi": float(self.aoi[j]),
                    "mean_completion": float(self.completion[j]),
                }
                for j in range(len(self.class_ids))
            ],
        }
        if self.manifest:
            out["manifest"] = self.manifest
        return out

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            for j in range(len(self.class_ids)):
                writer.writerow(
                    [
                        int(self.class_ids[j]),
                        repr(float(self.arrival_rates[j])),
                        repr(float(self.wait_compute[j])),
                        repr(float(self.service_compute[j])),
                        repr(float(self.wait_network[j])),
                        repr(float(self.service_network[j])),
                        repr(float(self.aoi[j])),
                        repr(float(self.completion[j])),
                    ]
                )


def analytic_report(
    p: np.ndarray,
    config: SystemConfig,
    networking: str = "priority",
    manifest: dict | None = None,
) -> AnalyticReport:
    """Evaluate every closed-form quantity for one schedule."""
    p = np.asarray(p, dtype=np.float64)
    problems = check_schedule(p, config)
    if problems:
        raise ValueError("; ".join(problems))
    m1, _ = service_moment_matrices(config)
    s1 = (p * m1).sum(axis=1)
    w1 = p @ vm_waiting_times(p, config)
    mean_s2, _ = net_service_moments(config)
    w2 = _network_waits(config, networking)
    lam = config.arrival_rates()
    share = lam / lam.sum()
    if config.aoi_network_weighting == "paper_theorem1":
        aoi = s1 + share * (w2 + mean_s2)
    else:
        aoi = s1 + w2 + mean_s2
    completion = w1 + s1 + w2 + mean_s2
    lam_v = vm_arrival_rates(p, config)
    ez, _ = vm_aggregate_moments(p, config)
    wc = float(np.dot(share, completion))
    wa = float(np.dot(share, aoi))
    return AnalyticReport(
        class_ids=np.arange(1, config.num_classes + 1),
        arrival_rates=lam,
        wait_compute=w1,
        service_compute=s1,
        wait_network=w2,
        service_network=mean_s2,
        aoi=aoi,
        completion=completion,
        vm_rates=lam_v,
        vm_utilization=lam_v * ez,
        priority_order=wsept_order(config),
        weighted_completion=wc,
        weighted_aoi=wa,
        objective=config.theta * wc + (1.0 - config.theta) * wa,
        theta=config.theta,
        moment_mode=config.moment_mode,
        networking=networking,
        manifest=manifest or {},
    )
