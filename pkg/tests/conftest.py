"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from aoisched.model import JobClass, NetworkProfile, SystemConfig, VmProfile


def make_system(
    classes,
    vms,
    net=(112.0, 18.0),
    theta=0.3,
    weighting="paper_theorem1",
    moment_mode="exact",
    **kwargs,
):
    """Build a SystemConfig from (rate, d_size, e_size) and (rate, shift) tuples."""
    return SystemConfig(
        classes=tuple(
            JobClass(id=i + 1, arrival_rate=r, compute_size=d, output_size=e)
            for i, (r, d, e) in enumerate(classes)
        ),
        vms=tuple(VmProfile(id=i + 1, rate=a, shift=b) for i, (a, b) in enumerate(vms)),
        network=NetworkProfile(rate=net[0], shift=net[1]),
        theta=theta,
        aoi_network_weighting=weighting,
        moment_mode=moment_mode,
        **kwargs,
    )


def random_instance(rng, equal_d=False, j_max=6, v_max=4, theta=None):
    """Random stable instance: every schedule keeps all queues under 0.8 load.

    Worst-case VM load (all classes on their slowest VM) is scaled to 0.8, so
    any row-stochastic matrix is feasible; useful for property tests that
    sample schedules freely.
    """
    J = int(rng.integers(3, j_max + 1))
    V = int(rng.integers(2, v_max + 1))
    vms = [
        (float(rng.uniform(0.03, 0.12)), float(rng.uniform(0.0, 5.0)))
        for _ in range(V)
    ]
    if equal_d:
        dsz = np.full(J, float(rng.uniform(0.5, 2.0)))
    else:
        dsz = rng.uniform(0.5, 2.0, J)
    esz = rng.uniform(0.5, 1.5, J)
    lam = rng.uniform(0.5, 1.5, J)
    worst_m1 = np.array([max(b * d + d / a for a, b in vms) for d in dsz])
    lam = lam / float(lam @ worst_m1) * 0.8
    net_m1 = esz * (18.0 + 1.0 / 112.0)
    s = float(lam @ net_m1)
    if s > 0.8:
        lam = lam * (0.8 / s)
    if theta is None:
        theta = float(rng.uniform(0.0, 1.0))
    classes = [(float(lam[j]), float(dsz[j]), float(esz[j])) for j in range(J)]
    return make_system(classes, vms, theta=theta)


@pytest.fixture
def tiny_config():
    # Two light classes on two exponential VMs; stable under any schedule.
    return make_system(
        [(0.004, 1.0, 1.0), (0.003, 1.0, 0.8)],
        [(0.05, 0.0), (0.04, 0.0)],
    )
