"""Schedule optimization: projected gradient descent over row simplexes.

The decision variable is the J x V schedule matrix p (rows are per-class
assignment distributions). Only the compute phase depends on p; the network
terms are constants folded into the objective so traces report the full
tradeoff objective. Gradient steps are projected row-wise onto the simplex
(sort-based Euclidean projection); compute-queue stability is enforced by
rejecting candidates beyond the margin inside the Armijo backtracking loop,
so every accepted iterate is feasible. The objective is convex when classes
share one compute size but can be nonconvex when per-class sizes mix on a VM
(segregating large jobs can beat any mixture), so optimize_pps multi-starts
from the uniform point and both proportional baselines and keeps the best
descent; the returned trace is the winning run's and is monotone by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog

from .analytics import (
    STABILITY_MARGIN,
    fcfs_waiting_time,
    net_service_moments,
    priority_waiting_times,
    service_moment_matrices,
)
from .model import ConfigError, SystemConfig, VmProfile


class InfeasibleError(RuntimeError):
    """No schedule can satisfy the stability margin."""


@dataclass(frozen=True)
class OptimizerSettings:
    max_iters: int = 5000
    rel_tol: float = 1.0e-12  # stop when the relative objective drop is below
    initial_step: float = 1.0
    armijo_c1: float = 1.0e-4
    armijo_shrink: float = 0.5
    step_growth: float = 2.0
    min_step: float = 1.0e-18
    stability_margin: float = STABILITY_MARGIN
    multistart: bool = True
    seed: int = 0


@dataclass(frozen=True)
class OptimizeTrace:
    """Result of one optimization: best schedule plus its descent trace."""

    schedule: np.ndarray
    objectives: np.ndarray  # objective after each accepted iterate, [0] = start
    converged: bool
    start: str  # label of the winning initial point

    @property
    def iterations(self) -> int:
        return len(self.objectives) - 1

    @property
    def objective(self) -> float:
        return float(self.objectives[-1])

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "objective"])
            for i, obj in enumerate(self.objectives):
                writer.writerow([i, repr(float(obj))])


def project_simplex_rows(m: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex.

    Sort-based O(V log V) per row; idempotent on points already on the
    simplex.
    """
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    u = np.sort(m, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1)
    ks = np.arange(1, m.shape[1] + 1)
    cond = u - (css - 1.0) / ks > 0.0
    # rho: last index where cond holds; cond[:, 0] is always true.
    rho = m.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = (css[np.arange(m.shape[0]), rho] - 1.0) / (rho + 1.0)
    return np.maximum(m - tau[:, None], 0.0)


class _Core:
    """Precomputed objective pieces: value and gradient as functions of p."""

    def __init__(self, config: SystemConfig):
        self.lam = config.arrival_rates()
        self.total = float(self.lam.sum())
        self.share = self.lam / self.total
        self.theta = config.theta
        self.m1, self.m2 = service_moment_matrices(config)
        mean_s2, _ = net_service_moments(config)
        w2 = priority_waiting_times(config)
        if config.aoi_network_weighting == "paper_theorem1":
            c = self.share
        else:
            c = np.ones(config.num_classes)
        self.net_const = float(
            np.dot(self.share * (self.theta + (1.0 - self.theta) * c), w2 + mean_s2)
        )
        self.lin = self.share[:, None] * self.m1

    def _loads(self, p: np.ndarray):
        flow = self.lam[:, None] * p
        lam_v = flow.sum(axis=0)
        a = (flow * self.m1).sum(axis=0)  # utilization per VM
        b = (flow * self.m2).sum(axis=0)  # Lambda_v * E[Z^2] per VM
        return lam_v, a, b

    def utilization(self, p: np.ndarray) -> np.ndarray:
        return self._loads(p)[1]

    def value(self, p: np.ndarray, margin: float = 0.0) -> float:
        """Objective at p; +inf past the stability margin."""
        lam_v, a, b = self._loads(p)
        if np.any(a > 1.0 - margin + 1e-12):
            return np.inf
        wait_part = float(np.sum(lam_v * b / (2.0 * (1.0 - a))))
        return float(
            np.sum(self.lin * p)
            + self.theta * wait_part / self.total
            + self.net_const
        )

    def grad(self, p: np.ndarray) -> np.ndarray:
        lam_v, a, b = self._loads(p)
        if np.any(a >= 1.0):
            raise InfeasibleError("gradient requested at an unstable point")
        denom = 2.0 * (1.0 - a)
        t1 = (b[None, :] + lam_v[None, :] * self.m2) / denom[None, :]
        t2 = (lam_v * b)[None, :] * self.m1 / (denom * (1.0 - a))[None, :]
        return self.lin + (self.theta / self.total) * self.lam[:, None] * (t1 + t2)


def objective_gradient(p: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Gradient of the analytic tradeoff objective with respect to p."""
    return _Core(config).grad(np.asarray(p, dtype=np.float64))


def _require_network_stable(config: SystemConfig) -> None:
    # Networking load ignores p entirely, so check it once up front.
    lam = config.arrival_rates()
    mean_s2, _ = net_service_moments(config)
    rho = float(np.dot(lam, mean_s2))
    if rho >= 1.0:
        raise InfeasibleError(
            f"networking queue unstable at utilization {rho:.6f}; "
            "no schedule can fix this"
        )


def _min_load_lp(config: SystemConfig) -> tuple[float, np.ndarray]:
    """Minimize the max VM utilization over row-stochastic schedules.

    Returns (t*, minimizing schedule). Serves as the feasibility certificate:
    the margin is achievable iff t* <= 1 - margin.
    """
    lam = config.arrival_rates()
    m1, _ = service_moment_matrices(config)
    J, V = m1.shape
    n = J * V
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.zeros((V, n + 1))
    for v in range(V):
        a_ub[v, v::V] = lam * m1[:, v]
        a_ub[v, -1] = -1.0
    a_eq = np.zeros((J, n + 1))
    for j in range(J):
        a_eq[j, j * V : (j + 1) * V] = 1.0
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(V),
        A_eq=a_eq,
        b_eq=np.ones(J),
        bounds=[(0.0, None)] * n + [(0.0, None)],
        method="highs",
    )
    if not res.success:
        raise InfeasibleError(f"feasibility LP failed: {res.message}")
    return float(res.x[-1]), res.x[:-1].reshape(J, V)


def _nearest_feasible(
    anchor: np.ndarray, config: SystemConfig, margin: float
) -> np.ndarray:
    """Minimal-perturbation projection of anchor onto the feasible set.

    Dykstra's alternating projections between the product of row simplexes
    and each VM's stability halfspace; falls back to blending toward the LP
    minimizer to clear any residual overshoot.
    """
    core = _Core(config)
    if np.all(core.utilization(anchor) <= 1.0 - margin):
        return anchor.copy()
    t_star, p_lp = _min_load_lp(config)
    if t_star > 1.0 - margin:
        raise InfeasibleError(
            f"no schedule satisfies the stability margin: best achievable "
            f"max utilization {t_star:.6f} > {1.0 - margin:.6f}"
        )
    lam = config.arrival_rates()
    m1, _ = service_moment_matrices(config)
    coeff = lam[:, None] * m1  # halfspace normals, one column per VM
    sqnorm = (coeff**2).sum(axis=0)
    bound = 1.0 - margin

    p = anchor.copy()
    n_sets = 1 + config.num_vms
    increments = [np.zeros_like(p) for _ in range(n_sets)]
    for _ in range(500):
        for s in range(n_sets):
            z = p + increments[s]
            if s == 0:
                proj = project_simplex_rows(z)
            else:
                v = s - 1
                over = float((coeff[:, v] * z[:, v]).sum()) - bound
                proj = z.copy()
                if over > 0.0:
                    proj[:, v] = z[:, v] - over * coeff[:, v] / sqnorm[v]
            increments[s] = z - proj
            p = proj
        if (
            np.all(core.utilization(p) <= bound + 1e-12)
            and np.all(p >= -1e-12)
            and np.allclose(p.sum(axis=1), 1.0, atol=1e-12)
        ):
            break
    p = project_simplex_rows(np.maximum(p, 0.0))
    util = core.utilization(p)
    if np.any(util > bound):
        # The Dykstra iterate can overshoot by float dust; blend toward the
        # strictly feasible LP point just enough to clear the margin.
        util_lp = core.utilization(p_lp)
        with np.errstate(divide="ignore", invalid="ignore"):
            need = (util - bound) / np.maximum(util - util_lp, 1e-300)
        s = float(np.clip(np.max(need[util > bound]), 0.0, 1.0))
        s = min(1.0, s * (1.0 + 1e-9) + 1e-12)
        p = (1.0 - s) * p + s * p_lp
        p = project_simplex_rows(p)
        if np.any(core.utilization(p) > bound + 1e-9):
            raise InfeasibleError("could not project anchor to the feasible set")
    return p


def feasible_init(
    config: SystemConfig, margin: float = STABILITY_MARGIN
) -> np.ndarray:
    """Uniform schedule, minimally shifted to meet the stability margin."""
    _require_network_stable(config)
    uniform = np.full((config.num_classes, config.num_vms), 1.0 / config.num_vms)
    return _nearest_feasible(uniform, config, margin)


def baseline_rca(
    config: SystemConfig, margin: float = STABILITY_MARGIN
) -> np.ndarray:
    """Rate-blind baseline: uniform rows (projected to feasibility if needed)."""
    return feasible_init(config, margin)


def baseline_pca(
    config: SystemConfig,
    mode: str = "paper_literal",
    margin: float = STABILITY_MARGIN,
) -> np.ndarray:
    """Proportional assignment baseline.

    "paper_literal" weights VMs proportionally to their mean service time
    (as published; slower VMs get more traffic), "inverse_time" weights by
    the reciprocal (faster VMs get more). Compute size cancels row-wise, so
    every class gets the same row.
    """
    _require_network_stable(config)
    m1, _ = service_moment_matrices(config)
    if mode == "paper_literal":
        w = m1
    elif mode == "inverse_time":
        w = 1.0 / m1
    else:
        raise ConfigError(f"unknown pca mode {mode!r}")
    p = w / w.sum(axis=1, keepdims=True)
    return _nearest_feasible(p, config, margin)


def _pgd(
    core: _Core, p0: np.ndarray, settings: OptimizerSettings
) -> tuple[np.ndarray, list[float], bool]:
    margin = settings.stability_margin
    p = p0.copy()
    f = core.value(p, margin)
    if not np.isfinite(f):
        raise InfeasibleError("initial point violates the stability margin")
    objs = [f]
    step = settings.initial_step
    converged = False
    scale = max(1.0, float(np.abs(p0).max()))
    for _ in range(settings.max_iters):
        g = core.grad(p)
        accepted = False
        while step >= settings.min_step:
            cand = project_simplex_rows(p - step * g)
            move = p - cand
            move_sq = float((move * move).sum())
            if move_sq <= (1e-16 * scale) ** 2:
                break  # stationary at this step size; shrinking cannot help
            fc = core.value(cand, margin)
            if fc <= f and fc <= f - settings.armijo_c1 / step * move_sq:
                accepted = True
                break
            step *= settings.armijo_shrink
        if not accepted:
            converged = True
            break
        drop = f - fc
        p, f = cand, fc
        objs.append(f)
        if drop <= settings.rel_tol * max(1.0, abs(f)):
            converged = True
            break
        step = min(step * settings.step_growth, settings.initial_step * 1e9)
    return p, objs, converged


def optimize_pps(
    config: SystemConfig,
    settings: OptimizerSettings | None = None,
    initial: np.ndarray | None = None,
) -> OptimizeTrace:
    """Minimize the tradeoff objective over row-stochastic stable schedules.

    With multistart on (and no explicit initial point) descent also runs from
    both proportional baselines and the best run wins, which guarantees the
    result is never worse than those baselines even off the convex regime.
    """
    settings = settings or OptimizerSettings()
    _require_network_stable(config)
    core = _Core(config)
    margin = settings.stability_margin

    starts: list[tuple[str, np.ndarray]] = []
    if initial is not None:
        starts.append(("given", _nearest_feasible(np.asarray(initial, float), config, margin)))
    else:
        starts.append(("uniform", feasible_init(config, margin)))
        if settings.multistart:
            starts.append(("pca_literal", baseline_pca(config, "paper_literal", margin)))
            starts.append(("pca_inverse", baseline_pca(config, "inverse_time", margin)))

    best: tuple[np.ndarray, list[float], bool, str] | None = None
    for label, p0 in starts:
        p, objs, conv = _pgd(core, p0, settings)
        if best is None or objs[-1] < best[1][-1]:
            best = (p, objs, conv, label)
    p, objs, conv, label = best
    return OptimizeTrace(
        schedule=p,
        objectives=np.array(objs),
        converged=conv,
        start=label,
    )


@dataclass(frozen=True)
class TwoStageSchedule:
    """First pick a switch (pi: J x M), then a VM behind it (tor: M x V)."""

    pi: np.ndarray
    tor: np.ndarray


def expand_two_stage(
    ts: TwoStageSchedule, config: SystemConfig
) -> tuple[np.ndarray, SystemConfig]:
    """Flatten the two-stage schedule to q[j, (u,v)] = pi[j,u] * tor[u,v].

    Returns the J x (M*V) matrix plus a config whose VM list is tiled M
    times, so every single-stage analytic applies to (q, flat_config)
    unchanged. Effective per-(switch, VM) arrival rates are then
    vm_arrival_rates(q, flat_config).
    """
    pi = np.asarray(ts.pi, dtype=np.float64)
    tor = np.asarray(ts.tor, dtype=np.float64)
    if pi.ndim != 2 or tor.ndim != 2:
        raise ConfigError("two-stage matrices must be 2-D")
    if pi.shape[0] != config.num_classes:
        raise ConfigError(
            f"pi has {pi.shape[0]} rows, config has {config.num_classes} classes"
        )
    if pi.shape[1] != tor.shape[0]:
        raise ConfigError(
            f"pi is J x {pi.shape[1]} but tor is {tor.shape[0]} x V"
        )
    if tor.shape[1] != config.num_vms:
        raise ConfigError(
            f"tor has {tor.shape[1]} columns, config has {config.num_vms} VMs"
        )
    q = (pi[:, :, None] * tor[None, :, :]).reshape(pi.shape[0], -1)
    m = pi.shape[1]
    tiled = tuple(
        VmProfile(id=u * config.num_vms + v.id, rate=v.rate, shift=v.shift)
        for u in range(m)
        for v in config.vms
    )
    return q, replace(config, vms=tiled)


def optimize_two_stage(
    config: SystemConfig,
    num_tors: int,
    settings: OptimizerSettings | None = None,
    rounds: int = 4,
) -> tuple[TwoStageSchedule, np.ndarray]:
    """Alternating single-stage descents over pi (switch choice) and tor rows.

    Each half-step is projected gradient descent on one factor with the other
    fixed; the flattened load must stay within the stability margin. Returns
    the schedule plus the objective after every accepted half-step.
    """
    settings = settings or OptimizerSettings()
    _require_network_stable(config)
    if num_tors < 1:
        raise ConfigError(f"num_tors must be >= 1, got {num_tors}")
    J, V = config.num_classes, config.num_vms
    ts = TwoStageSchedule(
        pi=np.full((J, num_tors), 1.0 / num_tors),
        tor=np.full((num_tors, V), 1.0 / V),
    )
    q, flat = expand_two_stage(ts, config)
    core = _Core(flat)
    margin = settings.stability_margin
    if not np.isfinite(core.value(q, margin)):
        # Uniform/uniform overloads some VM; lean on the single-stage
        # feasible point replicated across switches.
        p = feasible_init(config, margin)
        ts = TwoStageSchedule(pi=ts.pi, tor=np.tile(p.mean(axis=0), (num_tors, 1)))
        q, _ = expand_two_stage(ts, config)
        if not np.isfinite(core.value(q, margin)):
            raise InfeasibleError("no feasible two-stage starting point found")

    def value(ts: TwoStageSchedule) -> float:
        q, _ = expand_two_stage(ts, config)
        return core.value(q, margin)

    objs = [value(ts)]
    half = replace(settings, max_iters=max(settings.max_iters // (2 * rounds), 50))
    for _ in range(rounds):
        # Descend on pi with tor fixed: q is linear in pi.
        pi, tor = ts.pi, ts.tor

        class _PiCore:
            def value(self, x, margin=margin):
                return core.value(
                    (x[:, :, None] * tor[None, :, :]).reshape(J, -1), margin
                )

            def grad(self, x):
                g = core.grad((x[:, :, None] * tor[None, :, :]).reshape(J, -1))
                return np.einsum("juv,uv->ju", g.reshape(J, num_tors, V), tor)

        pi_new, pi_objs, _ = _pgd(_PiCore(), pi, half)
        ts = TwoStageSchedule(pi=pi_new, tor=tor)
        objs.extend(pi_objs[1:])

        pi = ts.pi

        class _TorCore:
            def value(self, x, margin=margin):
                return core.value(
                    (pi[:, :, None] * x[None, :, :]).reshape(J, -1), margin
                )

            def grad(self, x):
                g = core.grad((pi[:, :, None] * x[None, :, :]).reshape(J, -1))
                return np.einsum("juv,ju->uv", g.reshape(J, num_tors, V), pi)

        tor_new, tor_objs, _ = _pgd(_TorCore(), ts.tor, half)
        ts = TwoStageSchedule(pi=pi, tor=tor_new)
        objs.extend(tor_objs[1:])
    return ts, np.array(objs)
