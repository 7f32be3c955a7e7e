"""Closed-loop scenario runner.

Runs one plant under one controller and logs every step:

* ``none``          open loop, ``u = 0``
* ``dgr``/``fdgr``  data-guided regulation (batch / recursive)
* ``lqr_known``     LQR designed on the true (perturbed) plant
* ``dgr_then_lqr``  DGR until the data is informative, then identify ``A``
  from the collected data and freeze an LQR gain designed on the estimate
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import normalized_directions, trajectory_bound_series
from .errors import DareDiverged, InvalidInput
from .numkernel import as_matrix, numerical_rank, operator_norm, solve_dare, spectral_radius
from .regan import atilde
from .regulator import decompose_zw, dgr_init, dgr_step, fdgr_init, fdgr_step, identify
from .sysmodel import LtiSystem, perturb, step

log = logging.getLogger(__name__)

CONTROLLERS = ("none", "dgr", "fdgr", "lqr_known", "dgr_then_lqr")
OVERFLOW_NORM = 1e12
BOUND_RTOL = 1e-8


@dataclass
class ScenarioConfig:
    system: LtiSystem
    controller: str = "dgr"
    steps: int = 30
    alpha: float = 0.0
    perturb_std: float = 0.0
    noise_std: Optional[float] = None
    x0: Optional[np.ndarray] = None
    x0_std: float = 10.0
    switch_step: Optional[int] = None
    seed: int = 0
    lqr_Q: Optional[np.ndarray] = None
    lqr_R: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise InvalidInput(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.steps < 1:
            raise InvalidInput("steps must be >= 1")
        if self.controller == "dgr_then_lqr" and self.switch_step is not None:
            if not 0 <= self.switch_step < self.steps:
                raise InvalidInput("switch_step must lie in [0, steps)")
        if self.alpha < 0 or self.perturb_std < 0 or self.x0_std < 0:
            raise InvalidInput("alpha, perturb_std and x0_std must be >= 0")
        if self.noise_std is not None and self.noise_std < 0:
            raise InvalidInput("noise_std must be >= 0")


@dataclass
class TrajectoryLog:
    controller: str
    horizon: int
    x: np.ndarray
    u: np.ndarray
    norm_x: np.ndarray
    norm_z: np.ndarray
    rank_X: np.ndarray
    bound: np.ndarray
    phase: list = field(default_factory=list)
    overflow: bool = False

    def __len__(self):
        return self.x.shape[0]


def _plant(cfg):
    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    sys = perturb(cfg.system, cfg.perturb_std, np.random.default_rng(seeds[0]))
    if cfg.noise_std is not None:
        sys = LtiSystem(sys.A, sys.B, cfg.noise_std, sys.labels)
    if cfg.x0 is not None:
        x0 = np.asarray(cfg.x0, dtype=float).reshape(-1)
        if x0.shape[0] != sys.n:
            raise InvalidInput("x0 has the wrong dimension")
    else:
        x0 = np.random.default_rng(seeds[1]).normal(0.0, cfg.x0_std, size=sys.n)
    return sys, x0, np.random.default_rng(seeds[2])


def _weights(cfg, sys):
    Qw = np.eye(sys.n) if cfg.lqr_Q is None else as_matrix(cfg.lqr_Q, "lqr_Q")
    Rw = np.eye(sys.m) if cfg.lqr_R is None else as_matrix(cfg.lqr_R, "lqr_R")
    return Qw, Rw


def run_scenario(cfg):
    """Simulate ``cfg``; returns ``(TrajectoryLog, summary dict)``. Deterministic per seed."""
    sys, x0, noise = _plant(cfg)
    n, m = sys.n, sys.m
    summary = {
        "controller": cfg.controller,
        "n": n,
        "m": m,
        "steps": cfg.steps,
        "seed": cfg.seed,
        "alpha": cfg.alpha,
        "rho_A": spectral_radius(sys.A),
        "rho_Atilde": spectral_radius(atilde(sys)),
        "overflow": False,
        "switched_at": None,
        "identification_error": None,
        "closed_loop_rho": None,
        "dare_error": None,
    }

    xs = [x0]
    us = []
    phases = []
    K_fixed = None
    state = None
    phase = {"none": "open", "lqr_known": "lqr", "fdgr": "fdgr"}.get(cfg.controller, "dgr")

    if cfg.controller == "lqr_known":
        Qw, Rw = _weights(cfg, sys)
        try:
            _, K_fixed = solve_dare(sys.A, sys.B, Qw, Rw)
            summary["closed_loop_rho"] = spectral_radius(sys.A - sys.B @ K_fixed)
        except DareDiverged as exc:
            summary["dare_error"] = str(exc)
            phase = "open"
    elif cfg.controller in ("dgr", "dgr_then_lqr"):
        state = dgr_init(sys.B, cfg.alpha, x0)

    x = x0
    for t in range(cfg.steps):
        if cfg.controller == "fdgr":
            u = np.zeros(m) if state is None else state.u
        elif state is not None:
            u = state.u
        elif K_fixed is not None:
            u = -K_fixed @ x
        else:
            u = np.zeros(m)
        us.append(u)
        phases.append(phase)
        x_next = step(sys, x, u, noise)
        if not np.all(np.isfinite(x_next)) or np.linalg.norm(x_next) > OVERFLOW_NORM:
            summary["overflow"] = True
            log.info("state overflow at step %d; truncating log", t + 1)
            break
        xs.append(x_next)

        if cfg.controller == "fdgr":
            if state is None:
                state = fdgr_init(sys.B, cfg.alpha, x, x_next)
            else:
                state, _ = fdgr_step(state, x_next)
        elif state is not None:
            state, _ = dgr_step(state, x_next)
            if cfg.controller == "dgr_then_lqr" and _should_switch(cfg, t + 1, state, n):
                A_hat = identify(state)
                summary["switched_at"] = t + 1
                summary["identification_error"] = _rel_error(A_hat, sys.A)
                Qw, Rw = _weights(cfg, sys)
                try:
                    _, K_fixed = solve_dare(A_hat, sys.B, Qw, Rw)
                    summary["closed_loop_rho"] = spectral_radius(sys.A - sys.B @ K_fixed)
                    phase = "lqr"
                except DareDiverged as exc:
                    summary["dare_error"] = str(exc)
                    K_fixed = None
                    phase = "open"
                state = None
        x = x_next

    # input the controller would apply at the final logged state
    if state is not None:
        us.append(state.u)
    elif K_fixed is not None:
        us.append(-K_fixed @ x)
    else:
        us.append(np.zeros(m))
    phases.append(phase)

    X = np.column_stack(xs)
    T1 = X.shape[1]
    U = np.vstack(us[:T1])
    zbar, wbar = normalized_directions(X)
    norm_z = np.empty(T1)
    ranks = np.empty(T1, dtype=int)
    for r in range(T1):
        norm_z[r] = _z_norm(X, r)
        ranks[r] = numerical_rank(X[:, : r + 1])
    norm_x = np.linalg.norm(X, axis=0)

    bound = np.full(T1, np.nan)
    if cfg.controller in ("dgr", "fdgr", "dgr_then_lqr") and T1 > 1:
        last = T1 - 1
        if summary["switched_at"] is not None:
            last = summary["switched_at"]
        series = trajectory_bound_series(sys, cfg.alpha, zbar[:last], wbar[:last])
        bound[: last + 1] = series.L * norm_x[0]

    log_ = TrajectoryLog(
        controller=cfg.controller,
        horizon=cfg.steps,
        x=X.T.copy(),
        u=U,
        norm_x=norm_x,
        norm_z=norm_z,
        rank_X=ranks,
        bound=bound,
        phase=phases[:T1],
        overflow=summary["overflow"],
    )
    summary.update(log_stats(log_))
    if cfg.controller in ("dgr", "fdgr") and state is not None and state.t > 0:
        summary["identification_error"] = _rel_error(identify(state), sys.A)
    return log_, summary


def _rel_error(A_hat, A):
    return operator_norm(A_hat - A) / max(operator_norm(A), 1e-300)


def _should_switch(cfg, t, state, n):
    if cfg.switch_step is not None and t < cfg.switch_step:
        return False
    # identification uses X_{t-1} (all but the newest column)
    return numerical_rank(state.X[:, :-1]) == n


def _z_norm(X, r):
    if r == 0:
        return float(np.linalg.norm(X[:, 0]))
    z, _ = decompose_zw(X[:, :r], X[:, r])
    return float(np.linalg.norm(z))


def bound_violations(log_):
    ok = ~np.isnan(log_.bound)
    return int(np.count_nonzero(log_.norm_x[ok] > log_.bound[ok] * (1.0 + BOUND_RTOL)))


def log_stats(log_):
    n = log_.x.shape[1]
    full = np.flatnonzero(log_.rank_X == n)
    return {
        "peak_norm": float(np.max(log_.norm_x)),
        "final_norm": float(log_.norm_x[-1]),
        "first_full_rank_step": int(full[0]) if full.size else None,
        "bound_violations": bound_violations(log_),
    }


def compare_report(logs):
    """Per-controller peak/final norm, first full-rank step and bound-violation count."""
    if not logs:
        raise InvalidInput("no logs to compare")
    horizons = {lg.horizon for lg in logs}
    if len(horizons) != 1:
        raise InvalidInput(f"logs have different horizons: {sorted(horizons)}")
    rows = []
    for lg in logs:
        row = {"controller": lg.controller}
        row.update(log_stats(lg))
        row["overflow"] = lg.overflow
        rows.append(row)
    return {"horizon": horizons.pop(), "runs": rows}
