"""Finite-horizon ventilation planning.

The plan is a sequence of ``cfg.steps`` ventilation rates, each held for one
control interval. Its cost is the sum of :func:`~pigvent.control.stage_cost`
along the trajectory the plant model predicts for it. The solver is a
projected gradient method with central finite differences and Armijo
backtracking, seeded by a coarse grid search; every candidate batch is pushed
through the plant model in one vectorised pass.
"""
from __future__ import annotations

import itertools
import math
from typing import NamedTuple, Optional

import numpy as np

from .control import ComfortBands, MpcConfig, stage_cost
from .plant import ExogenousSeries, HouseState, PlantParams, _advance, _state_humidity

_ARMIJO_C = 1e-4
_BACKTRACK = 0.5
_MAX_BACKTRACKS = 24


class MpcSolution(NamedTuple):
    move: float
    sequence: np.ndarray
    cost: float
    capped: bool
    iterations: int
    evaluations: int


def _check_forecast(exo_forecast: ExogenousSeries, n: int):
    if len(exo_forecast) < n:
        raise ValueError(f"forecast covers {len(exo_forecast)} intervals, horizon needs {n}")


def predict_cost(u_sequence, initial_state: HouseState, exo_forecast: ExogenousSeries, params: PlantParams,
                 cfg: MpcConfig, bands: ComfortBands) -> float:
    """Total stage cost of one ventilation plan; ``inf`` if the plant fails."""
    u_sequence = np.asarray(u_sequence, dtype=float)
    n = len(u_sequence)
    _check_forecast(exo_forecast, n)
    rows = exo_forecast[:n].rows()
    t = float(initial_state.indoor_temperature)
    d = _state_humidity(initial_state, params.pressure)
    if _separable(params):
        return float(_batch_cost(u_sequence[None, :], t, d, rows, params, cfg, bands)[0])
    total = 0.0
    for k in range(n):
        u = float(u_sequence[k])
        if not u > 0:
            return math.inf
        res = _advance(params, t, d, u, *rows[k], cfg.control_interval)
        if not res.ok:
            return math.inf
        total += stage_cost(res.temperature, res.relative_humidity, u, cfg, bands)
        t, d = res.temperature, res.humidity
    return total


def _separable(params: PlantParams) -> bool:
    return params.heat_evaluation == "implicit" and not params.mixing


def _step_costs(plans, t0, d0, rows, params, cfg, bands):
    """Per-step costs of an ``(m, n)`` array of plans in the separable mode.

    The quasi-steady state after a step depends on that step's inputs only,
    so every (plan, step) pair is evaluated in one pass. Failed steps cost
    ``inf``.
    """
    n = plans.shape[1]
    cols = np.asarray(rows[:n], dtype=float).T[:, None, :]
    u = np.where(plans > 0, plans, 1.0)
    res = _advance(params, np.full_like(u, t0), np.full_like(u, d0), u, *cols, cfg.control_interval)
    c = stage_cost(res.temperature, res.relative_humidity, u, cfg, bands)
    return np.where(res.ok & (plans > 0), c, np.inf)


def _batch_cost(plans, t0, d0, rows, params, cfg, bands):
    """Costs of an ``(m, n)`` array of plans, all started from the same state."""
    m, n = plans.shape
    if _separable(params):
        return _step_costs(plans, t0, d0, rows, params, cfg, bands).sum(axis=1)
    t = np.full(m, t0)
    d = np.full(m, d0)
    total = np.zeros(m)
    alive = np.all(plans > 0, axis=1)
    for k in range(n):
        u = np.where(alive, plans[:, k], 1.0)
        res = _advance(params, t, d, u, *rows[k], cfg.control_interval)
        alive &= res.ok
        total += stage_cost(res.temperature, res.relative_humidity, u, cfg, bands)
        t = np.where(alive, res.temperature, t0)
        d = np.where(alive, res.humidity, d0)
    return np.where(alive, total, np.inf)


def _grid_candidates(incumbent, levels, exhaustive):
    n = len(incumbent)
    cands = []
    for j in range(n):
        block = np.repeat(incumbent[None, :], len(levels), axis=0)
        block[:, j] = levels
        cands.append(block)
    if exhaustive:
        cands.append(np.array(list(itertools.product(levels, repeat=n))))
    return np.vstack(cands)


def _coordinate_search(x, fx, levels, cost, passes=4, first=None):
    """Grid coordinate search around ``x``.

    Each pass scores every single-move change to a grid level and also the
    plan that takes the best level for every move at once, which is kept
    only if it is better. ``first`` holds the
    single-move costs around ``x`` when they are already known.
    """
    n, m = len(x), len(levels)
    for k in range(passes):
        cands = _grid_candidates(x, levels, False)
        fc = first if k == 0 and first is not None else cost(cands)
        combined = levels[np.argmin(fc.reshape(n, m), axis=1)]
        fcomb = float(cost(combined[None, :])[0])
        j = int(np.argmin(fc))
        nx, nfx = (combined, fcomb) if fcomb <= fc[j] else (cands[j], float(fc[j]))
        if not nfx < fx:
            break
        x, fx = nx.copy(), nfx
    return x, fx


def mpc_solve(initial_state: HouseState, exo_forecast: ExogenousSeries, params: PlantParams, cfg: MpcConfig,
              bands: ComfortBands, warm_start: Optional[np.ndarray] = None) -> MpcSolution:
    """Minimise the horizon cost over the ventilation box ``[u_min, u_max]^n``.

    The returned plan is never worse than the warm start, the constant
    ``u_min`` and ``u_max`` plans, or any plan that changes a single move of
    the warm start to a level of the ``cfg.grid_levels`` uniform grid. In the
    default plant mode moves do not interact and the best plan built from
    warm-start moves and grid levels is found exactly. Otherwise a coordinate
    search over the grid refines the best seed, and when the full grid has at
    most ``cfg.exhaustive_limit`` points it is enumerated as well. The
    gradient phase starts from the result. ``capped`` is set when ``cfg.max_iter``
    runs out before the relative cost change drops below ``cfg.tol``.
    """
    n = cfg.steps
    _check_forecast(exo_forecast, n)
    lo, hi = cfg.u_min, cfg.u_max
    rows = exo_forecast[:n].rows()
    t0 = float(initial_state.indoor_temperature)
    d0 = _state_humidity(initial_state, params.pressure)
    evaluations = 0

    def cost(plans):
        nonlocal evaluations
        evaluations += len(plans)
        return _batch_cost(plans, t0, d0, rows, params, cfg, bands)

    if warm_start is None:
        warm = np.full(n, lo)
    else:
        warm = np.clip(np.asarray(warm_start, dtype=float)[:n], lo, hi)
        if len(warm) < n:
            warm = np.append(warm, np.full(n - len(warm), warm[-1] if len(warm) else lo))
    levels = np.linspace(lo, hi, cfg.grid_levels)
    if _separable(params):
        # Moves do not interact, so the best plan whose every move is either
        # the warm-start move or a grid level is a per-step argmin. It beats
        # every seed below, the full grid included.
        choices = np.column_stack([warm, np.repeat(levels[None, :], n, axis=0)])
        table = _step_costs(choices.T, t0, d0, rows, params, cfg, bands).T
        evaluations += choices.size // n
        pick = np.argmin(table, axis=1)
        x = choices[np.arange(n), pick]
        fx = float(table[np.arange(n), pick].sum())
    else:
        seeds = np.vstack([
            warm[None, :], np.full((1, n), lo), np.full((1, n), hi),
            _grid_candidates(warm, levels, cfg.grid_levels ** n <= cfg.exhaustive_limit),
        ])
        seed_cost = cost(seeds)
        best = int(np.argmin(seed_cost))
        x, fx = seeds[best].copy(), float(seed_cost[best])
        block = seed_cost[3:3 + n * len(levels)]
        x, fx = _coordinate_search(x, fx, levels, cost, first=block if np.array_equal(x, warm) else None)

    h = cfg.fd_step
    # grid-only mode (max_iter == 0) and infeasible seeds count as finished
    capped = cfg.max_iter > 0 and math.isfinite(fx)
    iterations = 0
    if capped:
        for iterations in range(1, cfg.max_iter + 1):
            up = np.minimum(x + h, hi)
            down = np.maximum(x - h, lo)
            probes = np.vstack([np.where(np.eye(n, dtype=bool), up, x), np.where(np.eye(n, dtype=bool), down, x)])
            fp = cost(probes)
            grad = (fp[:n] - fp[n:]) / (up - down)
            if not np.all(np.isfinite(grad)):
                capped = False
                break
            projected = x - np.clip(x - grad, lo, hi)
            if np.max(np.abs(projected)) <= 1e-12:
                capped = False
                break
            scale = np.max(np.abs(grad))
            alphas = (hi - lo) / scale * _BACKTRACK ** np.arange(_MAX_BACKTRACKS)
            trials = np.clip(x[None, :] - alphas[:, None] * grad[None, :], lo, hi)
            ft = cost(trials)
            armijo = ft <= fx + _ARMIJO_C * (trials - x[None, :]) @ grad
            accepted = np.flatnonzero(armijo & (ft < fx))
            if len(accepted) == 0:
                capped = False
                break
            j = accepted[0]
            improvement = fx - ft[j]
            x, fx = trials[j], float(ft[j])
            if improvement <= cfg.tol * max(abs(fx), 1e-12):
                capped = False
                break

    final = predict_cost(x, initial_state, exo_forecast, params, cfg, bands)
    return MpcSolution(float(x[0]), x, final, capped, iterations, evaluations)
