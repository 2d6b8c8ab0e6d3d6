"""Population optimisers and ANFIS parameter-space tuning.

``ga_minimize`` is a real-coded genetic algorithm: tournament-of-3
selection, blend crossover, per-gene Gaussian mutation, one elite carried
over unchanged.  ``pso_minimize`` is global-best particle swarm with a
velocity clamp of 20% of each bound width.  Both are deterministic for a
given seed and record the best objective value after every iteration, a
non-increasing history by construction.

``anfis_metaheuristic_train`` flattens a rule base into one bounded
parameter vector (premises and consequents together), seeds the population
with the given rule base plus bounded perturbations, and minimises the
training RMSE with either optimiser.  Elitism makes the result never worse
than the seed on the training rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from drawcast.predictors.anfis import (
    A_FLOOR,
    B_MAX,
    B_MIN,
    AnfisError,
    FuzzyRuleBase,
    anfis_eval_batch,
)

COEFF_BOUND = 1e6


class MetaheuristicError(ValueError):
    """Invalid optimiser configuration or bounds."""


@dataclass
class GaParams:
    """Genetic-algorithm knobs.

    ``crossover_fraction`` and ``mutation_fraction`` divide each new
    generation (the remainder are tournament copies); ``mutation_rate`` is
    the per-gene probability and ``mutation_sigma`` the mutation spread as
    a fraction of each bound width.  Population sizes 10/20/25/50 are the
    studied sweep, but any size from 3 up is accepted.
    """

    population: int = 50
    max_iters: int = 2000
    crossover_fraction: float = 0.3
    mutation_fraction: float = 0.6
    mutation_rate: float = 0.1
    mutation_sigma: float = 0.1

    def __post_init__(self) -> None:
        if self.population < 3:
            raise MetaheuristicError("population must be at least 3")
        if self.max_iters < 0:
            raise MetaheuristicError("max_iters must be non-negative")
        for name in ("crossover_fraction", "mutation_fraction", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise MetaheuristicError(f"{name} must lie in [0, 1]")
        if self.crossover_fraction + self.mutation_fraction > 1.0:
            raise MetaheuristicError("crossover and mutation fractions exceed the population")
        if self.mutation_sigma <= 0:
            raise MetaheuristicError("mutation_sigma must be positive")


@dataclass
class PsoParams:
    """Particle-swarm knobs: constant inertia, personal and global pulls."""

    population: int = 50
    max_iters: int = 2000
    inertia: float = 0.9
    personal: float = 0.9
    social: float = 1.8
    velocity_clamp: float = 0.2

    def __post_init__(self) -> None:
        if self.population < 2:
            raise MetaheuristicError("population must be at least 2")
        if self.max_iters < 0:
            raise MetaheuristicError("max_iters must be non-negative")
        if self.inertia <= 0 or self.personal < 0 or self.social < 0:
            raise MetaheuristicError("coefficients must be non-negative (inertia positive)")
        if not 0.0 < self.velocity_clamp <= 1.0:
            raise MetaheuristicError("velocity_clamp must lie in (0, 1]")


@dataclass
class OptimizeResult:
    """Best candidate found plus the per-iteration best-value trace."""

    best_x: np.ndarray
    best_value: float
    history: np.ndarray
    n_evals: int


@dataclass
class ParamVector:
    """Flattened rule base with elementwise box bounds.

    Layout: all widths ``a`` (rule-major), all shapes ``b``, all centres
    ``c``, then consequent rows ``[q, q0]`` rule by rule.
    """

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_rules: int
    n_inputs: int

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        p = self.values.size
        if self.lower.shape != (p,) or self.upper.shape != (p,):
            raise MetaheuristicError("bounds must match the value vector")
        if np.any(self.upper < self.lower):
            raise MetaheuristicError("upper bounds below lower bounds")
        expected = self.n_rules * self.n_inputs * 3 + self.n_rules * (self.n_inputs + 1)
        if p != expected:
            raise MetaheuristicError(f"vector length {p}, layout expects {expected}")

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(values, self.lower, self.upper, self.n_rules, self.n_inputs)


# ---------------------------------------------------------------------------
# flatten / unflatten
# ---------------------------------------------------------------------------


def flatten(fis: FuzzyRuleBase, X: np.ndarray) -> ParamVector:
    """Pack a rule base into one vector with data-derived bounds.

    Per input column with spread ``sd`` over range ``[mn, mx]``:
    widths in ``[1e-6, 10 sd]``, shapes in ``[0.5, 5]``, centres in
    ``[mn - sd, mx + sd]``, consequents in ``[-1e6, 1e6]``.  Values are
    stored as they are; clipping happens only in :func:`unflatten`.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != fis.n_inputs:
        raise MetaheuristicError(f"X must be 2-d with {fis.n_inputs} columns")
    if X.shape[0] < 2:
        raise MetaheuristicError("need at least 2 rows for bound statistics")
    sd = X.std(axis=0)
    mn, mx = X.min(axis=0), X.max(axis=0)
    r, d = fis.n_rules, fis.n_inputs

    a_lo = np.full((r, d), A_FLOOR)
    a_hi = np.tile(np.maximum(10.0 * sd, 2.0 * A_FLOOR), (r, 1))
    b_lo = np.full((r, d), B_MIN)
    b_hi = np.full((r, d), B_MAX)
    c_lo = np.tile(mn - sd, (r, 1))
    c_hi = np.tile(mx + sd, (r, 1))
    q_lo = np.full((r, d + 1), -COEFF_BOUND)
    q_hi = np.full((r, d + 1), COEFF_BOUND)

    values = np.concatenate(
        [fis.a.ravel(), fis.b.ravel(), fis.c.ravel(), fis.coeffs.ravel()]
    )
    lower = np.concatenate([a_lo.ravel(), b_lo.ravel(), c_lo.ravel(), q_lo.ravel()])
    upper = np.concatenate([a_hi.ravel(), b_hi.ravel(), c_hi.ravel(), q_hi.ravel()])
    return ParamVector(values, lower, upper, r, d)


def unflatten(pv: ParamVector) -> tuple[FuzzyRuleBase, bool]:
    """Rebuild the rule base, clipping out-of-bounds entries (flag reports it)."""
    clipped = np.clip(pv.values, pv.lower, pv.upper)
    was_clipped = bool(np.any(clipped != pv.values))
    r, d = pv.n_rules, pv.n_inputs
    k = r * d
    fis = FuzzyRuleBase(
        a=clipped[:k].reshape(r, d),
        b=clipped[k : 2 * k].reshape(r, d),
        c=clipped[2 * k : 3 * k].reshape(r, d),
        coeffs=clipped[3 * k :].reshape(r, d + 1),
    )
    return fis, was_clipped


# ---------------------------------------------------------------------------
# genetic algorithm
# ---------------------------------------------------------------------------


def _check_bounds(lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
        raise MetaheuristicError("bounds must be equal-length 1-d arrays")
    if np.any(upper < lower):
        raise MetaheuristicError("upper bounds below lower bounds")
    return lower, upper


def _seed_population(
    n: int,
    lower: np.ndarray,
    upper: np.ndarray,
    rng: np.random.Generator,
    init: np.ndarray | None,
) -> np.ndarray:
    pop = rng.uniform(lower, upper, size=(n, lower.size))
    if init is not None:
        init = np.atleast_2d(np.asarray(init, dtype=np.float64))
        if init.shape[1] != lower.size:
            raise MetaheuristicError("init candidates have the wrong width")
        k = min(len(init), n)
        pop[:k] = np.clip(init[:k], lower, upper)
    return pop


def _tournament(costs: np.ndarray, rng: np.random.Generator) -> int:
    picks = rng.integers(0, costs.size, size=3)
    return int(picks[np.argmin(costs[picks])])


def _cost(objective: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    """Evaluate one candidate; non-finite objectives rank worst but don't abort."""
    value = float(objective(x))
    return value if np.isfinite(value) else float("inf")


def ga_minimize(
    objective: Callable[[np.ndarray], float],
    lower: np.ndarray,
    upper: np.ndarray,
    params: GaParams | None = None,
    seed: int | None = None,
    init: np.ndarray | None = None,
) -> OptimizeResult:
    """Minimise a black-box objective over a box with a real-coded GA.

    Each generation keeps the single best individual, then fills the rest
    with blend-crossover children, mutated tournament winners, and plain
    tournament copies in the configured proportions.  ``init`` rows seed
    the starting population (clipped into the box).  ``history[k]`` is the
    best value seen up to iteration ``k + 1`` and never increases.
    """
    params = params or GaParams()
    lower, upper = _check_bounds(lower, upper)
    rng = np.random.default_rng(seed)
    width = upper - lower
    pop = _seed_population(params.population, lower, upper, rng, init)
    costs = np.array([_cost(objective, x) for x in pop])
    n_evals = pop.shape[0]
    history = []

    n_fill = params.population - 1
    n_cross = int(round(params.crossover_fraction * n_fill))
    n_mut = min(int(round(params.mutation_fraction * n_fill)), n_fill - n_cross)
    n_copy = n_fill - n_cross - n_mut
    for _ in range(params.max_iters):
        elite_idx = int(np.argmin(costs))
        new_pop = [pop[elite_idx].copy()]
        new_costs = [float(costs[elite_idx])]
        for _ in range(n_cross):
            p1 = pop[_tournament(costs, rng)]
            p2 = pop[_tournament(costs, rng)]
            lo = np.minimum(p1, p2)
            hi = np.maximum(p1, p2)
            span = hi - lo
            child = rng.uniform(lo - 0.1 * span, hi + 0.1 * span)
            new_pop.append(np.clip(child, lower, upper))
            new_costs.append(None)
        for _ in range(n_mut):
            parent = pop[_tournament(costs, rng)].copy()
            mask = rng.random(parent.size) < params.mutation_rate
            noise = rng.normal(0.0, params.mutation_sigma, size=parent.size) * width
            parent[mask] += noise[mask]
            new_pop.append(np.clip(parent, lower, upper))
            new_costs.append(None)
        for _ in range(n_copy):
            new_pop.append(pop[_tournament(costs, rng)].copy())
            new_costs.append(None)
        pop = np.array(new_pop)
        costs = np.array(
            [c if c is not None else _cost(objective, x) for x, c in zip(pop, new_costs)]
        )
        n_evals += sum(1 for c in new_costs if c is None)
        history.append(float(costs.min()))

    best = int(np.argmin(costs))
    hist = np.minimum.accumulate(np.array(history)) if history else np.array([])
    return OptimizeResult(pop[best].copy(), float(costs[best]), hist, n_evals)


# ---------------------------------------------------------------------------
# particle swarm
# ---------------------------------------------------------------------------


def pso_minimize(
    objective: Callable[[np.ndarray], float],
    lower: np.ndarray,
    upper: np.ndarray,
    params: PsoParams | None = None,
    seed: int | None = None,
    init: np.ndarray | None = None,
) -> OptimizeResult:
    """Global-best PSO over a box; same result/history contract as the GA.

    Velocities start at zero and are clamped elementwise to
    ``velocity_clamp`` times the bound width; positions are clipped back
    into the box after every move.
    """
    params = params or PsoParams()
    lower, upper = _check_bounds(lower, upper)
    rng = np.random.default_rng(seed)
    width = upper - lower
    vmax = params.velocity_clamp * width

    x = _seed_population(params.population, lower, upper, rng, init)
    v = np.zeros_like(x)
    costs = np.array([_cost(objective, p) for p in x])
    n_evals = x.shape[0]
    pbest_x = x.copy()
    pbest_c = costs.copy()
    g = int(np.argmin(costs))
    gbest_x = x[g].copy()
    gbest_c = float(costs[g])

    history = []
    for _ in range(params.max_iters):
        r1 = rng.random(x.shape)
        r2 = rng.random(x.shape)
        v = (
            params.inertia * v
            + params.personal * r1 * (pbest_x - x)
            + params.social * r2 * (gbest_x[None, :] - x)
        )
        v = np.clip(v, -vmax, vmax)
        x = np.clip(x + v, lower, upper)
        costs = np.array([_cost(objective, p) for p in x])
        n_evals += x.shape[0]
        better = costs < pbest_c
        pbest_x[better] = x[better]
        pbest_c[better] = costs[better]
        g = int(np.argmin(pbest_c))
        if pbest_c[g] < gbest_c:
            gbest_c = float(pbest_c[g])
            gbest_x = pbest_x[g].copy()
        history.append(gbest_c)

    return OptimizeResult(gbest_x, gbest_c, np.array(history), n_evals)


# ---------------------------------------------------------------------------
# ANFIS tuning
# ---------------------------------------------------------------------------


def anfis_metaheuristic_train(
    fis: FuzzyRuleBase,
    X: np.ndarray,
    y: np.ndarray,
    method: str = "ga",
    ga_params: GaParams | None = None,
    pso_params: PsoParams | None = None,
    seed: int | None = None,
    perturb_scale: float = 0.05,
) -> tuple[FuzzyRuleBase, np.ndarray]:
    """Tune every rule-base parameter against the training RMSE.

    The starting population is the given rule base (ideally already
    hybrid-trained) plus uniform perturbations of ``perturb_scale`` times
    each bound width.  Elitism guarantees the returned base trains at
    least as well as the seed; a zero-iteration budget returns the seed
    unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise AnfisError("y length must match X rows")
    if method not in ("ga", "pso"):
        raise MetaheuristicError(f"unknown method {method!r}; use 'ga' or 'pso'")
    pv = flatten(fis, X)

    def objective(vals: np.ndarray) -> float:
        candidate, _ = unflatten(pv.with_values(vals))
        err = anfis_eval_batch(candidate, X) - y
        return float(np.sqrt(err @ err / err.size))

    params: GaParams | PsoParams = (
        (ga_params or GaParams()) if method == "ga" else (pso_params or PsoParams())
    )
    if params.max_iters == 0:
        return fis.copy(), np.array([objective(pv.values)])

    rng = np.random.default_rng(seed)
    width = pv.upper - pv.lower
    init = np.tile(pv.values, (params.population, 1))
    jitter = rng.uniform(-1.0, 1.0, size=init.shape) * perturb_scale * width
    jitter[0] = 0.0  # row 0 is the untouched seed
    init = np.clip(init + jitter, pv.lower, pv.upper)

    if method == "ga":
        res = ga_minimize(objective, pv.lower, pv.upper, params, seed=seed, init=init)
    else:
        res = pso_minimize(objective, pv.lower, pv.upper, params, seed=seed, init=init)
    tuned, _ = unflatten(pv.with_values(res.best_x))
    return tuned, res.history
