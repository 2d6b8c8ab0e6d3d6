#!/usr/bin/env python3
"""Exercise the real-coded GA and the global-best PSO, then let each tune
a fuzzy rule system end to end.

Both optimizers carry an elitist guarantee: the best candidate ever seen
survives every generation, so the recorded history can only descend.
Both are also fully seeded, and a repeated run reproduces the history to
the last bit.
"""

import numpy as np

from drawcast.metaheuristics import (
    GaParams,
    PsoParams,
    anfis_metaheuristic_train,
    ga_minimize,
    pso_minimize,
)
from drawcast.predictors import (
    anfis_eval_batch,
    anfis_init,
    anfis_train_hybrid,
    fcm_clusters,
)


def section(title: str) -> None:
    print()
    print(title)
    print("-" * len(title))


def sphere(x: np.ndarray) -> float:
    return float(np.dot(x, x))


def rastrigin(x: np.ndarray) -> float:
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def main() -> None:
    lower5, upper5 = np.full(5, -5.0), np.full(5, 5.0)

    section("sphere in five dimensions")
    ga = ga_minimize(sphere, lower5, upper5, GaParams(population=40, max_iters=300), seed=0)
    pso = pso_minimize(sphere, lower5, upper5, PsoParams(population=40, max_iters=300), seed=0)
    for name, res in (("ga", ga), ("pso", pso)):
        print(f"  {name:3s} start {res.history[0]:10.4f} -> best {res.best_value:.3e} "
              f"after {res.n_evals} evaluations")
        drops = np.diff(res.history)
        print(f"      history non-increasing: {bool((drops <= 0).all())}")

    section("rastrigin in two dimensions, many local minima")
    lower2, upper2 = np.full(2, -5.12), np.full(2, 5.12)
    res = pso_minimize(rastrigin, lower2, upper2,
                       PsoParams(population=60, max_iters=400), seed=2)
    print(f"  global minimum 0 at the origin; pso reached {res.best_value:.5f} "
          f"at {np.round(res.best_x, 4)}")

    section("bit-for-bit determinism")
    a = ga_minimize(sphere, lower5, upper5, GaParams(population=30, max_iters=80), seed=21)
    b = ga_minimize(sphere, lower5, upper5, GaParams(population=30, max_iters=80), seed=21)
    c = ga_minimize(sphere, lower5, upper5, GaParams(population=30, max_iters=80), seed=22)
    print(f"  same seed, same history: {np.array_equal(a.history, b.history)}")
    print(f"  different seed, different path: {not np.array_equal(a.history, c.history)}")

    section("tuning a fuzzy rule system")
    # small regression task: y = sin(x0) + 0.5 x1 plus noise
    rng = np.random.default_rng(14)
    X = rng.uniform(-2.0, 2.0, size=(120, 2))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] + rng.normal(0.0, 0.05, 120)
    centers, _ = fcm_clusters(X, 3, seed=0)
    seed_fis, _ = anfis_train_hybrid(anfis_init(centers, X), X, y,
                                     epochs=2, learning_rate=0.01)

    def rmse(fis) -> float:
        d = anfis_eval_batch(fis, X) - y
        return float(np.sqrt(np.mean(d * d)))

    print(f"  hybrid warm start rmse {rmse(seed_fis):.4f}")
    tuned, history = anfis_metaheuristic_train(
        seed_fis, X, y, method="ga",
        ga_params=GaParams(population=25, max_iters=60), seed=9,
    )
    print(f"  ga  tuned rmse {rmse(tuned):.4f} "
          f"(history {history[0]:.4f} -> {history[-1]:.4f})")
    # the consequent coefficients live in a very wide search box, so the
    # swarm needs low inertia, a hard velocity clamp and a tiny initial
    # spread to refine rather than scatter
    tuned, history = anfis_metaheuristic_train(
        seed_fis, X, y, method="pso",
        pso_params=PsoParams(population=40, max_iters=300, inertia=0.6,
                             personal=1.4, social=1.4, velocity_clamp=0.05),
        seed=9, perturb_scale=0.002,
    )
    print(f"  pso tuned rmse {rmse(tuned):.4f} "
          f"(history {history[0]:.4f} -> {history[-1]:.4f}, tighter settings)")
    print("  the warm start joins the initial population and elitism keeps it,")
    print("  so tuning can stall but never lose ground")


if __name__ == "__main__":
    main()
